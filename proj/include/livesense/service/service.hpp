// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Live service: ingest, processing and broadcast threads joined by bounded queues.
 */

#pragma once

#include "livesense/pipeline.hpp"
#include "livesense/protocol.hpp"
#include "livesense/resample.hpp"
#include "livesense/service/sources.hpp"
#include "livesense/simulator.hpp"
#include "livesense/trace_codec.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace livesense::service {

/// Receives every result on the broadcast thread. Implementations must not block.
class ResultSink {
public:
    virtual ~ResultSink() = default;
    virtual void on_result(const std::shared_ptr<const BatchResult> &result, const protocol::StreamCounters &counters) = 0;
    virtual void on_end() {}
};

/// Bounded in-process subscriber. Falling more than `capacity` results behind disconnects it.
class ResultQueue final : public ResultSink {
public:
    explicit ResultQueue(std::size_t capacity = 64) : capacity_(capacity) {}

    void on_result(const std::shared_ptr<const BatchResult> &r, const protocol::StreamCounters &) override {
        {
            std::lock_guard lock(mutex_);
            if (disconnected_) return;
            if (items_.size() >= capacity_) {
                disconnected_ = true;
                items_.clear();
            } else {
                items_.push_back(r);
            }
        }
        cv_.notify_all();
    }

    void on_end() override {
        {
            std::lock_guard lock(mutex_);
            ended_ = true;
        }
        cv_.notify_all();
    }

    /// Next result, or nullptr once the stream ended (or this subscriber was cut off) and the queue is empty.
    template <typename Rep, typename Period>
    std::shared_ptr<const BatchResult> pop(std::chrono::duration<Rep, Period> timeout) {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, timeout, [&] { return !items_.empty() || ended_ || disconnected_; });
        if (items_.empty()) return nullptr;
        auto r = items_.front();
        items_.pop_front();
        return r;
    }

    [[nodiscard]] bool disconnected() const {
        std::lock_guard lock(mutex_);
        return disconnected_;
    }
    [[nodiscard]] bool ended() const {
        std::lock_guard lock(mutex_);
        return ended_;
    }

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::shared_ptr<const BatchResult>> items_;
    bool disconnected_ = false;
    bool ended_ = false;
};

struct ServiceOptions {
    std::size_t result_queue = 16;  ///< processing -> broadcast; oldest result dropped when full
    std::string record_path;        ///< raw input frames are written here when set
};

/**
 * Three threads:
 *   ingest    source -> optional recorder -> resampler -> frame ring (drops oldest when full)
 *   process   M-frame batches -> BatchProcessor -> result queue (drops oldest when full)
 *   broadcast result queue -> every sink
 * Config patches go through BatchProcessor's own queue and apply at batch boundaries.
 */
class LiveService {
public:
    LiveService(const SensingConfig &cfg, std::unique_ptr<FrameSource> source, ServiceOptions opts = {})
        : opts_(std::move(opts)),
          source_(std::move(source)),
          processor_(cfg),
          resampler_(cfg.frame_interval_s),
          ring_(static_cast<std::size_t>(cfg.buffer_capacity()), static_cast<std::size_t>(cfg.doppler_batch)),
          live_cfg_(cfg) {
        if (!opts_.record_path.empty())
            recorder_ = std::make_unique<trace::TraceWriter>(opts_.record_path, trace::header_from(cfg));
    }

    LiveService(const LiveService &) = delete;
    LiveService &operator=(const LiveService &) = delete;
    ~LiveService() { stop(); }

    /// Sinks must be added before start().
    void add_sink(std::shared_ptr<ResultSink> sink) { sinks_.push_back(std::move(sink)); }

    void start() {
        ingest_ = std::thread([this] { ingest_loop(); });
        process_ = std::thread([this] { process_loop(); });
        broadcast_ = std::thread([this] { broadcast_loop(); });
    }

    /// Blocks until the source ended and every result was broadcast, or stop() was called.
    void wait() {
        if (ingest_.joinable()) ingest_.join();
        if (process_.joinable()) process_.join();
        if (broadcast_.joinable()) broadcast_.join();
    }

    void stop() {
        stop_ = true;
        ring_.notify();
        results_cv_.notify_all();
        wait();
    }

    [[nodiscard]] bool finished() const { return broadcast_done_.load(); }

    PatchResult apply_config_patch(const KeyValues &patch) { return processor_.apply_config_patch(patch); }

    /// Swaps the simulator scene. Returns an error message, or nothing on success.
    std::optional<std::string> set_scene(const sim::SceneFile &file) {
        if (!source_->supports_scene()) return "set_scene needs the simulator source (running '" + source_->name() + "')";
        SensingConfig check = snapshot().config;
        try {
            apply_key_values(check, file.config_overrides);
            validate(check);
            sim::validate(file.scene, check);
        } catch (const ConfigError &e) {
            return std::string(e.what());
        }
        if (!file.config_overrides.empty()) {
            const PatchResult p = apply_config_patch(file.config_overrides);
            if (!p.ok) return p.error;
        }
        source_->set_scene(file.scene);
        return std::nullopt;
    }

    struct Snapshot {
        SensingConfig config;
        std::uint64_t config_id = 0;
    };

    /// Config of the most recently processed batch.
    [[nodiscard]] Snapshot snapshot() const {
        std::lock_guard lock(live_mutex_);
        return {live_cfg_, live_config_id_};
    }

    [[nodiscard]] protocol::StreamCounters counters() const {
        protocol::StreamCounters c;
        c.drop_count = ring_.dropped();
        c.sampling_hz = sampling_hz_.load();
        c.gap_fills = gap_fills_.load();
        c.resyncs = resyncs_.load();
        c.result_drops = result_drops_.load();
        c.degraded = c.resyncs > 0;
        return c;
    }

    [[nodiscard]] bool degraded() const { return resyncs_.load() > 0; }
    [[nodiscard]] std::uint64_t batches() const { return batches_.load(); }
    [[nodiscard]] std::uint64_t frames_in() const { return frames_in_.load(); }
    [[nodiscard]] const FrameSource &source() const { return *source_; }
    [[nodiscard]] const std::string &failure() const { return failure_; }

private:
    void ingest_loop() {
        std::deque<steady::time_point> arrivals;
        try {
            while (auto f = source_->next(stop_)) {
                const auto t0 = steady::now();
                ++frames_in_;
                arrivals.push_back(t0);
                while (!arrivals.empty() && t0 - arrivals.front() > std::chrono::seconds(1)) arrivals.pop_front();
                if (arrivals.size() >= 2) {
                    const double span = std::chrono::duration<double>(arrivals.back() - arrivals.front()).count();
                    if (span > 0.0) sampling_hz_ = static_cast<double>(arrivals.size() - 1) / span;
                }
                if (recorder_) recorder_->append(*f);
                auto out = resampler_.push(*f);
                handle(out);
                ingest_ns_ += std::chrono::duration_cast<std::chrono::nanoseconds>(steady::now() - t0).count();
            }
            auto out = resampler_.flush();
            handle(out);
            if (recorder_) recorder_->flush();
        } catch (const std::exception &e) {
            failure_ = e.what();
        }
        ingest_done_ = true;
        ring_.notify();
    }

    void handle(resample::ResampleOutput &o) {
        if (o.resync) {
            ++generation_;
            ++resyncs_;
            ring_.clear();
        }
        gap_fills_ = resampler_.gap_fills();
        for (auto &f : o.frames) ring_.push(std::move(f));
    }

    void process_loop() {
        std::uint64_t seen_generation = 0;
        while (!stop_) {
            auto batch = ring_.wait_take_batch(std::chrono::milliseconds(100), [&] { return ingest_done_.load() || stop_.load(); });
            if (!batch) {
                if (!ingest_done_) continue;
                // ingest may have pushed its last frames between the wait and the flag
                batch = ring_.try_take_batch();
                if (!batch) break;
            }
            const std::uint64_t gen = generation_.load();
            if (gen != seen_generation) {
                processor_.reset_stream();
                seen_generation = gen;
            }
            const double ingest_ms = static_cast<double>(ingest_ns_.exchange(0)) / 1e6;
            auto result = std::make_shared<BatchResult>(processor_.process(*batch, ingest_ms));
            ++batches_;
            {
                std::lock_guard lock(live_mutex_);
                live_cfg_ = processor_.config();
                live_config_id_ = processor_.config_id();
            }
            {
                std::lock_guard lock(results_mutex_);
                if (results_.size() >= opts_.result_queue) {
                    results_.pop_front();
                    ++result_drops_;
                }
                results_.push_back(std::move(result));
            }
            results_cv_.notify_one();
        }
        process_done_ = true;
        results_cv_.notify_all();
    }

    void broadcast_loop() {
        for (;;) {
            std::shared_ptr<const BatchResult> r;
            {
                std::unique_lock lock(results_mutex_);
                results_cv_.wait(lock, [&] { return !results_.empty() || process_done_.load() || stop_.load(); });
                if (results_.empty()) break;
                r = std::move(results_.front());
                results_.pop_front();
            }
            const auto c = counters();
            for (auto &s : sinks_) s->on_result(r, c);
        }
        for (auto &s : sinks_) s->on_end();
        broadcast_done_ = true;
    }

    ServiceOptions opts_;
    std::unique_ptr<FrameSource> source_;
    BatchProcessor processor_;
    resample::Resampler resampler_;
    resample::FrameBuffer ring_;
    std::unique_ptr<trace::TraceWriter> recorder_;
    std::vector<std::shared_ptr<ResultSink>> sinks_;

    std::thread ingest_, process_, broadcast_;
    std::atomic<bool> stop_{false};
    std::atomic<bool> ingest_done_{false};
    std::atomic<bool> process_done_{false};
    std::atomic<bool> broadcast_done_{false};
    std::atomic<std::uint64_t> generation_{0};
    std::atomic<std::int64_t> ingest_ns_{0};

    std::mutex results_mutex_;
    std::condition_variable results_cv_;
    std::deque<std::shared_ptr<const BatchResult>> results_;

    mutable std::mutex live_mutex_;
    SensingConfig live_cfg_;
    std::uint64_t live_config_id_ = 0;

    std::atomic<double> sampling_hz_{0.0};
    std::atomic<std::uint64_t> gap_fills_{0};
    std::atomic<std::uint64_t> resyncs_{0};
    std::atomic<std::uint64_t> result_drops_{0};
    std::atomic<std::uint64_t> batches_{0};
    std::atomic<std::uint64_t> frames_in_{0};
    std::string failure_;
};

}  // namespace livesense::service
