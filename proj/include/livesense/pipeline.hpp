// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Batch processing: sync, clutter removal, range-Doppler map, CFAR, tracking and vitals.
 */

#pragma once

#include "livesense/clutter.hpp"
#include "livesense/config_io.hpp"
#include "livesense/detect.hpp"
#include "livesense/rdmap.hpp"
#include "livesense/resample.hpp"
#include "livesense/sync.hpp"
#include "livesense/track.hpp"
#include "livesense/types.hpp"
#include "livesense/vitals.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace livesense {

struct StageTimings {
    double ingest_ms = 0.0;
    double sync_ms = 0.0;
    double sic_ms = 0.0;
    double fft_ms = 0.0;
    double detect_ms = 0.0;
    double total_ms = 0.0;
};

/// Per-batch counts of stage flags.
struct BatchDiagnostics {
    int gap_filled_frames = 0;
    int low_confidence_frames = 0;
    int coarse_low_confidence = 0;
    int fine_failed = 0;
    int phase_skipped = 0;
    int reference_sets = 0;
    bool sic_warmup = false;
    double corr_peak_ratio = 0.0;
    std::string vitals_diagnostic;
    friend bool operator==(const BatchDiagnostics &, const BatchDiagnostics &) = default;
};

/// Magnitude and phase of the last synchronized frame of a batch.
struct CsiStats {
    std::vector<double> magnitude;
    std::vector<double> phase;
    friend bool operator==(const CsiStats &, const CsiStats &) = default;
};

struct BatchResult {
    std::uint64_t batch_seq = 0;
    std::uint64_t config_id = 0;
    RangeDopplerMap map;
    std::vector<Detection> detections;
    std::vector<Track> tracks;
    std::optional<vitals::VitalsEstimate> vitals;
    vitals::PresenceDecision presence;
    BatchDiagnostics diagnostics;
    CsiStats csi_stats;
    StageTimings timings;

    /// Equality on everything except wall-clock timings.
    [[nodiscard]] bool same_output(const BatchResult &o) const {
        return batch_seq == o.batch_seq && config_id == o.config_id && map == o.map && detections == o.detections &&
               tracks == o.tracks && vitals == o.vitals && presence.present == o.presence.present &&
               presence.score == o.presence.score && diagnostics == o.diagnostics && csi_stats == o.csi_stats;
    }
};

struct PatchResult {
    bool ok = false;
    std::uint64_t config_id = 0;  ///< id that batches will carry once the patch is live
    std::string error;
};

inline constexpr std::size_t kPresenceWindowBatches = 4;
inline constexpr std::size_t kVitalsCandidates = 3;
inline constexpr int kHintPasses = 3;  ///< alignment passes per batch at most
inline constexpr double kHintSettleM = 0.01;
inline constexpr double kHintPeakSnrDb = 20.0;   ///< uncued peaks must clear the floor by this
inline constexpr double kHintPeakSpanDb = 25.0;  ///< and stay above Hann sidelobes of the strongest
inline constexpr std::size_t kHintPeakLimit = 4;

/**
 * Stateful per-stream processor consuming disjoint M-frame batches.
 * Config patches may be submitted from any thread; they take effect at the
 * start of the next batch.
 */
class BatchProcessor {
public:
    explicit BatchProcessor(SensingConfig cfg)
        : cfg_(validated(cfg)),
          sync_(cfg_.bandwidth_hz, cfg_.doppler_batch),
          background_(cfg_),
          tracker_(cfg_.track) {}

    /// Validates and queues a patch. Structural and unknown keys reject the whole patch.
    PatchResult apply_config_patch(const KeyValues &patch) {
        std::lock_guard lock(patch_mutex_);
        const std::uint64_t effective = pending_ ? pending_id_ : config_id_;
        if (patch.empty()) return {true, effective, {}};
        for (const auto &[key, value] : patch) {
            if (!is_config_key(key)) return {false, effective, "unknown config key '" + key + "'"};
            if (is_structural_key(key)) return {false, effective, "'" + key + "' cannot change at runtime: restart required"};
        }
        SensingConfig candidate = pending_ ? *pending_ : cfg_;
        try {
            apply_key_values(candidate, patch);
            validate(candidate);
        } catch (const ConfigError &e) {
            return {false, effective, e.what()};
        }
        pending_ = candidate;
        pending_id_ = ++last_issued_id_;
        return {true, pending_id_, {}};
    }

    /// Processes exactly M frames.
    BatchResult process(std::span<const CsiFrame> frames, double ingest_ms = 0.0) {
        using clock = std::chrono::steady_clock;
        const auto start = clock::now();
        apply_pending();
        const auto m = static_cast<std::size_t>(cfg_.doppler_batch);
        if (frames.size() != m) throw std::invalid_argument("BatchProcessor: batch must hold exactly M frames");

        BatchResult out;
        out.batch_seq = batch_seq_++;
        out.config_id = config_id_;
        out.timings.ingest_ms = ingest_ms;
        out.diagnostics.sic_warmup = background_.warmup();

        auto ms_since = [](clock::time_point t) {
            return std::chrono::duration<double, std::milli>(clock::now() - t).count();
        };
        // Reflectors found in this batch sharpen the alignment of the same batch,
        // so it is re-run from the saved state while the hints keep moving.
        const sync::Synchronizer sync_start = sync_;
        const clutter::BackgroundState background_start = background_;
        std::vector<sync::DynamicHint> hints = sync_.dynamic_hints();
        std::vector<CsiVector> vitals_profiles;
        for (int pass = 0;; ++pass) {
            if (pass > 0) {
                sync_ = sync_start;
                background_ = background_start;
                sync_.set_dynamic_hints(hints);
                out.diagnostics = BatchDiagnostics{};
                out.diagnostics.sic_warmup = background_.warmup();
            }
            vitals_profiles.clear();
            std::vector<rdmap::RangeProfile> profiles;
            profiles.reserve(m);
            for (const auto &frame : frames) {
                if (frame.csi.size() != static_cast<std::size_t>(cfg_.n_subcarriers))
                    throw std::invalid_argument("BatchProcessor: subcarrier count mismatch");
                auto t = clock::now();
                sync::SyncOutcome s = sync_.process(frame);
                out.timings.sync_ms += ms_since(t);
                auto &d = out.diagnostics;
                d.gap_filled_frames += frame.flags.test(FrameFlag::gap_filled);
                d.low_confidence_frames += s.frame.flags.test(FrameFlag::low_confidence);
                d.coarse_low_confidence += s.coarse_low_confidence;
                d.fine_failed += s.fine_failed;
                d.phase_skipped += s.phase_skipped;
                d.reference_sets += s.reference_set;

                t = clock::now();
                CsiFrame cleaned = clutter::subtract(s.frame, background_);
                background_.update(s.frame.csi);
                out.timings.sic_ms += ms_since(t);

                t = clock::now();
                profiles.push_back(rdmap::range_profile(cleaned, cfg_));
                vitals_profiles.push_back(rdmap::range_profile(s.frame, cfg_).bins);
                out.timings.fft_ms += ms_since(t);
                if (&frame == &frames.back()) out.csi_stats = csi_stats(s.frame);
            }
            out.diagnostics.corr_peak_ratio = sync_.state().diagnostics.corr_peak_ratio;

            auto t = clock::now();
            out.map = rdmap::doppler_process(profiles, cfg_);
            out.map.batch_seq = out.batch_seq;
            out.timings.fft_ms += ms_since(t);

            t = clock::now();
            const auto mask = detect::cfar_detect(out.map, detect::cfar_params(cfg_));
            try {
                out.detections = detect::extract_detections(out.map, mask);
            } catch (const std::domain_error &) {
                out.detections.clear();
            }
            out.timings.detect_ms += ms_since(t);
            std::vector<sync::DynamicHint> next = hints_from(out.map, out.detections);
            const bool settled = hints_settled(hints, next);
            hints = std::move(next);
            if (settled || pass + 1 >= kHintPasses) break;
        }
        sync_.set_dynamic_hints(std::move(hints));
        for (auto &bins : vitals_profiles) push_vitals(std::move(bins));

        auto t = clock::now();
        out.tracks = tracker_.update(out.detections, out.map.batch_timestamp);
        update_vitals(out);
        presence_window_.push_back({out.tracks, out.vitals});
        if (presence_window_.size() > kPresenceWindowBatches) presence_window_.pop_front();
        out.presence = vitals::presence_decision(std::vector<vitals::PresenceInput>(presence_window_.begin(), presence_window_.end()));
        out.timings.detect_ms += ms_since(t);
        out.timings.total_ms = ms_since(start) + ingest_ms;
        return out;
    }

    /// Drops per-stream state after a resync; tracks and batch numbering survive.
    void reset_stream() {
        sync_.reset();
        background_.reset();
        vitals_ring_.clear();
    }

    [[nodiscard]] const SensingConfig &config() const { return cfg_; }
    [[nodiscard]] std::uint64_t config_id() const { return config_id_; }
    [[nodiscard]] std::uint64_t batches_processed() const { return batch_seq_; }
    [[nodiscard]] const sync::Synchronizer &synchronizer() const { return sync_; }

private:
    static SensingConfig validated(const SensingConfig &c) {
        validate(c);
        return c;
    }

    void apply_pending() {
        std::optional<SensingConfig> next;
        std::uint64_t id = 0;
        {
            std::lock_guard lock(patch_mutex_);
            if (!pending_) return;
            next = std::move(pending_);
            pending_.reset();
            id = pending_id_;
        }
        const SensingConfig old = cfg_;
        cfg_ = *next;
        config_id_ = id;
        if (cfg_.sic != old.sic) background_ = clutter::BackgroundState(cfg_);
        if (cfg_.mode != old.mode || cfg_.zero_pad_factor != old.zero_pad_factor || cfg_.max_range_m != old.max_range_m)
            vitals_ring_.clear();
        if (cfg_.track != old.track) tracker_.set_config(cfg_.track);
        while (vitals_ring_.size() > static_cast<std::size_t>(cfg_.vitals.window_frames)) vitals_ring_.pop_front();
    }

    // Detections plus strong peaks CFAR missed. A reflector near the leakage
    // loses part of its power to its mirror until it is hinted, and a neighbour
    // in the training window can then mask it.
    static std::vector<sync::DynamicHint> hints_from(const RangeDopplerMap &map, const std::vector<Detection> &detections) {
        std::vector<Detection> all = detections;
        for (const auto &p : detect::strong_peaks(map, kHintPeakSnrDb, kHintPeakSpanDb, kHintPeakLimit)) {
            const bool known = std::any_of(detections.begin(), detections.end(), [&](const Detection &d) {
                return std::abs(d.bin_r - p.bin_r) <= 1.0 && std::abs(d.bin_d - p.bin_d) <= 1.0;
            });
            if (!known) all.push_back(p);
        }
        std::vector<sync::DynamicHint> hints;
        hints.reserve(all.size());
        for (const auto &d : all)
            hints.push_back({2.0 * d.range_m / kRangeSpeed, 2.0 * d.velocity_mps / kRangeSpeed, d.timestamp});
        return hints;
    }

    /// Same reflectors within a centimetre of range.
    static bool hints_settled(const std::vector<sync::DynamicHint> &a, const std::vector<sync::DynamicHint> &b) {
        if (a.size() != b.size()) return false;
        constexpr double tol_s = 2.0 * kHintSettleM / kRangeSpeed;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (std::abs(a[i].at(b[i].t0) - b[i].delay_s) > tol_s) return false;
            if (std::abs(a[i].rate - b[i].rate) > tol_s) return false;
        }
        return true;
    }

    void push_vitals(CsiVector bins) {
        vitals_ring_.push_back(std::move(bins));
        while (vitals_ring_.size() > static_cast<std::size_t>(cfg_.vitals.window_frames)) vitals_ring_.pop_front();
    }

    void update_vitals(BatchResult &out) {
        const auto w = static_cast<std::size_t>(cfg_.vitals.window_frames);
        if (vitals_ring_.size() < w) {
            out.diagnostics.vitals_diagnostic = "filling window";
            return;
        }
        const std::vector<CsiVector> window(vitals_ring_.begin(), vitals_ring_.end());
        std::vector<cplx> series(w);
        for (std::size_t bin : vitals::candidate_bins(window, kVitalsCandidates)) {
            for (std::size_t i = 0; i < w; ++i) series[i] = window[i][bin];
            auto r = vitals::vitals_estimate(series, cfg_);
            if (!r.estimate) {
                if (out.diagnostics.vitals_diagnostic.empty()) out.diagnostics.vitals_diagnostic = r.diagnostic;
                continue;
            }
            r.estimate->range_bin = static_cast<int>(bin);
            if (!out.vitals || r.estimate->confidence_db > out.vitals->confidence_db) out.vitals = r.estimate;
        }
        if (out.vitals) out.diagnostics.vitals_diagnostic.clear();
    }

    static CsiStats csi_stats(const CsiFrame &f) {
        CsiStats s;
        s.magnitude.reserve(f.csi.size());
        s.phase.reserve(f.csi.size());
        for (const auto &c : f.csi) {
            s.magnitude.push_back(std::abs(c));
            s.phase.push_back(std::arg(c));
        }
        return s;
    }

    SensingConfig cfg_;
    std::uint64_t config_id_ = 0;
    std::uint64_t batch_seq_ = 0;
    sync::Synchronizer sync_;
    clutter::BackgroundState background_;
    track::Tracker tracker_;
    std::deque<CsiVector> vitals_ring_;
    std::deque<vitals::PresenceInput> presence_window_;

    std::mutex patch_mutex_;
    std::optional<SensingConfig> pending_;
    std::uint64_t pending_id_ = 0;
    std::uint64_t last_issued_id_ = 0;
};

/**
 * Single-threaded stream driver: resample, buffer, and process every full batch.
 * Used for file replay, analysis and tests; the live service runs the same
 * stages on separate threads.
 */
class Pipeline {
public:
    explicit Pipeline(const SensingConfig &cfg)
        : processor_(cfg),
          resampler_(cfg.frame_interval_s),
          buffer_(static_cast<std::size_t>(cfg.buffer_capacity()), static_cast<std::size_t>(cfg.doppler_batch)) {}

    std::vector<BatchResult> push(const CsiFrame &frame) {
        const auto t = std::chrono::steady_clock::now();
        auto o = resampler_.push(frame);
        handle(o);
        ingest_ms_ += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
        return drain();
    }

    /// Flushes the resampler; a trailing partial batch is discarded.
    std::vector<BatchResult> finish() {
        auto o = resampler_.flush();
        handle(o);
        return drain();
    }

    std::vector<BatchResult> run(std::span<const CsiFrame> frames) {
        std::vector<BatchResult> out;
        for (const auto &f : frames) {
            auto r = push(f);
            out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
        }
        auto r = finish();
        out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
        return out;
    }

    PatchResult apply_config_patch(const KeyValues &patch) { return processor_.apply_config_patch(patch); }

    [[nodiscard]] bool degraded() const { return resyncs_ > 0; }
    [[nodiscard]] std::uint64_t resyncs() const { return resyncs_; }
    [[nodiscard]] std::uint64_t drop_count() const { return buffer_.dropped(); }
    [[nodiscard]] const resample::Resampler &resampler() const { return resampler_; }
    [[nodiscard]] BatchProcessor &processor() { return processor_; }

private:
    void handle(resample::ResampleOutput &o) {
        if (o.resync) {
            ++resyncs_;
            buffer_.clear();
            processor_.reset_stream();
        }
        for (auto &f : o.frames) buffer_.push(std::move(f));
    }

    std::vector<BatchResult> drain() {
        std::vector<BatchResult> out;
        while (auto batch = buffer_.try_take_batch()) {
            out.push_back(processor_.process(*batch, ingest_ms_));
            ingest_ms_ = 0.0;
        }
        return out;
    }

    BatchProcessor processor_;
    resample::Resampler resampler_;
    resample::FrameBuffer buffer_;
    std::uint64_t resyncs_ = 0;
    double ingest_ms_ = 0.0;
};

}  // namespace livesense
