// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Uniform slow-time grid from irregular frame arrivals, and the bounded frame ring.
 *
 * Slot n has nominal time t0 + n T, where t0 is the first frame's timestamp. It
 * takes the nearest frame within [-T/2, +T/2); an empty slot repeats the previous
 * output with the gap_filled flag. More than four consecutive empty slots is a
 * resync: the grid is re-anchored on the next frame.
 */

#pragma once

#include "livesense/types.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace livesense::resample {

inline constexpr int kMaxConsecutiveGapFills = 4;

struct ResampleOutput {
    std::vector<CsiFrame> frames;
    bool resync = false;  ///< grid was re-anchored; downstream buffers should be flushed
};

class Resampler {
public:
    explicit Resampler(double frame_interval_s, int max_gap_fills = kMaxConsecutiveGapFills)
        : interval_(frame_interval_s), max_gap_fills_(max_gap_fills) {
        if (!(frame_interval_s > 0.0)) throw std::invalid_argument("Resampler: frame interval must be > 0");
    }

    ResampleOutput push(const CsiFrame &f) {
        ResampleOutput out;
        if (last_input_ && !(f.timestamp > *last_input_)) {
            ++discarded_;
            return out;
        }
        last_input_ = f.timestamp;
        if (!anchored_) {
            anchor(f);
            return out;
        }
        while (f.timestamp >= slot_time(slot_) + 0.5 * interval_) {
            if (candidate_) {
                emit(out, *candidate_, false);
                consecutive_gaps_ = 0;
            } else {
                if (++consecutive_gaps_ > max_gap_fills_ || !last_emitted_) {
                    out.resync = true;
                    ++resyncs_;
                    anchor(f);
                    return out;
                }
                emit(out, *last_emitted_, true);
                ++gap_fills_;
            }
            candidate_.reset();
            ++slot_;
        }
        if (f.timestamp >= slot_time(slot_) - 0.5 * interval_) {
            const double target = slot_time(slot_);
            if (!candidate_ || std::abs(f.timestamp - target) < std::abs(candidate_->timestamp - target)) candidate_ = f;
            else ++discarded_;
        } else {
            ++discarded_;
        }
        return out;
    }

    /// Emits the pending slot at end of stream.
    ResampleOutput flush() {
        ResampleOutput out;
        if (candidate_) {
            emit(out, *candidate_, false);
            candidate_.reset();
            ++slot_;
        }
        return out;
    }

    [[nodiscard]] std::uint64_t gap_fills() const { return gap_fills_; }
    [[nodiscard]] std::uint64_t resyncs() const { return resyncs_; }
    [[nodiscard]] std::uint64_t discarded() const { return discarded_; }

private:
    [[nodiscard]] double slot_time(std::uint64_t n) const { return t0_ + static_cast<double>(n) * interval_; }

    void anchor(const CsiFrame &f) {
        anchored_ = true;
        t0_ = f.timestamp;
        seq0_ = f.seq;
        slot_ = 0;
        consecutive_gaps_ = 0;
        candidate_ = f;
        last_emitted_.reset();
    }

    void emit(ResampleOutput &out, const CsiFrame &src, bool gap) {
        CsiFrame f = src;
        f.timestamp = slot_time(slot_);
        f.seq = static_cast<std::uint32_t>(seq0_ + slot_);
        if (gap) f.flags.set(FrameFlag::gap_filled);
        else f.flags.clear(FrameFlag::gap_filled);
        last_emitted_ = f;
        out.frames.push_back(std::move(f));
    }

    double interval_;
    int max_gap_fills_;
    bool anchored_ = false;
    double t0_ = 0.0;
    std::uint64_t seq0_ = 0;
    std::uint64_t slot_ = 0;
    int consecutive_gaps_ = 0;
    std::optional<CsiFrame> candidate_;
    std::optional<CsiFrame> last_emitted_;
    std::optional<double> last_input_;
    std::uint64_t gap_fills_ = 0;
    std::uint64_t resyncs_ = 0;
    std::uint64_t discarded_ = 0;
};

/// Whole-stream convenience wrapper. Throws std::runtime_error on a resync.
inline std::vector<CsiFrame> resample_to_grid(const std::vector<CsiFrame> &frames, double frame_interval_s) {
    Resampler r(frame_interval_s);
    std::vector<CsiFrame> out;
    for (const auto &f : frames) {
        auto o = r.push(f);
        if (o.resync) throw std::runtime_error("resample_to_grid: more than 4 consecutive missing slots");
        out.insert(out.end(), o.frames.begin(), o.frames.end());
    }
    auto o = r.flush();
    out.insert(out.end(), o.frames.begin(), o.frames.end());
    return out;
}

/**
 * Bounded ring of resampled frames awaiting batch processing. When full, the
 * oldest unprocessed frame is dropped and counted; ingestion never blocks.
 * Batches consume disjoint M-frame spans starting at the watermark.
 */
class FrameBuffer {
public:
    FrameBuffer(std::size_t capacity, std::size_t batch) : capacity_(capacity), batch_(batch) {
        if (batch == 0 || capacity < batch) throw std::invalid_argument("FrameBuffer: capacity must be >= batch size");
    }

    void push(CsiFrame f) {
        {
            std::lock_guard lock(mutex_);
            if (frames_.size() == capacity_) {
                frames_.pop_front();
                ++dropped_;
                ++watermark_;
            }
            frames_.push_back(std::move(f));
            ++pushed_;
        }
        ready_.notify_one();
    }

    /// Next M frames if available.
    std::optional<std::vector<CsiFrame>> try_take_batch() {
        std::lock_guard lock(mutex_);
        return take_locked();
    }

    /// Waits until a batch is available, `stop` returns true or the timeout passes.
    template <typename Rep, typename Period, typename Stop>
    std::optional<std::vector<CsiFrame>> wait_take_batch(std::chrono::duration<Rep, Period> timeout, Stop stop) {
        std::unique_lock lock(mutex_);
        ready_.wait_for(lock, timeout, [&] { return frames_.size() >= batch_ || stop(); });
        return take_locked();
    }

    void clear() {
        std::lock_guard lock(mutex_);
        watermark_ += frames_.size();
        flushed_ += frames_.size();
        frames_.clear();
    }

    void notify() { ready_.notify_all(); }

    [[nodiscard]] std::size_t size() const {
        std::lock_guard lock(mutex_);
        return frames_.size();
    }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }
    [[nodiscard]] std::uint64_t dropped() const {
        std::lock_guard lock(mutex_);
        return dropped_;
    }
    [[nodiscard]] std::uint64_t watermark() const {
        std::lock_guard lock(mutex_);
        return watermark_;
    }

private:
    std::optional<std::vector<CsiFrame>> take_locked() {
        if (frames_.size() < batch_) return std::nullopt;
        std::vector<CsiFrame> out(std::make_move_iterator(frames_.begin()),
                                  std::make_move_iterator(frames_.begin() + static_cast<long>(batch_)));
        frames_.erase(frames_.begin(), frames_.begin() + static_cast<long>(batch_));
        watermark_ += batch_;
        return out;
    }

    std::size_t capacity_;
    std::size_t batch_;
    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<CsiFrame> frames_;
    std::uint64_t dropped_ = 0;
    std::uint64_t pushed_ = 0;
    std::uint64_t flushed_ = 0;
    std::uint64_t watermark_ = 0;
};

}  // namespace livesense::resample
