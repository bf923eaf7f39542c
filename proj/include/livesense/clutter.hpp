// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Static background (leakage + static reflections) estimation and removal.
 */

#pragma once

#include "livesense/types.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace livesense::clutter {

class BackgroundState {
public:
    BackgroundState(SicKind kind, int window_k, double alpha, std::size_t n_subcarriers)
        : kind_(kind), window_k_(window_k), alpha_(alpha), background_(n_subcarriers) {
        if (window_k < 1) throw std::invalid_argument("BackgroundState: window_k must be >= 1");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("BackgroundState: alpha must be in (0, 1]");
    }

    explicit BackgroundState(const SensingConfig &c)
        : BackgroundState(c.sic.kind, c.sic.window_k, c.sic.alpha, static_cast<std::size_t>(c.n_subcarriers)) {}

    /// Current estimate; all zeros before the first update.
    [[nodiscard]] const CsiVector &background() const { return background_; }
    [[nodiscard]] SicKind kind() const { return kind_; }
    [[nodiscard]] std::size_t frames_seen() const { return frames_seen_; }
    [[nodiscard]] std::size_t size() const { return background_.size(); }

    /// True until K frames (sliding mean, template) or ceil(1/alpha) frames (ema) were seen.
    [[nodiscard]] bool warmup() const {
        if (kind_ == SicKind::ema) return static_cast<double>(frames_seen_) < std::ceil(1.0 / alpha_);
        return frames_seen_ < static_cast<std::size_t>(window_k_);
    }

    /// Ingests a synchronized frame's CSI.
    void update(const CsiVector &csi) {
        if (csi.size() != background_.size()) throw std::invalid_argument("BackgroundState: subcarrier count mismatch");
        switch (kind_) {
            case SicKind::sliding_mean:
                push_window(csi);
                break;
            case SicKind::fixed_template:
                // frozen after the first K frames
                if (frames_seen_ < static_cast<std::size_t>(window_k_)) push_window(csi);
                break;
            case SicKind::ema:
                if (frames_seen_ == 0) {
                    // start from zero background: b1 = alpha x
                    for (std::size_t k = 0; k < csi.size(); ++k) background_[k] = alpha_ * csi[k];
                } else {
                    for (std::size_t k = 0; k < csi.size(); ++k)
                        background_[k] = (1.0 - alpha_) * background_[k] + alpha_ * csi[k];
                }
                break;
        }
        ++frames_seen_;
    }

    void reset() {
        window_.clear();
        std::fill(background_.begin(), background_.end(), cplx{});
        frames_seen_ = 0;
    }

private:
    // Running mean with incremental updates; identical frames therefore give an exact mean.
    void push_window(const CsiVector &csi) {
        window_.push_back(csi);
        if (window_.size() > static_cast<std::size_t>(window_k_)) {
            const CsiVector &old = window_.front();
            const double inv_k = 1.0 / static_cast<double>(window_k_);
            for (std::size_t k = 0; k < csi.size(); ++k) background_[k] += (csi[k] - old[k]) * inv_k;
            window_.pop_front();
        } else {
            const double n = static_cast<double>(window_.size());
            for (std::size_t k = 0; k < csi.size(); ++k) background_[k] += (csi[k] - background_[k]) / n;
        }
        // recompute from the window now and then so rounding does not accumulate
        if (++pushes_since_rebuild_ >= 4 * static_cast<std::size_t>(window_k_)) {
            std::fill(background_.begin(), background_.end(), cplx{});
            double n = 0.0;
            for (const auto &w : window_) {
                n += 1.0;
                for (std::size_t k = 0; k < w.size(); ++k) background_[k] += (w[k] - background_[k]) / n;
            }
            pushes_since_rebuild_ = 0;
        }
    }

    SicKind kind_;
    int window_k_;
    double alpha_;
    std::deque<CsiVector> window_;
    CsiVector background_;
    std::size_t frames_seen_ = 0;
    std::size_t pushes_since_rebuild_ = 0;
};

/// frame - background, using the state as it stands (before this frame is ingested).
inline CsiFrame subtract(const CsiFrame &frame, const BackgroundState &state) {
    if (frame.csi.size() != state.size()) throw std::invalid_argument("subtract: subcarrier count mismatch");
    CsiFrame out = frame;
    const auto &bg = state.background();
    for (std::size_t k = 0; k < out.csi.size(); ++k) out.csi[k] -= bg[k];
    return out;
}

inline void update(BackgroundState &state, const CsiFrame &frame) { state.update(frame.csi); }

}  // namespace livesense::clutter
