// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Greedy nearest-neighbour multi-target tracker with alpha-beta range smoothing.
 */

#pragma once

#include "livesense/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace livesense::track {

inline constexpr double kAlpha = 0.5;
inline constexpr double kBeta = 0.2;

/// Normalized association distance; a pair is admissible when it is below 1.
inline double association_distance(const Track &t, const Detection &d, double now, const TrackConfig &cfg) {
    const double predicted = t.range_m + t.range_rate * (now - t.last_update);
    return std::abs(d.range_m - predicted) / cfg.gate_range_m + std::abs(d.velocity_mps - t.velocity_mps) / cfg.gate_vel_mps;
}

class Tracker {
public:
    explicit Tracker(TrackConfig cfg = {}) : cfg_(cfg) {}

    /**
     * One association round for the detections of a single batch at time `t`.
     * Dead tracks from the previous round are purged first, so the returned
     * snapshot shows tracks that died in this round exactly once.
     */
    const std::vector<Track> &update(std::span<const Detection> detections, double t) {
        if (last_time_ && !(t > *last_time_)) throw std::invalid_argument("Tracker::update: time must increase");
        last_time_ = t;
        std::erase_if(tracks_, [](const Track &tr) { return tr.state == TrackState::dead; });

        struct Pair {
            double distance;
            std::size_t track;
            std::size_t det;
        };
        std::vector<Pair> pairs;
        for (std::size_t i = 0; i < tracks_.size(); ++i)
            for (std::size_t j = 0; j < detections.size(); ++j) {
                const double d = association_distance(tracks_[i], detections[j], t, cfg_);
                if (d < 1.0) pairs.push_back({d, i, j});
            }
        std::sort(pairs.begin(), pairs.end(), [](const Pair &a, const Pair &b) {
            return std::tie(a.distance, a.track, a.det) < std::tie(b.distance, b.track, b.det);
        });

        std::vector<bool> track_used(tracks_.size(), false);
        std::vector<bool> det_used(detections.size(), false);
        for (const auto &p : pairs) {
            if (track_used[p.track] || det_used[p.det]) continue;
            track_used[p.track] = true;
            det_used[p.det] = true;
            apply_hit(tracks_[p.track], detections[p.det], t);
        }
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (track_used[i]) continue;
            Track &tr = tracks_[i];
            ++tr.misses;
            if (tr.misses >= cfg_.delete_misses) tr.state = TrackState::dead;
        }
        for (std::size_t j = 0; j < detections.size(); ++j) {
            if (det_used[j]) continue;
            Track tr;
            tr.id = next_id_++;
            tr.hits = 1;
            tr.range_m = detections[j].range_m;
            tr.range_rate = detections[j].velocity_mps;
            tr.velocity_mps = detections[j].velocity_mps;
            tr.last_update = t;
            tr.history.push_back({t, tr.range_m, tr.velocity_mps, detections[j].snr_db});
            tr.state = tr.hits >= cfg_.confirm_hits ? TrackState::confirmed : TrackState::tentative;
            tracks_.push_back(std::move(tr));
        }
        return tracks_;
    }

    [[nodiscard]] const std::vector<Track> &tracks() const { return tracks_; }
    [[nodiscard]] const TrackConfig &config() const { return cfg_; }
    void set_config(const TrackConfig &cfg) { cfg_ = cfg; }
    void reset() {
        tracks_.clear();
        last_time_.reset();
    }

private:
    void apply_hit(Track &tr, const Detection &d, double t) {
        const double dt = t - tr.last_update;
        const double predicted = tr.range_m + tr.range_rate * dt;
        const double residual = d.range_m - predicted;
        tr.range_m = predicted + kAlpha * residual;
        if (dt > 0.0) tr.range_rate += kBeta / dt * residual;
        tr.velocity_mps = d.velocity_mps;
        tr.last_update = t;
        ++tr.hits;
        tr.misses = 0;
        tr.history.push_back({t, tr.range_m, d.velocity_mps, d.snr_db});
        if (tr.state == TrackState::tentative && tr.hits >= cfg_.confirm_hits) tr.state = TrackState::confirmed;
    }

    TrackConfig cfg_;
    std::vector<Track> tracks_;
    std::uint32_t next_id_ = 1;
    std::optional<double> last_time_;
};

/// Functional form: returns the updated track list.
inline std::vector<Track> update_tracks(Tracker &tracker, std::span<const Detection> detections, double t) {
    return tracker.update(detections, t);
}

}  // namespace livesense::track
