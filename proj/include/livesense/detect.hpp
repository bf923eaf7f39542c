// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Noise floor, 2-D cell-averaging CFAR and detection extraction on range-Doppler maps.
 */

#pragma once

#include "livesense/rdmap.hpp"
#include "livesense/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace livesense::detect {

struct CfarParams {
    int guard_r = 2;
    int guard_d = 1;
    int train_r = 2;
    int train_d = 4;
    double pfa = 1e-4;

    void validate() const {
        if (guard_r < 0 || guard_d < 0) throw std::invalid_argument("CfarParams: guard cells must be >= 0");
        if (train_r < 1 || train_d < 1) throw std::invalid_argument("CfarParams: training cells must be >= 1");
        if (!(pfa > 0.0 && pfa < 1.0)) throw std::invalid_argument("CfarParams: pfa must be in (0, 1)");
    }
};

/// Threshold factor for `n_train` exponential training cells: N (pfa^(-1/N) - 1).
inline double threshold_factor(double pfa, std::size_t n_train) {
    const double n = static_cast<double>(n_train);
    return n * (std::pow(pfa, -1.0 / n) - 1.0);
}

/// CFAR cells for a config; range cells are given in native bins and scale with the padding factor.
inline CfarParams cfar_params(const SensingConfig &cfg) {
    return {cfg.cfar.guard_r * cfg.zero_pad_factor, cfg.cfar.guard_d, cfg.cfar.train_r * cfg.zero_pad_factor,
            cfg.cfar.train_d, cfg.cfar.pfa};
}

/**
 * Median linear power outside the zero-velocity row after discarding the top 1%
 * of cells, scaled by 1/ln 2 (median of an exponential variate), in dB.
 * Throws std::domain_error when that median is not positive.
 */
inline double noise_floor(const RangeDopplerMap &map) {
    std::vector<double> cells;
    cells.reserve(map.power.data.size());
    const std::size_t zero_row = map.zero_velocity_row();
    for (std::size_t d = 0; d < map.doppler_bins(); ++d) {
        if (d == zero_row) continue;
        for (std::size_t r = 0; r < map.range_bins(); ++r) cells.push_back(map.power(d, r));
    }
    if (cells.empty()) throw std::domain_error("noise_floor: map has no cells outside the zero-velocity row");
    std::sort(cells.begin(), cells.end());
    const std::size_t keep = cells.size() - cells.size() / 100;
    const std::size_t mid = keep / 2;
    const double median = keep % 2 == 1 ? cells[mid] : 0.5 * (cells[mid - 1] + cells[mid]);
    if (!(median > 0.0) || !std::isfinite(median)) throw std::domain_error("noise_floor: no finite noise floor");
    return power_to_db(median / std::log(2.0));
}

using HitMask = Matrix<std::uint8_t>;

/**
 * Cell-averaging CFAR. The training window is clipped at the map boundary and
 * the threshold factor re-derived from the number of cells that remain. The
 * zero-velocity row never produces hits.
 */
inline HitMask cfar_detect(const RangeDopplerMap &map, const CfarParams &p) {
    p.validate();
    const auto rows = static_cast<long>(map.doppler_bins());
    const auto cols = static_cast<long>(map.range_bins());
    HitMask mask(map.doppler_bins(), map.range_bins(), 0);
    const long zero_row = static_cast<long>(map.zero_velocity_row());
    const long reach_d = p.guard_d + p.train_d;
    const long reach_r = p.guard_r + p.train_r;

    std::vector<double> factor_cache;
    for (long d = 0; d < rows; ++d) {
        if (d == zero_row) continue;
        for (long r = 0; r < cols; ++r) {
            double sum = 0.0;
            std::size_t count = 0;
            for (long dd = std::max(0L, d - reach_d); dd <= std::min(rows - 1, d + reach_d); ++dd) {
                const bool guard_row = std::abs(dd - d) <= p.guard_d;
                for (long rr = std::max(0L, r - reach_r); rr <= std::min(cols - 1, r + reach_r); ++rr) {
                    if (guard_row && std::abs(rr - r) <= p.guard_r) continue;
                    sum += map.power(static_cast<std::size_t>(dd), static_cast<std::size_t>(rr));
                    ++count;
                }
            }
            if (count == 0) continue;
            if (factor_cache.size() <= count) factor_cache.resize(count + 1, -1.0);
            double &f = factor_cache[count];
            if (f < 0.0) f = threshold_factor(p.pfa, count) / static_cast<double>(count);
            // power > alpha * mean  <=>  power > (alpha / N) * sum
            if (map.power(static_cast<std::size_t>(d), static_cast<std::size_t>(r)) > f * sum)
                mask(static_cast<std::size_t>(d), static_cast<std::size_t>(r)) = 1;
        }
    }
    return mask;
}

inline std::size_t hit_count(const HitMask &mask) {
    std::size_t n = 0;
    for (auto v : mask.data) n += v != 0;
    return n;
}

/// One detection per 8-connected group of hits, at the group's strongest cell, sub-bin refined.
inline std::vector<Detection> extract_detections(const RangeDopplerMap &map, const HitMask &mask) {
    if (mask.rows != map.doppler_bins() || mask.cols != map.range_bins())
        throw std::invalid_argument("extract_detections: mask shape differs from map");
    std::vector<Detection> out;
    if (hit_count(mask) == 0) return out;
    const double floor_db = noise_floor(map);

    const std::size_t rows = mask.rows;
    const std::size_t cols = mask.cols;
    std::vector<std::uint8_t> seen(rows * cols, 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < rows * cols; ++start) {
        if (mask.data[start] == 0 || seen[start] != 0) continue;
        std::size_t best = start;
        stack.assign(1, start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            if (map.power.data[idx] > map.power.data[best]) best = idx;
            const long d0 = static_cast<long>(idx / cols);
            const long r0 = static_cast<long>(idx % cols);
            for (long dd = -1; dd <= 1; ++dd)
                for (long dr = -1; dr <= 1; ++dr) {
                    const long d = d0 + dd;
                    const long r = r0 + dr;
                    if (d < 0 || r < 0 || d >= static_cast<long>(rows) || r >= static_cast<long>(cols)) continue;
                    const auto j = static_cast<std::size_t>(d) * cols + static_cast<std::size_t>(r);
                    if (mask.data[j] != 0 && seen[j] == 0) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                }
        }
        const std::size_t bd = best / cols;
        const std::size_t br = best % cols;
        const auto peak = rdmap::refine_peak(map, br, bd);
        Detection det;
        det.range_m = peak.range_m;
        det.velocity_mps = peak.velocity_mps;
        det.bin_r = peak.bin_r;
        det.bin_d = peak.bin_d;
        det.refined = peak.refined;
        det.snr_db = map.mag_db(bd, br) - floor_db;
        det.timestamp = map.batch_timestamp;
        out.push_back(det);
    }
    return out;
}

/// Strict local maxima off the zero-velocity row at least `min_snr_db` over the noise floor
/// and within `max_below_db` of the strongest of them, strongest first, at most `limit`.
inline std::vector<Detection> strong_peaks(const RangeDopplerMap &map, double min_snr_db, double max_below_db,
                                           std::size_t limit) {
    std::vector<Detection> out;
    const std::size_t rows = map.doppler_bins();
    const std::size_t cols = map.range_bins();
    if (rows < 3 || cols == 0) return out;
    double floor_db = 0.0;
    try {
        floor_db = noise_floor(map);
    } catch (const std::domain_error &) {
        return out;
    }
    std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> found;
    for (std::size_t d = 0; d < rows; ++d) {
        if (d == map.zero_velocity_row()) continue;
        for (std::size_t r = 0; r < cols; ++r) {
            const double p = map.power(d, r);
            if (map.mag_db(d, r) - floor_db < min_snr_db) continue;
            bool is_max = true;
            for (long dd = -1; dd <= 1 && is_max; ++dd)
                for (long dr = -1; dr <= 1; ++dr) {
                    const long y = static_cast<long>(d) + dd;
                    const long x = static_cast<long>(r) + dr;
                    if ((dd == 0 && dr == 0) || y < 0 || x < 0 || y >= static_cast<long>(rows) || x >= static_cast<long>(cols))
                        continue;
                    if (map.power(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) >= p) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) found.push_back({map.mag_db(d, r), {d, r}});
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto &a, const auto &b) { return a.first > b.first; });
    for (const auto &[db, cell] : found) {
        if (out.size() >= limit || db < found.front().first - max_below_db) break;
        const auto peak = rdmap::refine_peak(map, cell.second, cell.first);
        Detection det;
        det.range_m = peak.range_m;
        det.velocity_mps = peak.velocity_mps;
        det.bin_r = peak.bin_r;
        det.bin_d = peak.bin_d;
        det.refined = peak.refined;
        det.snr_db = db - floor_db;
        det.timestamp = map.batch_timestamp;
        out.push_back(det);
    }
    return out;
}

}  // namespace livesense::detect
