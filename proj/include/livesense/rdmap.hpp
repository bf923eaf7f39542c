// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Range profiles, range-Doppler maps and sub-bin peak refinement.
 *
 * Both transforms use the e^{+j} kernel so that positive delay lands in positive
 * range bins and increasing range (receding targets) in positive velocity bins.
 * Amplitudes are normalized by the window sum: a unit point target on a bin
 * centre produces a unit peak regardless of length, padding or window.
 */

#pragma once

#include "livesense/fft.hpp"
#include "livesense/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace livesense::rdmap {

enum class Window { hann, rectangular };

struct RangeProfile {
    CsiVector bins;
    double timestamp = 0.0;
    std::uint32_t seq = 0;
    FrameFlags flags{};
    friend bool operator==(const RangeProfile &, const RangeProfile &) = default;
};

/// M range profiles on a uniform time grid.
using DopplerBatch = std::vector<RangeProfile>;

namespace detail {

inline std::vector<double> make_window(std::size_t n, Window w) {
    if (w == Window::hann) return fft::hann(n);
    return std::vector<double>(n, 1.0);
}

inline double sum(const std::vector<double> &w) {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
}

}  // namespace detail

/**
 * Windowed, zero-padded inverse transform across subcarriers, cropped to
 * max_range_m. Efficiency mode keeps every fourth subcarrier first.
 */
inline RangeProfile range_profile(const CsiFrame &frame, const SensingConfig &cfg, Window window = Window::hann) {
    const auto n = static_cast<std::size_t>(cfg.n_subcarriers);
    if (frame.csi.size() != n) throw std::invalid_argument("range_profile: subcarrier count mismatch");
    const auto decim = static_cast<std::size_t>(subcarrier_decimation(cfg.mode));
    const std::size_t n_eff = n / decim;
    const std::size_t padded = n_eff * static_cast<std::size_t>(cfg.zero_pad_factor);
    const auto w = detail::make_window(n_eff, window);

    CsiVector in(padded);
    for (std::size_t i = 0; i < n_eff; ++i) in[i] = frame.csi[i * decim] * w[i];
    CsiVector out(padded);
    fft::plan(padded, fft::Direction::backward).execute(in, out);

    const double norm = 1.0 / detail::sum(w);
    const auto bins = static_cast<std::size_t>(cfg.range_bins());
    RangeProfile p;
    p.bins.resize(bins);
    for (std::size_t r = 0; r < bins; ++r) p.bins[r] = out[r] * norm;
    p.timestamp = frame.timestamp;
    p.seq = frame.seq;
    p.flags = frame.flags;
    return p;
}

/// Slow-time window, M-point transform per range bin, zero-centred, to power and dB.
inline RangeDopplerMap doppler_process(std::span<const RangeProfile> batch, const SensingConfig &cfg,
                                       Window window = Window::hann) {
    const auto m = static_cast<std::size_t>(cfg.doppler_batch);
    if (batch.size() != m) throw std::invalid_argument("doppler_process: batch must hold exactly M profiles");
    const std::size_t bins = batch.front().bins.size();
    for (const auto &p : batch)
        if (p.bins.size() != bins) throw std::invalid_argument("doppler_process: inconsistent profile lengths");

    const auto w = detail::make_window(m, window);
    const double norm = 1.0 / detail::sum(w);
    const auto &plan = fft::plan(m, fft::Direction::backward);

    RangeDopplerMap map;
    map.power = Matrix<double>(m, bins);
    map.mag_db = Matrix<double>(m, bins);
    CsiVector slow(m), spec(m);
    for (std::size_t r = 0; r < bins; ++r) {
        for (std::size_t i = 0; i < m; ++i) slow[i] = batch[i].bins[r] * w[i];
        plan.execute(slow, spec);
        for (std::size_t q = 0; q < m; ++q) {
            const std::size_t row = (q + m / 2) % m;
            const double mag = std::abs(spec[q]) * norm;
            map.power(row, r) = mag * mag;
            map.mag_db(row, r) = to_db_mag(mag);
        }
    }
    map.range_axis = range_axis(cfg);
    map.velocity_axis = velocity_axis(cfg);
    if (map.range_axis.size() != bins) throw std::invalid_argument("doppler_process: profile length does not match config");
    map.batch_timestamp = 0.5 * (batch.front().timestamp + batch.back().timestamp);
    return map;
}

/// Vertex offset in (-0.5, 0.5) of a parabola through log powers; computed from ratios so it is scale free.
inline double parabolic_offset(double left, double centre, double right) {
    if (!(left > 0.0 && centre > 0.0 && right > 0.0)) return 0.0;
    const double num = std::log(left / right);
    const double den = std::log((left * right) / (centre * centre));
    if (!(den < 0.0)) return 0.0;
    const double off = 0.5 * num / den;
    return std::clamp(off, -0.5, 0.5);
}

struct RefinedPeak {
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double bin_r = 0.0;
    double bin_d = 0.0;
    bool refined = true;  ///< false when either dimension sat on the map edge or was not a local maximum
};

/// Three-point log-power interpolation, independently in range and Doppler.
inline RefinedPeak refine_peak(const RangeDopplerMap &map, std::size_t bin_r, std::size_t bin_d) {
    const std::size_t rows = map.doppler_bins();
    const std::size_t cols = map.range_bins();
    if (bin_r >= cols || bin_d >= rows) throw std::out_of_range("refine_peak: bin outside map");
    RefinedPeak out;
    const double c = map.power(bin_d, bin_r);
    double off_r = 0.0;
    double off_d = 0.0;
    if (bin_r == 0 || bin_r + 1 >= cols) {
        out.refined = false;
    } else {
        const double l = map.power(bin_d, bin_r - 1);
        const double r = map.power(bin_d, bin_r + 1);
        if (c >= l && c >= r) off_r = parabolic_offset(l, c, r);
        else out.refined = false;
    }
    if (bin_d == 0 || bin_d + 1 >= rows) {
        out.refined = false;
    } else {
        const double l = map.power(bin_d - 1, bin_r);
        const double r = map.power(bin_d + 1, bin_r);
        if (c >= l && c >= r) off_d = parabolic_offset(l, c, r);
        else out.refined = false;
    }
    out.bin_r = static_cast<double>(bin_r) + off_r;
    out.bin_d = static_cast<double>(bin_d) + off_d;
    const double dr = cols > 1 ? map.range_axis[1] - map.range_axis[0] : 0.0;
    const double dv = rows > 1 ? map.velocity_axis[1] - map.velocity_axis[0] : 0.0;
    out.range_m = map.range_axis[bin_r] + off_r * dr;
    out.velocity_mps = map.velocity_axis[bin_d] + off_d * dv;
    return out;
}

/// Same interpolation on a single range profile. Returns the fractional bin.
inline double refine_profile_peak(const RangeProfile &p, std::size_t bin, bool *refined = nullptr) {
    const std::size_t n = p.bins.size();
    if (bin >= n) throw std::out_of_range("refine_profile_peak: bin outside profile");
    bool ok = bin > 0 && bin + 1 < n;
    double off = 0.0;
    if (ok) {
        const double l = std::norm(p.bins[bin - 1]);
        const double c = std::norm(p.bins[bin]);
        const double r = std::norm(p.bins[bin + 1]);
        ok = c >= l && c >= r;
        if (ok) off = parabolic_offset(l, c, r);
    }
    if (refined != nullptr) *refined = ok;
    return static_cast<double>(bin) + off;
}

}  // namespace livesense::rdmap
