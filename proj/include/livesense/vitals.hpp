// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Breathing-rate estimation from the slow-time phase of one range bin, and presence decisions.
 */

#pragma once

#include "livesense/fft.hpp"
#include "livesense/sync.hpp"
#include "livesense/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace livesense::vitals {

struct VitalsEstimate {
    double rate_hz = 0.0;
    double confidence_db = 0.0;  ///< in-band peak over in-band median
    double window_span_s = 0.0;
    int range_bin = -1;
    friend bool operator==(const VitalsEstimate &, const VitalsEstimate &) = default;
};

struct VitalsResult {
    std::optional<VitalsEstimate> estimate;
    std::string diagnostic;  ///< why no estimate was produced
};

namespace detail {

struct Circle {
    cplx centre;
    double radius = 0.0;
    bool ok = false;
};

/// Algebraic (Kasa) least-squares circle through the samples.
inline Circle fit_circle(std::span<const cplx> z, cplx origin) {
    // work around the sample mean for conditioning
    double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, sxz = 0, syz = 0, sz = 0;
    const double n = static_cast<double>(z.size());
    for (const auto &p : z) {
        const double x = p.real() - origin.real();
        const double y = p.imag() - origin.imag();
        const double q = x * x + y * y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sx += x;
        sy += y;
        sxz += x * q;
        syz += y * q;
        sz += q;
    }
    // [sxx sxy sx; sxy syy sy; sx sy n] [D E F]^T = -[sxz syz sz]^T
    const std::array<std::array<double, 4>, 3> a0{{{sxx, sxy, sx, -sxz}, {sxy, syy, sy, -syz}, {sx, sy, n, -sz}}};
    auto a = a0;
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return {};
        std::swap(a[col], a[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
        }
    }
    const double d = a[0][3] / a[0][0];
    const double e = a[1][3] / a[1][1];
    const double f = a[2][3] / a[2][2];
    Circle c;
    c.centre = origin + cplx(-d / 2.0, -e / 2.0);
    const double r2 = d * d / 4.0 + e * e / 4.0 - f;
    c.ok = std::isfinite(r2) && r2 > 0.0;
    c.radius = c.ok ? std::sqrt(r2) : 0.0;
    return c;
}

inline void detrend(std::vector<double> &x) {
    const double n = static_cast<double>(x.size());
    double st = 0, sx = 0, stt = 0, stx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i);
        st += t;
        sx += x[i];
        stt += t * t;
        stx += t * x[i];
    }
    const double den = n * stt - st * st;
    const double slope = den != 0.0 ? (n * stx - st * sx) / den : 0.0;
    const double icpt = (sx - slope * st) / n;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= icpt + slope * static_cast<double>(i);
}

}  // namespace detail

inline constexpr int kSpectrumPadding = 8;

/**
 * Breathing rate from the last `vitals.window_frames` samples of a slow-time series.
 *
 * Static clutter sharing the bin offsets the phasor arc from the origin, so the
 * arc centre is removed with a least-squares circle fit before the phase is
 * taken. Arcs too flat for a stable fit are projected on their principal axis
 * instead. The phase (or projection) is unwrapped, detrended, Hann windowed and
 * transformed; the strongest in-band peak is reported when it stands
 * `prominence_db` above the in-band median.
 */
inline VitalsResult vitals_estimate(std::span<const cplx> series, const SensingConfig &cfg) {
    const auto w = static_cast<std::size_t>(cfg.vitals.window_frames);
    if (series.size() < w) return {std::nullopt, "series shorter than window"};
    const auto z = series.subspan(series.size() - w);

    cplx mean{};
    for (const auto &v : z) mean += v;
    mean /= static_cast<double>(w);
    double spread2 = 0.0;
    for (const auto &v : z) spread2 += std::norm(v - mean);
    const double spread = std::sqrt(spread2 / static_cast<double>(w));
    if (!(spread > 1e-12 * (std::abs(mean) + 1e-300)) || spread == 0.0) return {std::nullopt, "no slow-time variation"};

    std::vector<double> signal(w);
    const detail::Circle circle = detail::fit_circle(z, mean);
    if (circle.ok && circle.radius < 50.0 * spread) {
        for (std::size_t i = 0; i < w; ++i) signal[i] = std::arg(z[i] - circle.centre);
        const std::size_t jumps = sync::unwrap_in_place(signal);
        if (static_cast<double>(jumps) > 0.1 * static_cast<double>(w - 1)) return {std::nullopt, "phase unwrap failed"};
    } else {
        // principal axis of the centred samples
        double sxx = 0, syy = 0, sxy = 0;
        for (const auto &v : z) {
            const cplx d = v - mean;
            sxx += d.real() * d.real();
            syy += d.imag() * d.imag();
            sxy += d.real() * d.imag();
        }
        const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        const cplx axis = std::polar(1.0, -theta);
        for (std::size_t i = 0; i < w; ++i) signal[i] = ((z[i] - mean) * axis).real();
    }
    detail::detrend(signal);

    const std::size_t nfft = w * kSpectrumPadding;
    const auto hann = fft::hann(w);
    CsiVector buf(nfft);
    for (std::size_t i = 0; i < w; ++i) buf[i] = signal[i] * hann[i];
    const CsiVector spec = fft::forward(buf);

    const double fs = 1.0 / cfg.frame_interval_s;
    const double df = fs / static_cast<double>(nfft);
    const auto lo = static_cast<std::size_t>(std::ceil(cfg.vitals.band_lo_hz / df));
    const auto hi = std::min(nfft / 2, static_cast<std::size_t>(std::floor(cfg.vitals.band_hi_hz / df)));
    if (hi <= lo + 2) return {std::nullopt, "band narrower than spectral resolution"};

    std::vector<double> band;
    std::size_t peak = lo;
    for (std::size_t q = lo; q <= hi; ++q) {
        const double p = std::norm(spec[q]);
        band.push_back(p);
        if (p > std::norm(spec[peak])) peak = q;
    }
    std::vector<double> sorted = band;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double peak_power = std::norm(spec[peak]);
    if (!(median > 0.0) || !(peak_power > 0.0)) return {std::nullopt, "flat spectrum"};
    const double prominence = power_to_db(peak_power / median);
    if (prominence < cfg.vitals.prominence_db) return {std::nullopt, "no prominent in-band peak"};

    double off = 0.0;
    if (peak > 0 && peak + 1 < nfft) {
        const double l = std::norm(spec[peak - 1]);
        const double r = std::norm(spec[peak + 1]);
        if (l > 0.0 && r > 0.0) {
            const double den = std::log((l * r) / (peak_power * peak_power));
            if (den < 0.0) off = std::clamp(0.5 * std::log(l / r) / den, -0.5, 0.5);
        }
    }
    VitalsEstimate est;
    est.rate_hz = std::clamp((static_cast<double>(peak) + off) * df, cfg.vitals.band_lo_hz, cfg.vitals.band_hi_hz);
    est.confidence_db = prominence;
    est.window_span_s = static_cast<double>(w) * cfg.frame_interval_s;
    return {est, {}};
}

/// Range bins with the largest slow-time variance, strongest first.
inline std::vector<std::size_t> candidate_bins(std::span<const CsiVector> profiles, std::size_t count = 3) {
    if (profiles.empty()) return {};
    const std::size_t bins = profiles.front().size();
    std::vector<std::pair<double, std::size_t>> var;
    for (std::size_t r = 0; r < bins; ++r) {
        cplx mean{};
        for (const auto &p : profiles) mean += p[r];
        mean /= static_cast<double>(profiles.size());
        double v = 0.0;
        for (const auto &p : profiles) v += std::norm(p[r] - mean);
        var.emplace_back(v, r);
    }
    std::stable_sort(var.begin(), var.end(), [](const auto &a, const auto &b) { return a.first > b.first; });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(count, var.size()); ++i) out.push_back(var[i].second);
    return out;
}

/// What a presence decision looks at for one batch.
struct PresenceInput {
    std::vector<Track> tracks;
    std::optional<VitalsEstimate> vitals;
};

struct PresenceDecision {
    bool present = false;
    double score = 0.0;
    bool via_track = false;
    bool via_vitals = false;
};

/// Present when any confirmed track or any vitals estimate appears in the window.
inline PresenceDecision presence_decision(std::span<const PresenceInput> window) {
    if (window.empty()) throw std::invalid_argument("presence_decision: needs at least one batch");
    PresenceDecision out;
    for (const auto &b : window) {
        for (const auto &t : b.tracks) {
            if (t.state != TrackState::confirmed) continue;
            out.via_track = true;
            const double snr = t.history.empty() ? 0.0 : t.history.back().snr_db;
            out.score = std::max(out.score, snr);
        }
        if (b.vitals) {
            out.via_vitals = true;
            out.score = std::max(out.score, b.vitals->confidence_db);
        }
    }
    out.present = out.via_track || out.via_vitals;
    return out;
}

}  // namespace livesense::vitals
