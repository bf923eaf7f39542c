// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Per-frame delay and phase alignment against a reference frame.
 *
 * The chain for each frame is: integer delay from the circular cross-correlation
 * of delay profiles, fractional delay from a weighted phase-slope fit, removal of
 * both, then removal of the common phase using the leakage tap as reference.
 */

#pragma once

#include "livesense/clutter.hpp"
#include "livesense/fft.hpp"
#include "livesense/types.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace livesense::sync {

inline constexpr double kMinPeakRatio = 1.2;
inline constexpr double kMinLeakDominanceDb = 6.0;
inline constexpr int kLeakSearchBins = 3;  ///< range bins 0..2

/// Unwindowed delay profile h(r) = (1/N) sum_k csi[k] e^{+j2pi k r / N}.
inline CsiVector delay_profile(const CsiVector &csi) {
    CsiVector h = fft::backward(csi);
    const double scale = 1.0 / static_cast<double>(csi.size());
    for (auto &v : h) v *= scale;
    return h;
}

inline std::size_t circular_distance(std::size_t a, std::size_t b, std::size_t n) {
    const std::size_t d = a > b ? a - b : b - a;
    return std::min(d, n - d);
}

struct CoarseDelay {
    int samples = 0;          ///< signed, |samples| <= N/2; 0 when low confidence
    int raw_samples = 0;      ///< correlation argmax regardless of confidence
    double peak_ratio = 0.0;  ///< main peak over the largest lag outside the main lobe
    bool low_confidence = false;
};

/**
 * Integer delay of `frame` relative to `ref`: the lag maximizing
 * |sum_r h_frame(r) conj(h_ref(r - lag))|. The competing peak is searched at
 * lags at least two samples from the maximum, so a half-sample offset does not
 * count as ambiguity.
 */
inline CoarseDelay coarse_delay(const CsiFrame &frame, const CsiFrame &ref, double min_ratio = kMinPeakRatio) {
    const std::size_t n = frame.csi.size();
    if (ref.csi.size() != n) throw std::invalid_argument("coarse_delay: subcarrier count mismatch");
    CsiVector cross(n);
    for (std::size_t k = 0; k < n; ++k) cross[k] = frame.csi[k] * std::conj(ref.csi[k]);
    const CsiVector corr = fft::backward(cross);

    std::size_t peak = 0;
    double peak_mag = -1.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double m = std::abs(corr[l]);
        if (m > peak_mag) {
            peak_mag = m;
            peak = l;
        }
    }
    double second = 0.0;
    for (std::size_t l = 0; l < n; ++l)
        if (circular_distance(l, peak, n) >= 2) second = std::max(second, std::abs(corr[l]));

    CoarseDelay out;
    out.raw_samples = peak > n / 2 ? static_cast<int>(peak) - static_cast<int>(n) : static_cast<int>(peak);
    out.peak_ratio = second > 0.0 ? peak_mag / second : std::numeric_limits<double>::infinity();
    out.low_confidence = !(out.peak_ratio >= min_ratio);
    out.samples = out.low_confidence ? 0 : out.raw_samples;
    return out;
}

/// csi[k] *= e^{+j2pi f_k delay_s}. Removes a delay of `delay_s`.
inline CsiFrame apply_delay(const CsiFrame &frame, double delay_s, double bandwidth_hz) {
    CsiFrame out = frame;
    const std::size_t n = frame.csi.size();
    const double cycles_per_tone = delay_s * bandwidth_hz / static_cast<double>(n);
    const double frac = cycles_per_tone - std::floor(cycles_per_tone);
    const long long half = static_cast<long long>(n / 2);
    for (std::size_t k = 0; k < n; ++k) {
        double cycles = static_cast<double>(static_cast<long long>(k) - half) * frac;
        cycles -= std::floor(cycles);
        out.csi[k] *= std::polar(1.0, kTwoPi * cycles);
    }
    return out;
}

/// Sequential unwrap; returns the number of raw jumps larger than pi.
inline std::size_t unwrap_in_place(std::vector<double> &phase) {
    std::size_t jumps = 0;
    double offset = 0.0;
    for (std::size_t i = 1; i < phase.size(); ++i) {
        const double raw_prev = phase[i - 1] - offset;
        double d = phase[i] - raw_prev;
        if (std::abs(d) > kPi) ++jumps;
        while (d > kPi) {
            offset -= kTwoPi;
            d -= kTwoPi;
        }
        while (d < -kPi) {
            offset += kTwoPi;
            d += kTwoPi;
        }
        phase[i] += offset;
    }
    return jumps;
}

struct FineDelay {
    double seconds = 0.0;
    bool ok = true;
    std::size_t used_tones = 0;
};

/**
 * Fractional residual delay of `frame` relative to `ref` from the slope of
 * arg(csi_frame conj(csi_ref)) against f_k. Tones weaker than 10% of the median
 * cross magnitude are skipped; the rest are weighted by magnitude.
 */
inline FineDelay fine_delay(const CsiFrame &frame, const CsiFrame &ref, double bandwidth_hz) {
    const std::size_t n = frame.csi.size();
    if (ref.csi.size() != n) throw std::invalid_argument("fine_delay: subcarrier count mismatch");
    std::vector<double> mag(n);
    CsiVector cross(n);
    for (std::size_t k = 0; k < n; ++k) {
        cross[k] = frame.csi[k] * std::conj(ref.csi[k]);
        mag[k] = std::abs(cross[k]);
    }
    std::vector<double> sorted = mag;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(n / 2), sorted.end());
    const double threshold = 0.1 * sorted[n / 2];

    std::vector<double> freq, phase, weight;
    const double df = bandwidth_hz / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!(mag[k] > threshold)) continue;
        freq.push_back((static_cast<double>(k) - static_cast<double>(n / 2)) * df);
        phase.push_back(std::arg(cross[k]));
        weight.push_back(mag[k]);
    }
    FineDelay out;
    out.used_tones = freq.size();
    if (freq.size() < 3) {
        out.ok = false;
        return out;
    }
    const std::size_t jumps = unwrap_in_place(phase);
    if (static_cast<double>(jumps) > 0.1 * static_cast<double>(freq.size() - 1)) {
        out.ok = false;
        return out;
    }
    double sw = 0, sf = 0, sp = 0;
    for (std::size_t i = 0; i < freq.size(); ++i) {
        sw += weight[i];
        sf += weight[i] * freq[i];
        sp += weight[i] * phase[i];
    }
    const double fbar = sf / sw;
    const double pbar = sp / sw;
    double sff = 0, sfp = 0;
    for (std::size_t i = 0; i < freq.size(); ++i) {
        sff += weight[i] * (freq[i] - fbar) * (freq[i] - fbar);
        sfp += weight[i] * (freq[i] - fbar) * (phase[i] - pbar);
    }
    if (!(sff > 0.0)) {
        out.ok = false;
        return out;
    }
    const double delay = -(sfp / sff) / kTwoPi;
    if (!(std::abs(delay) < 1.0 / bandwidth_hz)) {
        out.ok = false;
        return out;
    }
    out.seconds = delay;
    return out;
}

struct LeakTap {
    std::size_t bin = 0;
    cplx value{};
    double dominance_db = 0.0;  ///< leak tap over the largest tap outside its main lobe
    [[nodiscard]] bool dominant() const { return dominance_db >= kMinLeakDominanceDb; }
};

/// Leak tap at a fixed bin, with its dominance over the rest of the profile.
inline LeakTap leak_tap_at(const CsiVector &profile, std::size_t bin) {
    const std::size_t n = profile.size();
    LeakTap t;
    t.bin = bin;
    t.value = profile[bin];
    double next = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        if (circular_distance(r, bin, n) >= 2) next = std::max(next, std::abs(profile[r]));
    const double lm = std::abs(t.value);
    t.dominance_db = next > 0.0 ? 20.0 * std::log10(lm / next) : (lm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return t;
}

/// Strongest tap within the leakage search window.
inline LeakTap find_leak_tap(const CsiVector &profile) {
    std::size_t best = 0;
    const std::size_t window = std::min<std::size_t>(kLeakSearchBins, profile.size());
    for (std::size_t r = 1; r < window; ++r)
        if (std::abs(profile[r]) > std::abs(profile[best])) best = r;
    return leak_tap_at(profile, best);
}

struct Diagnostics {
    int last_coarse_delay_samples = 0;
    double last_fine_delay_s = 0.0;
    double corr_peak_ratio = 1.0;
};

struct SyncState {
    std::optional<CsiFrame> reference_frame;
    std::size_t leak_bin = 0;
    double reference_leak_phase = 0.0;
    Diagnostics diagnostics{};
    int low_ratio_run = 0;  ///< consecutive frames below the coarse peak-ratio threshold

    [[nodiscard]] bool anchored() const { return reference_frame.has_value(); }
};

/// Makes `frame` the reference. Returns false (state unchanged) without a dominant leakage tap.
inline bool anchor(SyncState &state, const CsiFrame &frame) {
    const LeakTap tap = find_leak_tap(delay_profile(frame.csi));
    if (!tap.dominant()) return false;
    state.reference_frame = frame;
    state.leak_bin = tap.bin;
    state.reference_leak_phase = std::arg(tap.value);
    state.low_ratio_run = 0;
    return true;
}

struct PhaseCorrection {
    CsiFrame frame;
    bool applied = false;
    double removed_phase_rad = 0.0;
};

/**
 * Rotates the frame so its leakage tap phase equals the reference leakage phase.
 * Skipped (frame returned unchanged) when the leak tap is not at least 6 dB above
 * every tap outside its main lobe.
 */
inline PhaseCorrection phase_correct(const CsiFrame &frame, const SyncState &state) {
    if (!state.anchored()) throw std::logic_error("phase_correct: sync state has no reference frame");
    PhaseCorrection out{frame, false, 0.0};
    const LeakTap tap = leak_tap_at(delay_profile(frame.csi), state.leak_bin);
    if (!tap.dominant()) return out;
    const double delta = std::arg(tap.value) - state.reference_leak_phase;
    const cplx rot = std::polar(1.0, -delta);
    for (auto &v : out.frame.csi) v *= rot;
    out.applied = true;
    out.removed_phase_rad = delta;
    return out;
}

struct SyncOutcome {
    CsiFrame frame;
    bool reference_set = false;
    bool coarse_low_confidence = false;
    bool fine_failed = false;
    bool phase_skipped = false;

    [[nodiscard]] bool flagged() const { return coarse_low_confidence || fine_failed || phase_skipped; }
};

/// A moving reflector whose round-trip delay is tau(t) = delay_s + rate * (t - t0).
struct DynamicHint {
    double delay_s = 0.0;
    double rate = 0.0;
    double t0 = 0.0;
    [[nodiscard]] double at(double t) const { return delay_s + rate * (t - t0); }
};

namespace detail {

/// Solves the Hermitian system a x = b in place (Gaussian elimination, partial pivoting). False if singular.
inline bool solve(std::vector<std::vector<cplx>> &a, std::vector<cplx> &b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (!(std::abs(a[piv][col]) > 1e-300)) return false;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const cplx f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t c = i + 1; c < n; ++c) b[i] -= a[i][c] * b[c];
        b[i] /= a[i][i];
    }
    return true;
}

inline cplx inner(const CsiVector &a, const CsiVector &b) {
    cplx s{};
    for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
    return s;
}

}  // namespace detail

/// Delay signature e^{-j2pi f_k tau} of a point reflector.
inline CsiVector delay_vector(double tau_s, std::size_t n, double bandwidth_hz) {
    CsiVector q(n);
    const double df = bandwidth_hz / static_cast<double>(n);
    const auto half = static_cast<double>(n / 2);
    // reduce mod 1/df so the per-tone phase stays accurate
    const double cycles = tau_s * df - std::floor(tau_s * df);
    for (std::size_t k = 0; k < n; ++k) {
        const double c = (static_cast<double>(k) - half) * cycles;
        q[k] = std::polar(1.0, -kTwoPi * (c - std::floor(c)));
    }
    return q;
}

/// Result of fitting frame ~ g e^{-j2pi f delay} templ + sum c_i q_i, linearized in the delay.
struct AlignmentFit {
    bool ok = false;
    cplx gain{1.0, 0.0};
    double delay_s = 0.0;
    CsiVector motion;  ///< fitted sum c_i q_i
    std::size_t signatures_used = 0;
};

/**
 * Joint least-squares fit of a frame as static template (with a small residual
 * delay, through its first-order term) plus hinted delay signatures. Signatures
 * that lie almost inside the template's gain-and-delay span are skipped since
 * they cannot be told apart from an alignment error.
 */
inline AlignmentFit fit_alignment(const CsiVector &frame, const CsiVector &templ, std::span<const CsiVector> signatures,
                                  double bandwidth_hz, double max_coherence = 0.999, bool fit_delay = true) {
    const std::size_t n = frame.size();
    AlignmentFit out;
    out.motion.assign(n, cplx{});
    std::vector<CsiVector> basis{templ};
    if (fit_delay) {
        // derivative direction, frequency scaled to [-1/2, 1/2)
        CsiVector slope(n);
        for (std::size_t k = 0; k < n; ++k)
            slope[k] = templ[k] * ((static_cast<double>(k) - static_cast<double>(n / 2)) / static_cast<double>(n));
        basis.push_back(std::move(slope));
    }
    const std::size_t fixed = basis.size();
    // Gram-Schmidt copy of the accepted span, only for the collinearity test
    std::vector<CsiVector> ortho;
    auto residual_fraction = [&](const CsiVector &v) {
        CsiVector r = v;
        for (const auto &e : ortho) {
            const cplx p = detail::inner(e, r);
            for (std::size_t k = 0; k < n; ++k) r[k] -= p * e[k];
        }
        const double rr = std::real(detail::inner(r, r));
        const double vv = std::real(detail::inner(v, v));
        return std::pair{vv > 0.0 ? std::sqrt(rr / vv) : 0.0, r};
    };
    for (const auto &b : basis) {
        auto [frac, r] = residual_fraction(b);
        if (!(frac > 0.0)) return out;
        const double norm = std::sqrt(std::real(detail::inner(r, r)));
        for (auto &x : r) x /= norm;
        ortho.push_back(std::move(r));
    }
    const double min_residual = std::sqrt(1.0 - max_coherence * max_coherence);
    for (const auto &q : signatures) {
        auto [frac, r] = residual_fraction(q);
        if (frac < min_residual) continue;
        const double norm = std::sqrt(std::real(detail::inner(r, r)));
        for (auto &x : r) x /= norm;
        ortho.push_back(std::move(r));
        basis.push_back(q);
    }

    const std::size_t m = basis.size();
    std::vector<std::vector<cplx>> gram(m, std::vector<cplx>(m));
    std::vector<cplx> coef(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) gram[i][j] = detail::inner(basis[i], basis[j]);
        coef[i] = detail::inner(basis[i], frame);
    }
    if (!detail::solve(gram, coef) || std::abs(coef[0]) == 0.0) return out;
    out.ok = true;
    out.gain = coef[0];
    if (fit_delay) {
        // g e^{-j2pi f d} T ~ g T - j2pi d B g (f/B) T
        const cplx ratio = coef[1] / coef[0];
        out.delay_s = -ratio.imag() / (kTwoPi * bandwidth_hz);
    }
    out.signatures_used = m - fixed;
    for (std::size_t i = fixed; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) out.motion[k] += coef[i] * basis[i][k];
    return out;
}

/**
 * Causal straight-line fit over recent per-frame delay estimates. Clock drift
 * makes the true delay linear in time, while a moving reflector only perturbs
 * single-frame estimates at its Doppler rate, which the fit averages away.
 * Estimates are unwrapped modulo the alias period N/B.
 */
class DelaySmoother {
public:
    static constexpr std::size_t kMinPoints = 8;

    DelaySmoother(std::size_t window, double period_s, double max_step_s)
        : window_(window), period_(period_s), max_step_(max_step_s) {}

    /// Adds the raw estimate at time t and returns the delay to apply.
    double push(double t, double raw_s) {
        double value = raw_s;
        if (!points_.empty()) {
            const double ref = points_.size() >= kMinPoints ? predict(t) : points_.back().second;
            value = raw_s + period_ * std::round((ref - raw_s) / period_);
            if (points_.size() >= kMinPoints && std::abs(value - ref) > max_step_) {
                // a step the drift model cannot explain; start over
                points_.clear();
                value = raw_s;
            }
        }
        points_.emplace_back(t, value);
        if (points_.size() > window_) points_.pop_front();
        if (points_.size() < kMinPoints) return value;
        return predict(t);
    }

    void reset() { points_.clear(); }
    [[nodiscard]] std::size_t size() const { return points_.size(); }

private:
    [[nodiscard]] double predict(double t) const {
        const double t0 = points_.front().first;
        const double d0 = points_.front().second;
        double st = 0, sd = 0;
        for (const auto &[ti, di] : points_) {
            st += ti - t0;
            sd += di - d0;
        }
        const double count = static_cast<double>(points_.size());
        const double tm = st / count;
        const double dm = sd / count;
        double stt = 0, std_ = 0;
        for (const auto &[ti, di] : points_) {
            stt += (ti - t0 - tm) * (ti - t0 - tm);
            std_ += (ti - t0 - tm) * (di - d0 - dm);
        }
        const double slope = stt > 0.0 ? std_ / stt : 0.0;
        return d0 + dm + slope * (t - t0 - tm);
    }

    std::size_t window_;
    double period_;
    double max_step_;
    std::deque<std::pair<double, double>> points_;
};

/**
 * Stateful alignment chain for one stream.
 *
 * A moving reflector spills into the leakage tap and into the phase slope, so
 * single-frame corrections are modulated at its Doppler rate and paint a
 * mirror image around the leakage. Two measures keep that out of the output.
 * The applied delay is the smoothed one (DelaySmoother). When moving reflectors
 * are known from the previous batch's detections, the common phase is refitted
 * against a static template with their delay signatures as extra regressors.
 * The template is the mean of the last 2M aligned frames. A last shift puts
 * the template's leakage at zero delay, removing the constant offset that a
 * reflector present in the reference frame leaves in every estimate.
 */
class Synchronizer {
public:
    /// Hints closer than this to the template (about 0.1 m from the leakage) only amplify noise.
    static constexpr double kMaxHintCoherence = 0.98;

    Synchronizer(double bandwidth_hz, int doppler_batch)
        : bandwidth_hz_(bandwidth_hz), reanchor_after_(2 * doppler_batch), template_frames_(2 * doppler_batch) {}

    SyncOutcome process(const CsiFrame &frame) {
        SyncOutcome out{frame};
        // A gap fill repeats the previous raw frame. Under SFO drift its delay
        // is a whole frame behind the line, so repeat the previous output instead
        // and leave the smoother and template untouched.
        if (frame.flags.test(FrameFlag::gap_filled) && last_output_) {
            out.frame = *last_output_;
            out.frame.timestamp = frame.timestamp;
            out.frame.seq = frame.seq;
            out.frame.flags = frame.flags;
            return out;
        }
        out = align(frame);
        last_output_ = out.frame;
        return out;
    }

    /// Moving reflectors to account for in subsequent frames; replaces earlier hints.
    void set_dynamic_hints(std::vector<DynamicHint> hints) { hints_ = std::move(hints); }
    [[nodiscard]] const std::vector<DynamicHint> &dynamic_hints() const { return hints_; }

    [[nodiscard]] const SyncState &state() const { return state_; }
    void reset() {
        state_ = SyncState{};
        template_.reset();
        smoother_.reset();
        hints_.clear();
        last_output_.reset();
    }

private:
    SyncOutcome align(const CsiFrame &frame) {
        SyncOutcome out{frame};
        if (!state_.anchored()) {
            if (anchor(state_, frame)) {
                out.reference_set = true;
                restart(frame);
            } else {
                out.phase_skipped = true;
                out.frame.flags.set(FrameFlag::low_confidence);
            }
            return out;
        }

        const CoarseDelay coarse = coarse_delay(frame, *state_.reference_frame);
        state_.diagnostics.corr_peak_ratio = coarse.peak_ratio;
        state_.diagnostics.last_coarse_delay_samples = coarse.samples;
        if (coarse.low_confidence) {
            if (++state_.low_ratio_run >= reanchor_after_ && anchor(state_, frame)) {
                out.reference_set = true;
                restart(frame);
                return out;
            }
            out.coarse_low_confidence = true;
            out.frame.flags.set(FrameFlag::low_confidence);
        } else {
            state_.low_ratio_run = 0;
        }

        const double coarse_s = coarse.samples / bandwidth_hz_;
        CsiFrame aligned = apply_delay(out.frame, coarse_s, bandwidth_hz_);
        const FineDelay fine = fine_delay(aligned, *state_.reference_frame, bandwidth_hz_);
        state_.diagnostics.last_fine_delay_s = fine.seconds;
        if (!fine.ok) {
            out.fine_failed = true;
        } else if (!out.coarse_low_confidence) {
            const double total = smoother_->push(frame.timestamp, coarse_s + fine.seconds);
            aligned = apply_delay(out.frame, total, bandwidth_hz_);
        } else {
            aligned = apply_delay(aligned, fine.seconds, bandwidth_hz_);
        }

        PhaseCorrection pc = phase_correct(aligned, state_);
        out.phase_skipped = !pc.applied;
        out.frame = std::move(pc.frame);
        if (pc.applied && !refine(out.frame)) out.fine_failed = true;
        if (out.flagged()) out.frame.flags.set(FrameFlag::low_confidence);
        else template_->update(out.frame.csi);
        // Leakage at zero delay. The frames above all carry the reference
        // frame's bias, so measuring it on their mean and shifting afterwards
        // closes no loop.
        out.frame = apply_delay(out.frame, template_delay(), bandwidth_hz_);
        return out;
    }

    // Phase only; on a failed fit the frame keeps its leakage-referenced phase.
    bool refine(CsiFrame &frame) {
        if (hints_.empty() || !template_) return true;
        std::vector<CsiVector> signatures;
        signatures.reserve(hints_.size());
        for (const auto &h : hints_) signatures.push_back(delay_vector(h.at(frame.timestamp), frame.csi.size(), bandwidth_hz_));
        const AlignmentFit fit = fit_alignment(frame.csi, template_->background(), signatures, bandwidth_hz_, kMaxHintCoherence, false);
        if (!fit.ok) return false;
        const cplx rot = std::polar(1.0, -std::arg(fit.gain));
        for (auto &v : frame.csi) v *= rot;
        return true;
    }

    [[nodiscard]] double template_delay() const {
        CsiFrame t;
        t.csi = template_->background();
        CsiFrame flat;
        flat.csi.assign(t.csi.size(), cplx{1.0, 0.0});
        const FineDelay d = fine_delay(t, flat, bandwidth_hz_);
        return d.ok ? d.seconds : 0.0;
    }

    void restart(const CsiFrame &frame) {
        template_.emplace(SicKind::sliding_mean, template_frames_, 1.0, frame.csi.size());
        template_->update(frame.csi);
        const double period = static_cast<double>(frame.csi.size()) / bandwidth_hz_;
        smoother_.emplace(static_cast<std::size_t>(template_frames_), period, 1.0 / bandwidth_hz_);
        smoother_->push(frame.timestamp, 0.0);
    }

    double bandwidth_hz_;
    int reanchor_after_;
    int template_frames_;
    SyncState state_{};
    std::optional<clutter::BackgroundState> template_;  ///< running mean of aligned frames
    std::optional<DelaySmoother> smoother_;
    std::vector<DynamicHint> hints_;
    std::optional<CsiFrame> last_output_;
};

}  // namespace livesense::sync
