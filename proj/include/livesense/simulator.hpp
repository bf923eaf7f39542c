// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Synthetic monostatic CSI with ground-truth targets and clock impairments.
 *
 * Per frame m (t_m = m T):
 *
 *   csi[k] = L e^{-j2pi f_k tau_L}
 *          + sum_i a_i e^{-j4pi f_c R_i(t_m)/c} e^{-j4pi f_k R_i(t_m)/c} + n_k
 *   csi[k] *= e^{j phi_m} e^{-j2pi f_k delta_m}
 *
 * with R_i(t) = R0 + v t + A sin(2pi f t + phase), phi_m ~ U(-pi, pi) when CPO is
 * enabled, and delta_m = sfo_ppm 1e-6 m T + N(0, sfo_jitter_std_s).
 *
 * Every random draw for frame m comes from a generator keyed by (seed, m), so
 * frames can be produced in any order with identical results.
 */

#pragma once

#include "livesense/config_io.hpp"
#include "livesense/types.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace livesense::sim {

struct MicroMotion {
    double amp_m = 0.0;
    double freq_hz = 0.0;
    double phase_rad = 0.0;
    friend bool operator==(const MicroMotion &, const MicroMotion &) = default;
};

struct TargetSpec {
    double range0_m = 1.0;
    double velocity_mps = 0.0;
    double amplitude = 0.1;
    std::optional<MicroMotion> micro_motion;

    [[nodiscard]] double range_at(double t) const {
        double r = range0_m + velocity_mps * t;
        if (micro_motion) r += micro_motion->amp_m * std::sin(kTwoPi * micro_motion->freq_hz * t + micro_motion->phase_rad);
        return r;
    }
    friend bool operator==(const TargetSpec &, const TargetSpec &) = default;
};

struct Leakage {
    double amplitude = 1.0;
    double delay_s = 0.0;
    friend bool operator==(const Leakage &, const Leakage &) = default;
};

struct ImpairmentModel {
    Leakage leakage{};
    double noise_power = 0.0;       ///< complex Gaussian variance per subcarrier
    bool cpo = true;                ///< per-frame common phase offset, uniform over the circle
    double sfo_ppm = 20.0;          ///< linear delay drift
    double sfo_jitter_std_s = 0.0;  ///< Gaussian jitter on the per-frame delay
    double timing_jitter_s = 0.0;   ///< timestamp jitter std, clipped to +-0.45 T
    double drop_prob = 0.0;
    friend bool operator==(const ImpairmentModel &, const ImpairmentModel &) = default;

    /// Leakage only, everything else off.
    static ImpairmentModel clean() {
        ImpairmentModel m;
        m.cpo = false;
        m.sfo_ppm = 0.0;
        return m;
    }
};

struct Scene {
    std::vector<TargetSpec> targets;
    ImpairmentModel impairments{};
    std::uint64_t rng_seed = 1;
    friend bool operator==(const Scene &, const Scene &) = default;
};

/// Throws ConfigError when the scene breaks its invariants under `cfg`.
inline void validate(const Scene &s, const SensingConfig &cfg) {
    const auto &imp = s.impairments;
    if (imp.leakage.amplitude < 0 || imp.leakage.delay_s < 0 || imp.noise_power < 0 || imp.sfo_ppm < 0 ||
        imp.sfo_jitter_std_s < 0 || imp.timing_jitter_s < 0 || imp.drop_prob < 0 || imp.drop_prob > 1)
        throw ConfigError("impairment parameters must be nonnegative (drop_prob <= 1)");
    const double resolution = kRangeSpeed / (2.0 * cfg.bandwidth_hz);
    for (const auto &t : s.targets) {
        if (t.range0_m < 0) throw ConfigError("target range0_m must be >= 0");
        if (!(t.amplitude > 0)) throw ConfigError("target amplitude must be > 0");
        if (t.micro_motion && (t.micro_motion->amp_m < 0 || t.micro_motion->amp_m >= resolution))
            throw ConfigError("micro-motion amplitude must be in [0, range resolution)");
    }
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { impairments = 1, noise = 2, drop = 3 };

inline std::mt19937_64 frame_rng(std::uint64_t seed, std::uint64_t m, Stream stream) {
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(m * 4 + static_cast<std::uint64_t>(stream)));
    return std::mt19937_64(key);
}

/// e^{-j 2 pi cycles}, reducing the cycle count first to keep precision for large arguments.
inline cplx cis_neg(double cycles) {
    const double frac = cycles - std::floor(cycles);
    return std::polar(1.0, -kTwoPi * frac);
}

}  // namespace detail

/// Per-frame random draws, exposed for tests.
struct FrameDraws {
    double cpo_rad = 0.0;
    double delay_s = 0.0;
    double timestamp_jitter_s = 0.0;
};

inline FrameDraws frame_draws(const Scene &scene, const SensingConfig &cfg, std::uint64_t m) {
    const auto &imp = scene.impairments;
    auto rng = detail::frame_rng(scene.rng_seed, m, detail::Stream::impairments);
    std::uniform_real_distribution<double> uni(-kPi, kPi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    FrameDraws d;
    const double cpo = uni(rng);
    const double sfo_jitter = gauss(rng);
    const double ts_jitter = gauss(rng);
    if (imp.cpo) d.cpo_rad = cpo;
    d.delay_s = imp.sfo_ppm * 1e-6 * static_cast<double>(m) * cfg.frame_interval_s + imp.sfo_jitter_std_s * sfo_jitter;
    const double clip = 0.45 * cfg.frame_interval_s;
    d.timestamp_jitter_s = std::clamp(imp.timing_jitter_s * ts_jitter, -clip, clip);
    return d;
}

inline bool frame_dropped(const Scene &scene, std::uint64_t m) {
    if (scene.impairments.drop_prob <= 0.0) return false;
    auto rng = detail::frame_rng(scene.rng_seed, m, detail::Stream::drop);
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < scene.impairments.drop_prob;
}

/// Ideal channel at time t: leakage plus targets, no noise or impairments.
inline CsiVector ideal_channel(const Scene &scene, const SensingConfig &cfg, double t) {
    const int n = cfg.n_subcarriers;
    const double df = cfg.subcarrier_spacing_hz();
    const double lambda = cfg.wavelength_m();
    CsiVector csi(static_cast<std::size_t>(n));
    const auto &leak = scene.impairments.leakage;
    for (int k = 0; k < n; ++k) {
        const double fk = cfg.subcarrier_freq_hz(k);
        cplx v = leak.amplitude * detail::cis_neg(fk * leak.delay_s);
        csi[static_cast<std::size_t>(k)] = v;
    }
    for (const auto &tgt : scene.targets) {
        const double r = tgt.range_at(t);
        const double tau = 2.0 * r / kRangeSpeed;
        const cplx carrier = tgt.amplitude * detail::cis_neg(2.0 * r / lambda);
        // baseband ramp: e^{-j2pi (k - N/2) df tau}
        const double step_cycles = df * tau;
        for (int k = 0; k < n; ++k) {
            const double cycles = static_cast<double>(k - n / 2) * step_cycles;
            csi[static_cast<std::size_t>(k)] += carrier * detail::cis_neg(cycles);
        }
    }
    return csi;
}

inline CsiFrame generate_frame(const Scene &scene, const SensingConfig &cfg, std::uint64_t m) {
    const int n = cfg.n_subcarriers;
    const double t = static_cast<double>(m) * cfg.frame_interval_s;
    CsiFrame frame;
    frame.seq = static_cast<std::uint32_t>(m);
    frame.csi = ideal_channel(scene, cfg, t);

    const auto &imp = scene.impairments;
    if (imp.noise_power > 0.0) {
        auto rng = detail::frame_rng(scene.rng_seed, m, detail::Stream::noise);
        std::normal_distribution<double> gauss(0.0, std::sqrt(imp.noise_power / 2.0));
        for (auto &c : frame.csi) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            c += cplx(re, im);
        }
    }

    const FrameDraws d = frame_draws(scene, cfg, m);
    if (d.cpo_rad != 0.0 || d.delay_s != 0.0) {
        const cplx common = std::polar(1.0, d.cpo_rad);
        // delay only matters modulo 1/df
        const double delay_cycles = d.delay_s * cfg.subcarrier_spacing_hz();
        const double frac = delay_cycles - std::floor(delay_cycles);
        for (int k = 0; k < n; ++k) {
            const double cycles = static_cast<double>(k - n / 2) * frac;
            frame.csi[static_cast<std::size_t>(k)] *= common * detail::cis_neg(cycles);
        }
    }
    frame.timestamp = t + d.timestamp_jitter_s;
    return frame;
}

/// Frames 0..n_frames-1 with dropped frames removed (their seq numbers are skipped).
inline std::vector<CsiFrame> generate_trace(const Scene &scene, const SensingConfig &cfg, std::uint64_t n_frames) {
    std::vector<CsiFrame> out;
    out.reserve(static_cast<std::size_t>(n_frames));
    for (std::uint64_t m = 0; m < n_frames; ++m) {
        if (frame_dropped(scene, m)) continue;
        out.push_back(generate_frame(scene, cfg, m));
    }
    return out;
}

/// Scene document plus any SensingConfig keys it carried.
struct SceneFile {
    Scene scene;
    KeyValues config_overrides;
};

namespace detail {

inline bool parse_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("invalid boolean for '" + key + "': '" + v + "'");
}

inline void set_target_value(TargetSpec &t, const std::string &key, const std::string &v) {
    using livesense::detail::parse_double;
    if (key == "range0_m") t.range0_m = parse_double(key, v);
    else if (key == "velocity_mps") t.velocity_mps = parse_double(key, v);
    else if (key == "amplitude") t.amplitude = parse_double(key, v);
    else if (key == "micro.amp_m" || key == "micro.freq_hz" || key == "micro.phase_rad") {
        if (!t.micro_motion) t.micro_motion.emplace();
        const double x = parse_double(key, v);
        if (key == "micro.amp_m") t.micro_motion->amp_m = x;
        else if (key == "micro.freq_hz") t.micro_motion->freq_hz = x;
        else t.micro_motion->phase_rad = x;
    } else throw ConfigError("unknown target key '" + key + "'");
}

}  // namespace detail

/// Sets a top-level scene key; returns false when the key is not a scene key.
inline bool set_scene_value(Scene &s, const std::string &key, const std::string &v) {
    using livesense::detail::parse_double;
    auto &imp = s.impairments;
    if (key == "seed") s.rng_seed = static_cast<std::uint64_t>(livesense::detail::parse_int(key, v));
    else if (key == "leakage.amplitude") imp.leakage.amplitude = parse_double(key, v);
    else if (key == "leakage.delay_s") imp.leakage.delay_s = parse_double(key, v);
    else if (key == "noise_power") imp.noise_power = parse_double(key, v);
    else if (key == "cpo") imp.cpo = detail::parse_bool(key, v);
    else if (key == "sfo_ppm") imp.sfo_ppm = parse_double(key, v);
    else if (key == "sfo_jitter_std_s") imp.sfo_jitter_std_s = parse_double(key, v);
    else if (key == "timing_jitter_s") imp.timing_jitter_s = parse_double(key, v);
    else if (key == "drop_prob") imp.drop_prob = parse_double(key, v);
    else return false;
    return true;
}

/**
 * Parses a scene document: top-level impairment keys and SensingConfig keys,
 * followed by any number of `[target]` blocks.
 */
inline SceneFile parse_scene(const std::string &text) {
    SceneFile out;
    TargetSpec *current = nullptr;
    for (const auto &[key, value] : tokenize_key_values(text)) {
        if (key.front() == '[') {
            if (key != "[target]") throw ConfigError("unknown section '" + key + "'");
            out.scene.targets.emplace_back();
            current = &out.scene.targets.back();
            continue;
        }
        if (current != nullptr) {
            detail::set_target_value(*current, key, value);
        } else if (!set_scene_value(out.scene, key, value)) {
            if (!is_config_key(key)) throw ConfigError("unknown scene key '" + key + "'");
            out.config_overrides.emplace_back(key, value);
        }
    }
    return out;
}

inline SceneFile load_scene(const std::string &path) { return parse_scene(read_text_file(path)); }

inline std::string serialize_scene(const Scene &s) {
    using livesense::detail::format_double;
    const auto &imp = s.impairments;
    std::string out;
    out += "seed = " + std::to_string(s.rng_seed) + "\n";
    out += "leakage.amplitude = " + format_double(imp.leakage.amplitude) + "\n";
    out += "leakage.delay_s = " + format_double(imp.leakage.delay_s) + "\n";
    out += "noise_power = " + format_double(imp.noise_power) + "\n";
    out += std::string("cpo = ") + (imp.cpo ? "true" : "false") + "\n";
    out += "sfo_ppm = " + format_double(imp.sfo_ppm) + "\n";
    out += "sfo_jitter_std_s = " + format_double(imp.sfo_jitter_std_s) + "\n";
    out += "timing_jitter_s = " + format_double(imp.timing_jitter_s) + "\n";
    out += "drop_prob = " + format_double(imp.drop_prob) + "\n";
    for (const auto &t : s.targets) {
        out += "\n[target]\n";
        out += "range0_m = " + format_double(t.range0_m) + "\n";
        out += "velocity_mps = " + format_double(t.velocity_mps) + "\n";
        out += "amplitude = " + format_double(t.amplitude) + "\n";
        if (t.micro_motion) {
            out += "micro.amp_m = " + format_double(t.micro_motion->amp_m) + "\n";
            out += "micro.freq_hz = " + format_double(t.micro_motion->freq_hz) + "\n";
            out += "micro.phase_rad = " + format_double(t.micro_motion->phase_rad) + "\n";
        }
    }
    return out;
}

}  // namespace livesense::sim
