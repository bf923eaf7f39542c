// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Shared value types, physical axes and the runtime configuration schema.
 *
 * Subcarrier k of an N-tone frame sits at baseband frequency
 * f_k = (k - N/2) * B / N. Range bin 0 is zero round-trip delay.
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace livesense {

using cplx = std::complex<double>;
using CsiVector = std::vector<cplx>;

inline constexpr double kSpeedOfLight = 299'792'458.0;
/// Delay <-> range conversion. Rounded so that c/(2B) at 160 MHz is exactly
/// 0.9375 m; the wavelength (hence velocity) uses kSpeedOfLight.
inline constexpr double kRangeSpeed = 3.0e8;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Added to magnitudes before taking the log so maps stay finite.
inline constexpr double kDbEpsilon = 1e-12;

/// Thrown for invalid configuration keys, values or combinations.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FrameFlag : std::uint8_t {
    gap_filled = 1u << 0,
    low_confidence = 1u << 1,
};

struct FrameFlags {
    std::uint8_t bits = 0;

    [[nodiscard]] constexpr bool test(FrameFlag f) const noexcept { return (bits & static_cast<std::uint8_t>(f)) != 0; }
    constexpr void set(FrameFlag f) noexcept { bits |= static_cast<std::uint8_t>(f); }
    constexpr void clear(FrameFlag f) noexcept { bits &= static_cast<std::uint8_t>(~static_cast<std::uint8_t>(f)); }
    friend constexpr bool operator==(FrameFlags, FrameFlags) = default;
};

/// One Wi-Fi frame's channel estimate.
struct CsiFrame {
    double timestamp = 0.0;  ///< seconds, monotonic
    std::uint32_t seq = 0;
    CsiVector csi;
    FrameFlags flags{};

    friend bool operator==(const CsiFrame &, const CsiFrame &) = default;
};

enum class Mode { gesture, presence, efficiency };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::gesture: return "gesture";
        case Mode::presence: return "presence";
        case Mode::efficiency: return "efficiency";
    }
    return "?";
}

inline Mode parse_mode(const std::string &s) {
    if (s == "gesture") return Mode::gesture;
    if (s == "presence") return Mode::presence;
    if (s == "efficiency") return Mode::efficiency;
    throw ConfigError("unknown mode '" + s + "' (expected gesture|presence|efficiency)");
}

/// Range zero-padding factor implied by a mode.
inline int default_zero_pad(Mode m) {
    switch (m) {
        case Mode::gesture: return 8;
        case Mode::presence: return 2;
        case Mode::efficiency: return 1;
    }
    return 1;
}

/// Subcarrier decimation applied before the range transform.
inline int subcarrier_decimation(Mode m) { return m == Mode::efficiency ? 4 : 1; }

enum class SicKind { sliding_mean, ema, fixed_template };

inline std::string to_string(SicKind k) {
    switch (k) {
        case SicKind::sliding_mean: return "sliding_mean";
        case SicKind::ema: return "ema";
        case SicKind::fixed_template: return "template";
    }
    return "?";
}

inline SicKind parse_sic_kind(const std::string &s) {
    if (s == "sliding_mean") return SicKind::sliding_mean;
    if (s == "ema") return SicKind::ema;
    if (s == "template") return SicKind::fixed_template;
    throw ConfigError("unknown sic.kind '" + s + "' (expected sliding_mean|ema|template)");
}

struct SicConfig {
    SicKind kind = SicKind::sliding_mean;
    int window_k = 64;
    double alpha = 0.02;
    friend bool operator==(const SicConfig &, const SicConfig &) = default;
};

/// Range cell counts are in native (unpadded) range bins and get scaled by the zero-pad factor.
struct CfarConfig {
    int guard_r = 2;
    int guard_d = 1;
    int train_r = 2;
    int train_d = 4;
    double pfa = 1e-4;
    friend bool operator==(const CfarConfig &, const CfarConfig &) = default;
};

struct TrackConfig {
    double gate_range_m = 0.5;
    double gate_vel_mps = 0.15;
    int confirm_hits = 3;
    int delete_misses = 3;
    friend bool operator==(const TrackConfig &, const TrackConfig &) = default;
};

struct VitalsConfig {
    int window_frames = 1000;
    double band_lo_hz = 0.1;
    double band_hi_hz = 0.5;
    double prominence_db = 12.0;
    friend bool operator==(const VitalsConfig &, const VitalsConfig &) = default;
};

struct SensingConfig {
    double bandwidth_hz = 160e6;
    int n_subcarriers = 512;
    double carrier_freq_hz = 6e9;
    double frame_interval_s = 0.025;
    int doppler_batch = 32;
    int buffer_factor = 4;
    Mode mode = Mode::presence;
    double max_range_m = 5.0;
    int zero_pad_factor = default_zero_pad(Mode::presence);
    SicConfig sic{};
    CfarConfig cfar{};
    TrackConfig track{};
    VitalsConfig vitals{};

    friend bool operator==(const SensingConfig &, const SensingConfig &) = default;

    [[nodiscard]] double subcarrier_spacing_hz() const { return bandwidth_hz / n_subcarriers; }
    [[nodiscard]] double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }
    [[nodiscard]] double range_spacing_m() const { return kRangeSpeed / (2.0 * bandwidth_hz * zero_pad_factor); }
    [[nodiscard]] double velocity_spacing_mps() const {
        return wavelength_m() / (2.0 * doppler_batch * frame_interval_s);
    }
    [[nodiscard]] double max_velocity_mps() const { return wavelength_m() / (4.0 * frame_interval_s); }
    [[nodiscard]] int buffer_capacity() const { return buffer_factor * doppler_batch; }
    [[nodiscard]] int range_bins() const {
        return static_cast<int>(std::floor(max_range_m / range_spacing_m() + 1e-9)) + 1;
    }
    /// Baseband frequency of subcarrier k.
    [[nodiscard]] double subcarrier_freq_hz(int k) const {
        return (k - n_subcarriers / 2) * subcarrier_spacing_hz();
    }
};

[[nodiscard]] constexpr bool is_power_of_two(long long v) noexcept { return v > 0 && (v & (v - 1)) == 0; }

/// Throws ConfigError describing the first violated constraint.
inline void validate(const SensingConfig &c) {
    auto fail = [](const std::string &what) { throw ConfigError(what); };
    if (!(c.bandwidth_hz > 0.0) || !std::isfinite(c.bandwidth_hz)) fail("bandwidth_hz must be > 0");
    if (!is_power_of_two(c.n_subcarriers)) fail("n_subcarriers must be a power of two");
    if (!(c.carrier_freq_hz > 0.0) || !std::isfinite(c.carrier_freq_hz)) fail("carrier_freq_hz must be > 0");
    if (!(c.frame_interval_s > 0.0) || !std::isfinite(c.frame_interval_s)) fail("frame_interval_s must be > 0");
    if (!is_power_of_two(c.doppler_batch) || c.doppler_batch < 2) fail("doppler_batch must be a power of two >= 2");
    if (c.buffer_factor < 1) fail("buffer_factor must be >= 1");
    if (!(c.max_range_m > 0.0)) fail("max_range_m must be > 0");
    if (c.zero_pad_factor < 1) fail("zero_pad_factor must be >= 1");
    if (c.n_subcarriers % subcarrier_decimation(c.mode) != 0 || c.n_subcarriers / subcarrier_decimation(c.mode) < 4)
        fail("n_subcarriers too small for the selected mode");
    if (c.range_bins() > c.n_subcarriers / subcarrier_decimation(c.mode) * c.zero_pad_factor)
        fail("max_range_m exceeds the unambiguous range");
    if (c.sic.window_k < 1) fail("sic.window_k must be >= 1");
    if (!(c.sic.alpha > 0.0 && c.sic.alpha <= 1.0)) fail("sic.alpha must be in (0, 1]");
    if (c.cfar.guard_r < 0 || c.cfar.guard_d < 0) fail("cfar guard cells must be >= 0");
    if (c.cfar.train_r < 1 || c.cfar.train_d < 1) fail("cfar training cells must be >= 1");
    if (!(c.cfar.pfa > 0.0 && c.cfar.pfa < 1.0)) fail("cfar.pfa must be in (0, 1)");
    if (!(c.track.gate_range_m > 0.0) || !(c.track.gate_vel_mps > 0.0)) fail("track gates must be > 0");
    if (c.track.confirm_hits < 1 || c.track.delete_misses < 1) fail("track.confirm_hits/delete_misses must be >= 1");
    if (c.vitals.window_frames < 16) fail("vitals.window_frames must be >= 16");
    if (!(c.vitals.band_lo_hz >= 0.0 && c.vitals.band_hi_hz > c.vitals.band_lo_hz))
        fail("vitals.band_hz must satisfy 0 <= lo < hi");
    if (c.vitals.band_hi_hz > 0.5 / c.frame_interval_s) fail("vitals.band_hz upper edge above Nyquist");
}

/// Range bin centres from 0 up to max_range_m.
inline std::vector<double> range_axis(const SensingConfig &c) {
    const double spacing = c.range_spacing_m();
    std::vector<double> axis(static_cast<std::size_t>(c.range_bins()));
    for (std::size_t i = 0; i < axis.size(); ++i) axis[i] = static_cast<double>(i) * spacing;
    return axis;
}

/// Zero-centred velocity bins, ascending from -lambda/(4T).
inline std::vector<double> velocity_axis(const SensingConfig &c) {
    const double spacing = c.velocity_spacing_mps();
    const int m = c.doppler_batch;
    std::vector<double> axis(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) axis[static_cast<std::size_t>(i)] = static_cast<double>(i - m / 2) * spacing;
    return axis;
}

inline double to_db_mag(double magnitude) { return 20.0 * std::log10(magnitude + kDbEpsilon); }
inline double power_to_db(double power) { return 10.0 * std::log10(power); }
inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

/// Row-major matrix with `rows` x `cols` entries.
template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T &operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    friend bool operator==(const Matrix &, const Matrix &) = default;
};

/// Velocity x range map. Row M/2 is zero velocity.
struct RangeDopplerMap {
    Matrix<double> power;   ///< linear |X|^2
    Matrix<double> mag_db;  ///< 20 log10(|X| + eps)
    std::vector<double> range_axis;
    std::vector<double> velocity_axis;
    std::uint64_t batch_seq = 0;
    double batch_timestamp = 0.0;

    [[nodiscard]] std::size_t doppler_bins() const { return power.rows; }
    [[nodiscard]] std::size_t range_bins() const { return power.cols; }
    [[nodiscard]] std::size_t zero_velocity_row() const { return power.rows / 2; }
    friend bool operator==(const RangeDopplerMap &, const RangeDopplerMap &) = default;
};

struct Detection {
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double snr_db = 0.0;
    double bin_r = 0.0;  ///< fractional range bin
    double bin_d = 0.0;  ///< fractional Doppler row
    double timestamp = 0.0;
    bool refined = true;
    friend bool operator==(const Detection &, const Detection &) = default;
};

enum class TrackState { tentative, confirmed, dead };

inline std::string to_string(TrackState s) {
    switch (s) {
        case TrackState::tentative: return "tentative";
        case TrackState::confirmed: return "confirmed";
        case TrackState::dead: return "dead";
    }
    return "?";
}

struct TrackPoint {
    double timestamp = 0.0;
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double snr_db = 0.0;
    friend bool operator==(const TrackPoint &, const TrackPoint &) = default;
};

struct Track {
    std::uint32_t id = 0;
    TrackState state = TrackState::tentative;
    std::vector<TrackPoint> history;
    int hits = 0;
    int misses = 0;
    double range_m = 0.0;       ///< smoothed range
    double range_rate = 0.0;    ///< smoothed range rate (m/s)
    double velocity_mps = 0.0;  ///< latest associated Doppler velocity
    double last_update = 0.0;
    friend bool operator==(const Track &, const Track &) = default;
};

}  // namespace livesense
