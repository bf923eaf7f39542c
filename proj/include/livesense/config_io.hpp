// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Flat `key = value` text format for SensingConfig, and key-wise patching.
 *
 * Lines are `key = value`; `#` starts a comment; blank lines are ignored.
 * Unknown keys are errors. `vitals.band_hz` takes two numbers, `lo, hi`
 * (optionally bracketed).
 */

#pragma once

#include "livesense/types.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace livesense {

/// Ordered key/value pairs as they appear in a document or patch.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string &key, const std::string &v) {
    const std::string t = trim(v);
    double out = 0.0;
    const auto *first = t.data();
    const auto *last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last || t.empty() || !std::isfinite(out))
        throw ConfigError("invalid number for '" + key + "': '" + v + "'");
    return out;
}

inline int parse_int(const std::string &key, const std::string &v) {
    const double d = parse_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError("invalid integer for '" + key + "': '" + v + "'");
    return static_cast<int>(d);
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::pair<double, double> parse_band(const std::string &key, const std::string &v) {
    std::string t = trim(v);
    if (!t.empty() && t.front() == '[') t.erase(t.begin());
    if (!t.empty() && t.back() == ']') t.pop_back();
    const auto comma = t.find(',');
    if (comma == std::string::npos) throw ConfigError("'" + key + "' needs two values 'lo, hi'");
    return {parse_double(key, t.substr(0, comma)), parse_double(key, t.substr(comma + 1))};
}

}  // namespace detail

/// Keys that fix buffer sizes and transform lengths for a whole session.
inline bool is_structural_key(std::string_view key) {
    return key == "n_subcarriers" || key == "bandwidth_hz" || key == "frame_interval_s" || key == "doppler_batch" ||
           key == "buffer_factor";
}

inline const std::vector<std::string> &config_keys() {
    static const std::vector<std::string> keys{
        "bandwidth_hz",       "n_subcarriers",       "carrier_freq_hz",     "frame_interval_s",
        "doppler_batch",      "buffer_factor",       "mode",                "max_range_m",
        "zero_pad_factor",    "sic.kind",            "sic.window_k",        "sic.alpha",
        "cfar.guard_r",       "cfar.guard_d",        "cfar.train_r",        "cfar.train_d",
        "cfar.pfa",           "track.gate_range_m",  "track.gate_vel_mps",  "track.confirm_hits",
        "track.delete_misses", "vitals.window_frames", "vitals.band_hz",    "vitals.prominence_db"};
    return keys;
}

inline bool is_config_key(std::string_view key) {
    const auto &k = config_keys();
    return std::find(k.begin(), k.end(), key) != k.end();
}

/// Sets one field. Setting `mode` also resets zero_pad_factor to the mode default.
inline void set_config_value(SensingConfig &c, const std::string &key, const std::string &value) {
    using detail::parse_double;
    using detail::parse_int;
    if (key == "bandwidth_hz") c.bandwidth_hz = parse_double(key, value);
    else if (key == "n_subcarriers") c.n_subcarriers = parse_int(key, value);
    else if (key == "carrier_freq_hz") c.carrier_freq_hz = parse_double(key, value);
    else if (key == "frame_interval_s") c.frame_interval_s = parse_double(key, value);
    else if (key == "doppler_batch") c.doppler_batch = parse_int(key, value);
    else if (key == "buffer_factor") c.buffer_factor = parse_int(key, value);
    else if (key == "mode") {
        c.mode = parse_mode(detail::trim(value));
        c.zero_pad_factor = default_zero_pad(c.mode);
    } else if (key == "max_range_m") c.max_range_m = parse_double(key, value);
    else if (key == "zero_pad_factor") c.zero_pad_factor = parse_int(key, value);
    else if (key == "sic.kind") c.sic.kind = parse_sic_kind(detail::trim(value));
    else if (key == "sic.window_k") c.sic.window_k = parse_int(key, value);
    else if (key == "sic.alpha") c.sic.alpha = parse_double(key, value);
    else if (key == "cfar.guard_r") c.cfar.guard_r = parse_int(key, value);
    else if (key == "cfar.guard_d") c.cfar.guard_d = parse_int(key, value);
    else if (key == "cfar.train_r") c.cfar.train_r = parse_int(key, value);
    else if (key == "cfar.train_d") c.cfar.train_d = parse_int(key, value);
    else if (key == "cfar.pfa") c.cfar.pfa = parse_double(key, value);
    else if (key == "track.gate_range_m") c.track.gate_range_m = parse_double(key, value);
    else if (key == "track.gate_vel_mps") c.track.gate_vel_mps = parse_double(key, value);
    else if (key == "track.confirm_hits") c.track.confirm_hits = parse_int(key, value);
    else if (key == "track.delete_misses") c.track.delete_misses = parse_int(key, value);
    else if (key == "vitals.window_frames") c.vitals.window_frames = parse_int(key, value);
    else if (key == "vitals.band_hz") {
        auto [lo, hi] = detail::parse_band(key, value);
        c.vitals.band_lo_hz = lo;
        c.vitals.band_hi_hz = hi;
    } else if (key == "vitals.prominence_db") c.vitals.prominence_db = parse_double(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

/**
 * Applies pairs in order, except that `mode` is applied first so an explicit
 * zero_pad_factor in the same set wins over the mode default.
 */
inline void apply_key_values(SensingConfig &c, const KeyValues &kv) {
    for (const auto &[k, v] : kv)
        if (k == "mode") set_config_value(c, k, v);
    for (const auto &[k, v] : kv)
        if (k != "mode") set_config_value(c, k, v);
}

/// Splits a `key = value` document. Lines of the form `[name]` are returned with an empty value
/// and the key `[name]`.
inline KeyValues tokenize_key_values(const std::string &text) {
    KeyValues out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[' && t.back() == ']' && t.find('=') == std::string::npos) {
            out.emplace_back(t, std::string{});
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

/// Parses a config document on top of `base` (defaults when omitted) and validates it.
inline SensingConfig parse_config(const std::string &text, SensingConfig base = {}) {
    KeyValues kv = tokenize_key_values(text);
    for (const auto &[k, v] : kv)
        if (!is_config_key(k)) throw ConfigError("unknown config key '" + k + "'");
    apply_key_values(base, kv);
    validate(base);
    return base;
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline SensingConfig load_config(const std::string &path, SensingConfig base = {}) {
    return parse_config(read_text_file(path), base);
}

/// Every field as a (key, value-string) pair in schema order.
inline KeyValues config_to_key_values(const SensingConfig &c) {
    using detail::format_double;
    return {
        {"bandwidth_hz", format_double(c.bandwidth_hz)},
        {"n_subcarriers", std::to_string(c.n_subcarriers)},
        {"carrier_freq_hz", format_double(c.carrier_freq_hz)},
        {"frame_interval_s", format_double(c.frame_interval_s)},
        {"doppler_batch", std::to_string(c.doppler_batch)},
        {"buffer_factor", std::to_string(c.buffer_factor)},
        {"mode", to_string(c.mode)},
        {"max_range_m", format_double(c.max_range_m)},
        {"zero_pad_factor", std::to_string(c.zero_pad_factor)},
        {"sic.kind", to_string(c.sic.kind)},
        {"sic.window_k", std::to_string(c.sic.window_k)},
        {"sic.alpha", format_double(c.sic.alpha)},
        {"cfar.guard_r", std::to_string(c.cfar.guard_r)},
        {"cfar.guard_d", std::to_string(c.cfar.guard_d)},
        {"cfar.train_r", std::to_string(c.cfar.train_r)},
        {"cfar.train_d", std::to_string(c.cfar.train_d)},
        {"cfar.pfa", format_double(c.cfar.pfa)},
        {"track.gate_range_m", format_double(c.track.gate_range_m)},
        {"track.gate_vel_mps", format_double(c.track.gate_vel_mps)},
        {"track.confirm_hits", std::to_string(c.track.confirm_hits)},
        {"track.delete_misses", std::to_string(c.track.delete_misses)},
        {"vitals.window_frames", std::to_string(c.vitals.window_frames)},
        {"vitals.band_hz", format_double(c.vitals.band_lo_hz) + ", " + format_double(c.vitals.band_hi_hz)},
        {"vitals.prominence_db", format_double(c.vitals.prominence_db)},
    };
}

inline std::string serialize_config(const SensingConfig &c) {
    std::string out;
    for (const auto &[k, v] : config_to_key_values(c)) out += k + " = " + v + "\n";
    return out;
}

}  // namespace livesense
