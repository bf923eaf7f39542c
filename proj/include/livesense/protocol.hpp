// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief JSON text messages exchanged with console clients over WebSocket.
 *
 * Config objects use the same flat dotted keys as config files, so a client
 * can send back any key it received in `hello` as a `set_config` patch.
 */

#pragma once

#include "livesense/config_io.hpp"
#include "livesense/pipeline.hpp"
#include "livesense/simulator.hpp"
#include "livesense/types.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace livesense::protocol {

using json = nlohmann::json;

/// Channels a client may subscribe to. hello, ack and error are always sent.
inline const std::vector<std::string> &all_channels() {
    static const std::vector<std::string> c{"rdm", "targets", "tracks", "vitals", "stats", "csi_stats"};
    return c;
}

/// Subscription of a freshly connected client.
inline std::set<std::string> default_channels() { return {"rdm", "targets", "tracks", "vitals", "stats"}; }

inline bool is_channel(const std::string &c) {
    const auto &all = all_channels();
    return std::find(all.begin(), all.end(), c) != all.end();
}

/// Malformed or rejected client request. `request_id` is null when unknown.
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(json request_id, const std::string &what) : std::runtime_error(what), request_id_(std::move(request_id)) {}
    [[nodiscard]] const json &request_id() const noexcept { return request_id_; }

private:
    json request_id_;
};

namespace detail {

/// dB values rounded to 0.01 keep rdm messages compact.
inline double round_centi(double v) { return std::round(v * 100.0) / 100.0; }

inline json config_value(const std::string &key, const std::string &value) {
    if (key == "mode" || key == "sic.kind") return value;
    if (key == "vitals.band_hz") {
        auto [lo, hi] = livesense::detail::parse_band(key, value);
        return json::array({lo, hi});
    }
    if (value.find_first_of(".eE") == std::string::npos) return std::stoll(value);
    return std::stod(value);
}

/// Patch and scene values arrive as JSON scalars; the config layer parses strings.
inline std::string scalar_text(const std::string &key, const json &v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return livesense::detail::format_double(v.get<double>());
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return livesense::detail::format_double(v[0].get<double>()) + ", " +
               livesense::detail::format_double(v[1].get<double>());
    throw ConfigError("unsupported value for '" + key + "'");
}

inline void flatten(const json &obj, const std::string &prefix, KeyValues &out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) flatten(*it, key, out);
        else out.emplace_back(key, scalar_text(key, *it));
    }
}

}  // namespace detail

// ---- server -> client --------------------------------------------------------

inline json config_json(const SensingConfig &cfg) {
    json out = json::object();
    for (const auto &[k, v] : config_to_key_values(cfg)) out[k] = detail::config_value(k, v);
    return out;
}

inline json axes_json(const std::vector<double> &range_m, const std::vector<double> &velocity_mps) {
    return {{"range_m", range_m}, {"velocity_mps", velocity_mps}};
}

inline json axes_json(const SensingConfig &cfg) { return axes_json(range_axis(cfg), velocity_axis(cfg)); }

inline json hello(const SensingConfig &cfg, std::uint64_t config_id, const std::string &source,
                  const std::set<std::string> &channels) {
    return {{"type", "hello"},
            {"config", config_json(cfg)},
            {"config_id", config_id},
            {"axes", axes_json(cfg)},
            {"source", source},
            {"channels", channels}};
}

/// Rows are velocities (row M/2 is zero velocity), columns are ranges.
inline json rdm(const BatchResult &r) {
    const auto &m = r.map.mag_db;
    json rows = json::array();
    for (std::size_t d = 0; d < m.rows; ++d) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols; ++c) row.push_back(detail::round_centi(m(d, c)));
        rows.push_back(std::move(row));
    }
    return {{"type", "rdm"},
            {"batch_seq", r.batch_seq},
            {"config_id", r.config_id},
            {"timestamp", r.map.batch_timestamp},
            {"axes", axes_json(r.map.range_axis, r.map.velocity_axis)},
            {"mag_db", std::move(rows)}};
}

inline json detection_json(const Detection &d) {
    return {{"range_m", d.range_m}, {"velocity_mps", d.velocity_mps}, {"snr_db", d.snr_db},
            {"bin_r", d.bin_r},     {"bin_d", d.bin_d},               {"refined", d.refined}};
}

inline json targets(const BatchResult &r) {
    json dets = json::array();
    for (const auto &d : r.detections) dets.push_back(detection_json(d));
    return {{"type", "targets"}, {"batch_seq", r.batch_seq}, {"config_id", r.config_id}, {"detections", std::move(dets)}};
}

inline json track_json(const Track &t) {
    json hist = json::array();
    for (const auto &p : t.history) hist.push_back({p.timestamp, p.range_m, p.velocity_mps, p.snr_db});
    return {{"id", t.id},
            {"state", to_string(t.state)},
            {"range_m", t.range_m},
            {"range_rate", t.range_rate},
            {"velocity_mps", t.velocity_mps},
            {"hits", t.hits},
            {"misses", t.misses},
            {"last_update", t.last_update},
            {"history", std::move(hist)}};
}

inline json tracks(const BatchResult &r) {
    json ts = json::array();
    for (const auto &t : r.tracks) ts.push_back(track_json(t));
    return {{"type", "tracks"}, {"batch_seq", r.batch_seq}, {"config_id", r.config_id}, {"tracks", std::move(ts)}};
}

inline json vitals(const BatchResult &r) {
    json est = nullptr;
    if (r.vitals) {
        double range = 0.0;
        const auto bin = static_cast<std::size_t>(r.vitals->range_bin);
        if (r.vitals->range_bin >= 0 && bin < r.map.range_axis.size()) range = r.map.range_axis[bin];
        est = {{"rate_hz", r.vitals->rate_hz},
               {"rate_bpm", 60.0 * r.vitals->rate_hz},
               {"confidence_db", r.vitals->confidence_db},
               {"window_span_s", r.vitals->window_span_s},
               {"range_bin", r.vitals->range_bin},
               {"range_m", range}};
    }
    return {{"type", "vitals"},
            {"batch_seq", r.batch_seq},
            {"config_id", r.config_id},
            {"present", r.presence.present},
            {"score", r.presence.score},
            {"via_track", r.presence.via_track},
            {"via_vitals", r.presence.via_vitals},
            {"estimate", std::move(est)},
            {"diagnostic", r.diagnostics.vitals_diagnostic}};
}

/// Stream-level counters the service adds to each stats message.
struct StreamCounters {
    std::uint64_t drop_count = 0;  ///< frames dropped by the ring buffer
    double sampling_hz = 0.0;      ///< measured input frame rate
    std::uint64_t gap_fills = 0;
    std::uint64_t resyncs = 0;
    std::uint64_t result_drops = 0;  ///< results the broadcaster could not keep
    bool degraded = false;
};

inline json stats(const BatchResult &r, const StreamCounters &c) {
    const auto &t = r.timings;
    const auto &d = r.diagnostics;
    return {{"type", "stats"},
            {"batch_seq", r.batch_seq},
            {"config_id", r.config_id},
            {"timings",
             {{"ingest_ms", t.ingest_ms},
              {"sync_ms", t.sync_ms},
              {"sic_ms", t.sic_ms},
              {"fft_ms", t.fft_ms},
              {"detect_ms", t.detect_ms},
              {"total_ms", t.total_ms}}},
            {"drop_count", c.drop_count},
            {"sampling_hz", c.sampling_hz},
            {"gap_fills", c.gap_fills},
            {"resyncs", c.resyncs},
            {"result_drops", c.result_drops},
            {"degraded", c.degraded},
            {"diagnostics",
             {{"gap_filled_frames", d.gap_filled_frames},
              {"low_confidence_frames", d.low_confidence_frames},
              {"coarse_low_confidence", d.coarse_low_confidence},
              {"fine_failed", d.fine_failed},
              {"phase_skipped", d.phase_skipped},
              {"reference_sets", d.reference_sets},
              {"sic_warmup", d.sic_warmup},
              {"corr_peak_ratio", d.corr_peak_ratio}}}};
}

inline json csi_stats(const BatchResult &r) {
    return {{"type", "csi_stats"},
            {"batch_seq", r.batch_seq},
            {"magnitude", r.csi_stats.magnitude},
            {"phase", r.csi_stats.phase}};
}

inline json ack(const json &request_id, json extra = json::object()) {
    json out = {{"type", "ack"}, {"request_id", request_id}};
    out.update(extra);
    return out;
}

inline json error(const json &request_id, const std::string &message) {
    return {{"type", "error"}, {"request_id", request_id}, {"message", message}};
}

// ---- client -> server --------------------------------------------------------

struct Request {
    enum class Kind { set_config, set_mode, set_scene, subscribe };
    Kind kind = Kind::set_config;
    json request_id;
    KeyValues patch;                    ///< set_config; set_mode becomes {"mode": m}
    sim::SceneFile scene;               ///< set_scene
    std::vector<std::string> channels;  ///< subscribe
};

/**
 * Scene from a set_scene payload: either scene-file text, or an object with
 * top-level scene/config keys (nested objects flatten to dotted keys) and a
 * `targets` array of objects.
 */
inline sim::SceneFile scene_from_json(const json &j) {
    if (j.is_string()) return sim::parse_scene(j.get<std::string>());
    if (!j.is_object()) throw ConfigError("scene must be an object or scene text");
    sim::SceneFile out;
    KeyValues top;
    json rest = j;
    rest.erase("targets");
    detail::flatten(rest, "", top);
    for (const auto &[k, v] : top) {
        if (sim::set_scene_value(out.scene, k, v)) continue;
        if (!is_config_key(k)) throw ConfigError("unknown scene key '" + k + "'");
        out.config_overrides.emplace_back(k, v);
    }
    if (j.contains("targets")) {
        if (!j["targets"].is_array()) throw ConfigError("scene 'targets' must be an array");
        for (const auto &t : j["targets"]) {
            if (!t.is_object()) throw ConfigError("scene target must be an object");
            KeyValues kv;
            detail::flatten(t, "", kv);
            sim::TargetSpec spec;
            for (const auto &[k, v] : kv) sim::detail::set_target_value(spec, k, v);
            out.scene.targets.push_back(spec);
        }
    }
    return out;
}

inline KeyValues patch_from_json(const json &patch) {
    if (!patch.is_object()) throw ConfigError("patch must be an object");
    KeyValues out;
    detail::flatten(patch, "", out);
    return out;
}

/// Throws ProtocolError for anything that cannot be turned into a Request.
inline Request parse_request(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ProtocolError(nullptr, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError(nullptr, "message must be a JSON object");
    Request r;
    r.request_id = j.value("request_id", json(nullptr));
    if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError(r.request_id, "missing message type");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "set_config") {
            r.kind = Request::Kind::set_config;
            if (!j.contains("patch")) throw ConfigError("set_config needs a patch");
            r.patch = patch_from_json(j["patch"]);
        } else if (type == "set_mode") {
            r.kind = Request::Kind::set_mode;
            if (!j.contains("mode") || !j["mode"].is_string()) throw ConfigError("set_mode needs a mode string");
            const std::string mode = j["mode"].get<std::string>();
            (void)parse_mode(mode);
            r.patch = {{"mode", mode}};
        } else if (type == "set_scene") {
            r.kind = Request::Kind::set_scene;
            if (!j.contains("scene")) throw ConfigError("set_scene needs a scene");
            r.scene = scene_from_json(j["scene"]);
        } else if (type == "subscribe") {
            r.kind = Request::Kind::subscribe;
            if (!j.contains("channels") || !j["channels"].is_array()) throw ConfigError("subscribe needs a channels array");
            for (const auto &c : j["channels"]) {
                if (!c.is_string() || !is_channel(c.get<std::string>()))
                    throw ConfigError("unknown channel " + c.dump());
                r.channels.push_back(c.get<std::string>());
            }
        } else {
            throw ConfigError("unknown message type '" + type + "'");
        }
    } catch (const ConfigError &e) {
        throw ProtocolError(r.request_id, e.what());
    } catch (const json::exception &e) {
        throw ProtocolError(r.request_id, e.what());
    }
    return r;
}

}  // namespace livesense::protocol
