// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "livesense/pipeline.hpp"
#include "livesense/protocol.hpp"
#include "livesense/simulator.hpp"

using namespace livesense;
using protocol::json;
using Kind = protocol::Request::Kind;

namespace {

const std::vector<BatchResult> &sample_results() {
    static const std::vector<BatchResult> results = [] {
        const SensingConfig cfg;
        sim::Scene s;
        s.impairments.noise_power = 1e-3;
        s.targets = {{1.2, 0.2, 0.1, std::nullopt}};
        return Pipeline(cfg).run(sim::generate_trace(s, cfg, 32 * 4));
    }();
    return results;
}

protocol::ProtocolError parse_error(const std::string &text) {
    try {
        protocol::parse_request(text);
    } catch (const protocol::ProtocolError &e) {
        return e;
    }
    FAIL("request was accepted: " << text);
    throw;
}

}  // namespace

TEST_CASE("hello carries config, axes and channels", "[protocol]") {
    SensingConfig cfg;
    const json h = protocol::hello(cfg, 4, "sim", protocol::default_channels());
    CHECK(h["type"] == "hello");
    CHECK(h["config_id"] == 4);
    CHECK(h["source"] == "sim");
    CHECK(h["config"]["n_subcarriers"] == 512);
    CHECK(h["config"]["mode"] == "presence");
    CHECK(h["config"]["vitals.band_hz"] == json::array({0.1, 0.5}));
    CHECK(h["axes"]["range_m"].size() == static_cast<std::size_t>(cfg.range_bins()));
    CHECK(h["axes"]["velocity_mps"].size() == 32);
    CHECK(h["axes"]["velocity_mps"][16] == 0.0);
    CHECK(h["channels"].size() == 5);
    CHECK_FALSE(protocol::default_channels().contains("csi_stats"));
    CHECK(protocol::is_channel("csi_stats"));
}

TEST_CASE("config json patches back to the same config", "[protocol][property]") {
    std::vector<SensingConfig> cases(3);
    apply_key_values(cases[1], {{"mode", "gesture"}, {"cfar.pfa", "0.001"}, {"vitals.band_hz", "0.2, 0.45"}});
    apply_key_values(cases[2], {{"mode", "efficiency"}, {"zero_pad_factor", "8"}, {"sic.kind", "ema"}, {"sic.alpha", "0.125"}});
    for (const auto &cfg : cases) {
        SensingConfig back;
        apply_key_values(back, protocol::patch_from_json(protocol::config_json(cfg)));
        CHECK(back == cfg);
    }
}

TEST_CASE("batch messages", "[protocol]") {
    const auto &r = sample_results().back();
    const json m = protocol::rdm(r);
    CHECK(m["type"] == "rdm");
    CHECK(m["batch_seq"] == r.batch_seq);
    REQUIRE(m["mag_db"].size() == r.map.doppler_bins());
    REQUIRE(m["mag_db"][0].size() == r.map.range_bins());
    for (std::size_t d = 0; d < r.map.doppler_bins(); d += 5)
        for (std::size_t c = 0; c < r.map.range_bins(); c += 3) {
            const double v = m["mag_db"][d][c];
            CHECK(std::abs(v - r.map.mag_db(d, c)) <= 0.005 + 1e-9);
            CHECK(std::abs(v * 100 - std::round(v * 100)) < 1e-6);
        }
    CHECK(m["axes"]["range_m"].size() == r.map.range_bins());

    const json t = protocol::targets(r);
    REQUIRE(t["detections"].size() == r.detections.size());
    if (!r.detections.empty()) CHECK(t["detections"][0]["range_m"] == r.detections[0].range_m);

    const json tr = protocol::tracks(r);
    REQUIRE(tr["tracks"].size() == r.tracks.size());
    for (std::size_t i = 0; i < r.tracks.size(); ++i) {
        CHECK(tr["tracks"][i]["state"] == to_string(r.tracks[i].state));
        CHECK(tr["tracks"][i]["history"].size() == r.tracks[i].history.size());
        CHECK(tr["tracks"][i]["history"][0].size() == 4);
    }

    const json v = protocol::vitals(r);
    CHECK(v["present"] == r.presence.present);
    CHECK(v["estimate"].is_null() == !r.vitals.has_value());

    protocol::StreamCounters c;
    c.drop_count = 3;
    c.degraded = true;
    const json s = protocol::stats(r, c);
    CHECK(s["drop_count"] == 3);
    CHECK(s["degraded"] == true);
    CHECK(s["timings"]["total_ms"] == r.timings.total_ms);
    CHECK(s["diagnostics"].contains("reference_sets"));

    const json cs = protocol::csi_stats(r);
    CHECK(cs["magnitude"].size() == 512);
}

TEST_CASE("vitals estimate fields", "[protocol]") {
    BatchResult r = sample_results().front();
    r.vitals = vitals::VitalsEstimate{0.25, 20.0, 25.0, 4};
    const json v = protocol::vitals(r);
    CHECK(v["estimate"]["rate_bpm"] == Catch::Approx(15.0));
    CHECK(v["estimate"]["range_m"] == r.map.range_axis[4]);
}

TEST_CASE("requests parse", "[protocol]") {
    auto r = protocol::parse_request(R"({"type":"set_config","request_id":7,"patch":{"cfar":{"pfa":0.001},"track.confirm_hits":2}})");
    CHECK(r.kind == Kind::set_config);
    CHECK(r.request_id == 7);
    CHECK(r.patch == KeyValues{{"cfar.pfa", "0.001"}, {"track.confirm_hits", "2"}});

    r = protocol::parse_request(R"({"type":"set_mode","mode":"gesture"})");
    CHECK(r.kind == Kind::set_mode);
    CHECK(r.request_id.is_null());
    CHECK(r.patch == KeyValues{{"mode", "gesture"}});

    r = protocol::parse_request(R"({"type":"subscribe","request_id":"a","channels":["rdm","csi_stats"]})");
    CHECK(r.kind == Kind::subscribe);
    CHECK(r.channels == std::vector<std::string>{"rdm", "csi_stats"});

    r = protocol::parse_request(
        R"({"type":"set_scene","scene":{"noise_power":0.01,"mode":"gesture","targets":[{"range0_m":0.4,"micro":{"amp_m":0.005,"freq_hz":0.25}}]}})");
    CHECK(r.kind == Kind::set_scene);
    CHECK(r.scene.scene.impairments.noise_power == 0.01);
    CHECK(r.scene.config_overrides == KeyValues{{"mode", "gesture"}});
    REQUIRE(r.scene.scene.targets.size() == 1);
    REQUIRE(r.scene.scene.targets[0].micro_motion);
    CHECK(r.scene.scene.targets[0].micro_motion->freq_hz == 0.25);

    r = protocol::parse_request(R"({"type":"set_scene","scene":"[target]\nrange0_m = 2\n"})");
    CHECK(r.scene.scene.targets.at(0).range0_m == 2.0);
}

TEST_CASE("bad requests name their request id", "[protocol]") {
    CHECK(parse_error("{not json").request_id().is_null());
    CHECK(parse_error("[1,2]").request_id().is_null());
    CHECK(parse_error(R"({"request_id":3})").request_id() == 3);
    CHECK(parse_error(R"({"type":"launch","request_id":4})").request_id() == 4);
    CHECK(parse_error(R"({"type":"set_mode","mode":"turbo","request_id":5})").request_id() == 5);
    CHECK(parse_error(R"({"type":"subscribe","channels":["radio"]})").request_id().is_null());
    CHECK(parse_error(R"({"type":"set_config","patch":[1]})").request_id().is_null());
    CHECK(parse_error(R"({"type":"set_scene","scene":{"gravity":1}})").request_id().is_null());
    CHECK(parse_error(R"({"type":"set_scene","scene":{"targets":[{"colour":"red"}]}})").request_id().is_null());
}

TEST_CASE("ack and error envelopes", "[protocol]") {
    const json a = protocol::ack(9, {{"config_id", 2}});
    CHECK(a == json{{"type", "ack"}, {"request_id", 9}, {"config_id", 2}});
    const json e = protocol::error("x", "nope");
    CHECK(e == json{{"type", "error"}, {"request_id", "x"}, {"message", "nope"}});
}
