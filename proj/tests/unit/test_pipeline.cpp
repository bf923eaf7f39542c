// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "livesense/pipeline.hpp"
#include "livesense/simulator.hpp"

using namespace livesense;

namespace {

sim::Scene walker(double r0 = 1.5, double v = 0.25) {
    sim::Scene s;  // CPO and drift on
    s.impairments.noise_power = 1e-3;
    s.targets = {{r0, v, 0.1, std::nullopt}};
    return s;
}

}  // namespace

TEST_CASE("moving target is detected and tracked through impairments", "[pipeline]") {
    const SensingConfig cfg;
    const auto s = walker();
    Pipeline p(cfg);
    const auto results = p.run(sim::generate_trace(s, cfg, 32 * 8 + 5));
    REQUIRE(results.size() == 8);  // partial batch discarded
    for (std::size_t i = 0; i < results.size(); ++i) CHECK(results[i].batch_seq == i);

    const auto &last = results.back();
    const double truth_r = 1.5 + 0.25 * last.map.batch_timestamp;
    const Detection *best = nullptr;
    for (const auto &d : last.detections)
        if (!best || d.snr_db > best->snr_db) best = &d;
    REQUIRE(best);
    CHECK(std::abs(best->range_m - truth_r) < 0.2);
    CHECK(std::abs(best->velocity_mps - 0.25) < 0.02);
    bool confirmed = false;
    for (const auto &t : last.tracks) confirmed |= t.state == TrackState::confirmed && std::abs(t.range_m - truth_r) < 0.2;
    CHECK(confirmed);
    CHECK(last.presence.present);
    CHECK_FALSE(p.degraded());
}

TEST_CASE("identical input gives identical output", "[pipeline][property]") {
    const SensingConfig cfg;
    const auto frames = sim::generate_trace(walker(0.8, -0.15), cfg, 32 * 5);
    const auto a = Pipeline(cfg).run(frames);
    const auto b = Pipeline(cfg).run(frames);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].same_output(b[i]));
}

TEST_CASE("stage timings add up", "[pipeline]") {
    const SensingConfig cfg;
    const auto results = Pipeline(cfg).run(sim::generate_trace(walker(), cfg, 64));
    for (const auto &r : results) {
        const auto &t = r.timings;
        CHECK(t.sync_ms >= 0);
        CHECK(t.total_ms >= t.sync_ms + t.sic_ms + t.fft_ms + t.detect_ms - 1e-6);
    }
}

TEST_CASE("config patches apply at the next batch boundary", "[pipeline]") {
    const SensingConfig cfg;
    BatchProcessor bp(cfg);
    const auto frames = sim::generate_trace(walker(), cfg, 96);
    const std::span<const CsiFrame> all(frames);

    CHECK(bp.process(all.subspan(0, 32)).config_id == 0);
    auto p = bp.apply_config_patch({{"cfar.pfa", "1e-3"}, {"track.confirm_hits", "2"}});
    REQUIRE(p.ok);
    CHECK(p.config_id == 1);
    CHECK(bp.config().cfar.pfa == 1e-4);  // not live yet
    const auto r = bp.process(all.subspan(32, 32));
    CHECK(r.config_id == 1);
    CHECK(bp.config().cfar.pfa == 1e-3);
    CHECK(bp.config().track.confirm_hits == 2);

    p = bp.apply_config_patch({{"n_subcarriers", "256"}});
    CHECK_FALSE(p.ok);
    CHECK(p.config_id == 1);
    CHECK_THAT(p.error, Catch::Matchers::ContainsSubstring("restart"));
    CHECK_FALSE(bp.apply_config_patch({{"cfar.colour", "red"}}).ok);
    CHECK_FALSE(bp.apply_config_patch({{"cfar.pfa", "2"}}).ok);
    // a rejected key spoils the whole patch
    CHECK_FALSE(bp.apply_config_patch({{"cfar.pfa", "1e-2"}, {"doppler_batch", "64"}}).ok);
    CHECK(bp.process(all.subspan(64, 32)).config_id == 1);
    CHECK(bp.config().cfar.pfa == 1e-3);

    CHECK_THROWS_AS(bp.process(all.subspan(0, 31)), std::invalid_argument);
}

TEST_CASE("mode switch changes the map geometry", "[pipeline]") {
    SensingConfig cfg;
    BatchProcessor bp(cfg);
    const auto frames = sim::generate_trace(walker(0.4, 0.1), cfg, 64);
    const auto before = bp.process(std::span(frames).subspan(0, 32));
    REQUIRE(bp.apply_config_patch({{"mode", "gesture"}}).ok);
    const auto after = bp.process(std::span(frames).subspan(32, 32));
    SensingConfig g = cfg;
    apply_key_values(g, {{"mode", "gesture"}});
    CHECK(after.map.range_bins() == static_cast<std::size_t>(g.range_bins()));
    CHECK(after.map.range_axis[1] == Catch::Approx(g.range_spacing_m()));
    CHECK(before.map.range_axis[1] == Catch::Approx(cfg.range_spacing_m()));
}

TEST_CASE("a long outage resynchronises the stream", "[pipeline]") {
    const SensingConfig cfg;
    auto frames = sim::generate_trace(walker(), cfg, 200);
    frames.erase(frames.begin() + 50, frames.begin() + 60);
    Pipeline p(cfg);
    const auto results = p.run(frames);
    CHECK(p.degraded());
    CHECK(p.resyncs() == 1);
    CHECK(results.size() == 50 / 32 + 140 / 32);
}

TEST_CASE("static scene yields no confirmed tracks", "[pipeline]") {
    const SensingConfig cfg;
    sim::Scene s;
    s.impairments.noise_power = 1e-4;
    s.targets = {{2.0, 0.0, 0.3, std::nullopt}};
    for (const auto &r : Pipeline(cfg).run(sim::generate_trace(s, cfg, 32 * 8)))
        for (const auto &t : r.tracks) CHECK(t.state != TrackState::confirmed);
}
