// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"
#include "oracle.hpp"

#include "livesense/simulator.hpp"

using namespace livesense;
using sim::Scene;
using sim::TargetSpec;

namespace {

Scene clean_scene() {
    Scene s;
    s.impairments = sim::ImpairmentModel::clean();
    return s;
}

double max_abs_diff(const CsiVector &a, const CsiVector &b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("unit leakage at zero delay is flat", "[simulator]") {
    const SensingConfig cfg;
    const Scene s = clean_scene();
    for (std::uint64_t m : {0u, 1u, 77u}) {
        const auto f = sim::generate_frame(s, cfg, m);
        REQUIRE(f.csi.size() == 512);
        for (const auto &v : f.csi) CHECK(std::abs(v - cplx(1, 0)) < 1e-15);
    }
}

TEST_CASE("single target matches the closed form tone by tone", "[simulator]") {
    const SensingConfig cfg;
    Scene s = clean_scene();
    s.impairments.leakage.amplitude = 0.0;
    s.targets.push_back({1.875, 0.0, 0.1, std::nullopt});
    const auto f = sim::generate_frame(s, cfg, 0);
    for (int k = 0; k < 512; ++k)
        CHECK(std::abs(f.csi[k] - oracle::target_tone(0.1, 1.875, k, 512, 160e6, 6e9)) < 1e-12);

    // moving target: range at t = m T
    s.targets[0] = {0.4, 0.3, 0.2, std::nullopt};
    const auto g = sim::generate_frame(s, cfg, 40);
    for (int k = 0; k < 512; k += 17)
        CHECK(std::abs(g.csi[k] - oracle::target_tone(0.2, 0.4 + 0.3 * 40 * 0.025, k, 512, 160e6, 6e9)) < 1e-12);
}

TEST_CASE("noise power moment", "[simulator]") {
    const SensingConfig cfg;
    Scene s = clean_scene();
    s.impairments.leakage.amplitude = 0.0;
    s.impairments.noise_power = 0.01;
    double sum = 0;
    std::size_t count = 0;
    for (std::uint64_t m = 0; m < 200; ++m)
        for (const auto &v : sim::generate_frame(s, cfg, m).csi) {
            sum += std::norm(v);
            ++count;
        }
    REQUIRE(count >= 100000);
    CHECK(sum / double(count) == Catch::Approx(0.01).epsilon(0.05));
}

TEST_CASE("drops", "[simulator]") {
    SensingConfig cfg;
    cfg.n_subcarriers = 8;
    Scene s = clean_scene();
    auto t = sim::generate_trace(s, cfg, 100);
    REQUIRE(t.size() == 100);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].seq == i);

    s.impairments.drop_prob = 0.5;
    t = sim::generate_trace(s, cfg, 10000);
    CHECK(t.size() >= 4800);
    CHECK(t.size() <= 5200);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i].seq > t[i - 1].seq);
}

TEST_CASE("determinism and order independence", "[simulator][property]") {
    SensingConfig cfg;
    cfg.n_subcarriers = 64;
    Scene s;  // default impairments: CPO and SFO on
    s.impairments.noise_power = 0.01;
    s.impairments.timing_jitter_s = 0.003;
    s.impairments.drop_prob = 0.1;
    s.targets.push_back({1.0, 0.2, 0.1, sim::MicroMotion{0.005, 0.25, 0.3}});
    const auto a = sim::generate_trace(s, cfg, 300);
    const auto b = sim::generate_trace(s, cfg, 300);
    CHECK(a == b);
    // any frame regenerated alone is identical
    for (std::size_t i = 0; i < a.size(); i += 37) CHECK(sim::generate_frame(s, cfg, a[i].seq) == a[i]);
    s.rng_seed = 2;
    CHECK(sim::generate_trace(s, cfg, 300) != a);
}

TEST_CASE("superposition and static invariance", "[simulator][property]") {
    SensingConfig cfg;
    cfg.n_subcarriers = 128;
    Scene leak = clean_scene();
    Scene one = clean_scene(), two = clean_scene(), both = clean_scene();
    one.impairments.leakage.amplitude = 0;
    two.impairments.leakage.amplitude = 0;
    const TargetSpec t1{0.7, 0.15, 0.1, std::nullopt}, t2{2.2, -0.3, 0.05, std::nullopt};
    one.targets = {t1};
    two.targets = {t2};
    both.targets = {t1, t2};
    for (std::uint64_t m : {0u, 5u, 123u}) {
        const auto l = sim::generate_frame(leak, cfg, m).csi;
        const auto x = sim::generate_frame(one, cfg, m).csi;
        const auto y = sim::generate_frame(two, cfg, m).csi;
        const auto z = sim::generate_frame(both, cfg, m).csi;
        CsiVector sum(l.size());
        for (std::size_t k = 0; k < l.size(); ++k) sum[k] = l[k] + x[k] + y[k];
        CHECK(max_abs_diff(sum, z) < 1e-14);
    }

    Scene still = clean_scene();
    still.targets = {{1.3, 0.0, 0.2, std::nullopt}};
    const auto f0 = sim::generate_frame(still, cfg, 0).csi;
    for (std::uint64_t m = 1; m < 50; ++m) CHECK(sim::generate_frame(still, cfg, m).csi == f0);

    Scene micro0 = still;
    micro0.targets[0].micro_motion = sim::MicroMotion{0.0, 0.25, 1.0};
    still.targets[0].velocity_mps = 0.1;
    micro0.targets[0].velocity_mps = 0.1;
    for (std::uint64_t m = 0; m < 50; ++m)
        CHECK(sim::generate_frame(micro0, cfg, m).csi == sim::generate_frame(still, cfg, m).csi);
}

TEST_CASE("CPO and SFO follow the impairment model", "[simulator]") {
    SensingConfig cfg;
    cfg.n_subcarriers = 64;
    Scene s = clean_scene();
    s.impairments.cpo = true;
    s.impairments.sfo_ppm = 20.0;
    for (std::uint64_t m : {0u, 3u, 10u}) {
        const auto d = sim::frame_draws(s, cfg, m);
        CHECK(d.delay_s == Catch::Approx(20e-6 * double(m) * 0.025).margin(1e-18));
        CHECK(std::abs(d.cpo_rad) <= kPi);
        const auto f = sim::generate_frame(s, cfg, m);
        for (int k = 0; k < 64; k += 7) {
            const double fk = oracle::tone_hz(k, 64, 160e6);
            const oracle::cx expect = std::exp(oracle::cx(0, d.cpo_rad)) * std::exp(oracle::cx(0, -2 * oracle::pi * fk * d.delay_s));
            CHECK(std::abs(f.csi[k] - expect) < 1e-9);
        }
    }
    // CPO spread over the circle
    double mean_cos = 0;
    for (std::uint64_t m = 0; m < 2000; ++m) mean_cos += std::cos(sim::frame_draws(s, cfg, m).cpo_rad);
    CHECK(std::abs(mean_cos / 2000) < 0.1);

    s.impairments.timing_jitter_s = 1.0;  // clipped to 0.45 T
    for (std::uint64_t m = 0; m < 200; ++m) CHECK(std::abs(sim::frame_draws(s, cfg, m).timestamp_jitter_s) <= 0.45 * 0.025 + 1e-15);
}

TEST_CASE("scene documents", "[simulator]") {
    const std::string text = R"(
seed = 42
noise_power = 0.001
cpo = false
sfo_ppm = 5
mode = gesture
[target]
range0_m = 0.4
velocity_mps = -0.1
[target]
range0_m = 1.2
amplitude = 0.05
micro.amp_m = 0.005
micro.freq_hz = 0.25
)";
    const auto f = sim::parse_scene(text);
    CHECK(f.scene.rng_seed == 42);
    CHECK(f.scene.impairments.noise_power == 0.001);
    CHECK_FALSE(f.scene.impairments.cpo);
    CHECK(f.scene.impairments.sfo_ppm == 5.0);
    REQUIRE(f.scene.targets.size() == 2);
    CHECK(f.scene.targets[0].velocity_mps == -0.1);
    REQUIRE(f.scene.targets[1].micro_motion);
    CHECK(f.scene.targets[1].micro_motion->freq_hz == 0.25);
    REQUIRE(f.config_overrides.size() == 1);
    CHECK(f.config_overrides[0] == std::pair<std::string, std::string>{"mode", "gesture"});

    CHECK(sim::parse_scene(sim::serialize_scene(f.scene)).scene == f.scene);
    CHECK_THROWS_AS(sim::parse_scene("gravity = 9.8\n"), ConfigError);
    CHECK_THROWS_AS(sim::parse_scene("[target]\ncolour = red\n"), ConfigError);
    CHECK_THROWS_AS(sim::parse_scene("[wall]\n"), ConfigError);
}

TEST_CASE("scene validation", "[simulator]") {
    const SensingConfig cfg;
    Scene s = clean_scene();
    s.targets = {{1.0, 0.0, 0.1, sim::MicroMotion{1.0, 0.25, 0.0}}};
    CHECK_THROWS_AS(sim::validate(s, cfg), ConfigError);
    s.targets = {{-1.0, 0.0, 0.1, std::nullopt}};
    CHECK_THROWS_AS(sim::validate(s, cfg), ConfigError);
    s.targets = {{1.0, 0.0, 0.0, std::nullopt}};
    CHECK_THROWS_AS(sim::validate(s, cfg), ConfigError);
    s.targets.clear();
    s.impairments.drop_prob = 1.5;
    CHECK_THROWS_AS(sim::validate(s, cfg), ConfigError);
}
