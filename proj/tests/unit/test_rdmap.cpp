// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"
#include "oracle.hpp"

#include "livesense/rdmap.hpp"
#include "livesense/simulator.hpp"

#include <random>

using namespace livesense;

namespace {

SensingConfig small_cfg() {
    SensingConfig cfg;
    cfg.n_subcarriers = 64;
    cfg.doppler_batch = 16;
    cfg.max_range_m = 20.0;
    return cfg;
}

CsiFrame random_frame(std::mt19937_64 &rng, std::size_t n) {
    std::normal_distribution<double> g;
    CsiFrame f;
    for (std::size_t i = 0; i < n; ++i) f.csi.emplace_back(g(rng), g(rng));
    return f;
}

}  // namespace

TEST_CASE("range profile matches the brute windowed transform", "[rdmap]") {
    std::mt19937_64 rng(9);
    for (int z : {1, 2, 4}) {
        SensingConfig cfg = small_cfg();
        cfg.zero_pad_factor = z;
        const auto f = random_frame(rng, 64);
        const auto p = rdmap::range_profile(f, cfg);
        const auto ref = oracle::range_profile(f.csi, z, static_cast<std::size_t>(cfg.range_bins()));
        REQUIRE(p.bins.size() == ref.size());
        for (std::size_t r = 0; r < ref.size(); ++r) CHECK(std::abs(p.bins[r] - ref[r]) < 1e-12);

        const auto q = rdmap::range_profile(f, cfg, rdmap::Window::rectangular);
        const auto ref_rect = oracle::range_profile(f.csi, z, ref.size(), false);
        for (std::size_t r = 0; r < ref.size(); ++r) CHECK(std::abs(q.bins[r] - ref_rect[r]) < 1e-12);
    }
}

TEST_CASE("efficiency mode keeps every fourth tone", "[rdmap]") {
    std::mt19937_64 rng(10);
    SensingConfig cfg = small_cfg();
    cfg.mode = Mode::efficiency;
    cfg.max_range_m = 5.0;
    const auto f = random_frame(rng, 64);
    oracle::cvec kept;
    for (std::size_t i = 0; i < 64; i += 4) kept.push_back(f.csi[i]);
    const auto p = rdmap::range_profile(f, cfg);
    const auto ref = oracle::range_profile(kept, cfg.zero_pad_factor, p.bins.size());
    for (std::size_t r = 0; r < ref.size(); ++r) CHECK(std::abs(p.bins[r] - ref[r]) < 1e-12);
}

TEST_CASE("on-bin target peaks at its bin with unit coherent gain", "[rdmap]") {
    SensingConfig cfg;  // N = 512, native spacing 0.9375 m
    const auto z = static_cast<std::size_t>(cfg.zero_pad_factor);
    sim::Scene s;
    s.impairments = sim::ImpairmentModel::clean();
    s.impairments.leakage.amplitude = 0;
    s.targets = {{3 * 0.9375, 0.0, 0.25, std::nullopt}};
    const auto p = rdmap::range_profile(sim::generate_frame(s, cfg, 0), cfg);
    std::size_t best = 0;
    for (std::size_t r = 0; r < p.bins.size(); ++r)
        if (std::abs(p.bins[r]) > std::abs(p.bins[best])) best = r;
    CHECK(best == 3 * z);
    CHECK(std::abs(p.bins[3 * z]) == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("doppler processing matches the brute slow-time transform", "[rdmap]") {
    std::mt19937_64 rng(12);
    const SensingConfig cfg = small_cfg();
    rdmap::DopplerBatch batch;
    for (int i = 0; i < cfg.doppler_batch; ++i) {
        auto f = random_frame(rng, 64);
        f.timestamp = 0.025 * i;
        batch.push_back(rdmap::range_profile(f, cfg));
    }
    const auto map = rdmap::doppler_process(batch, cfg);
    REQUIRE(map.doppler_bins() == 16);
    REQUIRE(map.range_bins() == static_cast<std::size_t>(cfg.range_bins()));
    for (std::size_t r = 0; r < map.range_bins(); r += 3) {
        oracle::cvec slow;
        for (const auto &p : batch) slow.push_back(p.bins[r]);
        const auto pw = oracle::doppler_power(slow);
        for (std::size_t d = 0; d < 16; ++d) {
            CHECK(map.power(d, r) == Catch::Approx(pw[d]).margin(1e-15).epsilon(1e-9));
            CHECK(map.mag_db(d, r) == Catch::Approx(10 * std::log10(pw[d])).margin(1e-6));
        }
    }
    CHECK(map.batch_timestamp == Catch::Approx(0.5 * 0.025 * 15));
    CHECK(map.velocity_axis[8] == 0.0);
    batch.pop_back();
    CHECK_THROWS_AS(rdmap::doppler_process(batch, cfg), std::invalid_argument);
}

TEST_CASE("moving target lands on its velocity row", "[rdmap]") {
    SensingConfig cfg;
    const double dv = cfg.velocity_spacing_mps();
    const auto col = static_cast<std::size_t>(2 * cfg.zero_pad_factor);
    for (int bins : {-5, -2, 3, 7}) {
        sim::Scene s;
        s.impairments = sim::ImpairmentModel::clean();
        s.impairments.leakage.amplitude = 0;
        s.targets = {{2 * 0.9375, bins * dv, 0.1, std::nullopt}};
        rdmap::DopplerBatch batch;
        for (std::uint64_t m = 0; m < 32; ++m) batch.push_back(rdmap::range_profile(sim::generate_frame(s, cfg, m), cfg));
        const auto map = rdmap::doppler_process(batch, cfg);
        std::size_t bd = 0;
        for (std::size_t d = 0; d < 32; ++d)
            if (map.power(d, col) > map.power(bd, col)) bd = d;
        CHECK(static_cast<int>(bd) == 16 + bins);
        CHECK(map.velocity_axis[bd] == Catch::Approx(bins * dv));
    }
}

TEST_CASE("parabolic interpolation is exact on log-parabolic peaks", "[rdmap][property]") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> off(-0.49, 0.49), width(0.2, 3.0), level(-30, 30);
    for (int trial = 0; trial < 500; ++trial) {
        const double x0 = off(rng), b = width(rng), a = level(rng);
        auto p = [&](double x) { return std::exp(a - b * (x - x0) * (x - x0)); };
        CHECK(rdmap::parabolic_offset(p(-1), p(0), p(1)) == Catch::Approx(x0).margin(1e-9));
        // scale free
        CHECK(rdmap::parabolic_offset(7 * p(-1), 7 * p(0), 7 * p(1)) == Catch::Approx(x0).margin(1e-9));
    }
    CHECK(rdmap::parabolic_offset(0, 1, 1) == 0.0);
}

TEST_CASE("refine_peak in both dimensions and at edges", "[rdmap]") {
    const SensingConfig cfg = small_cfg();
    RangeDopplerMap map;
    const std::size_t rows = 16, cols = static_cast<std::size_t>(cfg.range_bins());
    map.power = Matrix<double>(rows, cols);
    map.mag_db = Matrix<double>(rows, cols);
    map.range_axis = range_axis(cfg);
    map.velocity_axis = velocity_axis(cfg);
    const double r0 = 5.3, d0 = 10.2;
    for (std::size_t d = 0; d < rows; ++d)
        for (std::size_t r = 0; r < cols; ++r)
            map.power(d, r) = std::exp(-0.7 * (r - r0) * (r - r0) - 1.3 * (d - d0) * (d - d0));
    const auto pk = rdmap::refine_peak(map, 5, 10);
    CHECK(pk.refined);
    CHECK(pk.bin_r == Catch::Approx(r0).margin(1e-9));
    CHECK(pk.bin_d == Catch::Approx(d0).margin(1e-9));
    CHECK(pk.range_m == Catch::Approx(r0 * cfg.range_spacing_m()).margin(1e-9));
    CHECK(pk.velocity_mps == Catch::Approx((d0 - 8) * cfg.velocity_spacing_mps()).margin(1e-9));
    CHECK_FALSE(rdmap::refine_peak(map, 0, 10).refined);
    CHECK_FALSE(rdmap::refine_peak(map, 5, 15).refined);
    CHECK_FALSE(rdmap::refine_peak(map, 8, 10).refined);  // not a local maximum
    CHECK_THROWS_AS(rdmap::refine_peak(map, cols, 0), std::out_of_range);
}
