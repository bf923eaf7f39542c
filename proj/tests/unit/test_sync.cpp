// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"
#include "oracle.hpp"

#include "livesense/simulator.hpp"
#include "livesense/sync.hpp"

#include <random>

using namespace livesense;

namespace {

constexpr double kB = 160e6;

// Leakage plus one reflector, small N keeps the brute DFT cheap.
CsiFrame scene_frame(int n, double target_r = 1.875, double amp = 0.2) {
    CsiFrame f;
    f.csi.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        f.csi[static_cast<std::size_t>(k)] = 1.0 + oracle::target_tone(amp, target_r, k, n, kB, 6e9);
    return f;
}

// csi[k] * e^{-j2pi f_k d}: the frame as seen through an extra delay d.
CsiFrame delayed(const CsiFrame &f, double d, double phase = 0.0) {
    CsiFrame out = f;
    const int n = static_cast<int>(f.csi.size());
    for (int k = 0; k < n; ++k)
        out.csi[static_cast<std::size_t>(k)] *=
            std::exp(oracle::cx(0, phase - 2 * oracle::pi * oracle::tone_hz(k, n, kB) * d));
    return out;
}

double max_diff(const CsiVector &a, const CsiVector &b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("delay profile is the scaled inverse DFT", "[sync]") {
    const CsiFrame f = scene_frame(64);
    const auto h = sync::delay_profile(f.csi);
    auto ref = oracle::dft(f.csi, +1);
    for (auto &v : ref) v /= 64.0;
    CHECK(max_diff(h, ref) < 1e-12);
    const auto tap = sync::find_leak_tap(h);
    CHECK(tap.bin == 0);
    CHECK(tap.dominant());
}

TEST_CASE("coarse delay recovers integer shifts", "[sync]") {
    const int n = 128;
    const CsiFrame ref = scene_frame(n);
    for (int d : {-60, -7, -1, 0, 1, 3, 25, 63}) {
        const CsiFrame f = delayed(ref, d / kB, 1.1);
        const auto c = sync::coarse_delay(f, ref);
        CHECK_FALSE(c.low_confidence);
        CHECK(c.samples == d);
        // removing it restores the reference up to the common phase
        const CsiFrame back = sync::apply_delay(f, d / kB, kB);
        CHECK(max_diff(back.csi, delayed(ref, 0.0, 1.1).csi) < 1e-9);
    }
}

TEST_CASE("coarse delay flags an ambiguous correlation", "[sync]") {
    CsiFrame a, b;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int k = 0; k < 64; ++k) {
        a.csi.emplace_back(g(rng), g(rng));
        b.csi.emplace_back(g(rng), g(rng));
    }
    const auto c = sync::coarse_delay(a, b, 100.0);
    CHECK(c.low_confidence);
    CHECK(c.samples == 0);
}

TEST_CASE("fine delay recovers fractional shifts", "[sync]") {
    const int n = 256;
    const CsiFrame ref = scene_frame(n);
    for (double frac : {-0.45, -0.2, 0.0, 0.13, 0.4}) {
        const auto d = sync::fine_delay(delayed(ref, frac / kB, -0.7), ref, kB);
        REQUIRE(d.ok);
        CHECK(d.used_tones == static_cast<std::size_t>(n));
        CHECK(d.seconds == Catch::Approx(frac / kB).margin(1e-15));
    }
}

TEST_CASE("apply_delay inverts a delay", "[sync][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2e-6, 2e-6);
    const CsiFrame ref = scene_frame(64);
    for (int trial = 0; trial < 200; ++trial) {
        const double d = u(rng);
        CHECK(max_diff(sync::apply_delay(delayed(ref, d), d, kB).csi, ref.csi) < 1e-8);
    }
}

TEST_CASE("unwrap leaves differences inside pi", "[sync][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> step(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> truth{0.0};
        for (int i = 1; i < 50; ++i) truth.push_back(truth.back() + step(rng));
        std::vector<double> wrapped;
        for (double t : truth) wrapped.push_back(std::remainder(t, 2 * oracle::pi));
        sync::unwrap_in_place(wrapped);
        const double offset = wrapped[0] - truth[0];
        for (std::size_t i = 0; i < truth.size(); ++i) CHECK(wrapped[i] - truth[i] == Catch::Approx(offset).margin(1e-9));
    }
}

TEST_CASE("phase correction removes a common rotation", "[sync]") {
    const CsiFrame ref = scene_frame(64);
    sync::SyncState st;
    REQUIRE(sync::anchor(st, ref));
    const auto pc = sync::phase_correct(delayed(ref, 0.0, 2.5), st);
    CHECK(pc.applied);
    CHECK(pc.removed_phase_rad == Catch::Approx(2.5).margin(1e-12));
    CHECK(max_diff(pc.frame.csi, ref.csi) < 1e-12);

    // no dominant leakage tap: no anchor
    sync::SyncState empty;
    CsiFrame flat = scene_frame(64, 0.0, 0.0);
    for (int k = 0; k < 64; ++k) flat.csi[static_cast<std::size_t>(k)] += oracle::target_tone(1.0, 5.0, k, 64, kB, 6e9);
    CHECK_FALSE(sync::anchor(empty, flat));
    CHECK_THROWS(sync::phase_correct(ref, empty));
}

TEST_CASE("smoother follows linear drift across wraps", "[sync]") {
    const double period = 3.2e-6;
    sync::DelaySmoother s(64, period, 1.0 / kB);
    for (int m = 0; m < 200; ++m) {
        const double t = m * 0.025;
        const double truth = 5e-7 * m;
        const double raw = std::remainder(truth, period);
        const double out = s.push(t, raw);
        CHECK(out == Catch::Approx(truth).margin(1e-12));
    }
    // a step the drift cannot explain restarts the fit
    const double out = s.push(200 * 0.025, 1e-6);
    CHECK(s.size() == 1);
    CHECK(out == 1e-6);
}

TEST_CASE("synchronizer aligns impaired leakage-only frames", "[sync]") {
    SensingConfig cfg;
    cfg.n_subcarriers = 128;
    sim::Scene s;  // CPO and 20 ppm drift on
    s.impairments.noise_power = 1e-6;
    sync::Synchronizer sy(cfg.bandwidth_hz, cfg.doppler_batch);
    std::vector<CsiVector> out;
    for (std::uint64_t m = 0; m < 96; ++m) {
        const auto o = sy.process(sim::generate_frame(s, cfg, m));
        if (m == 0) CHECK(o.reference_set);
        else CHECK_FALSE(o.flagged());
        out.push_back(o.frame.csi);
    }
    // every aligned frame is the same flat leakage up to a common phase
    for (const auto &v : out) {
        CHECK(std::abs(v[0] - out[0][0]) < 1e-2);
        CHECK(max_diff(v, CsiVector(v.size(), v[0])) < 1e-2);
    }
    sy.reset();
    CHECK_FALSE(sy.state().anchored());
}

TEST_CASE("gap fill repeats the previous output and leaves state alone", "[sync]") {
    SensingConfig cfg;
    cfg.n_subcarriers = 128;
    sim::Scene s;
    s.impairments.noise_power = 1e-6;
    s.targets = {{0.8, 0.2, 0.1, std::nullopt}};
    sync::Synchronizer with_gap(cfg.bandwidth_hz, cfg.doppler_batch);
    sync::Synchronizer without(cfg.bandwidth_hz, cfg.doppler_batch);
    CsiFrame previous_raw;
    CsiFrame previous_out;
    for (std::uint64_t m = 0; m < 80; ++m) {
        const auto f = sim::generate_frame(s, cfg, m);
        if (m == 50) {
            // the resampler hands over a copy of the last raw frame on the next slot
            CsiFrame gap = previous_raw;
            gap.timestamp = previous_raw.timestamp + cfg.frame_interval_s;
            gap.seq = previous_raw.seq + 1;
            gap.flags.set(FrameFlag::gap_filled);
            const auto o = with_gap.process(gap);
            CHECK(o.frame.csi == previous_out.csi);
            CHECK(o.frame.timestamp == gap.timestamp);
            CHECK(o.frame.seq == gap.seq);
            CHECK(o.frame.flags.test(FrameFlag::gap_filled));
        }
        const auto a = with_gap.process(f);
        const auto b = without.process(f);
        CHECK(a.frame.csi == b.frame.csi);
        previous_raw = f;
        previous_out = a.frame;
    }
}
