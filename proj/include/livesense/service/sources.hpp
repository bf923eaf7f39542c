// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Live frame sources: paced simulator, paced trace replay and UDP datagrams.
 */

#pragma once

#include "livesense/simulator.hpp"
#include "livesense/trace_codec.hpp"
#include "livesense/types.hpp"

#include <boost/asio.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace livesense::service {

using steady = std::chrono::steady_clock;

/// Sleeps until `when` in short slices so a stop request is seen promptly. False when stopped.
inline bool sleep_until_or_stop(steady::time_point when, const std::atomic<bool> &stop) {
    while (!stop.load()) {
        const auto now = steady::now();
        if (now >= when) return true;
        std::this_thread::sleep_for(std::min<steady::duration>(when - now, std::chrono::milliseconds(20)));
    }
    return false;
}

/**
 * Producer of raw frames, called from the ingest thread only.
 * next() blocks until a frame is due and returns nullopt at end of stream or on stop.
 */
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::optional<CsiFrame> next(const std::atomic<bool> &stop) = 0;
    [[nodiscard]] virtual std::string name() const = 0;
    /// Datagrams or records that could not be decoded.
    [[nodiscard]] virtual std::uint64_t malformed() const { return 0; }
    [[nodiscard]] virtual bool supports_scene() const { return false; }
    /// Thread-safe; only meaningful when supports_scene().
    virtual void set_scene(const sim::Scene &) {}
};

/**
 * Simulator paced at the frame interval divided by `speed` (speed <= 0: unpaced).
 * A new scene restarts target motion and impairment drift at the swap, while
 * timestamps and sequence numbers continue.
 */
class SimSource final : public FrameSource {
public:
    SimSource(sim::Scene scene, SensingConfig cfg, std::optional<std::uint64_t> max_frames = std::nullopt,
              double speed = 1.0)
        : scene_(std::move(scene)), cfg_(std::move(cfg)), max_frames_(max_frames), speed_(speed) {
        sim::validate(scene_, cfg_);
    }

    std::optional<CsiFrame> next(const std::atomic<bool> &stop) override {
        if (!start_) start_ = steady::now();
        for (;;) {
            if (stop.load()) return std::nullopt;
            if (max_frames_ && m_ >= *max_frames_) return std::nullopt;
            const std::uint64_t m = m_++;
            sim::Scene scene;
            std::uint64_t m0 = 0;
            {
                std::lock_guard lock(mutex_);
                scene = scene_;
                m0 = scene_start_;
            }
            if (speed_ > 0.0) {
                const auto due = *start_ + std::chrono::duration_cast<steady::duration>(std::chrono::duration<double>(
                                               static_cast<double>(m) * cfg_.frame_interval_s / speed_));
                if (!sleep_until_or_stop(due, stop)) return std::nullopt;
            }
            if (sim::frame_dropped(scene, m - m0)) continue;
            CsiFrame f = sim::generate_frame(scene, cfg_, m - m0);
            f.timestamp += static_cast<double>(m0) * cfg_.frame_interval_s;
            f.seq = static_cast<std::uint32_t>(m);
            return f;
        }
    }

    [[nodiscard]] std::string name() const override { return "sim"; }
    [[nodiscard]] bool supports_scene() const override { return true; }

    void set_scene(const sim::Scene &scene) override {
        std::lock_guard lock(mutex_);
        scene_ = scene;
        scene_start_ = m_.load();
    }

private:
    std::mutex mutex_;
    sim::Scene scene_;
    std::uint64_t scene_start_ = 0;
    SensingConfig cfg_;
    std::optional<std::uint64_t> max_frames_;
    double speed_;
    std::atomic<std::uint64_t> m_{0};
    std::optional<steady::time_point> start_;
};

/// Replays decoded frames at their recorded spacing divided by `speed` (speed <= 0: unpaced).
class TraceSource final : public FrameSource {
public:
    TraceSource(std::vector<CsiFrame> frames, double speed = 1.0) : frames_(std::move(frames)), speed_(speed) {}

    std::optional<CsiFrame> next(const std::atomic<bool> &stop) override {
        if (stop.load() || i_ >= frames_.size()) return std::nullopt;
        if (!start_) start_ = steady::now();
        if (speed_ > 0.0) {
            const double dt = (frames_[i_].timestamp - frames_.front().timestamp) / speed_;
            const auto due =
                *start_ + std::chrono::duration_cast<steady::duration>(std::chrono::duration<double>(std::max(0.0, dt)));
            if (!sleep_until_or_stop(due, stop)) return std::nullopt;
        }
        return frames_[i_++];
    }

    [[nodiscard]] std::string name() const override { return "trace"; }

private:
    std::vector<CsiFrame> frames_;
    double speed_;
    std::size_t i_ = 0;
    std::optional<steady::time_point> start_;
};

/// One frame per datagram, record layout without a header. Runs until stopped.
class UdpSource final : public FrameSource {
public:
    UdpSource(const boost::asio::ip::udp::endpoint &listen, std::size_t n_subcarriers)
        : socket_(io_), n_(n_subcarriers), buf_(trace::record_bytes(n_subcarriers) + 1) {
        socket_.open(listen.protocol());
        socket_.set_option(boost::asio::socket_base::reuse_address(true));
        socket_.bind(listen);
    }

    std::optional<CsiFrame> next(const std::atomic<bool> &stop) override {
        while (!stop.load()) {
            std::optional<std::size_t> got;
            boost::system::error_code err;
            socket_.async_receive(boost::asio::buffer(buf_), [&](const boost::system::error_code &e, std::size_t n) {
                err = e;
                got = n;
            });
            io_.restart();
            io_.run_for(std::chrono::milliseconds(100));
            if (!got) {
                socket_.cancel();
                io_.restart();
                io_.run();
                continue;
            }
            if (err) continue;
            try {
                return trace::decode_datagram(std::span<const std::uint8_t>(buf_.data(), *got), n_);
            } catch (const trace::TraceError &) {
                ++malformed_;
            }
        }
        return std::nullopt;
    }

    [[nodiscard]] std::string name() const override { return "udp"; }
    [[nodiscard]] std::uint64_t malformed() const override { return malformed_.load(); }
    [[nodiscard]] boost::asio::ip::udp::endpoint local_endpoint() const { return socket_.local_endpoint(); }

private:
    boost::asio::io_context io_;
    boost::asio::ip::udp::socket socket_;
    std::size_t n_;
    std::vector<std::uint8_t> buf_;
    std::atomic<std::uint64_t> malformed_{0};
};

/// "host:port" to an address and port; throws ConfigError.
inline std::pair<boost::asio::ip::address, unsigned short> parse_host_port(const std::string &s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw ConfigError("expected addr:port, got '" + s + "'");
    std::string host = s.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    boost::system::error_code ec;
    const auto addr = boost::asio::ip::make_address(host.empty() ? "0.0.0.0" : host, ec);
    if (ec) throw ConfigError("invalid address '" + host + "'");
    int port = -1;
    try {
        std::size_t used = 0;
        port = std::stoi(s.substr(colon + 1), &used);
        if (used != s.size() - colon - 1) port = -1;
    } catch (const std::exception &) {
        port = -1;
    }
    if (port < 0 || port > 65535) throw ConfigError("invalid port in '" + s + "'");
    return {addr, static_cast<unsigned short>(port)};
}

}  // namespace livesense::service
