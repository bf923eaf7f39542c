// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief WebSocket JSON server for console clients.
 *
 * One io thread runs every session, so sessions need no locking. Results
 * arrive from the broadcast thread, are serialized once and posted to every
 * session. A session whose outgoing queue
 * exceeds `max_pending` is closed, so a slow client never holds up the others
 * or the processing chain.
 */

#pragma once

#include "livesense/protocol.hpp"
#include "livesense/service/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace livesense::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

struct ServerOptions {
    std::size_t max_pending = 64;                 ///< queued messages per client before it is dropped
    std::chrono::milliseconds rdm_interval{100};  ///< at most one rdm message per interval
};

class WsServer;

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, WsServer &server) : ws_(std::move(socket)), server_(server) {}

    void start();

    /// io thread only. Returns false when this message pushed the client over its limit.
    bool send(const std::string &channel, std::shared_ptr<const std::string> msg) {
        if (closing_) return true;
        if (!channel.empty() && !channels_.contains(channel)) return true;
        if (queue_.size() >= max_pending_) {
            close();
            return false;
        }
        queue_.push_back(std::move(msg));
        if (queue_.size() == 1 && open_) write_next();
        return true;
    }

    /// The queue is kept: an in-flight write still points into its front entry.
    void close() {
        if (closing_) return;
        closing_ = true;
        beast::error_code ignored;
        beast::get_lowest_layer(ws_).socket().close(ignored);
    }

private:
    void on_accept(beast::error_code ec);
    void read_next();
    void on_read(beast::error_code ec);

    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->close();
                return;
            }
            if (self->closing_ || self->queue_.empty()) return;
            self->queue_.pop_front();
            if (!self->queue_.empty()) self->write_next();
        });
    }

    void reply(const protocol::json &msg) { send({}, std::make_shared<const std::string>(msg.dump())); }

    websocket::stream<beast::tcp_stream> ws_;
    WsServer &server_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    std::set<std::string> channels_ = protocol::default_channels();
    std::size_t max_pending_ = 64;
    bool open_ = false;
    bool closing_ = false;
};

/**
 * Sink that fans results out to connected clients and handles their requests
 * against a LiveService. Binding port 0 picks a free port; see port().
 */
class WsServer final : public ResultSink {
public:
    WsServer(LiveService &service, const tcp::endpoint &endpoint, ServerOptions opts = {})
        : service_(service), opts_(opts), acceptor_(io_) {
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen();
        port_ = acceptor_.local_endpoint().port();
    }

    ~WsServer() override { stop(); }

    void start() {
        accept_next();
        thread_ = std::thread([this] { io_.run(); });
    }

    void stop() {
        if (stopped_.exchange(true)) return;
        net::post(io_, [this] {
            beast::error_code ignored;
            acceptor_.close(ignored);
            for (auto &w : sessions_)
                if (auto s = w.lock()) s->close();
        });
        if (thread_.joinable()) {
            // let queued closes run, then stop
            net::post(io_, [this] { io_.stop(); });
            thread_.join();
        }
    }

    [[nodiscard]] unsigned short port() const { return port_; }
    [[nodiscard]] std::uint64_t slow_disconnects() const { return slow_disconnects_.load(); }
    [[nodiscard]] std::uint64_t rdm_sent() const { return rdm_sent_.load(); }
    [[nodiscard]] std::size_t clients() const { return clients_.load(); }

    void on_result(const std::shared_ptr<const BatchResult> &r, const protocol::StreamCounters &c) override {
        std::vector<std::pair<std::string, std::shared_ptr<const std::string>>> msgs;
        const auto now = steady::now();
        if (!last_rdm_ || now - *last_rdm_ >= opts_.rdm_interval) {
            last_rdm_ = now;
            msgs.emplace_back("rdm", std::make_shared<const std::string>(protocol::rdm(*r).dump()));
            ++rdm_sent_;
        }
        msgs.emplace_back("targets", std::make_shared<const std::string>(protocol::targets(*r).dump()));
        msgs.emplace_back("tracks", std::make_shared<const std::string>(protocol::tracks(*r).dump()));
        msgs.emplace_back("vitals", std::make_shared<const std::string>(protocol::vitals(*r).dump()));
        msgs.emplace_back("stats", std::make_shared<const std::string>(protocol::stats(*r, c).dump()));
        msgs.emplace_back("csi_stats", std::make_shared<const std::string>(protocol::csi_stats(*r).dump()));
        net::post(io_, [this, msgs = std::move(msgs)] {
            for (auto &w : sessions_) {
                auto s = w.lock();
                if (!s) continue;
                for (const auto &[channel, m] : msgs) {
                    if (!s->send(channel, m)) {
                        ++slow_disconnects_;
                        break;
                    }
                }
            }
            prune();
        });
    }

private:
    friend class WsSession;

    void accept_next() {
        acceptor_.async_accept(io_, [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            auto s = std::make_shared<WsSession>(std::move(socket), *this);
            sessions_.push_back(s);
            prune();
            s->start();
            accept_next();
        });
    }

    void prune() {
        std::erase_if(sessions_, [](const std::weak_ptr<WsSession> &w) { return w.expired(); });
        clients_ = sessions_.size();
    }

    protocol::json hello(const std::set<std::string> &channels) const {
        const auto snap = service_.snapshot();
        return protocol::hello(snap.config, snap.config_id, service_.source().name(), channels);
    }

    /// Applies one client request; returns the ack or error to send back.
    protocol::json handle(const protocol::Request &req, std::set<std::string> &channels) {
        using Kind = protocol::Request::Kind;
        switch (req.kind) {
        case Kind::set_config:
        case Kind::set_mode: {
            const PatchResult p = service_.apply_config_patch(req.patch);
            if (!p.ok) return protocol::error(req.request_id, p.error);
            return protocol::ack(req.request_id, {{"config_id", p.config_id}});
        }
        case Kind::set_scene: {
            if (auto err = service_.set_scene(req.scene)) return protocol::error(req.request_id, *err);
            return protocol::ack(req.request_id, {{"targets", req.scene.scene.targets.size()}});
        }
        case Kind::subscribe:
            channels = std::set<std::string>(req.channels.begin(), req.channels.end());
            return protocol::ack(req.request_id, {{"channels", channels}});
        }
        return protocol::error(req.request_id, "unhandled request");
    }

    LiveService &service_;
    ServerOptions opts_;
    net::io_context io_;
    tcp::acceptor acceptor_;
    unsigned short port_ = 0;
    std::thread thread_;
    std::atomic<bool> stopped_{false};
    std::vector<std::weak_ptr<WsSession>> sessions_;  // io thread only
    std::optional<steady::time_point> last_rdm_;      // broadcast thread only
    std::atomic<std::uint64_t> slow_disconnects_{0};
    std::atomic<std::uint64_t> rdm_sent_{0};
    std::atomic<std::size_t> clients_{0};
};

inline void WsSession::start() {
    max_pending_ = server_.opts_.max_pending;
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
}

inline void WsSession::on_accept(beast::error_code ec) {
    if (ec) return;
    // results queued during the handshake go out after hello
    queue_.push_front(std::make_shared<const std::string>(server_.hello(channels_).dump()));
    open_ = true;
    write_next();
    read_next();
}

inline void WsSession::read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
}

inline void WsSession::on_read(beast::error_code ec) {
    if (ec) {
        close();
        return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
        const protocol::Request req = protocol::parse_request(text);
        reply(server_.handle(req, channels_));
    } catch (const protocol::ProtocolError &e) {
        reply(protocol::error(e.request_id(), e.what()));
    }
    read_next();
}

}  // namespace livesense::service
