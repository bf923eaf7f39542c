// SPDX-License-Identifier: Apache-2.0
// livesense command line: live run, trace synthesis and offline analysis.
//
// Exit codes: 0 ok, 1 config error, 2 I/O error, 3 stream degraded.

#include "livesense/config_io.hpp"
#include "livesense/pipeline.hpp"
#include "livesense/protocol.hpp"
#include "livesense/service/service.hpp"
#include "livesense/service/sources.hpp"
#include "livesense/service/ws_server.hpp"
#include "livesense/simulator.hpp"
#include "livesense/trace_codec.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace ls = livesense;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitDegraded = 3;

/// Error with the exit code it maps to.
struct CliError {
    int code;
    std::string message;
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

ls::SensingConfig base_config(const std::string &config_path) {
    if (config_path.empty()) return {};
    std::string text;
    try {
        text = ls::read_text_file(config_path);
    } catch (const std::exception &e) {
        throw CliError{kExitIo, e.what()};
    }
    return ls::parse_config(text);
}

ls::trace::DecodedTrace load_trace(const std::string &path) {
    try {
        const auto bytes = ls::trace::read_file(path);
        return ls::trace::decode_trace(bytes);
    } catch (const ls::trace::TraceError &e) {
        throw CliError{kExitIo, "'" + path + "': " + e.what()};
    } catch (const std::runtime_error &e) {
        throw CliError{kExitIo, e.what()};
    }
}

ls::sim::SceneFile load_scene_file(const std::string &path) {
    std::string text;
    try {
        text = ls::read_text_file(path);
    } catch (const std::exception &e) {
        throw CliError{kExitIo, e.what()};
    }
    return ls::sim::parse_scene(text);
}

void apply_mode(ls::SensingConfig &cfg, const std::string &mode) {
    if (!mode.empty()) ls::set_config_value(cfg, "mode", mode);
}

// ---- run ---------------------------------------------------------------------

struct RunArgs {
    std::string source;
    std::string scene;
    std::string trace;
    std::string listen;
    std::string config;
    std::string mode;
    std::string serve;
    std::string record;
    double speed = 1.0;
    std::optional<std::uint64_t> frames;
    double duration_s = 0.0;
    bool quiet = false;
};

int cmd_run(const RunArgs &a) {
    ls::SensingConfig cfg = base_config(a.config);
    std::unique_ptr<ls::service::FrameSource> source;
    std::optional<ls::sim::SceneFile> scene;
    std::optional<ls::trace::DecodedTrace> trace;

    if (a.source == "sim") {
        scene = a.scene.empty() ? ls::sim::SceneFile{} : load_scene_file(a.scene);
        ls::apply_key_values(cfg, scene->config_overrides);
    } else if (a.source == "trace") {
        if (a.trace.empty()) throw CliError{kExitConfig, "--source trace needs --trace <file>"};
        trace = load_trace(a.trace);
        ls::trace::apply_header(cfg, trace->header);
    } else if (a.source != "udp") {
        throw CliError{kExitConfig, "unknown source '" + a.source + "'"};
    }
    apply_mode(cfg, a.mode);
    ls::validate(cfg);

    if (a.source == "sim") {
        source = std::make_unique<ls::service::SimSource>(scene->scene, cfg, a.frames, a.speed);
    } else if (a.source == "trace") {
        source = std::make_unique<ls::service::TraceSource>(std::move(trace->frames), a.speed);
    } else {
        if (a.listen.empty()) throw CliError{kExitConfig, "--source udp needs --listen <addr:port>"};
        const auto [addr, port] = ls::service::parse_host_port(a.listen);
        try {
            source = std::make_unique<ls::service::UdpSource>(boost::asio::ip::udp::endpoint(addr, port),
                                                              static_cast<std::size_t>(cfg.n_subcarriers));
        } catch (const boost::system::system_error &e) {
            throw CliError{kExitIo, "cannot listen on " + a.listen + ": " + e.what()};
        }
    }

    ls::service::ServiceOptions opts;
    opts.record_path = a.record;
    std::unique_ptr<ls::service::LiveService> service;
    try {
        service = std::make_unique<ls::service::LiveService>(cfg, std::move(source), opts);
    } catch (const std::runtime_error &e) {
        throw CliError{kExitIo, e.what()};
    }

    std::shared_ptr<ls::service::WsServer> server;
    if (!a.serve.empty()) {
        const auto [addr, port] = ls::service::parse_host_port(a.serve);
        try {
            server = std::make_shared<ls::service::WsServer>(*service, boost::asio::ip::tcp::endpoint(addr, port));
        } catch (const boost::system::system_error &e) {
            throw CliError{kExitIo, "cannot serve on " + a.serve + ": " + e.what()};
        }
        service->add_sink(server);
        std::cerr << "serving ws://" << a.serve.substr(0, a.serve.rfind(':')) << ":" << server->port() << "\n";
    }
    auto printer = std::make_shared<ls::service::ResultQueue>(1024);
    service->add_sink(printer);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    if (server) server->start();
    service->start();

    const auto t0 = std::chrono::steady_clock::now();
    double worst_ms = 0.0;
    std::uint64_t results = 0;
    for (;;) {
        if (g_interrupted) break;
        if (a.duration_s > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= a.duration_s)
            break;
        auto r = printer->pop(std::chrono::milliseconds(100));
        if (!r) {
            if (printer->ended()) break;
            continue;
        }
        ++results;
        worst_ms = std::max(worst_ms, r->timings.total_ms);
        if (!a.quiet) {
            const auto c = service->counters();
            std::printf("batch=%llu config_id=%llu detections=%zu tracks=%zu present=%d total_ms=%.2f drops=%llu\n",
                        static_cast<unsigned long long>(r->batch_seq), static_cast<unsigned long long>(r->config_id),
                        r->detections.size(), r->tracks.size(), r->presence.present ? 1 : 0, r->timings.total_ms,
                        static_cast<unsigned long long>(c.drop_count));
            std::fflush(stdout);
        }
    }
    service->stop();
    if (server) server->stop();

    const auto c = service->counters();
    std::cerr << "batches=" << results << " frames=" << service->frames_in() << " drops=" << c.drop_count
              << " gap_fills=" << c.gap_fills << " resyncs=" << c.resyncs << " malformed=" << service->source().malformed()
              << " worst_total_ms=" << worst_ms << "\n";
    if (!service->failure().empty()) throw CliError{kExitIo, service->failure()};
    return service->degraded() ? kExitDegraded : kExitOk;
}

// ---- sim ---------------------------------------------------------------------

int cmd_sim(const std::string &scene_path, std::uint64_t frames, const std::string &out, const std::string &config) {
    ls::SensingConfig cfg = base_config(config);
    const ls::sim::SceneFile scene = load_scene_file(scene_path);
    ls::apply_key_values(cfg, scene.config_overrides);
    ls::validate(cfg);
    ls::sim::validate(scene.scene, cfg);
    const auto trace = ls::sim::generate_trace(scene.scene, cfg, frames);
    try {
        ls::trace::write_file(out, ls::trace::encode_trace(trace, cfg));
    } catch (const std::runtime_error &e) {
        throw CliError{kExitIo, e.what()};
    }
    std::cerr << "wrote " << trace.size() << " frames to " << out << "\n";
    return kExitOk;
}

// ---- analyze -----------------------------------------------------------------

/// 8-bit heatmap, top row = most positive velocity, dynamic range 60 dB below the peak.
void write_pgm(const std::string &path, const ls::RangeDopplerMap &map) {
    const auto &m = map.mag_db;
    double peak = -1e300;
    for (double v : m.data) peak = std::max(peak, v);
    constexpr double kSpanDb = 60.0;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CliError{kExitIo, "cannot open '" + path + "' for writing"};
    f << "P5\n" << m.cols << " " << m.rows << "\n255\n";
    for (std::size_t i = 0; i < m.rows; ++i) {
        const std::size_t d = m.rows - 1 - i;
        for (std::size_t r = 0; r < m.cols; ++r) {
            const double x = std::clamp((m(d, r) - (peak - kSpanDb)) / kSpanDb, 0.0, 1.0);
            f.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * x))));
        }
    }
    if (!f) throw CliError{kExitIo, "write to '" + path + "' failed"};
}

void write_json(const std::string &path, const ls::protocol::json &j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw CliError{kExitIo, "cannot open '" + path + "' for writing"};
    f << j.dump(1) << "\n";
    if (!f) throw CliError{kExitIo, "write to '" + path + "' failed"};
}

int cmd_analyze(const std::string &trace_path, const std::string &out_dir, const std::string &config, const std::string &mode) {
    ls::SensingConfig cfg = base_config(config);
    const auto trace = load_trace(trace_path);
    ls::trace::apply_header(cfg, trace.header);
    apply_mode(cfg, mode);
    ls::validate(cfg);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw CliError{kExitIo, "cannot create '" + out_dir + "': " + ec.message()};

    ls::Pipeline pipeline(cfg);
    const auto results = pipeline.run(trace.frames);

    namespace proto = ls::protocol;
    proto::json batches = proto::json::array();
    for (const auto &r : results) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "batch_%04llu", static_cast<unsigned long long>(r.batch_seq));
        proto::json j = proto::rdm(r);
        j.erase("type");
        j["detections"] = proto::targets(r)["detections"];
        j["tracks"] = proto::tracks(r)["tracks"];
        j["vitals"] = proto::vitals(r);
        j["vitals"].erase("type");
        j["timings"] = proto::stats(r, {})["timings"];
        write_json((fs::path(out_dir) / (std::string(stem) + ".json")).string(), j);
        write_pgm((fs::path(out_dir) / (std::string(stem) + ".pgm")).string(), r.map);
        batches.push_back({{"batch_seq", r.batch_seq},
                           {"timestamp", r.map.batch_timestamp},
                           {"detections", r.detections.size()},
                           {"tracks", r.tracks.size()},
                           {"present", r.presence.present},
                           {"total_ms", r.timings.total_ms}});
    }
    const proto::json summary = {{"trace", trace_path},
                                 {"frames", trace.frames.size()},
                                 {"config", proto::config_json(cfg)},
                                 {"axes", proto::axes_json(cfg)},
                                 {"gap_fills", pipeline.resampler().gap_fills()},
                                 {"resyncs", pipeline.resyncs()},
                                 {"drop_count", pipeline.drop_count()},
                                 {"batches", std::move(batches)}};
    write_json((fs::path(out_dir) / "summary.json").string(), summary);
    std::cerr << "analyzed " << trace.frames.size() << " frames into " << results.size() << " batches\n";
    return pipeline.degraded() ? kExitDegraded : kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"LiveSense: Wi-Fi CSI range-Doppler sensing"};
    app.require_subcommand(1);

    RunArgs run;
    auto *run_cmd = app.add_subcommand("run", "Run the live pipeline");
    run_cmd->add_option("--source", run.source, "sim | trace | udp")->required()->check(CLI::IsMember({"sim", "trace", "udp"}));
    run_cmd->add_option("--scene", run.scene, "Scene file (sim source)");
    run_cmd->add_option("--trace", run.trace, "Trace file (trace source)");
    run_cmd->add_option("--listen", run.listen, "UDP addr:port (udp source)");
    run_cmd->add_option("--config", run.config, "Config file");
    run_cmd->add_option("--mode", run.mode, "gesture | presence | efficiency");
    run_cmd->add_option("--serve", run.serve, "WebSocket addr:port (port 0 picks one)");
    run_cmd->add_option("--record", run.record, "Record raw input frames to a trace file");
    run_cmd->add_option("--speed", run.speed, "Replay speed factor, 0 = unpaced")->capture_default_str();
    run_cmd->add_option("--frames", run.frames, "Stop the sim source after this many frames");
    run_cmd->add_option("--duration", run.duration_s, "Stop after this many seconds");
    run_cmd->add_flag("--quiet", run.quiet, "No per-batch lines");

    std::string sim_scene, sim_out, sim_config;
    std::uint64_t sim_frames = 0;
    auto *sim_cmd = app.add_subcommand("sim", "Write a simulated trace");
    sim_cmd->add_option("--scene", sim_scene, "Scene file")->required();
    sim_cmd->add_option("--frames", sim_frames, "Frame count")->required();
    sim_cmd->add_option("--out", sim_out, "Output trace")->required();
    sim_cmd->add_option("--config", sim_config, "Config file");

    std::string an_trace, an_out, an_config, an_mode;
    auto *an_cmd = app.add_subcommand("analyze", "Process a trace offline; JSON and PGM per batch");
    an_cmd->add_option("--trace", an_trace, "Trace file")->required();
    an_cmd->add_option("--out-dir", an_out, "Output directory")->required();
    an_cmd->add_option("--config", an_config, "Config file");
    an_cmd->add_option("--mode", an_mode, "gesture | presence | efficiency");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*sim_cmd) return cmd_sim(sim_scene, sim_frames, sim_out, sim_config);
        if (*an_cmd) return cmd_analyze(an_trace, an_out, an_config, an_mode);
    } catch (const CliError &e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const ls::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ls::trace::TraceError &e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
