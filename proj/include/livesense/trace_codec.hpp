// SPDX-License-Identifier: Apache-2.0
/**
 * @file
 * @brief Binary CSI trace files and UDP frame records.
 *
 * Layout, all little-endian:
 *
 *   header : "CSI1" | u16 version (=1) | u32 N | f64 carrier_freq_hz
 *            | f64 bandwidth_hz | f64 nominal_frame_interval_s          (34 bytes)
 *   record : f64 timestamp | u32 seq | u8 flags | N x (f32 re, f32 im)   (13 + 8N bytes)
 *
 * A UDP datagram carries exactly one record and no header.
 */

#pragma once

#include "livesense/types.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace livesense::trace {

inline constexpr std::array<std::uint8_t, 4> kMagic{'C', 'S', 'I', '1'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 8 + 8 + 8;

inline constexpr std::size_t record_bytes(std::size_t n) { return 8 + 4 + 1 + 8 * n; }

/// Decode failure; `offset` is the byte position where decoding stopped.
class TraceError : public std::runtime_error {
public:
    TraceError(const std::string &what, std::size_t offset, long frame_index = -1)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset) +
                             (frame_index >= 0 ? " (frame " + std::to_string(frame_index) + ")" : "")),
          offset_(offset), frame_index_(frame_index) {}
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }
    [[nodiscard]] long frame_index() const noexcept { return frame_index_; }

private:
    std::size_t offset_;
    long frame_index_;
};

/// The subset of SensingConfig a trace carries.
struct TraceHeader {
    std::uint32_t n_subcarriers = 0;
    double carrier_freq_hz = 0.0;
    double bandwidth_hz = 0.0;
    double frame_interval_s = 0.0;
    friend bool operator==(const TraceHeader &, const TraceHeader &) = default;
};

inline TraceHeader header_from(const SensingConfig &c) {
    return {static_cast<std::uint32_t>(c.n_subcarriers), c.carrier_freq_hz, c.bandwidth_hz, c.frame_interval_s};
}

inline void apply_header(SensingConfig &c, const TraceHeader &h) {
    c.n_subcarriers = static_cast<int>(h.n_subcarriers);
    c.carrier_freq_hz = h.carrier_freq_hz;
    c.bandwidth_hz = h.bandwidth_hz;
    c.frame_interval_s = h.frame_interval_s;
}

namespace detail {

template <typename T>
void put(std::vector<std::uint8_t> &out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<std::uint8_t, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.insert(out.end(), bytes.begin(), bytes.end());
}

template <typename T>
T get(std::span<const std::uint8_t> in, std::size_t offset) {
    std::array<std::uint8_t, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), in.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace detail

inline void encode_header(std::vector<std::uint8_t> &out, const TraceHeader &h) {
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    detail::put<std::uint16_t>(out, kVersion);
    detail::put<std::uint32_t>(out, h.n_subcarriers);
    detail::put<double>(out, h.carrier_freq_hz);
    detail::put<double>(out, h.bandwidth_hz);
    detail::put<double>(out, h.frame_interval_s);
}

/// Appends one record. CSI values are narrowed to f32.
inline void encode_record(std::vector<std::uint8_t> &out, const CsiFrame &f) {
    detail::put<double>(out, f.timestamp);
    detail::put<std::uint32_t>(out, f.seq);
    detail::put<std::uint8_t>(out, f.flags.bits);
    for (const auto &c : f.csi) {
        detail::put<float>(out, static_cast<float>(c.real()));
        detail::put<float>(out, static_cast<float>(c.imag()));
    }
}

inline std::vector<std::uint8_t> encode_record(const CsiFrame &f) {
    std::vector<std::uint8_t> out;
    out.reserve(record_bytes(f.csi.size()));
    encode_record(out, f);
    return out;
}

inline std::vector<std::uint8_t> encode_trace(std::span<const CsiFrame> frames, const TraceHeader &h) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + frames.size() * record_bytes(h.n_subcarriers));
    encode_header(out, h);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].csi.size() != h.n_subcarriers)
            throw std::invalid_argument("encode_trace: frame " + std::to_string(i) + " has " +
                                        std::to_string(frames[i].csi.size()) + " subcarriers, header says " +
                                        std::to_string(h.n_subcarriers));
        encode_record(out, frames[i]);
    }
    return out;
}

inline std::vector<std::uint8_t> encode_trace(std::span<const CsiFrame> frames, const SensingConfig &c) {
    return encode_trace(frames, header_from(c));
}

inline TraceHeader decode_header(std::span<const std::uint8_t> in) {
    if (in.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), in.begin())) throw TraceError("bad magic", 0);
    if (in.size() < kHeaderBytes) throw TraceError("truncated header", in.size());
    const auto version = detail::get<std::uint16_t>(in, 4);
    if (version != kVersion) throw TraceError("unsupported version " + std::to_string(version), 4);
    TraceHeader h;
    h.n_subcarriers = detail::get<std::uint32_t>(in, 6);
    h.carrier_freq_hz = detail::get<double>(in, 10);
    h.bandwidth_hz = detail::get<double>(in, 18);
    h.frame_interval_s = detail::get<double>(in, 26);
    if (h.n_subcarriers == 0) throw TraceError("zero subcarrier count", 6);
    return h;
}

/// Decodes one record of `n` subcarriers starting at `offset`.
inline CsiFrame decode_record(std::span<const std::uint8_t> in, std::size_t offset, std::size_t n, long frame_index = -1) {
    if (in.size() < offset + record_bytes(n)) throw TraceError("truncated record", in.size(), frame_index);
    CsiFrame f;
    f.timestamp = detail::get<double>(in, offset);
    f.seq = detail::get<std::uint32_t>(in, offset + 8);
    f.flags.bits = detail::get<std::uint8_t>(in, offset + 12);
    f.csi.resize(n);
    std::size_t p = offset + 13;
    for (std::size_t k = 0; k < n; ++k, p += 8)
        f.csi[k] = cplx(detail::get<float>(in, p), detail::get<float>(in, p + 4));
    return f;
}

/// Decodes a single UDP datagram; its size must be exactly one record.
inline CsiFrame decode_datagram(std::span<const std::uint8_t> in, std::size_t n) {
    if (in.size() != record_bytes(n))
        throw TraceError("datagram of " + std::to_string(in.size()) + " bytes, expected " +
                             std::to_string(record_bytes(n)) + " (N mismatch)",
                         0);
    return decode_record(in, 0, n);
}

struct DecodedTrace {
    TraceHeader header;
    std::vector<CsiFrame> frames;
};

/// Throws TraceError on bad magic, truncation or a subcarrier count other than `expected_n` (when nonzero).
inline DecodedTrace decode_trace(std::span<const std::uint8_t> in, std::uint32_t expected_n = 0) {
    DecodedTrace out;
    out.header = decode_header(in);
    if (expected_n != 0 && out.header.n_subcarriers != expected_n)
        throw TraceError("N mismatch: trace has " + std::to_string(out.header.n_subcarriers) + ", expected " +
                             std::to_string(expected_n),
                         6);
    const std::size_t n = out.header.n_subcarriers;
    std::size_t offset = kHeaderBytes;
    long index = 0;
    while (offset < in.size()) {
        if (in.size() - offset < record_bytes(n)) throw TraceError("truncated record", offset, index);
        out.frames.push_back(decode_record(in, offset, n, index));
        offset += record_bytes(n);
        ++index;
    }
    return out;
}

inline std::vector<std::uint8_t> read_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string &path, std::span<const std::uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

/// Incremental writer used for recording live sessions.
class TraceWriter {
public:
    TraceWriter(const std::string &path, const TraceHeader &h) : out_(path, std::ios::binary | std::ios::trunc), n_(h.n_subcarriers) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
        std::vector<std::uint8_t> buf;
        encode_header(buf, h);
        write(buf);
    }

    void append(const CsiFrame &f) {
        if (f.csi.size() != n_) throw std::invalid_argument("TraceWriter: subcarrier count mismatch");
        buf_.clear();
        encode_record(buf_, f);
        write(buf_);
    }

    void flush() { out_.flush(); }

private:
    void write(const std::vector<std::uint8_t> &b) {
        out_.write(reinterpret_cast<const char *>(b.data()), static_cast<std::streamsize>(b.size()));
        if (!out_) throw std::runtime_error("trace write failed");
    }

    std::ofstream out_;
    std::size_t n_;
    std::vector<std::uint8_t> buf_;
};

}  // namespace livesense::trace
