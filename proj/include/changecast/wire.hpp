#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "changecast/types.hpp"

namespace changecast::wire {

/// Logical wire format, used for byte accounting and the serialized message
/// log. Header (24 bytes, little-endian): agent_id u32, seq u64, kind u8,
/// count u32, 7 reserved zero bytes. Data messages carry `count` 16-byte
/// (timestamp, value) double records; baseline summaries carry `count`
/// 16-byte (probe, estimate) records.
inline constexpr std::size_t header_bytes = 24;
inline constexpr std::size_t record_bytes = 16;

inline std::size_t message_bytes(const Message& msg) {
    const std::size_t records =
        msg.summary.has_value() ? msg.summary->probes.size() : msg.pairs.size();
    return header_bytes + record_bytes * records;
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[at + static_cast<std::size_t>(i)]} << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in[at + static_cast<std::size_t>(i)]} << (8 * i);
    return v;
}

inline double get_f64(std::span<const std::uint8_t> in, std::size_t at) {
    return std::bit_cast<double>(get_u64(in, at));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const Message& msg) {
    const bool is_summary = msg.summary.has_value();
    if (is_summary == !msg.pairs.empty())
        throw std::invalid_argument("message must carry pairs xor a summary");
    std::vector<std::uint8_t> out;
    out.reserve(message_bytes(msg));
    detail::put_u32(out, static_cast<std::uint32_t>(msg.agent_id));
    detail::put_u64(out, msg.seq);
    out.push_back(static_cast<std::uint8_t>(msg.kind));
    if (is_summary) {
        detail::put_u32(out, static_cast<std::uint32_t>(msg.summary->probes.size()));
        out.insert(out.end(), 7, 0);
        for (std::size_t i = 0; i < msg.summary->probes.size(); ++i) {
            detail::put_f64(out, msg.summary->probes[i]);
            detail::put_f64(out, msg.summary->estimates[i]);
        }
    } else {
        detail::put_u32(out, static_cast<std::uint32_t>(msg.pairs.size()));
        out.insert(out.end(), 7, 0);
        for (const auto& p : msg.pairs) {
            detail::put_f64(out, p.timestamp);
            detail::put_f64(out, p.value);
        }
    }
    return out;
}

inline Message decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < header_bytes) throw std::invalid_argument("truncated message header");
    Message msg;
    msg.agent_id = static_cast<std::int32_t>(detail::get_u32(bytes, 0));
    msg.seq = detail::get_u64(bytes, 4);
    const std::uint8_t kind = bytes[12];
    if (kind > static_cast<std::uint8_t>(MessageKind::baseline_summary))
        throw std::invalid_argument("unknown message kind");
    msg.kind = static_cast<MessageKind>(kind);
    const std::uint32_t count = detail::get_u32(bytes, 13);
    if (bytes.size() != header_bytes + record_bytes * count)
        throw std::invalid_argument("message length does not match record count");
    if (msg.kind == MessageKind::baseline_summary) {
        QuantileBuffer q;
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::size_t at = header_bytes + record_bytes * i;
            q.probes.push_back(detail::get_f64(bytes, at));
            q.estimates.push_back(detail::get_f64(bytes, at + 8));
        }
        msg.summary = std::move(q);
    } else {
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::size_t at = header_bytes + record_bytes * i;
            msg.pairs.push_back({detail::get_f64(bytes, at), detail::get_f64(bytes, at + 8)});
        }
    }
    return msg;
}

}  // namespace changecast::wire
