#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "changecast/types.hpp"
#include "changecast/wire.hpp"

using namespace changecast;

namespace {

Message sample_data_message() {
    Message msg;
    msg.agent_id = 7;
    msg.seq = 42;
    msg.kind = MessageKind::post_change;
    msg.pairs = {{1.5, -3.25}, {2.0, 0.0}, {2.5, 1e300}};
    return msg;
}

Message sample_summary_message() {
    Message msg;
    msg.agent_id = 3;
    msg.seq = 9;
    msg.kind = MessageKind::baseline_summary;
    msg.summary = QuantileBuffer{{0.25, 0.5, 0.75}, {1.0, 2.0, 4.0}, 5};
    return msg;
}

}  // namespace

TEST_CASE("message byte counts follow the header-plus-records formula", "[wire]") {
    Message msg = sample_data_message();
    CHECK(wire::message_bytes(msg) == 24 + 16 * 3);

    msg.pairs.resize(1);
    CHECK(wire::message_bytes(msg) == 40);

    // A 20-pair payload, the default full resample, costs 344 bytes.
    msg.pairs.assign(20, TimeValuePair{0.0, 0.0});
    CHECK(wire::message_bytes(msg) == 344);

    CHECK(wire::message_bytes(sample_summary_message()) == 24 + 16 * 3);
}

TEST_CASE("encode emits exactly the accounted bytes", "[wire]") {
    const Message data = sample_data_message();
    CHECK(wire::encode(data).size() == wire::message_bytes(data));
    const Message summary = sample_summary_message();
    CHECK(wire::encode(summary).size() == wire::message_bytes(summary));
}

TEST_CASE("header layout is little-endian with zero reserved bytes", "[wire]") {
    Message msg;
    msg.agent_id = 0x0102;
    msg.seq = 0x01020304;
    msg.kind = MessageKind::send_all;
    msg.pairs = {{0.0, 0.0}};
    const auto bytes = wire::encode(msg);
    REQUIRE(bytes.size() == 40);
    CHECK(bytes[0] == 0x02);
    CHECK(bytes[1] == 0x01);
    CHECK(bytes[2] == 0x00);
    CHECK(bytes[4] == 0x04);
    CHECK(bytes[5] == 0x03);
    CHECK(bytes[6] == 0x02);
    CHECK(bytes[7] == 0x01);
    CHECK(bytes[12] == 2);  // kind
    CHECK(bytes[13] == 1);  // record count
    for (std::size_t i = 17; i < 24; ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("data messages roundtrip through encode/decode", "[wire]") {
    const Message msg = sample_data_message();
    const Message back = wire::decode(wire::encode(msg));
    CHECK(back.agent_id == msg.agent_id);
    CHECK(back.seq == msg.seq);
    CHECK(back.kind == msg.kind);
    REQUIRE(back.pairs.size() == msg.pairs.size());
    for (std::size_t i = 0; i < msg.pairs.size(); ++i) {
        CHECK(back.pairs[i].timestamp == msg.pairs[i].timestamp);
        CHECK(back.pairs[i].value == msg.pairs[i].value);
    }
    CHECK_FALSE(back.summary.has_value());
}

TEST_CASE("summary messages roundtrip probes and estimates", "[wire]") {
    const Message msg = sample_summary_message();
    const Message back = wire::decode(wire::encode(msg));
    CHECK(back.kind == MessageKind::baseline_summary);
    REQUIRE(back.summary.has_value());
    CHECK(back.summary->probes == msg.summary->probes);
    CHECK(back.summary->estimates == msg.summary->estimates);
    // The fill weight is in-process state, not part of the wire image.
    CHECK(back.summary->weight == 0);
    CHECK(back.pairs.empty());
}

TEST_CASE("decode rejects malformed inputs", "[wire]") {
    const auto bytes = wire::encode(sample_data_message());

    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 10);
    CHECK_THROWS_WITH(wire::decode(truncated), "truncated message header");

    std::vector<std::uint8_t> short_body(bytes.begin(), bytes.end() - 1);
    CHECK_THROWS_WITH(wire::decode(short_body), "message length does not match record count");

    std::vector<std::uint8_t> bad_kind = bytes;
    bad_kind[12] = 9;
    CHECK_THROWS_WITH(wire::decode(bad_kind), "unknown message kind");
}

TEST_CASE("encode rejects messages violating pairs-xor-summary", "[wire]") {
    Message both = sample_data_message();
    both.summary = QuantileBuffer{{0.5}, {1.0}, 1};
    CHECK_THROWS_WITH(wire::encode(both), "message must carry pairs xor a summary");

    Message neither;
    CHECK_THROWS_WITH(wire::encode(neither), "message must carry pairs xor a summary");
}
