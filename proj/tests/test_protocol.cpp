#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gleaner/protocol.hpp"
#include "gleaner/sha256.hpp"

using namespace gleaner;

namespace {

Hash256 fill_hash(std::uint8_t byte) {
  Hash256 h;
  h.bytes.fill(byte);
  return h;
}

std::string random_string(std::mt19937_64& rng, std::size_t max_len) {
  std::string s(rng() % max_len, '\0');
  for (auto& c : s) c = static_cast<char>('a' + rng() % 26);
  return s;
}

Hash256 random_hash(std::mt19937_64& rng) {
  Hash256 h;
  for (auto& b : h.bytes) b = static_cast<std::uint8_t>(rng());
  return h;
}

Message random_message(std::mt19937_64& rng) {
  switch (rng() % 12) {
    case 0: {
      StageIn m;
      std::size_t n = rng() % 4;
      for (std::size_t i = 0; i < n; ++i) {
        StageItem it;
        it.object_id = random_hash(rng);
        it.kind = static_cast<ObjectKind>(rng() % 4);
        it.size = rng();
        it.source.from_peer = rng() % 2 == 1;
        it.source.addr = random_string(rng, 24);
        m.manifest.push_back(std::move(it));
      }
      return m;
    }
    case 1:
      return MaterializeContext{random_hash(rng)};
    case 2: {
      Invoke m;
      m.task_id = rng();
      m.attempt = static_cast<std::uint32_t>(rng());
      m.recipe_id = random_hash(rng);
      m.first_item = rng();
      m.item_count = static_cast<std::uint32_t>(rng());
      return m;
    }
    case 3:
      return RetireWorker{};
    case 4: {
      Joined m;
      m.profile.gpu_model = random_string(rng, 16);
      m.profile.speed_factor = static_cast<double>(rng() % 1000) / 256.0;
      // Profile capacity fields travel as integral u16s.
      m.profile.cores = static_cast<std::uint32_t>(rng() % 128);
      m.profile.mem_gb = static_cast<double>(rng() % 512);
      m.profile.disk_gb = static_cast<double>(rng() % 4096);
      m.profile.gpus = static_cast<std::uint32_t>(rng() % 8);
      m.listen_addr = random_string(rng, 24);
      return m;
    }
    case 5:
      return CacheAck{random_hash(rng)};
    case 6:
      return LibraryReady{random_hash(rng), rng()};
    case 7: {
      Result m;
      m.result.task_id = rng();
      m.result.attempt = static_cast<std::uint32_t>(rng());
      m.result.outcome = rng() % 2 ? TaskOutcome::Failed : TaskOutcome::Completed;
      m.result.inferences_done = static_cast<std::uint32_t>(rng());
      m.result.detail = random_string(rng, 40);
      return m;
    }
    case 8:
      return TransferDone{random_hash(rng), random_string(rng, 24)};
    case 9:
      return Fetch{random_hash(rng)};
    case 10: {
      Chunk m;
      m.object_id = random_hash(rng);
      m.offset = rng();
      m.bytes.resize(rng() % 256);
      for (auto& b : m.bytes) b = static_cast<std::uint8_t>(rng());
      return m;
    }
    default:
      return FetchDenied{rng() % 2 ? "at-cap" : "absent"};
  }
}

}  // namespace

TEST_CASE("retire-worker frame is exactly five bytes") {
  auto frame = encode_frame(RetireWorker{});
  CHECK(frame == std::vector<std::uint8_t>{0x00, 0x00, 0x00, 0x01, 0x04});
  auto res = decode_frame(frame);
  REQUIRE(res.status == DecodeResult::Status::Ok);
  CHECK(res.consumed == 5);
  CHECK(std::holds_alternative<RetireWorker>(res.msg));
}

TEST_CASE("fetch frame is length, tag, raw hash: 37 bytes") {
  Fetch msg{fill_hash(0xAB)};
  auto frame = encode_frame(msg);
  REQUIRE(frame.size() == 37);
  // Length counts tag + payload = 1 + 32 = 0x21.
  CHECK(frame[0] == 0x00);
  CHECK(frame[1] == 0x00);
  CHECK(frame[2] == 0x00);
  CHECK(frame[3] == 0x21);
  CHECK(frame[4] == 0x20);  // Fetch tag
  for (std::size_t i = 5; i < 37; ++i) CHECK(frame[i] == 0xAB);
  auto res = decode_frame(frame);
  REQUIRE(res.status == DecodeResult::Status::Ok);
  CHECK(std::get<Fetch>(res.msg) == msg);
}

TEST_CASE("stage-in item layout carries the source address for every source") {
  StageIn msg;
  StageItem it;
  it.object_id = fill_hash(0xCD);
  it.kind = ObjectKind::DependencyPackage;
  it.size = 0x0102030405060708ULL;
  it.source.from_peer = false;  // manager-sourced items keep their address
  it.source.addr = "h:1";
  msg.manifest.push_back(it);

  std::vector<std::uint8_t> expected = {0x00, 0x00, 0x00, 0x34,  // 1 + 51
                                        0x01,                    // StageIn tag
                                        0x00, 0x00, 0x00, 0x01}; // count
  expected.insert(expected.end(), 32, 0xCD);
  expected.push_back(0x01);  // kind
  for (std::uint8_t b : {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08})
    expected.push_back(b);
  expected.push_back(0x00);        // from_peer
  expected.push_back(0x00);        // addr length hi
  expected.push_back(0x03);        // addr length lo
  expected.push_back('h');
  expected.push_back(':');
  expected.push_back('1');

  CHECK(encode_frame(msg) == expected);
  auto res = decode_frame(expected);
  REQUIRE(res.status == DecodeResult::Status::Ok);
  CHECK(std::get<StageIn>(res.msg) == msg);
}

TEST_CASE("random messages of every kind round-trip") {
  std::mt19937_64 rng(123456789);
  for (int i = 0; i < 1000; ++i) {
    Message msg = random_message(rng);
    auto frame = encode_frame(msg);
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Ok);
    CHECK(res.consumed == frame.size());
    CHECK(res.msg == msg);
    CHECK(std::string(message_tag_name(res.msg)) == message_tag_name(msg));
  }
}

TEST_CASE("concatenated frames decode one at a time across the buffer") {
  std::mt19937_64 rng(42);
  std::vector<Message> msgs;
  std::vector<std::uint8_t> stream;
  for (int i = 0; i < 20; ++i) {
    msgs.push_back(random_message(rng));
    auto frame = encode_frame(msgs.back());
    stream.insert(stream.end(), frame.begin(), frame.end());
  }
  std::size_t pos = 0;
  for (const Message& expected : msgs) {
    auto res = decode_frame(stream.data() + pos, stream.size() - pos);
    REQUIRE(res.status == DecodeResult::Status::Ok);
    CHECK(res.msg == expected);
    pos += res.consumed;
  }
  CHECK(pos == stream.size());
}

TEST_CASE("truncated frames ask for more bytes") {
  auto frame = encode_frame(Fetch{fill_hash(1)});
  // Less than a length header.
  auto res = decode_frame(frame.data(), 3);
  CHECK(res.status == DecodeResult::Status::NeedMore);
  CHECK(res.need_more == 1);
  // Header present, payload cut short.
  res = decode_frame(frame.data(), 10);
  CHECK(res.status == DecodeResult::Status::NeedMore);
  CHECK(res.need_more == frame.size() - 10);
  // Empty buffer.
  res = decode_frame(frame.data(), 0);
  CHECK(res.status == DecodeResult::Status::NeedMore);
  CHECK(res.need_more == 4);
}

TEST_CASE("malformed frames yield errors, never exceptions") {
  SUBCASE("unknown tag") {
    std::vector<std::uint8_t> frame = {0x00, 0x00, 0x00, 0x01, 0xFF};
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_offset == 4);
    CHECK(res.error_reason == "unknown tag");
  }
  SUBCASE("zero length") {
    std::vector<std::uint8_t> frame = {0x00, 0x00, 0x00, 0x00, 0x04};
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_reason == "zero frame length");
  }
  SUBCASE("trailing bytes inside the frame") {
    auto frame = encode_frame(RetireWorker{});
    frame[3] = 0x02;  // claim one extra payload byte
    frame.push_back(0x00);
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_reason == "trailing bytes in frame");
  }
  SUBCASE("bad object kind") {
    StageIn msg;
    StageItem it;
    it.source.addr = "x";
    msg.manifest.push_back(it);
    auto frame = encode_frame(msg);
    frame[4 + 1 + 4 + 32] = 9;  // kind byte of the first item
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_reason == "bad object kind");
  }
  SUBCASE("bad source tag") {
    StageIn msg;
    StageItem it;
    msg.manifest.push_back(it);
    auto frame = encode_frame(msg);
    frame[4 + 1 + 4 + 32 + 1 + 8] = 7;  // from_peer byte
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_reason == "bad source tag");
  }
  SUBCASE("manifest count exceeding the frame") {
    StageIn msg;
    auto frame = encode_frame(msg);
    frame[8] = 0xFF;  // count low byte, but no item bytes follow
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_reason == "manifest count exceeds frame");
  }
  SUBCASE("bad result outcome") {
    Result msg;
    auto frame = encode_frame(msg);
    frame[4 + 1 + 8 + 4] = 5;  // outcome byte
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_reason == "bad outcome");
  }
  SUBCASE("string running past the payload") {
    auto frame = encode_frame(FetchDenied{"at-cap"});
    frame[6] = 0xFF;  // claimed string length far beyond the frame
    auto res = decode_frame(frame);
    REQUIRE(res.status == DecodeResult::Status::Error);
    CHECK(res.error_reason == "truncated payload");
  }
}

TEST_CASE("decoder survives 100k bytes of random garbage") {
  std::mt19937_64 rng(987654321);
  std::vector<std::uint8_t> noise(100000);
  for (auto& b : noise) b = static_cast<std::uint8_t>(rng());
  std::size_t pos = 0;
  while (pos < noise.size()) {
    auto res = decode_frame(noise.data() + pos, noise.size() - pos);
    if (res.status == DecodeResult::Status::Ok) {
      REQUIRE(res.consumed > 0);
      pos += res.consumed;
    } else {
      // Errors and starvation both make progress byte-by-byte, as the live
      // connection loop does after dropping a bad peer.
      ++pos;
    }
  }
  CHECK(pos >= noise.size());
}

TEST_CASE("valid frames embedded in a fuzz stream still decode") {
  std::mt19937_64 rng(5150);
  for (int i = 0; i < 200; ++i) {
    Message msg = random_message(rng);
    auto frame = encode_frame(msg);
    std::vector<std::uint8_t> buf = frame;
    buf.resize(frame.size() + rng() % 64);  // trailing junk after the frame
    for (std::size_t j = frame.size(); j < buf.size(); ++j)
      buf[j] = static_cast<std::uint8_t>(rng());
    auto res = decode_frame(buf);
    REQUIRE(res.status == DecodeResult::Status::Ok);
    CHECK(res.consumed == frame.size());
    CHECK(res.msg == msg);
  }
}
