#include <doctest.h>

#include <algorithm>
#include <random>

#include "ocpscan/edges.hpp"
#include "ocpscan/error.hpp"
#include "oracle.hpp"

using namespace ocpscan;

namespace {

constexpr std::uint64_t kJal = 0x0C000000;
constexpr std::uint64_t kRet = 0x03E00008;
const OpcodeMaskSpec kCall{6, 32};
const OpcodeMaskSpec kRetSpec{32, 32};

InstructionStream stream_of(std::vector<std::uint64_t> values, std::uint64_t pcOffset = 0,
                            std::uint64_t inc = 1) {
  return InstructionStream(std::move(values), {32, Endianness::big, pcOffset, inc});
}

std::vector<std::uint64_t> filler(std::size_t n) { return std::vector<std::uint64_t>(n, 0x24020001); }

}  // namespace

TEST_CASE("absolute operand resolves against pcOffset") {
  auto values = filler(64);
  values[3] = 0x0C10002A;
  const auto s = stream_of(values, 0x100000);
  const auto edges = potential_edges_absolute(s, kJal, kCall);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0] == Edge{3, 0x2A, 0x100003, 0x10002A});
}

TEST_CASE("absolute operand below the address base or past the end yields no edge") {
  auto values = filler(64);
  values[0] = kJal;               // operand 0
  values[1] = kJal | 0x100040;    // index 64, one past the end
  values[2] = kJal | 0x10003F;    // index 63, last instruction
  const auto edges = potential_edges_absolute(stream_of(values, 0x100000), kJal, kCall);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].targetIndex == 63);
}

TEST_CASE("addresses between instructions are not targets") {
  auto values = filler(16);
  values[0] = kJal | 0x205;  // pcOffset 0x200, step 2: odd address
  values[1] = kJal | 0x206;
  const auto edges = potential_edges_absolute(stream_of(values, 0x200, 2), kJal, kCall);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].targetIndex == 3);
}

TEST_CASE("call opcode lengths without operand bits are rejected") {
  CHECK_THROWS_AS(potential_edges_absolute(stream_of(filler(4)), kJal, {32, 32}), Error);
  CHECK_THROWS_AS(potential_edges_relative(stream_of(filler(4)), kJal, {32, 32}), Error);
}

TEST_CASE("sign extension") {
  CHECK(sign_extend(0x3FFFFFF, 26) == -1);
  CHECK(sign_extend(0x2000000, 26) == -(1 << 25));
  CHECK(sign_extend(0x1FFFFFF, 26) == (1 << 25) - 1);
  CHECK(sign_extend(0x3FFFFFE, 26) == -2);
  CHECK(sign_extend(0, 26) == 0);
  CHECK(sign_extend(1, 1) == -1);
}

TEST_CASE("relative operand is a signed offset from the call site") {
  auto values = filler(16);
  values[5] = 0x94000000 | 0x3FFFFFE;  // -2
  values[9] = 0x94000000;              // 0: self edge
  values[12] = 0x94000000 | 0x3FFFFFF; // -1
  values[0] = 0x94000000 | 0x3FFFFFF;  // -1 from index 0: before the stream
  values[15] = 0x94000000 | 0x1;       // +1 from the last index: past the end
  const auto edges = potential_edges_relative(stream_of(values, 0x4000), 0x94000000, kCall);
  REQUIRE(edges.size() == 3);
  CHECK(edges[0].callerIndex == 5);
  CHECK(edges[0].targetIndex == 3);
  CHECK(edges[1] == Edge{9, 9, 0x4009, 0x4009});
  CHECK(edges[2].targetIndex == 11);
}

TEST_CASE("relative offsets are in address units") {
  auto values = filler(16);
  values[2] = 0x94000000 | 4;  // +4 address units = +2 instructions at step 2
  values[3] = 0x94000000 | 3;  // lands between instructions
  const auto edges = potential_edges_relative(stream_of(values, 0, 2), 0x94000000, kCall);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].targetIndex == 4);
}

TEST_CASE("valid edges need a return within the window strictly above the target") {
  auto values = filler(16);
  values[8] = kRet;
  const auto s = stream_of(values);
  const std::vector<Edge> edges{{1, 10, 1, 10}, {1, 12, 1, 12}, {2, 0, 2, 0}, {3, 8, 3, 8},
                                {4, 9, 4, 9}};
  const auto kept = filter_valid_edges(s, edges, kRet, kRetSpec, 3);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].targetIndex == 10);  // return at 8 is within [7, 9]
  CHECK(kept[1].targetIndex == 9);
  // Target 8 itself holds the return: not "above" the target.
  CHECK(filter_valid_edges(s, std::vector<Edge>{{3, 8, 3, 8}}, kRet, kRetSpec, 3).empty());
  CHECK_THROWS_AS(filter_valid_edges(s, edges, kRet, kRetSpec, 0), Error);
}

TEST_CASE("a target at index 0 is never valid") {
  auto values = filler(4);
  values[0] = kRet;
  ReturnSiteIndex index(stream_of(values), kRet, kRetSpec);
  CHECK_FALSE(index.precedes(0, 3));
  CHECK(index.precedes(1, 1));
  CHECK(index.count() == 1);
}

TEST_CASE("planted layout: counts agree with an independent scan") {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 50; ++round) {
    std::vector<std::uint64_t> values(300);
    for (auto& v : values) v = rng() & 0xFFFFFFFF;
    std::size_t inRange = 0;
    for (std::size_t i = 0; i < values.size(); i += 7) {
      const bool hit = rng() % 2;
      const std::uint64_t operand = hit ? 0x100000 + rng() % values.size() : rng() % 0x100000;
      values[i] = kJal | operand;
      inRange += hit;
    }
    for (std::size_t i = 5; i < values.size(); i += 11) {
      if (i % 7 != 0) values[i] = kRet;
    }
    const auto s = stream_of(values, 0x100000);

    oracle::Setup setup;
    setup.values = values;
    setup.pcOffset = 0x100000;
    const auto expected = oracle::potential(setup, kJal);
    const auto edges = potential_edges_absolute(s, kJal, kCall);
    std::size_t noiseMatches = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i % 7 != 0 && (values[i] & 0xFC000000) == kJal) ++noiseMatches;
    }
    if (noiseMatches == 0) CHECK(edges.size() == inRange);
    REQUIRE(edges.size() == expected.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      REQUIRE(edges[k].callerIndex == expected[k].caller);
      REQUIRE(edges[k].targetIndex == expected[k].target);
    }
    for (std::size_t d = 1; d <= 5; ++d) {
      setup.distance = d;
      REQUIRE(filter_valid_edges(s, edges, kRet, kRetSpec, d).size() ==
              oracle::valid(setup, expected, kRet));
    }
  }
}

TEST_CASE("every edge into a return-preceded entry survives filtering") {
  // entry points at 4, 9, 14 ... each preceded by a return.
  std::vector<std::uint64_t> values(60, 0x24020001);
  std::vector<std::size_t> entries;
  for (std::size_t e = 4; e < values.size(); e += 5) {
    values[e - 1] = kRet;
    entries.push_back(e);
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    values[entries[k]] = kJal | (0x100000 + entries[(k + 3) % entries.size()]);
  }
  const auto s = stream_of(values, 0x100000);
  const auto edges = potential_edges_absolute(s, kJal, kCall);
  CHECK(edges.size() == entries.size());
  CHECK(filter_valid_edges(s, edges, kRet, kRetSpec, 1).size() == edges.size());
}

TEST_CASE("property: subset, translation and distance monotonicity") {
  std::mt19937_64 rng(8);
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 50 + rng() % 200;
    const std::uint64_t base = rng() % 0x10000;
    const std::uint64_t shift = rng() % 0x10000;
    std::vector<std::uint64_t> values(n), shifted(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = rng() % 10;
      if (r < 3) {
        const std::uint64_t index = rng() % (n + 10);
        values[i] = kJal | (base + index);
        shifted[i] = kJal | (base + shift + index);
      } else if (r < 5) {
        values[i] = shifted[i] = kRet;
      } else {
        values[i] = shifted[i] = 0x24020000 | (rng() & 0xFFFF);
      }
    }
    const auto a = potential_edges_absolute(stream_of(values, base), kJal, kCall);
    const auto b = potential_edges_absolute(stream_of(shifted, base + shift), kJal, kCall);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(a[k].callerIndex == b[k].callerIndex);
      REQUIRE(a[k].targetIndex == b[k].targetIndex);
    }

    // Relative edges do not depend on pcOffset.
    const auto rel1 = potential_edges_relative(stream_of(values, base), kJal, kCall);
    const auto rel2 = potential_edges_relative(stream_of(values, base + shift), kJal, kCall);
    REQUIRE(rel1.size() == rel2.size());
    for (std::size_t k = 0; k < rel1.size(); ++k) {
      REQUIRE(rel1[k].callerIndex == rel2[k].callerIndex);
      REQUIRE(rel1[k].targetIndex == rel2[k].targetIndex);
    }

    const auto s = stream_of(values, base);
    const ReturnSiteIndex returns(s, kRet, kRetSpec);
    std::vector<Edge> previous;
    for (std::size_t d = 1; d <= 8; ++d) {
      const auto kept = filter_valid_edges(returns, a, d);
      REQUIRE(kept.size() <= a.size());
      for (const auto& e : kept) REQUIRE(std::find(a.begin(), a.end(), e) != a.end());
      for (const auto& e : previous) REQUIRE(std::find(kept.begin(), kept.end(), e) != kept.end());
      previous = kept;
    }
  }
}
