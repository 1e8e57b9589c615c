#include <doctest.h>

#include <random>

#include "ocpscan/call_graph.hpp"
#include "ocpscan/error.hpp"
#include "ocpscan/scorer.hpp"
#include "ocpscan/synthgen.hpp"

using namespace ocpscan;

namespace {

InstructionStream plain(std::size_t n, std::uint64_t pcOffset = 0x100000) {
  return InstructionStream(std::vector<std::uint64_t>(n, 0x24020001),
                           {32, Endianness::big, pcOffset, 1});
}

Edge edge(const InstructionStream& s, std::size_t from, std::size_t to) {
  return {from, to, s.address(from), s.address(to)};
}

}  // namespace

TEST_CASE("one call splits the stream into two functions") {
  const auto s = plain(40);
  const std::vector<Edge> edges{edge(s, 5, 20)};
  const auto g = build_call_graph(s, edges, false);
  REQUIRE(g.nodes.size() == 2);
  CHECK(g.nodes[0].entryIndex == 0);
  CHECK(g.nodes[0].endIndex == 20);
  CHECK(g.nodes[1].entryIndex == 20);
  CHECK(g.nodes[1].endIndex == 40);
  CHECK(g.nodes[1].entryAddress == 0x100014);
  CHECK(g.nodes[0].label == "function 0");
  CHECK(g.nodes[1].label == "function 1");
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0] == GraphEdge{0, 1, 1});
  CHECK_FALSE(g.nodes[0].instructions.has_value());
}

TEST_CASE("parallel calls collapse with a multiplicity") {
  const auto s = plain(40);
  const std::vector<Edge> edges{edge(s, 5, 20), edge(s, 9, 20), edge(s, 25, 20), edge(s, 30, 0)};
  const auto g = build_call_graph(s, edges, false);
  REQUIRE(g.nodes.size() == 2);
  REQUIRE(g.edges.size() == 3);
  CHECK(g.edges[0] == GraphEdge{0, 1, 2});
  CHECK(g.edges[1] == GraphEdge{1, 0, 1});
  CHECK(g.edges[2] == GraphEdge{1, 1, 1});
}

TEST_CASE("no edges gives a single function") {
  const auto g = build_call_graph(plain(10), {}, true);
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0].endIndex == 10);
  CHECK(g.edges.empty());
  REQUIRE(g.nodes[0].instructions.has_value());
  CHECK(g.nodes[0].instructions->size() == 10);
  CHECK(g.nodes[0].instructions->at(3) == InstructionListing{0x100003, 0x24020001});
}

TEST_CASE("empty streams and out-of-range edges are rejected") {
  const InstructionStream empty({}, {32, Endianness::big, 0, 1});
  CHECK_THROWS_AS(build_call_graph(empty, {}, false), Error);
  const auto s = plain(4);
  const std::vector<Edge> bad{{1, 9, 1, 9}};
  CHECK_THROWS_AS(build_call_graph(s, bad, false), Error);
}

TEST_CASE("functions never called are absorbed by the function above them") {
  // Six real functions of ten instructions each; only the last is called.
  std::vector<std::uint64_t> values(60, 0x24020001);
  for (std::size_t f = 0; f < 6; ++f) values[f * 10 + 9] = 0x03E00008;
  values[2] = 0x0C000000 | 50;
  const InstructionStream s(values, {32, Endianness::big, 0, 1});
  AnalysisParams p;
  p.instructionLength = 32;
  p.callOpcodeLength = 6;
  p.retOpcodeLength = 32;
  p.returnToFunctionPrologueDistance = 1;
  const auto valid = valid_edges_for(s, p, 0x0C000000, 0x03E00008);
  const auto g = build_call_graph(s, valid, false);
  REQUIRE(g.nodes.size() == 2);
  CHECK(g.nodes[0].endIndex == 50);
  CHECK(g.nodes[1].entryIndex == 50);
  CHECK(g.edges == std::vector<GraphEdge>{{0, 1, 1}});
}

TEST_CASE("DOT output") {
  const auto s = plain(40);
  const std::vector<Edge> edges{edge(s, 5, 20), edge(s, 6, 20)};
  const auto dot = export_graph(build_call_graph(s, edges, false), "dot");
  CHECK(dot ==
        "digraph callgraph {\n"
        "  node [shape=box];\n"
        "  n0 [label=\"function 0\", tooltip=\"0x100000\"];\n"
        "  n1 [label=\"function 1\", tooltip=\"0x100014\"];\n"
        "  n0 -> n1 [weight=2];\n"
        "}\n");
  CHECK_THROWS_AS(export_graph(build_call_graph(s, edges, false), "svg"), Error);
}

TEST_CASE("JSON round trip") {
  const auto s = plain(40);
  const std::vector<Edge> edges{edge(s, 5, 20), edge(s, 33, 12)};
  for (bool listing : {false, true}) {
    const auto g = build_call_graph(s, edges, listing);
    const auto j = to_json(g);
    CHECK(j.at("nodes").size() == 3);
    CHECK(call_graph_from_json(j) == g);
    CHECK(call_graph_from_json(nlohmann::json::parse(export_graph(g, GraphFormat::json))) == g);
  }
  CHECK_THROWS_AS(call_graph_from_json(nlohmann::json::object()), Error);
}

TEST_CASE("property: nodes partition the stream and multiplicities sum to the edge count") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + rng() % 300;
    const auto s = plain(n);
    std::vector<Edge> edges(rng() % 50);
    for (auto& e : edges) e = edge(s, rng() % n, rng() % n);
    const auto g = build_call_graph(s, edges, false);
    REQUIRE(g.nodes.front().entryIndex == 0);
    REQUIRE(g.nodes.back().endIndex == n);
    for (std::size_t k = 0; k + 1 < g.nodes.size(); ++k) {
      REQUIRE(g.nodes[k].endIndex == g.nodes[k + 1].entryIndex);
      REQUIRE(g.nodes[k].entryIndex < g.nodes[k].endIndex);
    }
    std::size_t total = 0;
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      total += g.edges[k].multiplicity;
      if (k > 0) {
        REQUIRE(std::pair(g.edges[k - 1].from, g.edges[k - 1].to) <
                std::pair(g.edges[k].from, g.edges[k].to));
      }
    }
    REQUIRE(total == edges.size());
    for (const auto& e : edges) {
      const auto from = g.node_containing(e.callerIndex);
      REQUIRE(g.nodes[from].entryIndex <= e.callerIndex);
      REQUIRE(e.callerIndex < g.nodes[from].endIndex);
    }
  }
}

TEST_CASE("graph of planted edges matches the planted function structure") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.functionCount = 3 + seed % 20;
    const auto bin = generate(spec);
    const InstructionStream s(bin.truth.instructions, bin.truth.params.layout());
    const auto g = build_call_graph(s, bin.truth.plantedEdges, false);
    const auto& entries = bin.truth.functionEntries;
    REQUIRE(g.nodes.size() == entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) REQUIRE(g.nodes[k].entryIndex == entries[k]);
  }
}
