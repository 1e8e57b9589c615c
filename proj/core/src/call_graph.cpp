#include "ocpscan/call_graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "ocpscan/error.hpp"
#include "ocpscan/hex.hpp"

namespace ocpscan {

std::size_t CallGraph::node_containing(std::size_t index) const {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), index,
                             [](std::size_t i, const FunctionNode& n) { return i < n.entryIndex; });
  if (it == nodes.begin()) throw Error("index precedes the first function");
  return static_cast<std::size_t>(std::distance(nodes.begin(), it) - 1);
}

CallGraph build_call_graph(const InstructionStream& stream, std::span<const Edge> validEdges,
                           bool includeInstructions) {
  if (stream.empty()) throw Error("cannot build a call graph of an empty stream");

  std::vector<std::size_t> entries{0};
  for (const Edge& e : validEdges) {
    if (e.targetIndex >= stream.size() || e.callerIndex >= stream.size()) {
      throw Error("edge index outside the instruction stream");
    }
    entries.push_back(e.targetIndex);
  }
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  CallGraph graph;
  graph.instructionLength = stream.instructionLength();
  graph.nodes.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    FunctionNode node;
    node.entryIndex = entries[k];
    node.endIndex = k + 1 < entries.size() ? entries[k + 1] : stream.size();
    node.entryAddress = stream.address(node.entryIndex);
    node.label = "function " + std::to_string(k);
    if (includeInstructions) {
      std::vector<InstructionListing> listing;
      listing.reserve(node.endIndex - node.entryIndex);
      for (std::size_t i = node.entryIndex; i < node.endIndex; ++i) {
        listing.push_back({stream.address(i), stream.value(i)});
      }
      node.instructions = std::move(listing);
    }
    graph.nodes.push_back(std::move(node));
  }

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  for (const Edge& e : validEdges) {
    const std::size_t from = graph.node_containing(e.callerIndex);
    const auto to = static_cast<std::size_t>(
        std::lower_bound(entries.begin(), entries.end(), e.targetIndex) - entries.begin());
    ++counts[{from, to}];
  }
  for (const auto& [key, n] : counts) graph.edges.push_back({key.first, key.second, n});
  return graph;
}

GraphFormat parse_graph_format(std::string_view text) {
  if (text == "dot") return GraphFormat::dot;
  if (text == "json") return GraphFormat::json;
  throw Error("unknown graph format \"" + std::string(text) + "\" (expected dot or json)");
}

namespace {

std::string to_dot(const CallGraph& graph) {
  std::ostringstream out;
  out << "digraph callgraph {\n";
  out << "  node [shape=box];\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    out << "  n" << i << " [label=\"" << n.label << "\", tooltip=\"" << to_hex(n.entryAddress)
        << "\"];\n";
  }
  for (const auto& e : graph.edges) {
    out << "  n" << e.from << " -> n" << e.to << " [weight=" << e.multiplicity << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace

std::string export_graph(const CallGraph& graph, GraphFormat format) {
  return format == GraphFormat::dot ? to_dot(graph) : to_json(graph).dump(2);
}

std::string export_graph(const CallGraph& graph, std::string_view format) {
  return export_graph(graph, parse_graph_format(format));
}

nlohmann::json to_json(const CallGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::json node = {
        {"label", n.label},
        {"entryAddress", to_hex(n.entryAddress)},
        {"entryIndex", n.entryIndex},
        {"endIndex", n.endIndex},
    };
    if (n.instructions) {
      nlohmann::json listing = nlohmann::json::array();
      for (const auto& ins : *n.instructions) {
        listing.push_back({{"address", to_hex(ins.address)},
                           {"value", to_hex(ins.value, graph.instructionLength)}});
      }
      node["instructions"] = std::move(listing);
    }
    nodes.push_back(std::move(node));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"multiplicity", e.multiplicity}});
  }
  return {{"instructionLength", graph.instructionLength}, {"nodes", nodes}, {"edges", edges}};
}

CallGraph call_graph_from_json(const nlohmann::json& object) {
  CallGraph graph;
  try {
    graph.instructionLength = object.value("instructionLength", 0u);
    for (const auto& n : object.at("nodes")) {
      FunctionNode node;
      node.label = n.at("label").get<std::string>();
      node.entryAddress = parse_uint(n.at("entryAddress").get<std::string>());
      node.entryIndex = n.at("entryIndex").get<std::size_t>();
      node.endIndex = n.at("endIndex").get<std::size_t>();
      if (auto it = n.find("instructions"); it != n.end()) {
        std::vector<InstructionListing> listing;
        for (const auto& ins : *it) {
          listing.push_back({parse_uint(ins.at("address").get<std::string>()),
                             parse_uint(ins.at("value").get<std::string>())});
        }
        node.instructions = std::move(listing);
      }
      graph.nodes.push_back(std::move(node));
    }
    for (const auto& e : object.at("edges")) {
      graph.edges.push_back({e.at("from").get<std::size_t>(), e.at("to").get<std::size_t>(),
                             e.at("multiplicity").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("malformed call graph JSON: ") + ex.what());
  }
  for (const auto& e : graph.edges) {
    if (e.from >= graph.nodes.size() || e.to >= graph.nodes.size() || e.multiplicity == 0) {
      throw Error("malformed call graph JSON: edge endpoint out of range");
    }
  }
  return graph;
}

}  // namespace ocpscan
