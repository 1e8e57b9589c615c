#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocpscan/edges.hpp"
#include "ocpscan/instruction_stream.hpp"

namespace ocpscan {

struct InstructionListing {
  std::uint64_t address = 0;
  std::uint64_t value = 0;

  friend bool operator==(const InstructionListing&, const InstructionListing&) = default;
};

struct FunctionNode {
  std::uint64_t entryAddress = 0;
  std::size_t entryIndex = 0;
  std::size_t endIndex = 0;  // exclusive
  std::string label;
  std::optional<std::vector<InstructionListing>> instructions;

  friend bool operator==(const FunctionNode&, const FunctionNode&) = default;
};

struct GraphEdge {
  std::size_t from = 0;  // node index
  std::size_t to = 0;
  std::size_t multiplicity = 1;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct CallGraph {
  std::vector<FunctionNode> nodes;
  std::vector<GraphEdge> edges;  // sorted by (from, to), no duplicates
  // Width used when printing instruction values; 0 for "unpadded".
  unsigned instructionLength = 0;

  /// Node whose span contains `index`.
  std::size_t node_containing(std::size_t index) const;

  friend bool operator==(const CallGraph&, const CallGraph&) = default;
};

/// Function-level graph implied by a set of valid edges.
///
/// Function entries are index 0 plus every distinct edge target; each
/// function spans up to the next entry. A call is attributed to the
/// function whose span holds the call site. Functions never targeted by a
/// valid edge are absorbed by the function before them. Parallel calls
/// collapse into one edge with a multiplicity.
CallGraph build_call_graph(const InstructionStream& stream, std::span<const Edge> validEdges,
                           bool includeInstructions);

enum class GraphFormat { dot, json };

/// Accepts "dot" or "json"; throws ocpscan::Error otherwise.
GraphFormat parse_graph_format(std::string_view text);

std::string export_graph(const CallGraph& graph, GraphFormat format);

/// Accepts "dot" or "json"; throws ocpscan::Error on anything else.
std::string export_graph(const CallGraph& graph, std::string_view format);

nlohmann::json to_json(const CallGraph& graph);
CallGraph call_graph_from_json(const nlohmann::json& object);

}  // namespace ocpscan
