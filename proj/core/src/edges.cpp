#include "ocpscan/edges.hpp"

#include <algorithm>
#include <limits>

#include "ocpscan/error.hpp"

namespace ocpscan {

std::string_view to_string(AddressingMode mode) {
  return mode == AddressingMode::absolute ? "absolute" : "relative";
}

std::optional<std::size_t> index_of_address(const InstructionStream& stream,
                                            std::uint64_t address) noexcept {
  if (address < stream.pcOffset()) return std::nullopt;
  const std::uint64_t delta = address - stream.pcOffset();
  if (delta % stream.pcIncPerInstr() != 0) return std::nullopt;
  const std::uint64_t index = delta / stream.pcIncPerInstr();
  if (index >= stream.size()) return std::nullopt;
  return static_cast<std::size_t>(index);
}

std::int64_t sign_extend(std::uint64_t value, unsigned bits) noexcept {
  if (bits >= 64) return static_cast<std::int64_t>(value);
  const std::uint64_t sign = std::uint64_t{1} << (bits - 1);
  value &= (sign << 1) - 1;
  return static_cast<std::int64_t>((value ^ sign) - sign);
}

namespace {

void require_operand(const OpcodeMaskSpec& spec) {
  spec.validate();
  if (spec.operandBits() == 0) {
    throw Error("call opcode length must leave operand bits for a target");
  }
}

template <typename Resolve>
std::vector<Edge> collect_edges(const InstructionStream& stream, std::uint64_t callOpcode,
                                const OpcodeMaskSpec& spec, Resolve&& resolve) {
  const std::uint64_t opMask = spec.opcodeMask();
  const std::uint64_t operandMask = spec.operandMask();
  const auto values = stream.values();
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if ((values[i] & opMask) != callOpcode) continue;
    const std::uint64_t callerAddress = stream.address(i);
    if (auto target = resolve(callerAddress, values[i] & operandMask)) {
      if (auto index = index_of_address(stream, *target)) {
        edges.push_back({i, *index, callerAddress, *target});
      }
    }
  }
  return edges;
}

}  // namespace

std::vector<Edge> potential_edges_absolute(const InstructionStream& stream,
                                           std::uint64_t callOpcode,
                                           const OpcodeMaskSpec& spec) {
  require_operand(spec);
  return collect_edges(stream, callOpcode, spec,
                       [](std::uint64_t, std::uint64_t operand) -> std::optional<std::uint64_t> {
                         return operand;
                       });
}

std::vector<Edge> potential_edges_relative(const InstructionStream& stream,
                                           std::uint64_t callOpcode,
                                           const OpcodeMaskSpec& spec) {
  require_operand(spec);
  const unsigned bits = spec.operandBits();
  return collect_edges(
      stream, callOpcode, spec,
      [bits](std::uint64_t caller, std::uint64_t operand) -> std::optional<std::uint64_t> {
        const std::int64_t offset = sign_extend(operand, bits);
        const std::uint64_t magnitude =
            offset < 0 ? std::uint64_t{0} - static_cast<std::uint64_t>(offset)
                       : static_cast<std::uint64_t>(offset);
        if (offset < 0) {
          if (magnitude > caller) return std::nullopt;
          return caller - magnitude;
        }
        if (magnitude > std::numeric_limits<std::uint64_t>::max() - caller) return std::nullopt;
        return caller + magnitude;
      });
}

std::vector<Edge> potential_edges(const InstructionStream& stream, std::uint64_t callOpcode,
                                  const OpcodeMaskSpec& spec, AddressingMode mode) {
  return mode == AddressingMode::absolute ? potential_edges_absolute(stream, callOpcode, spec)
                                          : potential_edges_relative(stream, callOpcode, spec);
}

ReturnSiteIndex::ReturnSiteIndex(const InstructionStream& stream, std::uint64_t retOpcode,
                                 const OpcodeMaskSpec& retSpec) {
  retSpec.validate();
  if (stream.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error("stream too large for return site index");
  }
  const std::uint64_t mask = retSpec.opcodeMask();
  const auto values = stream.values();
  prefix_.resize(values.size() + 1);
  prefix_[0] = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    prefix_[i + 1] = prefix_[i] + ((values[i] & mask) == retOpcode ? 1u : 0u);
  }
}

bool ReturnSiteIndex::precedes(std::size_t targetIndex, std::size_t distance) const noexcept {
  if (targetIndex == 0 || targetIndex >= prefix_.size()) return false;
  const std::size_t lo = targetIndex > distance ? targetIndex - distance : 0;
  // Window [lo, targetIndex - 1] in instruction indices.
  return prefix_[targetIndex] - prefix_[lo] > 0;
}

std::vector<Edge> filter_valid_edges(const ReturnSiteIndex& returns, std::span<const Edge> edges,
                                     std::size_t distance) {
  if (distance == 0) throw Error("returnToFunctionPrologueDistance must be at least 1");
  std::vector<Edge> kept;
  for (const Edge& e : edges) {
    if (returns.precedes(e.targetIndex, distance)) kept.push_back(e);
  }
  return kept;
}

std::vector<Edge> filter_valid_edges(const InstructionStream& stream, std::span<const Edge> edges,
                                     std::uint64_t retOpcode, const OpcodeMaskSpec& retSpec,
                                     std::size_t distance) {
  return filter_valid_edges(ReturnSiteIndex(stream, retOpcode, retSpec), edges, distance);
}

std::size_t count_valid_edges(const ReturnSiteIndex& returns, std::span<const Edge> edges,
                              std::size_t distance) noexcept {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [&](const Edge& e) {
    return returns.precedes(e.targetIndex, distance);
  }));
}

}  // namespace ocpscan
