#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ocpscan/candidates.hpp"
#include "ocpscan/instruction_stream.hpp"

namespace ocpscan {

/// Register-addressed calls are not representable.
enum class AddressingMode { absolute, relative };

std::string_view to_string(AddressingMode mode);

/// A call site and the instruction its operand resolves to.
struct Edge {
  std::size_t callerIndex = 0;
  std::size_t targetIndex = 0;
  std::uint64_t callerAddress = 0;
  std::uint64_t targetAddress = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Index of the instruction at `address`, if one exists in the stream.
std::optional<std::size_t> index_of_address(const InstructionStream& stream,
                                            std::uint64_t address) noexcept;

/// Two's-complement reinterpretation of the low `bits` bits (1..64).
std::int64_t sign_extend(std::uint64_t value, unsigned bits) noexcept;

/// Call sites matching `callOpcode` whose operand, read as an address,
/// names an instruction of the stream.
std::vector<Edge> potential_edges_absolute(const InstructionStream& stream,
                                           std::uint64_t callOpcode,
                                           const OpcodeMaskSpec& spec);

/// Call sites matching `callOpcode` whose signed operand, added to the
/// call site's address, names an instruction of the stream. A zero
/// operand yields a self edge.
std::vector<Edge> potential_edges_relative(const InstructionStream& stream,
                                           std::uint64_t callOpcode,
                                           const OpcodeMaskSpec& spec);

std::vector<Edge> potential_edges(const InstructionStream& stream, std::uint64_t callOpcode,
                                  const OpcodeMaskSpec& spec, AddressingMode mode);

/// Prefix counts of instructions whose masked value equals a return
/// opcode, answering "is there a return in [lo, hi]" in constant time.
class ReturnSiteIndex {
 public:
  ReturnSiteIndex(const InstructionStream& stream, std::uint64_t retOpcode,
                  const OpcodeMaskSpec& retSpec);

  /// True if some return instruction lies in the window of `distance`
  /// instructions strictly above `targetIndex`.
  bool precedes(std::size_t targetIndex, std::size_t distance) const noexcept;

  std::size_t count() const noexcept { return prefix_.back(); }

 private:
  std::vector<std::uint32_t> prefix_;
};

/// Edges whose target has a `retOpcode` instruction within `distance`
/// instructions above it. An edge into index 0 is never kept.
std::vector<Edge> filter_valid_edges(const InstructionStream& stream, std::span<const Edge> edges,
                                     std::uint64_t retOpcode, const OpcodeMaskSpec& retSpec,
                                     std::size_t distance);

std::vector<Edge> filter_valid_edges(const ReturnSiteIndex& returns, std::span<const Edge> edges,
                                     std::size_t distance);

std::size_t count_valid_edges(const ReturnSiteIndex& returns, std::span<const Edge> edges,
                              std::size_t distance) noexcept;

}  // namespace ocpscan
