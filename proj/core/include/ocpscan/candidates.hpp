#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ocpscan/instruction_stream.hpp"

namespace ocpscan {

/// The opcode occupies the most significant `opcodeLength` bits of an
/// `instructionLength`-bit instruction; the rest is operand.
struct OpcodeMaskSpec {
  unsigned opcodeLength = 0;
  unsigned instructionLength = 0;

  /// Throws ocpscan::Error unless 1 <= opcodeLength <= instructionLength <= 64.
  void validate() const;

  unsigned operandBits() const noexcept { return instructionLength - opcodeLength; }
  std::uint64_t operandMask() const noexcept {
    return operandBits() == 0 ? 0 : (~std::uint64_t{0} >> (64 - operandBits()));
  }
  std::uint64_t opcodeMask() const noexcept {
    return widthMask() & ~operandMask();
  }
  std::uint64_t widthMask() const noexcept {
    return ~std::uint64_t{0} >> (64 - instructionLength);
  }
};

/// Instruction value with all operand bits cleared.
inline std::uint64_t mask_opcode(std::uint64_t instruction, const OpcodeMaskSpec& spec) noexcept {
  return instruction & spec.opcodeMask();
}

/// Low operandBits() of the instruction. Throws ocpscan::Error for an
/// operand-free opcode (opcodeLength == instructionLength).
std::uint64_t extract_operand(std::uint64_t instruction, const OpcodeMaskSpec& spec);

struct OpcodeCandidate {
  std::uint64_t canonicalValue = 0;
  std::size_t frequency = 0;
  std::size_t rank = 0;

  friend bool operator==(const OpcodeCandidate&, const OpcodeCandidate&) = default;
};

/// Half-open rank window [start, end).
struct CandidateRange {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const CandidateRange&, const CandidateRange&) = default;
};

/// Masked values of the stream ordered by descending frequency, ties by
/// ascending value, restricted to ranks [range.start, range.end). Ranks past
/// the number of distinct values are simply absent.
std::vector<OpcodeCandidate> rank_candidates(const InstructionStream& stream,
                                             const OpcodeMaskSpec& spec,
                                             const CandidateRange& range);

}  // namespace ocpscan
