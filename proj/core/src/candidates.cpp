#include "ocpscan/candidates.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "ocpscan/error.hpp"

namespace ocpscan {

void OpcodeMaskSpec::validate() const {
  if (instructionLength == 0 || instructionLength > 64) {
    throw Error("instruction length must be between 1 and 64 bits");
  }
  if (opcodeLength == 0 || opcodeLength > instructionLength) {
    throw Error("opcode length " + std::to_string(opcodeLength) + " outside [1, " +
                std::to_string(instructionLength) + "]");
  }
}

std::uint64_t extract_operand(std::uint64_t instruction, const OpcodeMaskSpec& spec) {
  if (spec.operandBits() == 0) throw Error("operand-free opcode: no operand bits to extract");
  return instruction & spec.operandMask();
}

std::vector<OpcodeCandidate> rank_candidates(const InstructionStream& stream,
                                             const OpcodeMaskSpec& spec,
                                             const CandidateRange& range) {
  spec.validate();
  if (stream.empty()) throw Error("cannot rank candidates of an empty stream");

  std::unordered_map<std::uint64_t, std::size_t> counts;
  const std::uint64_t mask = spec.opcodeMask();
  for (std::uint64_t v : stream.values()) ++counts[v & mask];

  std::vector<OpcodeCandidate> ranked;
  ranked.reserve(counts.size());
  for (const auto& [value, count] : counts) ranked.push_back({value, count, 0});
  const std::size_t end = std::min(range.end, ranked.size());
  if (range.start >= end) return {};
  auto order = [](const OpcodeCandidate& a, const OpcodeCandidate& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.canonicalValue < b.canonicalValue;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(end),
                    ranked.end(), order);
  ranked.resize(end);
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i;
  ranked.erase(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(range.start));
  return ranked;
}

}  // namespace ocpscan
