#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocpscan/edges.hpp"
#include "ocpscan/instruction_stream.hpp"
#include "ocpscan/params.hpp"

namespace ocpscan {

struct CountRange {
  std::size_t min = 0;
  std::size_t max = 0;
};

/// Description of a synthetic fixed-width program with known call and
/// return opcodes.
struct SynthSpec {
  unsigned instructionLength = 32;
  unsigned callOpcodeLength = 6;
  unsigned retOpcodeLength = 32;
  std::uint64_t callOpcode = 0x0C000000;
  std::uint64_t retOpcode = 0x03E00008;
  std::size_t functionCount = 8;
  CountRange callsPerFunction{1, 3};
  /// Filler instructions between a return and the next function entry.
  CountRange epiloguePadding{0, 0};
  /// Leading functions (function 0 included) that are never called.
  std::size_t uncalledLeadingFunctions = 1;
  AddressingMode addressing = AddressingMode::absolute;
  std::uint64_t pcOffset = 0x100000;
  std::uint64_t pcIncPerInstr = 1;
  /// Expected fraction of random filler among all code instructions.
  double noiseRatio = 0.0;
  Endianness endianness = Endianness::big;
  std::uint64_t seed = 1;
  /// Random bytes before and after the code, in whole instructions.
  std::size_t leadingJunkInstructions = 0;
  std::size_t trailingJunkInstructions = 0;
};

struct GroundTruth {
  std::vector<std::size_t> functionEntries;
  std::vector<Edge> plantedEdges;
  /// Decodes exactly the planted code, with the planted call/return
  /// opcode lengths and a prologue distance that covers the padding.
  AnalysisParams params;
  std::vector<std::uint64_t> instructions;
  std::size_t callCount = 0;
  std::uint64_t callOpcode = 0;
  std::uint64_t retOpcode = 0;
};

struct SynthBinary {
  BinaryImage image;
  GroundTruth truth;
};

/// Deterministic in spec.seed. Every function ends in a return, every
/// function after the uncalled prefix is called at least once, and filler
/// never matches either planted opcode under its mask. Throws
/// ocpscan::Error if the spec is inconsistent or operands are too narrow
/// to reach every function.
SynthBinary generate(const SynthSpec& spec);

nlohmann::json to_json(const GroundTruth& truth);

/// Writes `path` and a `path`.truth.json sidecar.
void write_synth(const SynthBinary& binary, const std::filesystem::path& path);

}  // namespace ocpscan
