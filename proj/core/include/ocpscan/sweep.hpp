#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocpscan/instruction_stream.hpp"
#include "ocpscan/params.hpp"
#include "ocpscan/scorer.hpp"

namespace ocpscan {

enum class SweepParameter {
  instructionLength,
  callOpcodeLength,
  retOpcodeLength,
  pcOffset,
  returnToFunctionPrologueDistance,
};

std::string_view to_string(SweepParameter parameter);
SweepParameter parse_sweep_parameter(std::string_view name);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::pcOffset;
  std::vector<std::uint64_t> values;
  std::size_t topN = 1;
};

struct SweepPoint {
  std::uint64_t value = 0;
  unsigned instructionLength = 0;  // width the point was decoded at
  std::vector<CandidatePair> best;
  std::vector<FieldError> errors;  // non-empty when the value was rejected

  bool ok() const noexcept { return errors.empty(); }
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::pcOffset;
  std::size_t topN = 1;
  std::vector<SweepPoint> points;  // one per value, in input order
};

/// `base` with one parameter replaced. When sweeping instructionLength, an
/// opcode length equal to the base width (a full-width opcode) follows the
/// new width.
AnalysisParams apply_sweep_value(const AnalysisParams& base, SweepParameter parameter,
                                 std::uint64_t value);

/// Independent analysis per value; invalid values are reported on their
/// point and do not stop the sweep.
SweepResult run_sweep(const BinaryImage& image, const AnalysisParams& base, const SweepSpec& spec,
                      const ScoreOptions& options = {});

/// Columns value,rank,score,callOpcode,retOpcode. A rejected value yields
/// one row with the remaining columns empty.
std::string sweep_to_csv(const SweepResult& result);
nlohmann::json to_json(const SweepResult& result);

/// {"parameter": name, "values": [...], "topN": n}; values may be hex strings.
SweepSpec sweep_spec_from_json(const nlohmann::json& object);

struct RegionCandidate {
  CodeRegion region;
  CandidatePair best;
};

/// Smallest region the search considers, in instructions.
inline constexpr std::size_t kMinRegionInstructions = 64;

/// Coarse step used by analyze() for unknownCodeEntry: about 32 cells per
/// axis, rounded up to a whole number of instructions.
std::size_t default_region_granularity(std::size_t imageSize, unsigned instructionLength);

/// Searches [fileOffset, fileOffsetEnd) pairs for the region with the best
/// OCP-Score. Starts and ends are first taken on a `stepGranularity` grid
/// (the file end is always a candidate end); the best cells are then
/// refined level by level down to instruction granularity. The result
/// lists every evaluated region, best first, ordered by score, then valid
/// edge count (descending), then region size and start (ascending).
std::vector<RegionCandidate> search_code_region(const BinaryImage& image,
                                                const AnalysisParams& base,
                                                std::size_t stepGranularity,
                                                const ScoreOptions& options = {});

nlohmann::json to_json(const RegionCandidate& candidate, unsigned instructionLength);

}  // namespace ocpscan
