#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocpscan/candidates.hpp"
#include "ocpscan/edges.hpp"
#include "ocpscan/error.hpp"
#include "ocpscan/instruction_stream.hpp"

namespace ocpscan {

/// Everything that controls one analysis run. Field names follow the
/// public API (CLI flags, JSON keys).
struct AnalysisParams {
  unsigned instructionLength = 0;
  unsigned retOpcodeLength = 0;
  unsigned callOpcodeLength = 0;
  std::uint64_t fileOffset = 0;
  std::optional<std::uint64_t> fileOffsetEnd;  // unset: end of file
  std::uint64_t pcOffset = 0;
  std::uint64_t pcIncPerInstr = 1;
  Endianness endianness = Endianness::big;
  std::size_t nrCandidates = 5;
  CandidateRange callCandidateRange{0, 20};
  CandidateRange retCandidateRange{0, 10};
  std::size_t returnToFunctionPrologueDistance = 3;
  bool unknownCodeEntry = false;
  bool includeInstructions = false;
  bool isRelativeAddressing = false;

  OpcodeMaskSpec callSpec() const noexcept { return {callOpcodeLength, instructionLength}; }
  OpcodeMaskSpec retSpec() const noexcept { return {retOpcodeLength, instructionLength}; }
  DecodeLayout layout() const noexcept {
    return {instructionLength, endianness, pcOffset, pcIncPerInstr};
  }
  AddressingMode addressing() const noexcept {
    return isRelativeAddressing ? AddressingMode::relative : AddressingMode::absolute;
  }
  /// Region with an unset fileOffsetEnd resolved to `imageSize`.
  CodeRegion region(std::size_t imageSize) const noexcept {
    return {static_cast<std::size_t>(fileOffset),
            static_cast<std::size_t>(fileOffsetEnd.value_or(imageSize))};
  }

  friend bool operator==(const AnalysisParams&, const AnalysisParams&) = default;
};

/// Field-level problems that do not depend on the image. Empty when valid.
std::vector<FieldError> check_params(const AnalysisParams& params);

/// Same as check_params plus the region bounds against an image size.
std::vector<FieldError> check_params(const AnalysisParams& params, std::size_t imageSize);

/// Throws ValidationError if check_params reports anything.
void validate(const AnalysisParams& params);
void validate(const AnalysisParams& params, std::size_t imageSize);

/// Which fields may be omitted when reading parameters.
enum class ParamProfile {
  /// Only the three opcode/instruction lengths are required.
  defaulted,
  /// Every field is required; fileOffset/fileOffsetEnd may be omitted
  /// only when unknownCodeEntry is set.
  strict,
};

/// Reads parameters from a JSON object with the API field names.
/// Integers may be JSON numbers or strings in decimal or 0x-hex; ranges
/// are two-element arrays or "start,end" strings; "endiannes" and
/// "endianness" are both accepted. Unknown keys are rejected. Every problem
/// found is reported in a single ValidationError.
AnalysisParams params_from_json(const nlohmann::json& object,
                                ParamProfile profile = ParamProfile::defaulted);

nlohmann::json to_json(const AnalysisParams& params);

}  // namespace ocpscan
