#include "ocpscan/params.hpp"

#include <array>
#include <limits>
#include <string>
#include <string_view>

#include "ocpscan/hex.hpp"

namespace ocpscan {

using nlohmann::json;

namespace {

void check_range(std::vector<FieldError>& errors, const char* field, const CandidateRange& r) {
  if (r.start >= r.end) errors.push_back({field, "start must be smaller than end"});
}

}  // namespace

std::vector<FieldError> check_params(const AnalysisParams& p) {
  std::vector<FieldError> errors;
  const bool widthOk = p.instructionLength >= 8 && p.instructionLength <= 64 &&
                       p.instructionLength % 8 == 0;
  if (!widthOk) {
    errors.push_back({"instructionLength", "must be a multiple of 8 between 8 and 64"});
  }
  if (p.callOpcodeLength == 0) {
    errors.push_back({"callOpcodeLength", "must be at least 1"});
  } else if (widthOk && p.callOpcodeLength >= p.instructionLength) {
    errors.push_back({"callOpcodeLength",
                      "must be smaller than instructionLength (a call needs operand bits)"});
  }
  if (p.retOpcodeLength == 0) {
    errors.push_back({"retOpcodeLength", "must be at least 1"});
  } else if (widthOk && p.retOpcodeLength > p.instructionLength) {
    errors.push_back({"retOpcodeLength", "must not exceed instructionLength"});
  }
  if (p.fileOffsetEnd && *p.fileOffsetEnd <= p.fileOffset && !p.unknownCodeEntry) {
    errors.push_back({"fileOffsetEnd", "must be greater than fileOffset"});
  }
  if (p.pcIncPerInstr == 0) errors.push_back({"pcIncPerInstr", "must be at least 1"});
  if (p.nrCandidates == 0) errors.push_back({"nrCandidates", "must be at least 1"});
  check_range(errors, "callCandidateRange", p.callCandidateRange);
  check_range(errors, "retCandidateRange", p.retCandidateRange);
  if (p.returnToFunctionPrologueDistance == 0) {
    errors.push_back({"returnToFunctionPrologueDistance", "must be at least 1"});
  }
  return errors;
}

std::vector<FieldError> check_params(const AnalysisParams& p, std::size_t imageSize) {
  auto errors = check_params(p);
  if (!errors.empty() || p.unknownCodeEntry) return errors;
  const CodeRegion region = p.region(imageSize);
  if (region.fileOffsetEnd > imageSize) {
    errors.push_back({"fileOffsetEnd",
                      "exceeds image size of " + std::to_string(imageSize) + " bytes"});
    return errors;
  }
  if (region.fileOffset >= region.fileOffsetEnd) {
    errors.push_back({"fileOffset", "must be smaller than the end of the code region"});
    return errors;
  }
  const std::uint64_t count = region.size() / (p.instructionLength / 8);
  if (count == 0) {
    errors.push_back({"fileOffsetEnd", "code region is smaller than one instruction"});
  } else if (count > 1 && p.pcIncPerInstr > (std::numeric_limits<std::uint64_t>::max() -
                                              p.pcOffset) / (count - 1)) {
    errors.push_back({"pcOffset", "address of the last instruction exceeds 2^64-1"});
  }
  return errors;
}

void validate(const AnalysisParams& params) {
  if (auto errors = check_params(params); !errors.empty()) throw ValidationError(std::move(errors));
}

void validate(const AnalysisParams& params, std::size_t imageSize) {
  if (auto errors = check_params(params, imageSize); !errors.empty()) {
    throw ValidationError(std::move(errors));
  }
}

namespace {

class Reader {
 public:
  Reader(const json& object, ParamProfile profile) : object_(object), profile_(profile) {}

  std::vector<FieldError>& errors() { return errors_; }

  const json* find(std::string_view key, bool optionalInStrict = false) {
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) {
      if (profile_ == ParamProfile::strict && !optionalInStrict) missing(key);
      return nullptr;
    }
    return &*it;
  }

  void missing(std::string_view key) { errors_.push_back({std::string(key), "is required"}); }

  template <typename T>
  void integer(std::string_view key, T& out, bool required = false) {
    const json* v = find(key);
    if (!v) {
      if (required && profile_ != ParamProfile::strict) missing(key);
      return;
    }
    if (auto parsed = as_uint(key, *v)) {
      if (*parsed > std::numeric_limits<T>::max()) {
        errors_.push_back({std::string(key), "value too large"});
      } else {
        out = static_cast<T>(*parsed);
      }
    }
  }

  void optionalInteger(std::string_view key, std::optional<std::uint64_t>& out,
                       bool optionalInStrict) {
    const json* v = find(key, optionalInStrict);
    if (!v) return;
    if (auto parsed = as_uint(key, *v)) out = *parsed;
  }

  void flag(std::string_view key, bool& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_boolean()) {
      errors_.push_back({std::string(key), "must be true or false"});
      return;
    }
    out = v->get<bool>();
  }

  void range(std::string_view key, CandidateRange& out) {
    const json* v = find(key);
    if (!v) return;
    std::optional<std::uint64_t> start, end;
    if (v->is_array() && v->size() == 2) {
      start = as_uint(key, (*v)[0]);
      end = as_uint(key, (*v)[1]);
    } else if (v->is_string()) {
      const auto text = v->get<std::string>();
      const auto comma = text.find_first_of(",:");
      if (comma == std::string::npos) {
        errors_.push_back({std::string(key), "must be \"start,end\""});
        return;
      }
      start = as_uint(key, json(text.substr(0, comma)));
      end = as_uint(key, json(text.substr(comma + 1)));
    } else {
      errors_.push_back({std::string(key), "must be a [start, end] pair"});
      return;
    }
    if (start && end) out = {static_cast<std::size_t>(*start), static_cast<std::size_t>(*end)};
  }

 private:
  std::optional<std::uint64_t> as_uint(std::string_view key, const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else if (v.is_string()) {
      std::string text = v.get<std::string>();
      const auto first = text.find_first_not_of(' ');
      const auto last = text.find_last_not_of(' ');
      if (first != std::string::npos) text = text.substr(first, last - first + 1);
      try {
        return parse_uint(text);
      } catch (const Error&) {
      }
    }
    errors_.push_back({std::string(key), "must be a non-negative integer (decimal or 0x-hex)"});
    return std::nullopt;
  }

  const json& object_;
  ParamProfile profile_;
  std::vector<FieldError> errors_;
};

constexpr std::array kKnownKeys = {
    "instructionLength", "retOpcodeLength",    "callOpcodeLength",
    "fileOffset",        "fileOffsetEnd",      "pcOffset",
    "pcIncPerInstr",     "endiannes",          "endianness",
    "nrCandidates",      "callCandidateRange", "retCandidateRange",
    "returnToFunctionPrologueDistance",        "unknownCodeEntry",
    "includeInstructions", "isRelativeAddressing",
};

}  // namespace

AnalysisParams params_from_json(const json& object, ParamProfile profile) {
  if (!object.is_object()) {
    throw ValidationError("params", "analysis parameters must be a JSON object");
  }
  AnalysisParams p;
  Reader r(object, profile);
  auto& errors = r.errors();

  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* k : kKnownKeys) known = known || item.key() == k;
    if (!known) errors.push_back({item.key(), "unknown parameter"});
  }

  r.integer("instructionLength", p.instructionLength, true);
  r.integer("retOpcodeLength", p.retOpcodeLength, true);
  r.integer("callOpcodeLength", p.callOpcodeLength, true);
  r.flag("unknownCodeEntry", p.unknownCodeEntry);

  // Without a region search the region bounds are mandatory in strict mode.
  const bool regionOptional = p.unknownCodeEntry;
  std::optional<std::uint64_t> fileOffset;
  r.optionalInteger("fileOffset", fileOffset, regionOptional);
  if (fileOffset) p.fileOffset = *fileOffset;
  r.optionalInteger("fileOffsetEnd", p.fileOffsetEnd, regionOptional);

  r.integer("pcOffset", p.pcOffset);
  r.integer("pcIncPerInstr", p.pcIncPerInstr);

  const json* spelled = object.contains("endiannes") ? &object["endiannes"] : nullptr;
  const json* standard = object.contains("endianness") ? &object["endianness"] : nullptr;
  if (spelled && standard && *spelled != *standard) {
    errors.push_back({"endiannes", "conflicts with endianness"});
  } else if (const json* v = spelled ? spelled : standard) {
    if (v->is_string() && (*v == "big" || *v == "little")) {
      p.endianness = parse_endianness(v->get<std::string>());
    } else {
      errors.push_back({spelled ? "endiannes" : "endianness", "must be \"big\" or \"little\""});
    }
  } else if (profile == ParamProfile::strict) {
    r.missing("endiannes");
  }

  r.integer("nrCandidates", p.nrCandidates);
  r.range("callCandidateRange", p.callCandidateRange);
  r.range("retCandidateRange", p.retCandidateRange);
  r.integer("returnToFunctionPrologueDistance", p.returnToFunctionPrologueDistance);
  r.flag("includeInstructions", p.includeInstructions);
  r.flag("isRelativeAddressing", p.isRelativeAddressing);

  if (errors.empty()) {
    for (auto& e : check_params(p)) errors.push_back(std::move(e));
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return p;
}

json to_json(const AnalysisParams& p) {
  json out = {
      {"instructionLength", p.instructionLength},
      {"retOpcodeLength", p.retOpcodeLength},
      {"callOpcodeLength", p.callOpcodeLength},
      {"fileOffset", p.fileOffset},
      {"fileOffsetEnd", nullptr},
      {"pcOffset", to_hex(p.pcOffset)},
      {"pcIncPerInstr", p.pcIncPerInstr},
      {"endiannes", std::string(to_string(p.endianness))},
      {"nrCandidates", p.nrCandidates},
      {"callCandidateRange", {p.callCandidateRange.start, p.callCandidateRange.end}},
      {"retCandidateRange", {p.retCandidateRange.start, p.retCandidateRange.end}},
      {"returnToFunctionPrologueDistance", p.returnToFunctionPrologueDistance},
      {"unknownCodeEntry", p.unknownCodeEntry},
      {"includeInstructions", p.includeInstructions},
      {"isRelativeAddressing", p.isRelativeAddressing},
  };
  if (p.fileOffsetEnd) out["fileOffsetEnd"] = *p.fileOffsetEnd;
  return out;
}

}  // namespace ocpscan
