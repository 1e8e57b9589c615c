#include "ocpscan/sweep.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "ocpscan/hex.hpp"

namespace ocpscan {

std::string_view to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::instructionLength: return "instructionLength";
    case SweepParameter::callOpcodeLength: return "callOpcodeLength";
    case SweepParameter::retOpcodeLength: return "retOpcodeLength";
    case SweepParameter::pcOffset: return "pcOffset";
    case SweepParameter::returnToFunctionPrologueDistance:
      return "returnToFunctionPrologueDistance";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  for (auto p : {SweepParameter::instructionLength, SweepParameter::callOpcodeLength,
                 SweepParameter::retOpcodeLength, SweepParameter::pcOffset,
                 SweepParameter::returnToFunctionPrologueDistance}) {
    if (to_string(p) == name) return p;
  }
  throw ValidationError("parameter", "cannot sweep \"" + std::string(name) + "\"");
}

AnalysisParams apply_sweep_value(const AnalysisParams& base, SweepParameter parameter,
                                 std::uint64_t value) {
  AnalysisParams p = base;
  auto narrow = [value] {
    return static_cast<unsigned>(std::min<std::uint64_t>(value, std::numeric_limits<unsigned>::max()));
  };
  switch (parameter) {
    case SweepParameter::instructionLength:
      if (base.retOpcodeLength == base.instructionLength) p.retOpcodeLength = narrow();
      p.instructionLength = narrow();
      break;
    case SweepParameter::callOpcodeLength: p.callOpcodeLength = narrow(); break;
    case SweepParameter::retOpcodeLength: p.retOpcodeLength = narrow(); break;
    case SweepParameter::pcOffset: p.pcOffset = value; break;
    case SweepParameter::returnToFunctionPrologueDistance:
      p.returnToFunctionPrologueDistance = static_cast<std::size_t>(value);
      break;
  }
  return p;
}

SweepResult run_sweep(const BinaryImage& image, const AnalysisParams& base, const SweepSpec& spec,
                      const ScoreOptions& options) {
  if (spec.values.empty()) throw ValidationError("values", "sweep needs at least one value");
  if (spec.topN == 0) throw ValidationError("topN", "must be at least 1");

  SweepResult result;
  result.parameter = spec.parameter;
  result.topN = spec.topN;
  for (std::uint64_t value : spec.values) {
    SweepPoint point;
    point.value = value;
    AnalysisParams params = apply_sweep_value(base, spec.parameter, value);
    params.nrCandidates = spec.topN;
    params.unknownCodeEntry = false;
    point.instructionLength = params.instructionLength;
    try {
      validate(params, image.size());
      const auto stream =
          extract_instructions(image, params.region(image.size()), params.layout());
      point.best = score_all(stream, params, options).pairs;
    } catch (const ValidationError& e) {
      point.errors = e.fields();
    } catch (const Error& e) {
      point.errors = {{std::string(to_string(spec.parameter)), e.what()}};
    }
    result.points.push_back(std::move(point));
  }
  return result;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "value,rank,score,callOpcode,retOpcode\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& point : result.points) {
    if (!point.ok() || point.best.empty()) {
      out << point.value << ",,,,\n";
      continue;
    }
    for (std::size_t k = 0; k < point.best.size(); ++k) {
      const auto& pair = point.best[k];
      out << point.value << ',' << k << ',' << pair.score << ','
          << to_hex(pair.callOpcode, point.instructionLength) << ','
          << to_hex(pair.retOpcode, point.instructionLength) << '\n';
    }
  }
  return out.str();
}

nlohmann::json to_json(const SweepResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& point : result.points) {
    nlohmann::json p = {{"value", point.value}};
    if (!point.ok()) {
      nlohmann::json fields = nlohmann::json::array();
      for (const auto& f : point.errors) fields.push_back({{"field", f.field}, {"message", f.message}});
      p["error"] = {{"error", "invalid parameters"}, {"fields", fields}};
    } else {
      nlohmann::json best = nlohmann::json::array();
      for (const auto& pair : point.best) best.push_back(to_json(pair, point.instructionLength));
      p["candidates"] = std::move(best);
    }
    points.push_back(std::move(p));
  }
  return {{"parameter", std::string(to_string(result.parameter))},
          {"topN", result.topN},
          {"points", points}};
}

SweepSpec sweep_spec_from_json(const nlohmann::json& object) {
  std::vector<FieldError> errors;
  SweepSpec spec;
  if (!object.is_object()) throw ValidationError("sweep", "must be a JSON object");
  if (auto it = object.find("parameter"); it == object.end() || !it->is_string()) {
    errors.push_back({"parameter", "is required"});
  } else {
    try {
      spec.parameter = parse_sweep_parameter(it->get<std::string>());
    } catch (const ValidationError& e) {
      errors.insert(errors.end(), e.fields().begin(), e.fields().end());
    }
  }
  if (auto it = object.find("values"); it == object.end() || !it->is_array() || it->empty()) {
    errors.push_back({"values", "must be a non-empty array"});
  } else {
    for (const auto& v : *it) {
      try {
        if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
          spec.values.push_back(v.get<std::uint64_t>());
        } else if (v.is_string()) {
          spec.values.push_back(parse_uint(v.get<std::string>()));
        } else {
          throw Error("not a non-negative integer");
        }
      } catch (const Error&) {
        errors.push_back({"values", "entries must be non-negative integers"});
        break;
      }
    }
  }
  if (auto it = object.find("topN"); it != object.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() <= 0) {
      errors.push_back({"topN", "must be a positive integer"});
    } else {
      spec.topN = it->get<std::size_t>();
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return spec;
}

std::size_t default_region_granularity(std::size_t imageSize, unsigned instructionLength) {
  const std::size_t width = std::max(1u, instructionLength / 8);
  const std::size_t cells = 32;
  const std::size_t raw = (imageSize + cells - 1) / cells;
  return std::max(width, (raw + width - 1) / width * width);
}

namespace {

bool region_before(const RegionCandidate& a, const RegionCandidate& b) {
  if (a.best.score != b.best.score) return a.best.score > b.best.score;
  if (a.best.validEdges != b.best.validEdges) return a.best.validEdges > b.best.validEdges;
  if (a.region.size() != b.region.size()) return a.region.size() < b.region.size();
  return a.region.fileOffset < b.region.fileOffset;
}

class RegionSearch {
 public:
  RegionSearch(const BinaryImage& image, const AnalysisParams& base, const ScoreOptions& options)
      : image_(image), base_(base), options_(options) {
    base_.unknownCodeEntry = false;
    base_.nrCandidates = 1;
    minBytes_ = kMinRegionInstructions * (base.instructionLength / 8);
  }

  std::size_t minBytes() const { return minBytes_; }

  // Scores a region once; later requests hit the cache.
  std::optional<RegionCandidate> evaluate(std::size_t start, std::size_t end) {
    if (end > image_.size() || start >= end || end - start < minBytes_) return std::nullopt;
    const auto key = std::make_pair(start, end);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::optional<RegionCandidate> out;
    AnalysisParams p = base_;
    p.fileOffset = start;
    p.fileOffsetEnd = end;
    if (check_params(p, image_.size()).empty()) {
      try {
        const auto stream = extract_instructions(image_, p.region(image_.size()), p.layout());
        const auto ranked = score_all(stream, p, options_);
        if (!ranked.pairs.empty()) out = RegionCandidate{{start, end}, ranked.pairs.front()};
      } catch (const Error&) {
      }
    }
    cache_.emplace(key, out);
    return out;
  }

  std::vector<RegionCandidate> all() const {
    std::vector<RegionCandidate> out;
    for (const auto& [key, value] : cache_) {
      if (value) out.push_back(*value);
    }
    std::sort(out.begin(), out.end(), region_before);
    return out;
  }

 private:
  const BinaryImage& image_;
  AnalysisParams base_;
  ScoreOptions options_;
  std::size_t minBytes_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::optional<RegionCandidate>> cache_;
};

}  // namespace

std::vector<RegionCandidate> search_code_region(const BinaryImage& image,
                                                const AnalysisParams& base,
                                                std::size_t stepGranularity,
                                                const ScoreOptions& options) {
  validate(base);
  const std::size_t width = base.instructionLength / 8;
  if (stepGranularity == 0 || stepGranularity % width != 0) {
    throw ValidationError("stepGranularity",
                          "must be a positive multiple of the instruction width in bytes");
  }
  RegionSearch search(image, base, options);
  if (image.size() < search.minBytes()) throw Error("image too small for region search");

  const std::size_t size = image.size();
  std::vector<std::size_t> ends;
  for (std::size_t e = stepGranularity; e <= size; e += stepGranularity) ends.push_back(e);
  if (ends.empty() || ends.back() != size) ends.push_back(size);
  for (std::size_t s = 0; s + search.minBytes() <= size; s += stepGranularity) {
    for (std::size_t e : ends) {
      if (e >= s + search.minBytes()) search.evaluate(s, e);
    }
  }

  constexpr std::size_t kRefinedCells = 3;
  constexpr std::size_t kRefineFactor = 8;
  for (std::size_t step = stepGranularity; step > width;) {
    const std::size_t finer = std::max(width, step / kRefineFactor / width * width);
    auto cells = search.all();
    if (cells.size() > kRefinedCells) cells.resize(kRefinedCells);
    for (const auto& cell : cells) {
      // Coordinate-wise: move the start with the end fixed, then the end.
      std::size_t bestStart = cell.region.fileOffset;
      std::optional<RegionCandidate> best = cell;
      const std::size_t lo = bestStart > step ? bestStart - step : 0;
      for (std::size_t s = lo; s <= bestStart + step; s += finer) {
        auto r = search.evaluate(s, cell.region.fileOffsetEnd);
        if (r && region_before(*r, *best)) best = r;
      }
      bestStart = best->region.fileOffset;
      const std::size_t endBase = best->region.fileOffsetEnd;
      const std::size_t elo = endBase > step ? endBase - step : 0;
      for (std::size_t e = elo; e <= std::min(size, endBase + step); e += finer) {
        search.evaluate(bestStart, e);
      }
      search.evaluate(bestStart, size);
    }
    step = finer;
  }

  auto ranked = search.all();
  if (ranked.empty()) throw Error("no region produced opcode candidates");
  return ranked;
}

nlohmann::json to_json(const RegionCandidate& candidate, unsigned instructionLength) {
  auto out = to_json(candidate.best, instructionLength);
  out["fileOffset"] = candidate.region.fileOffset;
  out["fileOffsetEnd"] = candidate.region.fileOffsetEnd;
  return out;
}

}  // namespace ocpscan
