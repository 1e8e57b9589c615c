#include "ocpscan/analysis.hpp"

#include "ocpscan/sweep.hpp"

namespace ocpscan {

AnalysisResult analyze(const BinaryImage& image, const AnalysisParams& input,
                       const ScoreOptions& options) {
  validate(input, image.size());
  AnalysisResult result;
  result.params = input;

  if (input.unknownCodeEntry) {
    const auto granularity = default_region_granularity(image.size(), input.instructionLength);
    const auto regions = search_code_region(image, input, granularity, options);
    result.params.fileOffset = regions.front().region.fileOffset;
    result.params.fileOffsetEnd = regions.front().region.fileOffsetEnd;
    result.diagnostics.regionSearched = true;
  } else if (!result.params.fileOffsetEnd) {
    result.params.fileOffsetEnd = image.size();
  }

  const CodeRegion region = result.params.region(image.size());
  const auto stream = extract_instructions(image, region, result.params.layout());
  const auto ranked = score_all(stream, result.params, options);

  result.diagnostics.instructionCount = stream.size();
  result.diagnostics.droppedBytes = stream.droppedBytes();
  result.diagnostics.region = region;
  result.diagnostics.evaluatedPairs = ranked.evaluatedPairs;

  for (const auto& pair : ranked.pairs) {
    const auto edges = valid_edges_for(stream, result.params, pair.callOpcode, pair.retOpcode);
    result.candidates.push_back(
        {pair, build_call_graph(stream, edges, result.params.includeInstructions)});
  }
  return result;
}

nlohmann::json to_json(const AnalysisResult& result) {
  const auto& d = result.diagnostics;
  nlohmann::json candidates = nlohmann::json::array();
  for (std::size_t k = 0; k < result.candidates.size(); ++k) {
    auto entry = to_json(result.candidates[k].pair, result.params.instructionLength);
    entry["rank"] = k;
    entry["graph"] = to_json(result.candidates[k].graph);
    candidates.push_back(std::move(entry));
  }
  return {
      {"params", to_json(result.params)},
      {"diagnostics",
       {
           {"instructionCount", d.instructionCount},
           {"droppedBytes", d.droppedBytes},
           {"fileOffset", d.region.fileOffset},
           {"fileOffsetEnd", d.region.fileOffsetEnd},
           {"regionSearched", d.regionSearched},
           {"evaluatedPairs", d.evaluatedPairs},
           {"scoreWeights", {{"a", kValidEdgeWeight}, {"b", kCallCountWeight}}},
       }},
      {"candidates", candidates},
  };
}

std::string serialize(const AnalysisResult& result) { return to_json(result).dump(2) + "\n"; }

nlohmann::json error_json(const std::exception& error) {
  nlohmann::json out = {{"error", error.what()}};
  if (const auto* v = dynamic_cast<const ValidationError*>(&error)) {
    out["error"] = "invalid parameters";
    nlohmann::json fields = nlohmann::json::array();
    for (const auto& f : v->fields()) fields.push_back({{"field", f.field}, {"message", f.message}});
    out["fields"] = std::move(fields);
  }
  return out;
}

}  // namespace ocpscan
