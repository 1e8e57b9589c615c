#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocpscan/call_graph.hpp"
#include "ocpscan/instruction_stream.hpp"
#include "ocpscan/params.hpp"
#include "ocpscan/scorer.hpp"

namespace ocpscan {

struct Diagnostics {
  std::size_t instructionCount = 0;
  std::size_t droppedBytes = 0;
  CodeRegion region;
  bool regionSearched = false;
  std::size_t evaluatedPairs = 0;
};

struct AnalyzedCandidate {
  CandidatePair pair;
  CallGraph graph;
};

struct AnalysisResult {
  AnalysisParams params;  // as run: region resolved, defaults filled in
  Diagnostics diagnostics;
  std::vector<AnalyzedCandidate> candidates;
};

/// Full pipeline: decode, score, and build a call graph per top candidate.
/// With unknownCodeEntry the code region is searched first and the best
/// region is used. Throws ValidationError for bad parameters.
AnalysisResult analyze(const BinaryImage& image, const AnalysisParams& params,
                       const ScoreOptions& options = {});

nlohmann::json to_json(const AnalysisResult& result);

/// Canonical text form shared by the CLI and the service.
std::string serialize(const AnalysisResult& result);

/// Machine-readable error body: {"error": message, "fields": [...]}.
nlohmann::json error_json(const std::exception& error);

}  // namespace ocpscan
