#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocpscan/edges.hpp"
#include "ocpscan/instruction_stream.hpp"
#include "ocpscan/params.hpp"

namespace ocpscan {

/// Weight of valid edges in the numerator of the OCP-Score.
inline constexpr unsigned kValidEdgeWeight = 2;
/// Weight of the call count in the denominator of the OCP-Score.
inline constexpr unsigned kCallCountWeight = 3;

/// Opcode Candidacy Probability Score:
///   (2 * validEdges + potentialEdges) / (3 * callCount)
/// Lies in [0, 1] because validEdges <= potentialEdges <= callCount.
/// Throws ocpscan::Error if callCount is zero or the ordering is violated.
double ocp_score(std::size_t callCount, std::size_t potentialEdges, std::size_t validEdges);

struct CandidatePair {
  std::uint64_t callOpcode = 0;
  std::uint64_t retOpcode = 0;
  std::size_t callCount = 0;
  std::size_t potentialEdges = 0;
  std::size_t validEdges = 0;
  double score = 0.0;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

/// Ranking order: score descending, then call opcode, then return opcode.
bool ranks_before(const CandidatePair& a, const CandidatePair& b) noexcept;

/// Bounded top-K selection over CandidatePair. The retained set and its
/// order depend only on the pairs offered, never on their arrival order.
class TopCandidates {
 public:
  explicit TopCandidates(std::size_t capacity);

  void offer(const CandidatePair& pair);
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return heap_.size(); }

  /// Retained pairs in ranking order.
  std::vector<CandidatePair> sorted() const;

 private:
  std::size_t capacity_;
  std::vector<CandidatePair> heap_;  // worst-ranked pair at the front
};

struct RankedCandidates {
  std::vector<CandidatePair> pairs;
  std::size_t capacity = 0;
  // Pairs scored, including those that did not make the top-K.
  std::size_t evaluatedPairs = 0;
};

struct ScoreOptions {
  /// Worker threads for call candidates; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Scores every (call, return) candidate pair in the configured rank
/// windows and keeps the best nrCandidates. Potential edges are resolved
/// once per call candidate and reused for every return candidate.
/// Throws ocpscan::Error if the stream is empty or no candidates exist.
RankedCandidates score_all(const InstructionStream& stream, const AnalysisParams& params,
                           const ScoreOptions& options = {});

/// Counts and score of one specific pair, regardless of candidate ranges.
/// Returns a pair with callCount 0 and score 0 if the call opcode never occurs.
CandidatePair evaluate_pair(const InstructionStream& stream, const AnalysisParams& params,
                            std::uint64_t callOpcode, std::uint64_t retOpcode);

/// The valid edges behind a pair, as used to build its call graph.
std::vector<Edge> valid_edges_for(const InstructionStream& stream, const AnalysisParams& params,
                                  std::uint64_t callOpcode, std::uint64_t retOpcode);

/// {callOpcode, retOpcode, ocpScore, callCount, potentialEdges, validEdges};
/// opcodes as hex at full instruction width.
nlohmann::json to_json(const CandidatePair& pair, unsigned instructionLength);
CandidatePair candidate_pair_from_json(const nlohmann::json& object);

}  // namespace ocpscan
