#include "ocpscan/scorer.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "ocpscan/error.hpp"
#include "ocpscan/hex.hpp"

namespace ocpscan {

double ocp_score(std::size_t callCount, std::size_t potentialEdges, std::size_t validEdges) {
  if (callCount == 0) throw Error("OCP-Score undefined for a call count of zero");
  if (validEdges > potentialEdges || potentialEdges > callCount) {
    throw Error("OCP-Score requires validEdges <= potentialEdges <= callCount");
  }
  const double numerator = static_cast<double>(kValidEdgeWeight * validEdges + potentialEdges);
  const double denominator = static_cast<double>(kCallCountWeight * callCount);
  return numerator / denominator;
}

bool ranks_before(const CandidatePair& a, const CandidatePair& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  if (a.callOpcode != b.callOpcode) return a.callOpcode < b.callOpcode;
  return a.retOpcode < b.retOpcode;
}

TopCandidates::TopCandidates(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error("candidate capacity must be at least 1");
  heap_.reserve(capacity_);
}

void TopCandidates::offer(const CandidatePair& pair) {
  // std heap keeps the "largest" element in front; with ranks_before as
  // less-than that is the worst-ranked retained pair.
  if (heap_.size() < capacity_) {
    heap_.push_back(pair);
    std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    return;
  }
  if (!ranks_before(pair, heap_.front())) return;
  std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
  heap_.back() = pair;
  std::push_heap(heap_.begin(), heap_.end(), ranks_before);
}

std::vector<CandidatePair> TopCandidates::sorted() const {
  auto out = heap_;
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

namespace {

struct CallWork {
  OpcodeCandidate candidate;
  std::vector<Edge> potential;
};

}  // namespace

RankedCandidates score_all(const InstructionStream& stream, const AnalysisParams& params,
                           const ScoreOptions& options) {
  validate(params);
  if (stream.empty()) throw Error("empty instruction stream");
  const OpcodeMaskSpec callSpec = params.callSpec();
  const OpcodeMaskSpec retSpec = params.retSpec();
  const auto calls = rank_candidates(stream, callSpec, params.callCandidateRange);
  const auto rets = rank_candidates(stream, retSpec, params.retCandidateRange);
  if (calls.empty() || rets.empty()) throw Error("no opcode candidates in the requested ranges");

  std::vector<ReturnSiteIndex> returnSites;
  returnSites.reserve(rets.size());
  for (const auto& r : rets) returnSites.emplace_back(stream, r.canonicalValue, retSpec);

  // Each worker fills its own slots; merging happens serially afterwards so
  // the outcome does not depend on scheduling.
  std::vector<std::vector<CandidatePair>> perCall(calls.size());
  auto work = [&](std::size_t c) {
    const auto& call = calls[c];
    const auto potential = potential_edges(stream, call.canonicalValue, callSpec,
                                           params.addressing());
    auto& out = perCall[c];
    if (call.frequency == 0) return;
    out.reserve(rets.size());
    for (std::size_t r = 0; r < rets.size(); ++r) {
      CandidatePair pair;
      pair.callOpcode = call.canonicalValue;
      pair.retOpcode = rets[r].canonicalValue;
      pair.callCount = call.frequency;
      pair.potentialEdges = potential.size();
      pair.validEdges =
          count_valid_edges(returnSites[r], potential, params.returnToFunctionPrologueDistance);
      pair.score = ocp_score(pair.callCount, pair.potentialEdges, pair.validEdges);
      out.push_back(pair);
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(calls.size()));
  if (threads == 1) {
    for (std::size_t c = 0; c < calls.size(); ++c) work(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < calls.size();) work(c);
      });
    }
  }

  TopCandidates top(params.nrCandidates);
  RankedCandidates result;
  for (const auto& pairs : perCall) {
    for (const auto& pair : pairs) top.offer(pair);
    result.evaluatedPairs += pairs.size();
  }
  result.pairs = top.sorted();
  result.capacity = params.nrCandidates;
  return result;
}

CandidatePair evaluate_pair(const InstructionStream& stream, const AnalysisParams& params,
                            std::uint64_t callOpcode, std::uint64_t retOpcode) {
  validate(params);
  const OpcodeMaskSpec callSpec = params.callSpec();
  CandidatePair pair;
  pair.callOpcode = callOpcode;
  pair.retOpcode = retOpcode;
  for (std::uint64_t v : stream.values()) pair.callCount += mask_opcode(v, callSpec) == callOpcode;
  if (pair.callCount == 0) return pair;
  const auto potential = potential_edges(stream, callOpcode, callSpec, params.addressing());
  const ReturnSiteIndex returns(stream, retOpcode, params.retSpec());
  pair.potentialEdges = potential.size();
  pair.validEdges = count_valid_edges(returns, potential, params.returnToFunctionPrologueDistance);
  pair.score = ocp_score(pair.callCount, pair.potentialEdges, pair.validEdges);
  return pair;
}

std::vector<Edge> valid_edges_for(const InstructionStream& stream, const AnalysisParams& params,
                                  std::uint64_t callOpcode, std::uint64_t retOpcode) {
  validate(params);
  const auto potential =
      potential_edges(stream, callOpcode, params.callSpec(), params.addressing());
  return filter_valid_edges(stream, potential, retOpcode, params.retSpec(),
                            params.returnToFunctionPrologueDistance);
}

nlohmann::json to_json(const CandidatePair& pair, unsigned instructionLength) {
  return {
      {"callOpcode", to_hex(pair.callOpcode, instructionLength)},
      {"retOpcode", to_hex(pair.retOpcode, instructionLength)},
      {"ocpScore", pair.score},
      {"callCount", pair.callCount},
      {"potentialEdges", pair.potentialEdges},
      {"validEdges", pair.validEdges},
  };
}

CandidatePair candidate_pair_from_json(const nlohmann::json& object) {
  CandidatePair pair;
  pair.callOpcode = parse_uint(object.at("callOpcode").get<std::string>());
  pair.retOpcode = parse_uint(object.at("retOpcode").get<std::string>());
  pair.score = object.at("ocpScore").get<double>();
  pair.callCount = object.at("callCount").get<std::size_t>();
  pair.potentialEdges = object.at("potentialEdges").get<std::size_t>();
  pair.validEdges = object.at("validEdges").get<std::size_t>();
  return pair;
}

}  // namespace ocpscan
