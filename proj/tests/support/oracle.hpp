#pragma once

// Naive reference scorer for tests. Written without the library's masking,
// ranking, edge or prefix-sum helpers so it can check them independently.

#include <cstdint>
#include <vector>

namespace oracle {

struct Setup {
  std::vector<std::uint64_t> values;
  unsigned instructionLength = 32;
  unsigned callOpcodeLength = 6;
  unsigned retOpcodeLength = 32;
  std::uint64_t pcOffset = 0;
  std::uint64_t pcIncPerInstr = 1;
  bool relative = false;
  std::size_t callStart = 0, callEnd = 20;
  std::size_t retStart = 0, retEnd = 10;
  std::size_t distance = 3;
};

struct Pair {
  std::uint64_t callOpcode = 0;
  std::uint64_t retOpcode = 0;
  std::size_t callCount = 0;
  std::size_t potentialEdges = 0;
  std::size_t validEdges = 0;
  double score = 0.0;
};

struct Edge {
  std::size_t caller = 0;
  std::size_t target = 0;
};

/// Top bits kept, computed by shifting rather than masking.
std::uint64_t top_bits(std::uint64_t value, unsigned keep, unsigned width);

/// Masked values by (frequency desc, value asc), restricted to [start, end).
std::vector<std::uint64_t> ranked(const Setup& s, unsigned opcodeLength, std::size_t start,
                                  std::size_t end);

std::vector<Edge> potential(const Setup& s, std::uint64_t callOpcode);
std::size_t valid(const Setup& s, const std::vector<Edge>& edges, std::uint64_t retOpcode);

/// Every pair in the candidate windows, sorted by (score desc, call asc, ret asc).
std::vector<Pair> all_pairs(const Setup& s);

}  // namespace oracle
