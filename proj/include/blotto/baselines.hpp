#pragma once

#include <cstdint>
#include <vector>

#include "blotto/game.hpp"
#include "blotto/graph.hpp"

namespace blotto {

// Opening allocators. All of them exploit the tie rule: committing exactly
// blue's stock at a node wins it, and an untouched zero-blue node is red's
// for free. An allocation is therefore a choice of subset to contest.

// Value-per-cost sweep: free nodes first (higher value, then lower index),
// then paid nodes by density v/cost (ties: higher value, then lower index).
Allocation greedy_alloc(const GameGraph& g, const Allocation& blue, double budget);

enum class SaMove { SwapNode, ShiftAmount };

struct SaConfig {
  double t0 = 1.0;
  double cooling = 0.995;
  int iterations = 5000;
  SaMove move = SaMove::SwapNode;
  uint64_t seed = 0;
};

// Simulated annealing over feasible contested subsets, seeded with the
// greedy solution; the best subset ever visited is returned, so the result
// never scores below greedy. SwapNode mutates the subset (add / remove /
// swap); ShiftAmount jitters committed amounts above the minimum instead,
// which changes cost headroom but not value.
Allocation sa_alloc(const GameGraph& g, const Allocation& blue, double budget,
                    const SaConfig& cfg);

struct ExactResult {
  std::vector<int> subset;  // contested nodes, ascending
  double value = 0.0;       // controlled value of the induced opening
  Allocation alloc;
};

// Exhaustive subset enumeration (guarded to n <= 20). Masks are scanned in
// ascending order and only strict improvements are kept, so exact value ties
// resolve to the lexicographically smallest subset.
ExactResult exact_alloc_small(const GameGraph& g, const Allocation& blue, double budget);

// Per-source grid search for a one-round transfer: each red-held row is
// optimized independently (others held, blue frozen) over fractional splits
// k/grid_steps across neighbors + self, scored by the same shaped reward the
// learner trains on. Refuses boards beyond max_nodes or whose row count
// would exceed search_budget.
struct MyopicConfig {
  int grid_steps = 4;
  double alpha_s = 0.1;
  long long search_budget = 2000000;
  int max_nodes = 12;
};

TransferPlan myopic_transfer(const GameGraph& g, const GameState& state,
                             const MyopicConfig& cfg = {});

}  // namespace blotto
