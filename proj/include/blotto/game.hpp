#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "blotto/graph.hpp"

namespace blotto {

struct Allocation {
  std::vector<double> amounts;
  double total() const;
};

// Per-node resource levels for both sides. round 0 is the un-resolved
// placement stage; resolve_initial moves to round 1; each dynamic round
// increments it. Costs are cumulative transfer expenditures.
struct GameState {
  std::vector<double> red, blue;
  int round = 0;
  double red_cost = 0.0;
  double blue_cost = 0.0;
  double red_total() const;
  double blue_total() const;
};

// rows[i] maps destination -> fraction of node i's stock, over N_i and i
// itself; the self entry is the retained remainder. Fractions are
// nonnegative and each row sums to 1.
struct TransferPlan {
  std::vector<std::map<int, double>> rows;
};

TransferPlan identity_plan(int n);

struct UtilityReport {
  double red_utility = 0.0;   // controlled value minus cumulative cost
  double blue_utility = 0.0;
  double red_value = 0.0;     // sum of v_i over red-controlled nodes (ties to red)
  double blue_value = 0.0;
  double red_cost = 0.0;
  double blue_cost = 0.0;
  int rounds_played = 0;      // dynamic rounds executed
};

void validate_allocation(const GameGraph& g, const Allocation& a, double budget);
void validate_plan(const GameGraph& g, const TransferPlan& p);

// Both sides place, then each node goes to whoever has at least as much
// there as the other — equal stakes go to red. The loser's stake is removed.
GameState resolve_initial(const GameGraph& g, const Allocation& blue, const Allocation& red,
                          double blue_budget, double red_budget);

// Eq-style per-side move: move fractions of each node's stock along edges,
// returning the post-move levels and the weighted cost of the moves.
struct MoveOutcome {
  std::vector<double> levels;
  double cost = 0.0;
};
MoveOutcome transfer_temp_levels(const GameGraph& g, const std::vector<double>& levels,
                                 const TransferPlan& plan);

// One dynamic round: both plans execute against `state` simultaneously, then
// contested nodes resolve (ties to red, loser zeroed).
GameState apply_transfers(const GameGraph& g, const GameState& state, const TransferPlan& red_plan,
                          const TransferPlan& blue_plan);

double controlled_value_red(const GameGraph& g, const GameState& s);
double controlled_value_blue(const GameGraph& g, const GameState& s);

UtilityReport compute_utilities(const GameGraph& g, const GameState& final_state);

// Blue's fixed doctrine: spread the budget in proportion to node value
// (uniform when all values are zero).
Allocation blue_rule_alloc(const GameGraph& g, double budget);

// Blue's fixed reinforcement doctrine: each blue-held node sends a beta
// fraction of its stock toward neighbors just lost to red, split by value;
// nodes with nothing to respond to hold.
TransferPlan blue_rule_transfer(const GameGraph& g, const GameState& state, const GameState& prev,
                                double beta = 0.5);

// Red mirror of the same doctrine (counter-reinforce neighbors just lost to blue).
TransferPlan red_rule_transfer(const GameGraph& g, const GameState& state, const GameState& prev,
                               double beta = 0.5);

struct TraceRound {
  int round = 0;
  std::vector<double> red, blue;  // post-resolution levels
  double red_round_cost = 0.0;
  double blue_round_cost = 0.0;
};

struct EpisodeTrace {
  std::vector<double> blue_alloc, red_alloc;  // placements before resolution
  std::vector<TraceRound> rounds;             // rounds[0] = after initial resolution
};

std::string trace_to_string(const EpisodeTrace& t);
void save_trace(const EpisodeTrace& t, const std::string& path);

using BlueAllocPolicy = std::function<Allocation(const GameGraph&, double budget)>;
using RedAllocPolicy = std::function<Allocation(const GameGraph&, const Allocation& blue, double budget)>;
// obs: what the side is allowed to see this round (for red, blue has already
// moved); prev: the previous round's resolved state (placement state in round 1).
using TransferPolicy = std::function<TransferPlan(const GameGraph&, const GameState& obs, const GameState& prev)>;

struct EpisodeResult {
  UtilityReport report;
  EpisodeTrace trace;
  GameState final_state;
};

// Full game: blue places by rule, red places observing blue, initial combat,
// then dynamic rounds (blue moves first, red observes blue's move) until one
// side is wiped out or max_rounds is reached.
EpisodeResult run_episode(const Scenario& sc, const BlueAllocPolicy& blue_alloc_policy,
                          const RedAllocPolicy& red_alloc_policy,
                          const TransferPolicy& blue_transfer_policy,
                          const TransferPolicy& red_transfer_policy);

}  // namespace blotto
