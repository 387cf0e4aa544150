#pragma once

#include <memory>
#include <vector>

#include "blotto/egte.hpp"
#include "blotto/game.hpp"
#include "blotto/param_store.hpp"
#include "blotto/rng.hpp"

namespace blotto {

enum class DecodeMode { Greedy, Sample };

enum class StopReason { BudgetExhausted, StepLimit, NoAffordableNode };

struct PlannerConfig {
  EgteConfig egte;
  int score_heads = 1;      // >1 averages per-chunk dot products before softmax
  double win_margin = 0.0;  // extra committed on top of blue's stock
};

struct PlannerDecision {
  std::vector<int> selected;
  std::vector<double> amounts;
  std::vector<double> log_probs;  // per selection step
  StopReason stop = StopReason::StepLimit;
  nn::Tensor sum_log_prob;              // tape-live; undefined when no step was taken
  std::vector<double> global_embedding;  // detached graph readout for the baseline head
};

// Sequential node picker: encodes the board once, then repeatedly scores
// not-yet-chosen affordable nodes against a step context (previous pick's
// embedding + remaining budget + graph readout) and commits exactly blue's
// stock there, which wins the node on the tie rule.
class PlannerModel {
 public:
  PlannerModel(const PlannerConfig& cfg, uint64_t init_seed);

  nn::ParamStore& store() { return store_; }
  const nn::ParamStore& store() const { return store_; }
  const PlannerConfig& config() const { return cfg_; }
  const Egte& encoder() const { return *egte_; }

  PlannerDecision plan(nn::Tape& tape, const GameGraph& g, const Allocation& blue, double budget,
                       DecodeMode mode, Rng* rng = nullptr) const;

  // Teacher-forced replay: the log-probability of a given selection sequence
  // under current parameters, plus the live graph readout. Used for gradient
  // checking and for re-scoring stored decisions.
  struct Score {
    nn::Tensor sum_log_prob;  // undefined when `selected` is empty
    nn::Tensor global;        // tape-live readout (not detached)
  };
  Score score_selection(nn::Tape& tape, const GameGraph& g, const Allocation& blue, double budget,
                        const std::vector<int>& selected) const;

  Allocation decision_to_allocation(const GameGraph& g, const PlannerDecision& d) const;

  // scalar return predictor over a detached graph readout (REINFORCE baseline)
  nn::Tensor baseline(nn::Tape& tape, const std::vector<double>& global_embedding) const;

 private:
  PlannerConfig cfg_;
  nn::ParamStore store_;
  std::unique_ptr<Egte> egte_;
  nn::Tensor w_step_, w_fix_, h_prev_, wq_, wk_, wv_, value_w_, value_b_;
};

}  // namespace blotto
