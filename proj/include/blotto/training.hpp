#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blotto/game.hpp"
#include "blotto/planner.hpp"
#include "blotto/transfer.hpp"

namespace blotto {

// value captured by red right after the opening resolution (no cost term)
double planner_return(const GameGraph& g, const GameState& post_initial);

struct RewardParts {
  double delta_control = 0.0;
  double ratio_term = 0.0;
  double cost_term = 0.0;  // subtracted
};

// Per-round shaping for the mover: control swing, a resource-advantage bonus
// read from the round-start totals, minus spend normalized by round-start stock.
double transfer_reward(const GameGraph& g, const GameState& s_t, const GameState& s_next,
                       double red_round_cost, double alpha_s = 0.1, RewardParts* parts = nullptr);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Terminal episode (no bootstrap past the last step).
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      double gamma, double lambda);

// Deterministic scenario factory: instance (iteration, index) is a pure
// function of (master_seed, tag, iteration, index).
struct ScenarioStream {
  ScenarioConfig base;
  uint64_t master_seed = 0;
  uint64_t tag = 0;
  Scenario make(uint64_t iteration, uint64_t index) const;
};

struct TrainLogRow {
  int iteration = 0;
  double mean_return = 0.0;
  double loss_policy = 0.0;
  double loss_value = 0.0;
  double loss_entropy = 0.0;
  int skipped = 0;  // dropped samples / skipped updates from non-finite numbers
};

struct TrainCurve {
  std::vector<TrainLogRow> rows;
};

std::string curve_to_csv(const TrainCurve& curve);
void save_curve(const TrainCurve& curve, const std::string& path);

struct ReinforceConfig {
  int iterations = 500;
  int batch = 10;
  double lr = 1e-3;
  double baseline_coef = 0.5;
  uint64_t seed = 0;
  int checkpoint_every = 0;           // 0: never during training
  std::string checkpoint_prefix;      // "<prefix>NNNNNN.ckpt"
  bool log_stderr = false;
};

// Stage-one training: sampled openings against the rule blue, score-weighted
// log-likelihood with a learned scalar baseline (fit to return, embedding
// detached so the baseline cannot steer the policy).
TrainCurve train_planner_reinforce(const ScenarioStream& stream, PlannerModel& model,
                                   const ReinforceConfig& cfg);

struct PpoTrainConfig {
  int iterations = 3000;
  int batch_episodes = 10;
  int epochs = 10;
  double lr = 5e-4;
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double alpha_s = 0.1;
  bool normalize_advantages = false;
  uint64_t seed = 0;
  int checkpoint_every = 0;
  std::string checkpoint_prefix;
  bool log_stderr = false;
};

// Stage-two training of the mover with clipped-surrogate policy optimization;
// the planner stays frozen and supplies greedy openings.
TrainCurve train_transfer_ppo(const ScenarioStream& stream, const PlannerModel& frozen_planner,
                              TransferModel& model, const PpoTrainConfig& cfg);

struct FeedbackConfig {
  int iterations = 2000;
  int batch = 10;
  double lr = 1e-3;
  double lambda = 0.5;  // weight on full-episode utility added to the opening return
  double baseline_coef = 0.5;
  uint64_t seed = 0;
  int checkpoint_every = 0;
  std::string checkpoint_prefix;
  bool log_stderr = false;
};

// Stage-three fine-tuning: the opening policy is re-trained on a return
// augmented with the full-episode utility realized under the frozen mover.
// With lambda = 0 this reduces exactly to stage one on the same draws.
TrainCurve lfrt_feedback(const ScenarioStream& stream, PlannerModel& model,
                         const TransferModel& frozen_transfer, const FeedbackConfig& cfg);

}  // namespace blotto
