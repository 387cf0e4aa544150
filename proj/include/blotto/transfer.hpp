#pragma once

#include <memory>
#include <vector>

#include "blotto/egte.hpp"
#include "blotto/game.hpp"
#include "blotto/param_store.hpp"
#include "blotto/planner.hpp"
#include "blotto/rng.hpp"

namespace blotto {

struct TransferConfig {
  EgteConfig egte;
  int gat_heads = 4;
  double leaky_slope = 0.01;
  double logit_noise_sigma = 0.1;  // exploration noise on decode logits
};

// The action PPO stores and re-scores: per red-held source row, the
// perturbed logits over that row's candidate set (sorted neighbors + self).
struct TransferAction {
  std::vector<int> sources;
  std::vector<std::vector<double>> logits;
};

struct TransferActResult {
  TransferPlan plan;
  TransferAction action;   // filled in sample mode
  double log_prob = 0.0;   // Gaussian log-density of the sampled logits
  double value = 0.0;      // critic estimate
};

// Tape-live quantities for the PPO loss under current parameters.
struct TransferEval {
  nn::Tensor log_prob;
  nn::Tensor value;
  nn::Tensor entropy;  // pre-noise softmax entropy summed over source rows
};

// Per-round mover: a local GATv2 pass over raw features runs beside the
// graph transformer; their fusion scores each edge (plus self) and a
// row-wise softmax yields the fraction of a node's stock sent along it.
class TransferModel {
 public:
  TransferModel(const TransferConfig& cfg, uint64_t init_seed);

  nn::ParamStore& store() { return store_; }
  const nn::ParamStore& store() const { return store_; }
  const TransferConfig& config() const { return cfg_; }

  // candidate destinations for a source row, ascending, self included
  static std::vector<int> candidates(const GameGraph& g, int i);

  TransferActResult act(nn::Tape& tape, const GameGraph& g, const GameState& obs, DecodeMode mode,
                        Rng* rng = nullptr) const;

  TransferEval evaluate(nn::Tape& tape, const GameGraph& g, const GameState& obs,
                        const TransferAction& action) const;

 private:
  struct Forward {
    nn::Tensor scores;  // n x n pre-noise decode logits
    nn::Tensor probs;   // masked row softmax of scores
    nn::Tensor value;
    std::vector<uint8_t> keep;  // adjacency + self
  };
  Forward forward(nn::Tape& tape, const GameGraph& g, const GameState& obs) const;

  TransferConfig cfg_;
  nn::ParamStore store_;
  std::unique_ptr<Egte> egte_;
  nn::Tensor w_g_, h_va_, w_a_, wq_, wk_, value_w_, value_b_;
  struct GatHead {
    nn::Tensor wl, wr, a;
  };
  std::vector<GatHead> gat_heads_;
};

}  // namespace blotto
