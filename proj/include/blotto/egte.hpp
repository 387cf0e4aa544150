#pragma once

#include <string>
#include <vector>

#include "blotto/game.hpp"
#include "blotto/graph.hpp"
#include "blotto/param_store.hpp"
#include "blotto/rng.hpp"
#include "blotto/tensor.hpp"

namespace blotto {

struct EgteConfig {
  int layers = 3;
  int heads = 4;
  int dim = 32;
  int ffn_dim = 64;
  int max_spd = 8;      // hop distances are clipped here before the bias lookup
  int max_degree = 80;  // degree embedding table covers 0..max_degree
};

struct EgteOut {
  nn::Tensor nodes;   // n x d
  nn::Tensor global;  // 1 x d, the virtual node row
};

// Graph transformer over node features [v_i, red_i, blue_i]: feature lift
// plus degree embedding, then pre-softmax attention biases indexed by
// clipped hop distance, with an extra virtual node attached at distance 1
// to every real node that serves as the graph-level readout.
class Egte {
 public:
  Egte(nn::ParamStore& store, std::string prefix, const EgteConfig& cfg, Rng& rng);

  // rows 0..n-1 real nodes, row n the virtual node
  nn::Tensor init_features(nn::Tape& tape, const GameGraph& g, const GameState& s) const;
  EgteOut encode(nn::Tape& tape, const GameGraph& g, const GameState& s) const;

  const EgteConfig& config() const { return cfg_; }

 private:
  std::vector<int> spd_indices(const GameGraph& g) const;

  EgteConfig cfg_;
  std::string prefix_;
  nn::Tensor mlp1_w_, mlp1_b_, deg_emb_, spd_bias_, hv0_;
  struct Layer {
    nn::Tensor wq, wk, wv, wo, w1, w2, ln1_g, ln1_b, ln2_g, ln2_b;
  };
  std::vector<Layer> layers_;
};

}  // namespace blotto
