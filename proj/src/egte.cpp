#include "blotto/egte.hpp"

#include <cmath>
#include <stdexcept>

namespace blotto {

using nn::Tape;
using nn::Tensor;

Egte::Egte(nn::ParamStore& store, std::string prefix, const EgteConfig& cfg, Rng& rng)
    : cfg_(cfg), prefix_(std::move(prefix)) {
  if (cfg.dim % cfg.heads != 0)
    throw std::invalid_argument("egte: dim must be divisible by heads");
  if (cfg.layers < 1 || cfg.dim < 1 || cfg.ffn_dim < 1 || cfg.max_spd < 1 || cfg.max_degree < 1)
    throw std::invalid_argument("egte: bad config");

  int d = cfg.dim;
  mlp1_w_ = store.add_uniform(prefix_ + "mlp1_w", 3, d, rng, 3);
  mlp1_b_ = store.add(prefix_ + "mlp1_b", 1, d);
  deg_emb_ = store.add_uniform(prefix_ + "deg_emb", cfg.max_degree + 1, d, rng, d);
  // bias tables start at zero so the untrained encoder is distance-blind
  spd_bias_ = store.add(prefix_ + "spd_bias", 1, cfg.max_spd + 1);
  hv0_ = store.add(prefix_ + "hv0", 1, d);

  layers_.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = prefix_ + "l" + std::to_string(l) + "/";
    Layer& ly = layers_[l];
    ly.wq = store.add_uniform(lp + "wq", d, d, rng, d);
    ly.wk = store.add_uniform(lp + "wk", d, d, rng, d);
    ly.wv = store.add_uniform(lp + "wv", d, d, rng, d);
    ly.wo = store.add_uniform(lp + "wo", d, d, rng, d);
    ly.w1 = store.add_uniform(lp + "ffn_w1", d, cfg.ffn_dim, rng, d);
    ly.w2 = store.add_uniform(lp + "ffn_w2", cfg.ffn_dim, d, rng, cfg.ffn_dim);
    ly.ln1_g = store.add_constant_fill(lp + "ln1_g", 1, d, 1.0);
    ly.ln1_b = store.add(lp + "ln1_b", 1, d);
    ly.ln2_g = store.add_constant_fill(lp + "ln2_g", 1, d, 1.0);
    ly.ln2_b = store.add(lp + "ln2_b", 1, d);
  }
}

Tensor Egte::init_features(Tape& tape, const GameGraph& g, const GameState& s) const {
  if (static_cast<int>(s.red.size()) != g.n || static_cast<int>(s.blue.size()) != g.n)
    throw std::invalid_argument("egte: state size does not match graph");
  std::vector<double> feat;
  feat.reserve(static_cast<size_t>(g.n) * 3);
  for (int i = 0; i < g.n; ++i) {
    feat.push_back(g.values[i]);
    feat.push_back(s.red[i]);
    feat.push_back(s.blue[i]);
  }
  Tensor x = tape.constant(g.n, 3, feat);
  Tensor h = tape.add_bias(tape.matmul(x, mlp1_w_), mlp1_b_);
  for (int i = 0; i < g.n; ++i)
    if (g.degree[i] > cfg_.max_degree)
      throw std::invalid_argument("egte: node degree " + std::to_string(g.degree[i]) +
                                  " exceeds embedding table (max " +
                                  std::to_string(cfg_.max_degree) + ")");
  Tensor deg = tape.rows_select(deg_emb_, g.degree);
  h = tape.add(h, deg);
  return tape.concat_rows(h, hv0_);
}

std::vector<int> Egte::spd_indices(const GameGraph& g) const {
  int m = g.n + 1;  // + virtual node
  std::vector<int> idx(static_cast<size_t>(m) * m, 1);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      idx[static_cast<size_t>(i) * m + j] = std::min(g.spd[i][j], cfg_.max_spd);
  idx[static_cast<size_t>(g.n) * m + g.n] = 0;  // virtual to itself
  return idx;
}

EgteOut Egte::encode(Tape& tape, const GameGraph& g, const GameState& s) const {
  int d = cfg_.dim, hn = cfg_.heads, dh = d / hn;
  int m = g.n + 1;

  Tensor h = init_features(tape, g, s);
  Tensor bias = tape.lookup(spd_bias_, spd_indices(g), m, m);
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  for (int l = 0; l < cfg_.layers; ++l) {
    const Layer& ly = layers_[l];
    Tensor q = tape.matmul(h, ly.wq);
    Tensor k = tape.matmul(h, ly.wk);
    Tensor v = tape.matmul(h, ly.wv);
    Tensor heads_out;
    for (int hd = 0; hd < hn; ++hd) {
      Tensor qh = tape.slice_cols(q, hd * dh, (hd + 1) * dh);
      Tensor kh = tape.slice_cols(k, hd * dh, (hd + 1) * dh);
      Tensor vh = tape.slice_cols(v, hd * dh, (hd + 1) * dh);
      Tensor scores = tape.add(tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh), bias);
      Tensor attn = tape.softmax(scores);
      Tensor oh = tape.matmul(attn, vh);
      heads_out = hd == 0 ? oh : tape.concat_cols(heads_out, oh);
    }
    Tensor attn_out = tape.matmul(heads_out, ly.wo);
    Tensor h1 = tape.layer_norm(tape.add(h, attn_out), ly.ln1_g, ly.ln1_b);
    Tensor ffn = tape.matmul(tape.relu(tape.matmul(h1, ly.w1)), ly.w2);
    h = tape.layer_norm(tape.add(h1, ffn), ly.ln2_g, ly.ln2_b);
    for (double x : h.values())
      if (!std::isfinite(x))
        throw std::runtime_error("egte: non-finite embedding after layer " + std::to_string(l));
  }

  EgteOut out;
  out.nodes = tape.slice_rows(h, 0, g.n);
  out.global = tape.slice_rows(h, g.n, m);
  return out;
}

}  // namespace blotto
