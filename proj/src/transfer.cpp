#include "blotto/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blotto {

using nn::Tape;
using nn::Tensor;

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kRetentionBias = 1.1;
}

TransferModel::TransferModel(const TransferConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  if (cfg.gat_heads < 1) throw std::invalid_argument("transfer: gat_heads must be positive");
  if (!(cfg.logit_noise_sigma > 0.0))
    throw std::invalid_argument("transfer: logit_noise_sigma must be positive");
  int d = cfg.egte.dim;
  Rng rng(init_seed);
  egte_ = std::make_unique<Egte>(store_, "egte/", cfg.egte, rng);
  w_g_ = store_.add_uniform("gat/w_g", 3, d, rng, 3);
  gat_heads_.resize(cfg.gat_heads);
  for (int h = 0; h < cfg.gat_heads; ++h) {
    std::string hp = "gat/h" + std::to_string(h) + "/";
    gat_heads_[h].wl = store_.add_uniform(hp + "wl", d, d, rng, d);
    gat_heads_[h].wr = store_.add_uniform(hp + "wr", d, d, rng, d);
    gat_heads_[h].a = store_.add_uniform(hp + "a", d, 1, rng, d);
  }
  h_va_ = store_.add("gat/h_va", 1, d);  // zero-init global query
  w_a_ = store_.add_uniform("fuse/w_a", 2 * d, d, rng, 2 * d);
  wq_ = store_.add_uniform("dec/wq", 2 * d, d, rng, 2 * d);
  wk_ = store_.add_uniform("dec/wk", d, d, rng, d);
  // near-diagonal q/k maps at init make score(i,i) track ||h_i*||^2, so an
  // untrained mover mostly holds its stock instead of scattering it; training
  // tightens or relaxes that margin rather than climbing out of a random policy
  for (int i = 0; i < d; ++i) {
    wq_.at(i, i) += kRetentionBias;
    wk_.at(i, i) += kRetentionBias;
  }
  value_w_ = store_.add_uniform("value/w", d, 1, rng, d);
  value_b_ = store_.add("value/b", 1, 1);
}

std::vector<int> TransferModel::candidates(const GameGraph& g, int i) {
  std::vector<int> c = g.adj[i];
  c.insert(std::lower_bound(c.begin(), c.end(), i), i);
  return c;
}

TransferModel::Forward TransferModel::forward(Tape& tape, const GameGraph& g,
                                              const GameState& obs) const {
  int n = g.n, d = cfg_.egte.dim;
  EgteOut enc = egte_->encode(tape, g, obs);

  std::vector<double> feat;
  feat.reserve(static_cast<size_t>(n) * 3);
  for (int i = 0; i < n; ++i) {
    feat.push_back(g.values[i]);
    feat.push_back(obs.red[i]);
    feat.push_back(obs.blue[i]);
  }
  Tensor x = tape.constant(n, 3, feat);
  Tensor z = tape.matmul(x, w_g_);

  Forward fw;
  fw.keep.assign(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    fw.keep[static_cast<size_t>(i) * n + i] = 1;
    for (int j : g.adj[i]) fw.keep[static_cast<size_t>(i) * n + j] = 1;
  }

  // neighborhood pass: value-bearing attention over N_i + self, heads averaged
  Tensor agg;
  for (int h = 0; h < cfg_.gat_heads; ++h) {
    const GatHead& gh = gat_heads_[h];
    Tensor l = tape.matmul(z, gh.wl);
    Tensor r = tape.matmul(z, gh.wr);
    Tensor s = tape.gatv2_pair_scores(l, r, gh.a, cfg_.leaky_slope);
    Tensor p = tape.masked_softmax(s, fw.keep);
    Tensor hh = tape.matmul(p, z);
    agg = h == 0 ? hh : tape.add(agg, hh);
  }
  Tensor h_loc = tape.tanh(tape.scale(agg, 1.0 / cfg_.gat_heads));

  // graph-level pooling of the local pass
  Tensor pool_scores = tape.transpose(tape.matmul_nt(h_loc, h_va_));  // 1 x n
  Tensor pool_w = tape.softmax(pool_scores);
  Tensor h_gat_glob = tape.matmul(pool_w, h_loc);  // 1 x d

  // fuse both scales
  Tensor h_star = tape.add(enc.nodes, h_loc);
  Tensor g_star = tape.matmul(tape.concat_cols(enc.global, h_gat_glob), w_a_);  // 1 x d

  fw.value = tape.add(tape.matmul(g_star, value_w_), value_b_);

  Tensor q_in = tape.concat_cols(h_star, tape.repeat_row(g_star, n));
  Tensor q = tape.matmul(q_in, wq_);
  Tensor k = tape.matmul(h_star, wk_);
  fw.scores = tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
  fw.probs = tape.masked_softmax(fw.scores, fw.keep);
  return fw;
}

TransferActResult TransferModel::act(Tape& tape, const GameGraph& g, const GameState& obs,
                                     DecodeMode mode, Rng* rng) const {
  if (mode == DecodeMode::Sample && rng == nullptr)
    throw std::invalid_argument("transfer act: sampling needs an rng");
  Forward fw = forward(tape, g, obs);

  TransferActResult res;
  res.value = fw.value.value();
  res.plan = identity_plan(g.n);

  // log-density accumulated with the same arithmetic evaluate() replays, so
  // re-scoring the action under unchanged parameters reproduces it exactly
  double sigma = cfg_.logit_noise_sigma;
  double logp_quad = 0.0;
  size_t total_entries = 0;
  for (int i = 0; i < g.n; ++i) {
    if (obs.red[i] <= 0.0) continue;  // nothing to move; identity row stands
    std::vector<int> cand = candidates(g, i);
    res.plan.rows[i].clear();
    if (mode == DecodeMode::Greedy) {
      for (int j : cand) res.plan.rows[i][j] = fw.probs.at(i, j);
    } else {
      std::vector<double> pert(cand.size());
      double sq = 0.0;
      for (size_t k = 0; k < cand.size(); ++k) {
        double e = fw.scores.at(i, cand[k]);
        pert[k] = e + sigma * rng->normal();
        double diff = pert[k] - e;
        sq += diff * diff;
      }
      logp_quad += sq * (-0.5 / (sigma * sigma));
      total_entries += cand.size();
      // softmax of the perturbed logits is the executed move
      double mx = *std::max_element(pert.begin(), pert.end());
      double zsum = 0.0;
      std::vector<double> ex(cand.size());
      for (size_t k = 0; k < cand.size(); ++k) {
        ex[k] = std::exp(pert[k] - mx);
        zsum += ex[k];
      }
      for (size_t k = 0; k < cand.size(); ++k) res.plan.rows[i][cand[k]] = ex[k] / zsum;
      res.action.sources.push_back(i);
      res.action.logits.push_back(std::move(pert));
    }
    // pin the self entry to the retained remainder exactly
    double out_sum = 0.0;
    for (const auto& [j, mu] : res.plan.rows[i])
      if (j != i) out_sum += mu;
    res.plan.rows[i][i] = 1.0 - out_sum;
  }
  if (mode == DecodeMode::Sample && !res.action.sources.empty())
    res.log_prob = logp_quad - static_cast<double>(total_entries) * (std::log(sigma) + kLogSqrt2Pi);
  return res;
}

TransferEval TransferModel::evaluate(Tape& tape, const GameGraph& g, const GameState& obs,
                                     const TransferAction& action) const {
  Forward fw = forward(tape, g, obs);
  double sigma = cfg_.logit_noise_sigma;

  TransferEval ev;
  ev.value = fw.value;
  Tensor logp;
  Tensor ent_acc;
  size_t total_entries = 0;
  for (size_t s = 0; s < action.sources.size(); ++s) {
    int i = action.sources[s];
    std::vector<int> cand = candidates(g, i);
    if (cand.size() != action.logits[s].size())
      throw std::invalid_argument("transfer evaluate: action row size mismatch");
    Tensor e_row = tape.row_gather(fw.scores, i, cand);
    Tensor given = tape.constant(1, static_cast<int>(cand.size()), action.logits[s]);
    Tensor diff = tape.sub(given, e_row);
    Tensor quad = tape.scale(tape.sum(tape.mul(diff, diff)), -0.5 / (sigma * sigma));
    logp = s == 0 ? quad : tape.add(logp, quad);
    total_entries += cand.size();

    Tensor p_row = tape.row_gather(fw.probs, i, cand);
    Tensor row_ent = tape.scale(tape.sum(tape.xlogx(p_row)), -1.0);
    ent_acc = s == 0 ? row_ent : tape.add(ent_acc, row_ent);
  }
  if (action.sources.empty()) {
    ev.log_prob = tape.constant_scalar(0.0);
    ev.entropy = tape.constant_scalar(0.0);
  } else {
    double norm = -static_cast<double>(total_entries) * (std::log(sigma) + kLogSqrt2Pi);
    ev.log_prob = tape.add_const(logp, norm);
    ev.entropy = ent_acc;
  }
  return ev;
}

}  // namespace blotto
