#include "blotto/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace blotto {

using nn::Tape;
using nn::Tensor;

PlannerModel::PlannerModel(const PlannerConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  int d = cfg.egte.dim;
  if (cfg.score_heads < 1 || d % cfg.score_heads != 0)
    throw std::invalid_argument("planner: score_heads must divide dim");
  if (cfg.win_margin < 0.0) throw std::invalid_argument("planner: negative win_margin");
  Rng rng(init_seed);
  egte_ = std::make_unique<Egte>(store_, "egte/", cfg.egte, rng);
  w_step_ = store_.add_uniform("dec/w_step", d + 1, d, rng, d + 1);
  w_fix_ = store_.add_uniform("dec/w_fix", d, d, rng, d);
  // the first-step context placeholder: checkpointed but never updated
  h_prev_ = store_.add("dec/h_prev", 1, d, /*trainable=*/false);
  wq_ = store_.add_uniform("dec/wq", d, d, rng, d);
  wk_ = store_.add_uniform("dec/wk", d, d, rng, d);
  wv_ = store_.add_uniform("dec/wv", d, d, rng, d);
  value_w_ = store_.add_uniform("value/w", d, 1, rng, d);
  value_b_ = store_.add("value/b", 1, 1);
}

Allocation PlannerModel::decision_to_allocation(const GameGraph& g, const PlannerDecision& d) const {
  Allocation a;
  a.amounts.assign(g.n, 0.0);
  for (size_t k = 0; k < d.selected.size(); ++k) a.amounts[d.selected[k]] = d.amounts[k];
  return a;
}

Tensor PlannerModel::baseline(Tape& tape, const std::vector<double>& global_embedding) const {
  Tensor emb = tape.constant(1, static_cast<int>(global_embedding.size()), global_embedding);
  return tape.add(tape.matmul(emb, value_w_), value_b_);
}

PlannerDecision PlannerModel::plan(Tape& tape, const GameGraph& g, const Allocation& blue,
                                   double budget, DecodeMode mode, Rng* rng) const {
  if (static_cast<int>(blue.amounts.size()) != g.n)
    throw std::invalid_argument("plan: blue allocation size mismatch");
  if (!(budget >= 0.0)) throw std::invalid_argument("plan: negative budget");
  if (mode == DecodeMode::Sample && rng == nullptr)
    throw std::invalid_argument("plan: sampling needs an rng");

  int n = g.n, d = cfg_.egte.dim;
  GameState s0;  // pre-game board: red not yet placed
  s0.red.assign(n, 0.0);
  s0.blue = blue.amounts;
  EgteOut enc = egte_->encode(tape, g, s0);

  PlannerDecision dec;
  dec.global_embedding = enc.global.values();

  std::vector<uint8_t> chosen(n, 0);
  double remaining = budget;
  Tensor prev = h_prev_;
  Tensor k_all = tape.matmul(enc.nodes, wk_);
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  int heads = cfg_.score_heads, dh = d / heads;
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  while (static_cast<int>(dec.selected.size()) < n) {
    std::vector<uint8_t> feasible(n, 0);
    bool any = false;
    for (int i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      if (blue.amounts[i] + cfg_.win_margin <= remaining) {
        feasible[i] = 1;
        any = true;
      }
    }
    if (!any) {
      dec.stop = remaining <= 0.0 ? StopReason::BudgetExhausted : StopReason::NoAffordableNode;
      return dec;
    }

    Tensor ctx_in = tape.concat_cols(prev, tape.constant_scalar(remaining));
    Tensor c = tape.add(tape.matmul(ctx_in, w_step_), tape.matmul(enc.global, w_fix_));
    Tensor q = tape.matmul(c, wq_);
    Tensor scores;
    if (heads == 1) {
      scores = tape.scale(tape.matmul_nt(q, k_all), inv_sqrt_d);
    } else {
      for (int hd = 0; hd < heads; ++hd) {
        Tensor qh = tape.slice_cols(q, hd * dh, (hd + 1) * dh);
        Tensor kh = tape.slice_cols(k_all, hd * dh, (hd + 1) * dh);
        Tensor sh = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
        scores = hd == 0 ? sh : tape.add(scores, sh);
      }
      scores = tape.scale(scores, 1.0 / heads);
    }
    Tensor probs = tape.masked_softmax(scores, feasible);

    int j = -1;
    if (mode == DecodeMode::Greedy) {
      double best = -1.0;
      for (int i = 0; i < n; ++i) {
        double p = probs.at(0, i);
        if (feasible[i] && p > best) {
          best = p;
          j = i;
        }
      }
    } else {
      j = rng->sample_index(probs.values());
    }
    if (j < 0 || !feasible[j]) throw std::logic_error("plan: selection failed");

    Tensor logp = tape.log(tape.pick(probs, 0, j));
    dec.sum_log_prob = dec.selected.empty() ? logp : tape.add(dec.sum_log_prob, logp);
    dec.log_probs.push_back(logp.value());

    double amount = blue.amounts[j] + cfg_.win_margin;
    dec.selected.push_back(j);
    dec.amounts.push_back(amount);
    chosen[j] = 1;
    remaining -= amount;
    prev = tape.rows_select(enc.nodes, {j});
  }
  dec.stop = StopReason::StepLimit;
  return dec;
}

PlannerModel::Score PlannerModel::score_selection(Tape& tape, const GameGraph& g,
                                                  const Allocation& blue, double budget,
                                                  const std::vector<int>& selected) const {
  if (static_cast<int>(blue.amounts.size()) != g.n)
    throw std::invalid_argument("score_selection: blue allocation size mismatch");

  int n = g.n, d = cfg_.egte.dim;
  GameState s0;
  s0.red.assign(n, 0.0);
  s0.blue = blue.amounts;
  EgteOut enc = egte_->encode(tape, g, s0);

  Score sc;
  sc.global = enc.global;

  std::vector<uint8_t> chosen(n, 0);
  double remaining = budget;
  Tensor prev = h_prev_;
  Tensor k_all = tape.matmul(enc.nodes, wk_);
  int heads = cfg_.score_heads, dh = d / heads;
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  for (size_t step = 0; step < selected.size(); ++step) {
    std::vector<uint8_t> feasible(n, 0);
    for (int i = 0; i < n; ++i)
      if (!chosen[i] && blue.amounts[i] + cfg_.win_margin <= remaining) feasible[i] = 1;

    Tensor ctx_in = tape.concat_cols(prev, tape.constant_scalar(remaining));
    Tensor c = tape.add(tape.matmul(ctx_in, w_step_), tape.matmul(enc.global, w_fix_));
    Tensor q = tape.matmul(c, wq_);
    Tensor scores;
    if (heads == 1) {
      scores = tape.scale(tape.matmul_nt(q, k_all), inv_sqrt_d);
    } else {
      for (int hd = 0; hd < heads; ++hd) {
        Tensor qh = tape.slice_cols(q, hd * dh, (hd + 1) * dh);
        Tensor kh = tape.slice_cols(k_all, hd * dh, (hd + 1) * dh);
        Tensor sh = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
        scores = hd == 0 ? sh : tape.add(scores, sh);
      }
      scores = tape.scale(scores, 1.0 / heads);
    }
    Tensor probs = tape.masked_softmax(scores, feasible);

    int j = selected[step];
    if (j < 0 || j >= n || !feasible[j])
      throw std::invalid_argument("score_selection: step " + std::to_string(step) +
                                  " picks an infeasible node");

    Tensor logp = tape.log(tape.pick(probs, 0, j));
    sc.sum_log_prob = step == 0 ? logp : tape.add(sc.sum_log_prob, logp);
    chosen[j] = 1;
    remaining -= blue.amounts[j] + cfg_.win_margin;
    prev = tape.rows_select(enc.nodes, {j});
  }
  return sc;
}

}  // namespace blotto
