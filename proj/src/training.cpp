#include "blotto/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace blotto {

using nn::Tape;
using nn::Tensor;

namespace {

// rng stream tags, one per consumer so phases can share a master seed
constexpr uint64_t kPlannerNoiseTag = 0xA1;
constexpr uint64_t kTransferNoiseTag = 0xB2;

void maybe_checkpoint(const nn::ParamStore& store, int every, const std::string& prefix,
                      int iter) {
  if (every <= 0 || prefix.empty()) return;
  if ((iter + 1) % every != 0) return;
  char num[16];
  std::snprintf(num, sizeof num, "%06d", iter + 1);
  store.save(prefix + num + ".ckpt");
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double planner_return(const GameGraph& g, const GameState& post_initial) {
  return controlled_value_red(g, post_initial);
}

double transfer_reward(const GameGraph& g, const GameState& s_t, const GameState& s_next,
                       double red_round_cost, double alpha_s, RewardParts* parts) {
  RewardParts p;
  p.delta_control = controlled_value_red(g, s_next) - controlled_value_red(g, s_t);
  double rr = s_t.red_total();
  double rb = s_t.blue_total();
  p.ratio_term = (rr + rb) > 0.0 ? alpha_s * (rr - rb) / (rr + rb) : 0.0;
  p.cost_term = rr > 0.0 ? red_round_cost / rr : 0.0;
  if (parts) *parts = p;
  return p.delta_control + p.ratio_term - p.cost_term;
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("compute_gae: rewards/values length mismatch");
  int T = static_cast<int>(rewards.size());
  GaeResult out;
  out.advantages.assign(T, 0.0);
  out.returns.assign(T, 0.0);
  double carry = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    double v_next = t + 1 < T ? values[t + 1] : 0.0;  // terminal episode
    double delta = rewards[t] + gamma * v_next - values[t];
    carry = delta + gamma * lambda * carry;
    out.advantages[t] = carry;
    out.returns[t] = carry + values[t];
  }
  return out;
}

Scenario ScenarioStream::make(uint64_t iteration, uint64_t index) const {
  ScenarioConfig cfg = base;
  cfg.rng_seed = derive_seed(master_seed, tag, iteration, index);
  return make_scenario(cfg);
}

std::string curve_to_csv(const TrainCurve& curve) {
  std::string out = "iteration,mean_return,loss_policy,loss_value,loss_entropy,skipped\n";
  for (const TrainLogRow& r : curve.rows) {
    out += std::to_string(r.iteration);
    out += ',';
    out += fmt_g(r.mean_return);
    out += ',';
    out += fmt_g(r.loss_policy);
    out += ',';
    out += fmt_g(r.loss_value);
    out += ',';
    out += fmt_g(r.loss_entropy);
    out += ',';
    out += std::to_string(r.skipped);
    out += '\n';
  }
  return out;
}

void save_curve(const TrainCurve& curve, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << curve_to_csv(curve);
  if (!f) throw std::runtime_error("write failed: " + path);
}

TrainCurve train_planner_reinforce(const ScenarioStream& stream, PlannerModel& model,
                                   const ReinforceConfig& cfg) {
  TrainCurve curve;
  model.store().zero_grads();
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    double sum_ret = 0.0, sum_pol = 0.0, sum_val = 0.0;
    int skipped = 0;
    for (int ep = 0; ep < cfg.batch; ++ep) {
      Scenario sc = stream.make(static_cast<uint64_t>(iter), static_cast<uint64_t>(ep));
      const GameGraph& g = sc.graph;
      Allocation blue = blue_rule_alloc(g, sc.blue_budget);
      Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(iter), static_cast<uint64_t>(ep),
                          kPlannerNoiseTag));
      Tape tape;
      PlannerDecision dec = model.plan(tape, g, blue, sc.red_budget, DecodeMode::Sample, &rng);
      Allocation red = model.decision_to_allocation(g, dec);
      GameState st = resolve_initial(g, blue, red, sc.blue_budget, sc.red_budget);
      double ret = planner_return(g, st);

      Tensor b = model.baseline(tape, dec.global_embedding);
      double adv = ret - b.value();
      Tensor err = tape.sub(b, tape.constant_scalar(ret));
      Tensor loss = tape.scale(tape.mul(err, err), cfg.baseline_coef / cfg.batch);
      sum_val += cfg.baseline_coef * err.value() * err.value();
      if (dec.sum_log_prob.defined()) {
        Tensor pol = tape.scale(dec.sum_log_prob, -adv / cfg.batch);
        loss = tape.add(pol, loss);
        sum_pol += -adv * dec.sum_log_prob.value();
      }
      sum_ret += ret;
      tape.backward(loss);
    }
    nn::AdamStatus status = model.store().adam_step(cfg.lr);
    if (!status.applied) {
      ++skipped;
      if (cfg.log_stderr)
        std::fprintf(stderr, "[reinforce] iter %d: non-finite gradient in %s, update skipped\n",
                     iter, status.bad_param.c_str());
    }
    curve.rows.push_back({iter + 1, sum_ret / cfg.batch, sum_pol / cfg.batch, sum_val / cfg.batch,
                          0.0, skipped});
    maybe_checkpoint(model.store(), cfg.checkpoint_every, cfg.checkpoint_prefix, iter);
  }
  return curve;
}

namespace {

struct PpoStep {
  GameState obs;
  TransferAction action;
  double logp_old = 0.0;
  double value = 0.0;
  double reward = 0.0;
};

struct PpoEpisode {
  Scenario sc;
  std::vector<PpoStep> steps;
  std::vector<double> adv, ret;
  double total_reward = 0.0;
};

PpoEpisode ppo_rollout(const ScenarioStream& stream, const PlannerModel& planner,
                       const TransferModel& model, const PpoTrainConfig& cfg, int iter, int ep) {
  PpoEpisode E;
  E.sc = stream.make(static_cast<uint64_t>(iter), static_cast<uint64_t>(ep));
  const GameGraph& g = E.sc.graph;
  Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(iter), static_cast<uint64_t>(ep),
                      kTransferNoiseTag));

  Allocation blue = blue_rule_alloc(g, E.sc.blue_budget);
  Allocation red;
  {
    Tape ptape;
    PlannerDecision dec = planner.plan(ptape, g, blue, E.sc.red_budget, DecodeMode::Greedy);
    red = planner.decision_to_allocation(g, dec);
  }

  GameState placement;
  placement.red = red.amounts;
  placement.blue = blue.amounts;

  GameState state = resolve_initial(g, blue, red, E.sc.blue_budget, E.sc.red_budget);
  GameState prev = placement;
  for (int t = 1; t <= E.sc.max_rounds; ++t) {
    if (state.red_total() <= 0.0 || state.blue_total() <= 0.0) break;
    TransferPlan blue_plan = blue_rule_transfer(g, state, prev);
    GameState obs = state;
    obs.blue = transfer_temp_levels(g, state.blue, blue_plan).levels;

    Tape tape;
    TransferActResult act = model.act(tape, g, obs, DecodeMode::Sample, &rng);
    GameState next = apply_transfers(g, state, act.plan, blue_plan);

    PpoStep step;
    step.obs = std::move(obs);
    step.action = std::move(act.action);
    step.logp_old = act.log_prob;
    step.value = act.value;
    step.reward = transfer_reward(g, state, next, next.red_cost - state.red_cost, cfg.alpha_s);
    E.total_reward += step.reward;
    E.steps.push_back(std::move(step));

    prev = state;
    state = next;
  }

  std::vector<double> rewards, values;
  rewards.reserve(E.steps.size());
  values.reserve(E.steps.size());
  for (const PpoStep& s : E.steps) {
    rewards.push_back(s.reward);
    values.push_back(s.value);
  }
  GaeResult gae = compute_gae(rewards, values, cfg.gamma, cfg.gae_lambda);
  E.adv = std::move(gae.advantages);
  E.ret = std::move(gae.returns);
  return E;
}

}  // namespace

TrainCurve train_transfer_ppo(const ScenarioStream& stream, const PlannerModel& frozen_planner,
                              TransferModel& model, const PpoTrainConfig& cfg) {
  TrainCurve curve;
  model.store().zero_grads();
  const double inv_m = 1.0 / cfg.batch_episodes;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::vector<PpoEpisode> episodes;
    episodes.reserve(cfg.batch_episodes);
    double sum_reward = 0.0;
    for (int ep = 0; ep < cfg.batch_episodes; ++ep) {
      episodes.push_back(ppo_rollout(stream, frozen_planner, model, cfg, iter, ep));
      sum_reward += episodes.back().total_reward;
    }

    if (cfg.normalize_advantages) {
      double mean = 0.0;
      int n = 0;
      for (const PpoEpisode& E : episodes)
        for (double a : E.adv) {
          mean += a;
          ++n;
        }
      if (n > 0) {
        mean /= n;
        double var = 0.0;
        for (const PpoEpisode& E : episodes)
          for (double a : E.adv) var += (a - mean) * (a - mean);
        double sd = std::sqrt(var / n);
        for (PpoEpisode& E : episodes)
          for (double& a : E.adv) a = (a - mean) / (sd + 1e-8);
      }
    }

    double lp = 0.0, lv = 0.0, ls = 0.0;
    int skipped = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      lp = lv = ls = 0.0;
      for (PpoEpisode& E : episodes) {
        if (E.steps.empty()) continue;
        Tape tape;
        Tensor ep_loss;
        for (size_t s = 0; s < E.steps.size(); ++s) {
          const PpoStep& st = E.steps[s];
          TransferEval ev = model.evaluate(tape, E.sc.graph, st.obs, st.action);
          Tensor ratio = tape.exp(tape.add_const(ev.log_prob, -st.logp_old));
          if (!std::isfinite(ratio.value())) {
            ++skipped;
            if (cfg.log_stderr)
              std::fprintf(stderr, "[ppo] iter %d epoch %d: non-finite ratio, sample dropped\n",
                           iter, epoch);
            continue;
          }
          double a = E.adv[s];
          Tensor surr1 = tape.scale(ratio, a);
          Tensor surr2 = tape.scale(tape.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps), a);
          Tensor clip_term = tape.minimum(surr1, surr2);
          Tensor verr = tape.sub(ev.value, tape.constant_scalar(E.ret[s]));
          Tensor vloss = tape.mul(verr, verr);
          Tensor step_loss = tape.add(
              tape.scale(clip_term, -1.0),
              tape.add(tape.scale(vloss, cfg.value_coef), tape.scale(ev.entropy, -cfg.entropy_coef)));
          ep_loss = ep_loss.defined() ? tape.add(ep_loss, step_loss) : step_loss;
          lp += clip_term.value();
          lv += vloss.value();
          ls += ev.entropy.value();
        }
        if (!ep_loss.defined()) continue;
        tape.backward(tape.scale(ep_loss, inv_m));
      }
      nn::AdamStatus status = model.store().adam_step(cfg.lr);
      if (!status.applied) {
        ++skipped;
        if (cfg.log_stderr)
          std::fprintf(stderr, "[ppo] iter %d epoch %d: non-finite gradient in %s, update skipped\n",
                       iter, epoch, status.bad_param.c_str());
      }
    }
    // loss components from the last epoch, normalized the way the loss is
    curve.rows.push_back({iter + 1, sum_reward * inv_m, -lp * inv_m, lv * inv_m, ls * inv_m, skipped});
    maybe_checkpoint(model.store(), cfg.checkpoint_every, cfg.checkpoint_prefix, iter);
  }
  return curve;
}

TrainCurve lfrt_feedback(const ScenarioStream& stream, PlannerModel& model,
                         const TransferModel& frozen_transfer, const FeedbackConfig& cfg) {
  TrainCurve curve;
  model.store().zero_grads();
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    double sum_ret = 0.0, sum_pol = 0.0, sum_val = 0.0;
    int skipped = 0;
    for (int ep = 0; ep < cfg.batch; ++ep) {
      Scenario sc = stream.make(static_cast<uint64_t>(iter), static_cast<uint64_t>(ep));
      const GameGraph& g = sc.graph;
      Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(iter), static_cast<uint64_t>(ep),
                          kPlannerNoiseTag));
      Tape tape;
      PlannerDecision dec;
      auto blue_pol = [](const GameGraph& gg, double budget) {
        return blue_rule_alloc(gg, budget);
      };
      auto red_pol = [&](const GameGraph& gg, const Allocation& bl, double budget) {
        dec = model.plan(tape, gg, bl, budget, DecodeMode::Sample, &rng);
        return model.decision_to_allocation(gg, dec);
      };
      auto blue_tr = [](const GameGraph& gg, const GameState& st, const GameState& pv) {
        return blue_rule_transfer(gg, st, pv);
      };
      auto red_tr = [&](const GameGraph& gg, const GameState& obs, const GameState&) {
        Tape t2;
        return frozen_transfer.act(t2, gg, obs, DecodeMode::Greedy).plan;
      };
      EpisodeResult res = run_episode(sc, blue_pol, red_pol, blue_tr, red_tr);

      GameState opening;
      opening.red = res.trace.rounds.front().red;
      opening.blue = res.trace.rounds.front().blue;
      // dynamic-stage term reads the same controlled-value metric the eval
      // tables report, keeping both training phases on one objective scale
      double ret = planner_return(g, opening) + cfg.lambda * res.report.red_value;

      Tensor b = model.baseline(tape, dec.global_embedding);
      double adv = ret - b.value();
      Tensor err = tape.sub(b, tape.constant_scalar(ret));
      Tensor loss = tape.scale(tape.mul(err, err), cfg.baseline_coef / cfg.batch);
      sum_val += cfg.baseline_coef * err.value() * err.value();
      if (dec.sum_log_prob.defined()) {
        Tensor pol = tape.scale(dec.sum_log_prob, -adv / cfg.batch);
        loss = tape.add(pol, loss);
        sum_pol += -adv * dec.sum_log_prob.value();
      }
      sum_ret += ret;
      tape.backward(loss);
    }
    nn::AdamStatus status = model.store().adam_step(cfg.lr);
    if (!status.applied) {
      ++skipped;
      if (cfg.log_stderr)
        std::fprintf(stderr, "[feedback] iter %d: non-finite gradient in %s, update skipped\n",
                     iter, status.bad_param.c_str());
    }
    curve.rows.push_back({iter + 1, sum_ret / cfg.batch, sum_pol / cfg.batch, sum_val / cfg.batch,
                          0.0, skipped});
    maybe_checkpoint(model.store(), cfg.checkpoint_every, cfg.checkpoint_prefix, iter);
  }
  return curve;
}

}  // namespace blotto
