#include "blotto/game.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace blotto {

namespace {
constexpr double kBudgetSlack = 1e-9;  // absorbs fp dust from proportional splits

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double vec_total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}
}  // namespace

double Allocation::total() const { return vec_total(amounts); }
double GameState::red_total() const { return vec_total(red); }
double GameState::blue_total() const { return vec_total(blue); }

TransferPlan identity_plan(int n) {
  TransferPlan p;
  p.rows.resize(n);
  for (int i = 0; i < n; ++i) p.rows[i][i] = 1.0;
  return p;
}

void validate_allocation(const GameGraph& g, const Allocation& a, double budget) {
  if (static_cast<int>(a.amounts.size()) != g.n)
    throw std::invalid_argument("allocation: size " + std::to_string(a.amounts.size()) +
                                " does not match node count " + std::to_string(g.n));
  double total = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double x = a.amounts[i];
    if (!(x >= 0.0) || !std::isfinite(x))
      throw std::invalid_argument("allocation: negative or non-finite amount at node " +
                                  std::to_string(i));
    total += x;
  }
  if (total > budget * (1.0 + kBudgetSlack) + kBudgetSlack)
    throw std::invalid_argument("allocation: total " + fmt_double(total) + " exceeds budget " +
                                fmt_double(budget));
}

void validate_plan(const GameGraph& g, const TransferPlan& p) {
  if (static_cast<int>(p.rows.size()) != g.n)
    throw std::invalid_argument("plan: row count " + std::to_string(p.rows.size()) +
                                " does not match node count " + std::to_string(g.n));
  for (int i = 0; i < g.n; ++i) {
    double out_sum = 0.0;
    double self = 0.0;
    bool has_self = false;
    for (const auto& [j, mu] : p.rows[i]) {
      if (!(mu >= 0.0) || !std::isfinite(mu))
        throw std::invalid_argument("plan: negative or non-finite fraction in row " +
                                    std::to_string(i));
      if (j == i) {
        self = mu;
        has_self = true;
      } else {
        if (!g.has_edge(i, j))
          throw std::invalid_argument("plan: row " + std::to_string(i) +
                                      " sends to non-neighbor " + std::to_string(j));
        out_sum += mu;
      }
    }
    if (out_sum > 1.0 + 1e-9)
      throw std::invalid_argument("plan: row " + std::to_string(i) + " sends more than its stock");
    if (!has_self || std::fabs(self - (1.0 - out_sum)) > 1e-9)
      throw std::invalid_argument("plan: row " + std::to_string(i) +
                                  " self entry is not the retained remainder");
  }
}

namespace {
// combat at every node: red keeps ties, loser's stake is removed
void resolve_combat(std::vector<double>& red, std::vector<double>& blue) {
  for (size_t i = 0; i < red.size(); ++i) {
    if (red[i] >= blue[i])
      blue[i] = 0.0;
    else
      red[i] = 0.0;
  }
}
}  // namespace

GameState resolve_initial(const GameGraph& g, const Allocation& blue, const Allocation& red,
                          double blue_budget, double red_budget) {
  validate_allocation(g, blue, blue_budget);
  validate_allocation(g, red, red_budget);
  GameState s;
  s.red = red.amounts;
  s.blue = blue.amounts;
  resolve_combat(s.red, s.blue);
  s.round = 1;
  return s;
}

MoveOutcome transfer_temp_levels(const GameGraph& g, const std::vector<double>& levels,
                                 const TransferPlan& plan) {
  if (static_cast<int>(levels.size()) != g.n)
    throw std::invalid_argument("transfer_temp_levels: level count mismatch");
  MoveOutcome out;
  out.levels = levels;
  for (int i = 0; i < g.n; ++i) {
    double stock = levels[i];
    if (stock <= 0.0) continue;
    for (const auto& [j, mu] : plan.rows[i]) {
      if (j == i || mu == 0.0) continue;
      double amount = mu * stock;
      out.levels[i] -= amount;
      out.levels[j] += amount;
      out.cost += g.edge_weight(i, j) * amount;
    }
  }
  for (double& x : out.levels) {
    if (x < 0.0) {
      if (x > -1e-9)
        x = 0.0;  // rounding dust from rows that send everything away
      else
        throw std::runtime_error("transfer_temp_levels: negative stock after move");
    }
  }
  return out;
}

GameState apply_transfers(const GameGraph& g, const GameState& state, const TransferPlan& red_plan,
                          const TransferPlan& blue_plan) {
  validate_plan(g, red_plan);
  validate_plan(g, blue_plan);
  MoveOutcome red_move = transfer_temp_levels(g, state.red, red_plan);
  MoveOutcome blue_move = transfer_temp_levels(g, state.blue, blue_plan);
  GameState next;
  next.red = std::move(red_move.levels);
  next.blue = std::move(blue_move.levels);
  resolve_combat(next.red, next.blue);
  next.round = state.round + 1;
  next.red_cost = state.red_cost + red_move.cost;
  next.blue_cost = state.blue_cost + blue_move.cost;
  return next;
}

double controlled_value_red(const GameGraph& g, const GameState& s) {
  double v = 0.0;
  for (int i = 0; i < g.n; ++i)
    if (s.red[i] >= s.blue[i]) v += g.values[i];
  return v;
}

double controlled_value_blue(const GameGraph& g, const GameState& s) {
  double v = 0.0;
  for (int i = 0; i < g.n; ++i)
    if (s.blue[i] > s.red[i]) v += g.values[i];
  return v;
}

UtilityReport compute_utilities(const GameGraph& g, const GameState& final_state) {
  UtilityReport r;
  r.red_value = controlled_value_red(g, final_state);
  r.blue_value = controlled_value_blue(g, final_state);
  r.red_cost = final_state.red_cost;
  r.blue_cost = final_state.blue_cost;
  r.red_utility = r.red_value - r.red_cost;
  r.blue_utility = r.blue_value - r.blue_cost;
  r.rounds_played = final_state.round > 0 ? final_state.round - 1 : 0;
  return r;
}

Allocation blue_rule_alloc(const GameGraph& g, double budget) {
  Allocation a;
  a.amounts.assign(g.n, 0.0);
  double vsum = vec_total(g.values);
  if (vsum > 0.0) {
    for (int i = 0; i < g.n; ++i) a.amounts[i] = budget * g.values[i] / vsum;
  } else {
    for (int i = 0; i < g.n; ++i) a.amounts[i] = budget / g.n;
  }
  return a;
}

namespace {
// shared doctrine: each held node sends beta of its stock toward neighbors
// that flipped to the enemy since prev, split by value (evenly if those
// values are all zero)
TransferPlan rule_transfer(const GameGraph& g, const std::vector<double>& own,
                           const std::vector<double>& own_prev,
                           const std::vector<double>& enemy, double beta) {
  TransferPlan plan = identity_plan(g.n);
  for (int i = 0; i < g.n; ++i) {
    if (own[i] <= 0.0) continue;
    std::vector<int> lost;
    for (int j : g.adj[i])
      if (own_prev[j] > 0.0 && own[j] <= 0.0 && enemy[j] > 0.0) lost.push_back(j);
    if (lost.empty()) continue;
    double vsum = 0.0;
    for (int j : lost) vsum += g.values[j];
    plan.rows[i].clear();
    double sent = 0.0;
    for (int j : lost) {
      double share = vsum > 0.0 ? beta * g.values[j] / vsum : beta / lost.size();
      plan.rows[i][j] = share;
      sent += share;
    }
    plan.rows[i][i] = 1.0 - sent;
  }
  return plan;
}
}  // namespace

TransferPlan blue_rule_transfer(const GameGraph& g, const GameState& state, const GameState& prev,
                                double beta) {
  return rule_transfer(g, state.blue, prev.blue, state.red, beta);
}

TransferPlan red_rule_transfer(const GameGraph& g, const GameState& state, const GameState& prev,
                               double beta) {
  return rule_transfer(g, state.red, prev.red, state.blue, beta);
}

std::string trace_to_string(const EpisodeTrace& t) {
  std::ostringstream out;
  auto levels = [&](const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += " ";
      s += fmt_double(v[i]);
    }
    return s;
  };
  out << "placement blue " << levels(t.blue_alloc) << "\n";
  out << "placement red " << levels(t.red_alloc) << "\n";
  for (const auto& r : t.rounds) {
    out << "round " << r.round << " red " << levels(r.red) << " blue " << levels(r.blue)
        << " cost_red " << fmt_double(r.red_round_cost) << " cost_blue "
        << fmt_double(r.blue_round_cost) << "\n";
  }
  return out.str();
}

void save_trace(const EpisodeTrace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trace: cannot open " + path);
  out << trace_to_string(t);
}

EpisodeResult run_episode(const Scenario& sc, const BlueAllocPolicy& blue_alloc_policy,
                          const RedAllocPolicy& red_alloc_policy,
                          const TransferPolicy& blue_transfer_policy,
                          const TransferPolicy& red_transfer_policy) {
  const GameGraph& g = sc.graph;
  Allocation blue = blue_alloc_policy(g, sc.blue_budget);
  validate_allocation(g, blue, sc.blue_budget);
  Allocation red = red_alloc_policy(g, blue, sc.red_budget);
  validate_allocation(g, red, sc.red_budget);

  EpisodeResult res;
  res.trace.blue_alloc = blue.amounts;
  res.trace.red_alloc = red.amounts;

  GameState placement;  // round-0 view used as "previous" for round 1 rules
  placement.red = red.amounts;
  placement.blue = blue.amounts;

  GameState state = resolve_initial(g, blue, red, sc.blue_budget, sc.red_budget);
  res.trace.rounds.push_back({state.round, state.red, state.blue, 0.0, 0.0});

  GameState prev = placement;
  for (int t = 1; t <= sc.max_rounds; ++t) {
    if (state.red_total() <= 0.0 || state.blue_total() <= 0.0) break;

    TransferPlan blue_plan = blue_transfer_policy(g, state, prev);
    // red observes blue's already-moved levels, but not the combat outcome
    GameState obs = state;
    MoveOutcome blue_peek = transfer_temp_levels(g, state.blue, blue_plan);
    obs.blue = blue_peek.levels;
    TransferPlan red_plan = red_transfer_policy(g, obs, prev);

    GameState next;
    try {
      next = apply_transfers(g, state, red_plan, blue_plan);
    } catch (const std::exception& e) {
      throw std::runtime_error("episode aborted at round " + std::to_string(t) + ": " + e.what());
    }
    res.trace.rounds.push_back({next.round, next.red, next.blue,
                                next.red_cost - state.red_cost,
                                next.blue_cost - state.blue_cost});
    prev = state;
    state = next;
  }

  res.report = compute_utilities(g, state);
  res.final_state = state;
  return res;
}

}  // namespace blotto
