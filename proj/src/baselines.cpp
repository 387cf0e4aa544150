#include "blotto/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "blotto/rng.hpp"
#include "blotto/training.hpp"

namespace blotto {

namespace {

bool is_free(const Allocation& blue, int i) { return blue.amounts[i] <= 0.0; }

// controlled value of a contested-subset opening, summed in ascending node
// order (the same order the combat-resolution accounting uses)
double subset_value(const GameGraph& g, const Allocation& blue, const std::vector<char>& sel) {
  double v = 0.0;
  for (int i = 0; i < g.n; ++i)
    if (sel[i] || is_free(blue, i)) v += g.values[i];
  return v;
}

double subset_cost(const GameGraph& g, const Allocation& blue, const std::vector<char>& sel) {
  double c = 0.0;
  for (int i = 0; i < g.n; ++i)
    if (sel[i] && !is_free(blue, i)) c += blue.amounts[i];
  return c;
}

constexpr double kBudgetSlack = 1e-9;

}  // namespace

Allocation greedy_alloc(const GameGraph& g, const Allocation& blue, double budget) {
  if (static_cast<int>(blue.amounts.size()) != g.n)
    throw std::invalid_argument("greedy_alloc: blue allocation size mismatch");
  std::vector<int> order(g.n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    bool fa = is_free(blue, a), fb = is_free(blue, b);
    if (fa != fb) return fa;
    if (fa) {
      if (g.values[a] != g.values[b]) return g.values[a] > g.values[b];
      return a < b;
    }
    // density v/cost compared by cross products
    double lhs = g.values[a] * blue.amounts[b];
    double rhs = g.values[b] * blue.amounts[a];
    if (lhs != rhs) return lhs > rhs;
    if (g.values[a] != g.values[b]) return g.values[a] > g.values[b];
    return a < b;
  });

  Allocation red;
  red.amounts.assign(g.n, 0.0);
  double remaining = budget;
  for (int i : order) {
    if (is_free(blue, i)) continue;  // red's by the tie rule at zero cost
    double cost = blue.amounts[i];
    if (cost <= remaining) {
      red.amounts[i] = cost;
      remaining -= cost;
    }
  }
  return red;
}

Allocation sa_alloc(const GameGraph& g, const Allocation& blue, double budget,
                    const SaConfig& cfg) {
  Allocation start = greedy_alloc(g, blue, budget);
  std::vector<char> sel(g.n, 0);
  std::vector<int> paid;
  for (int i = 0; i < g.n; ++i) {
    if (is_free(blue, i)) {
      sel[i] = 1;
    } else {
      sel[i] = start.amounts[i] > 0.0;
      paid.push_back(i);
    }
  }
  std::vector<double> extra(g.n, 0.0);

  Rng rng(cfg.seed);
  double cur_val = subset_value(g, blue, sel);
  std::vector<char> best_sel = sel;
  std::vector<double> best_extra = extra;
  double best_val = cur_val;
  double temp = cfg.t0;

  for (int it = 0; it < cfg.iterations; ++it, temp *= cfg.cooling) {
    std::vector<char> cand = sel;
    if (cfg.move == SaMove::SwapNode) {
      std::vector<int> in, out;
      for (int i : paid) (sel[i] ? in : out).push_back(i);
      int kind = static_cast<int>(rng.uniform_int(3));
      if (kind == 0 && !out.empty()) {
        cand[out[rng.uniform_int(out.size())]] = 1;
      } else if (kind == 1 && !in.empty()) {
        cand[in[rng.uniform_int(in.size())]] = 0;
      } else if (kind == 2 && !in.empty() && !out.empty()) {
        cand[in[rng.uniform_int(in.size())]] = 0;
        cand[out[rng.uniform_int(out.size())]] = 1;
      }
      if (subset_cost(g, blue, cand) > budget + kBudgetSlack) continue;
      double cand_val = subset_value(g, blue, cand);
      double dv = cand_val - cur_val;
      if (dv >= 0.0 || rng.uniform01() < std::exp(dv / temp)) {
        sel = cand;
        cur_val = cand_val;
        if (cur_val > best_val) {
          best_val = cur_val;
          best_sel = sel;
          best_extra = extra;
        }
      }
    } else {
      // redistribute one node's committed surplus; value is unaffected
      std::vector<int> in;
      for (int i : paid)
        if (sel[i]) in.push_back(i);
      if (in.empty()) continue;
      int s = in[rng.uniform_int(in.size())];
      double others = 0.0;
      for (int i : paid)
        if (sel[i] && i != s) others += extra[i];
      double headroom = budget - subset_cost(g, blue, sel) - others;
      if (headroom < 0.0) headroom = 0.0;
      extra[s] = rng.uniform(0.0, headroom);
      best_extra = extra;
    }
  }

  Allocation red;
  red.amounts.assign(g.n, 0.0);
  for (int i : paid)
    if (best_sel[i]) red.amounts[i] = blue.amounts[i] + best_extra[i];
  return red;
}

ExactResult exact_alloc_small(const GameGraph& g, const Allocation& blue, double budget) {
  if (g.n > 20)
    throw std::invalid_argument("exact_alloc_small: " + std::to_string(g.n) +
                                " nodes (limit 20)");
  std::vector<int> paid;
  for (int i = 0; i < g.n; ++i)
    if (!is_free(blue, i)) paid.push_back(i);
  int p = static_cast<int>(paid.size());

  std::vector<char> sel(g.n, 0);
  for (int i = 0; i < g.n; ++i) sel[i] = is_free(blue, i);

  double best_val = -1.0;
  std::vector<int> best_subset;
  for (uint32_t mask = 0; mask < (1u << p); ++mask) {
    double cost = 0.0;
    for (int k = 0; k < p; ++k)
      if (mask & (1u << k)) cost += blue.amounts[paid[k]];
    if (cost > budget + kBudgetSlack) continue;
    for (int k = 0; k < p; ++k) sel[paid[k]] = (mask >> k) & 1u;
    double val = subset_value(g, blue, sel);
    std::vector<int> subset;
    for (int k = 0; k < p; ++k)
      if (mask & (1u << k)) subset.push_back(paid[k]);
    bool better = val > best_val;
    if (!better && val == best_val)
      better = std::lexicographical_compare(subset.begin(), subset.end(), best_subset.begin(),
                                            best_subset.end());
    if (better) {
      best_val = val;
      best_subset = std::move(subset);
    }
  }

  ExactResult res;
  res.subset = std::move(best_subset);
  res.value = best_val;
  res.alloc.amounts.assign(g.n, 0.0);
  for (int i : res.subset) res.alloc.amounts[i] = blue.amounts[i];
  return res;
}

namespace {

long long row_count(int bins, int steps) {
  // weak compositions of `steps` into `bins` parts: C(steps + bins - 1, bins - 1)
  long long r = 1;
  for (int i = 1; i < bins; ++i) r = r * (steps + i) / i;
  return r;
}

std::vector<int> row_candidates(const GameGraph& g, int i) {
  std::vector<int> cand = g.adj[i];
  cand.insert(std::lower_bound(cand.begin(), cand.end(), i), i);
  return cand;
}

}  // namespace

TransferPlan myopic_transfer(const GameGraph& g, const GameState& state,
                             const MyopicConfig& cfg) {
  if (g.n > cfg.max_nodes)
    throw std::invalid_argument("myopic_transfer: " + std::to_string(g.n) + " nodes (limit " +
                                std::to_string(cfg.max_nodes) + ")");
  if (cfg.grid_steps < 1) throw std::invalid_argument("myopic_transfer: grid_steps must be >= 1");

  std::vector<int> sources;
  long long total_rows = 0;
  for (int i = 0; i < g.n; ++i)
    if (state.red[i] > 0.0) {
      sources.push_back(i);
      total_rows += row_count(g.degree[i] + 1, cfg.grid_steps);
    }
  if (total_rows > cfg.search_budget)
    throw std::invalid_argument("myopic_transfer: " + std::to_string(total_rows) +
                                " candidate rows exceed search budget " +
                                std::to_string(cfg.search_budget));

  TransferPlan blue_hold = identity_plan(g.n);
  TransferPlan result = identity_plan(g.n);

  for (int i : sources) {
    std::vector<int> cand = row_candidates(g, i);
    TransferPlan probe = identity_plan(g.n);
    auto score_row = [&](const std::map<int, double>& row) {
      probe.rows[i] = row;
      GameState next = apply_transfers(g, state, probe, blue_hold);
      return transfer_reward(g, state, next, next.red_cost - state.red_cost, cfg.alpha_s);
    };

    double best_score = score_row(result.rows[i]);  // holding is the bar to beat
    std::map<int, double> best_row = result.rows[i];

    std::vector<int> q(cand.size(), 0);
    // depth-first over fraction grids q/steps, earliest candidate varies slowest
    auto enumerate = [&](auto&& self, size_t pos, int left) -> void {
      if (pos + 1 == q.size()) {
        q[pos] = left;
        std::map<int, double> row;
        double out_sum = 0.0;
        for (size_t k = 0; k < cand.size(); ++k) {
          if (cand[k] == i) continue;
          double mu = static_cast<double>(q[k]) / cfg.grid_steps;
          row[cand[k]] = mu;
          out_sum += mu;
        }
        row[i] = 1.0 - out_sum;
        double sc = score_row(row);
        if (sc > best_score) {
          best_score = sc;
          best_row = std::move(row);
        }
        return;
      }
      for (int v = 0; v <= left; ++v) {
        q[pos] = v;
        self(self, pos + 1, left - v);
      }
    };
    enumerate(enumerate, 0, cfg.grid_steps);
    result.rows[i] = std::move(best_row);
  }
  return result;
}

}  // namespace blotto
