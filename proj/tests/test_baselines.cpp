#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blotto/baselines.hpp"
#include "blotto/game.hpp"
#include "blotto/rng.hpp"

using namespace blotto;

namespace {

GameGraph path3() {
  return build_graph(3, {{0, 1, 0.2}, {1, 2, 0.4}}, {0.5, 1.0, 0.25});
}

Allocation alloc(std::vector<double> v) {
  Allocation a;
  a.amounts = std::move(v);
  return a;
}

double opening_value(const GameGraph& g, const Allocation& blue, const Allocation& red,
                     double blue_budget, double red_budget) {
  GameState s = resolve_initial(g, blue, red, blue_budget, red_budget);
  return controlled_value_red(g, s);
}

// all-subset reference: contest a set of paid nodes at exactly blue's stock
double brute_force_best(const GameGraph& g, const Allocation& blue, double budget) {
  double best = -1.0;
  int n = g.n;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Allocation red;
    red.amounts.assign(n, 0.0);
    double cost = 0.0;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      if (blue.amounts[i] <= 0.0) {
        ok = false;  // free nodes are red's anyway; skip duplicate subsets
        continue;
      }
      red.amounts[i] = blue.amounts[i];
      cost += blue.amounts[i];
    }
    if (!ok || cost > budget + 1e-9) continue;
    double v = opening_value(g, blue, red, blue.total(), budget);
    if (v > best) best = v;
  }
  return best;
}

}  // namespace

TEST_CASE("greedy contests by value density and skips what it cannot afford") {
  GameGraph g = path3();
  Allocation blue = alloc({2.0, 1.0, 1.0});
  Allocation red = greedy_alloc(g, blue, 2.0);
  // densities: node1 1.0, nodes 0 and 2 tie at 0.25, value breaks the tie;
  // node0 costs 2 and only 1 is left after node1, so node2 gets it
  CHECK(red.amounts == std::vector<double>{0.0, 1.0, 1.0});
  CHECK(opening_value(g, blue, red, 4.0, 2.0) == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("greedy leaves free nodes alone and still wins them") {
  GameGraph g = path3();
  Allocation blue = alloc({0.0, 1.0, 0.0});
  Allocation red = greedy_alloc(g, blue, 0.5);  // cannot afford node 1
  CHECK(red.amounts == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(opening_value(g, blue, red, 1.0, 0.5) == doctest::Approx(0.75).epsilon(1e-12));

  // with budget it contests the paid node too
  Allocation red2 = greedy_alloc(g, blue, 1.0);
  CHECK(red2.amounts == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(opening_value(g, blue, red2, 1.0, 1.0) == doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("under a saturating budget greedy takes every node") {
  Rng rng(90);
  for (int trial = 0; trial < 10; ++trial) {
    ScenarioConfig cfg;
    cfg.n_nodes = 4 + trial % 3;
    cfg.rng_seed = derive_seed(90, trial);
    Scenario sc = make_scenario(cfg);
    Allocation blue = blue_rule_alloc(sc.graph, sc.blue_budget);
    double budget = blue.total() + rng.uniform(0.0, 2.0);

    Allocation red = greedy_alloc(sc.graph, blue, budget);
    double full = 0.0;
    for (double v : sc.graph.values) full += v;
    CHECK(opening_value(sc.graph, blue, red, sc.blue_budget, budget) ==
          doctest::Approx(full).epsilon(1e-12));

    ExactResult ex = exact_alloc_small(sc.graph, blue, budget);
    CHECK(ex.value == doctest::Approx(full).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive search matches an independent all-subset scan") {
  for (uint64_t seed = 1; seed <= 12; ++seed) {
    ScenarioConfig cfg;
    cfg.n_nodes = 4 + static_cast<int>(seed % 4);  // 4..7
    cfg.rng_seed = derive_seed(1234, seed);
    Scenario sc = make_scenario(cfg);
    Allocation blue = blue_rule_alloc(sc.graph, sc.blue_budget);

    ExactResult ex = exact_alloc_small(sc.graph, blue, sc.red_budget);
    CHECK(ex.value == brute_force_best(sc.graph, blue, sc.red_budget));
    CHECK_NOTHROW(validate_allocation(sc.graph, ex.alloc, sc.red_budget));
    CHECK(ex.value ==
          opening_value(sc.graph, blue, ex.alloc, sc.blue_budget, sc.red_budget));

    // the reported subset is exactly the contested node set
    for (int i = 0; i < sc.graph.n; ++i) {
      bool in = std::find(ex.subset.begin(), ex.subset.end(), i) != ex.subset.end();
      CHECK(ex.alloc.amounts[i] == (in ? blue.amounts[i] : 0.0));
    }
  }
  GameGraph big = build_graph(2, {{0, 1, 0.5}}, {0.5, 0.5});
  big.n = 21;  // guard trips on node count alone
  CHECK_THROWS(exact_alloc_small(big, alloc(std::vector<double>(21, 1.0)), 1.0));
}

TEST_CASE("exact value ties resolve to the smallest subset") {
  GameGraph g = build_graph(2, {{0, 1, 0.5}}, {0.5, 0.5});
  Allocation blue = alloc({1.0, 1.0});
  ExactResult ex = exact_alloc_small(g, blue, 1.0);
  CHECK(ex.subset == std::vector<int>{0});
  CHECK(ex.value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("annealing is seed-reproducible and never falls below its greedy seed") {
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    ScenarioConfig cfg;
    cfg.n_nodes = 6;
    cfg.rng_seed = derive_seed(777, seed);
    Scenario sc = make_scenario(cfg);
    Allocation blue = blue_rule_alloc(sc.graph, sc.blue_budget);

    SaConfig sa;
    sa.iterations = 800;
    sa.seed = derive_seed(seed, 0x5A);
    Allocation a1 = sa_alloc(sc.graph, blue, sc.red_budget, sa);
    Allocation a2 = sa_alloc(sc.graph, blue, sc.red_budget, sa);
    CHECK(a1.amounts == a2.amounts);
    CHECK_NOTHROW(validate_allocation(sc.graph, a1, sc.red_budget));

    Allocation greedy = greedy_alloc(sc.graph, blue, sc.red_budget);
    double v_sa = opening_value(sc.graph, blue, a1, sc.blue_budget, sc.red_budget);
    double v_greedy = opening_value(sc.graph, blue, greedy, sc.blue_budget, sc.red_budget);
    CHECK(v_sa >= v_greedy);

    ExactResult ex = exact_alloc_small(sc.graph, blue, sc.red_budget);
    CHECK(ex.value >= v_sa);  // nothing beats exhaustive search
  }
}

TEST_CASE("amount jitter keeps the contested subset and its value") {
  ScenarioConfig cfg;
  cfg.n_nodes = 6;
  cfg.rng_seed = 5050;
  Scenario sc = make_scenario(cfg);
  Allocation blue = blue_rule_alloc(sc.graph, sc.blue_budget);

  SaConfig sa;
  sa.iterations = 500;
  sa.move = SaMove::ShiftAmount;
  sa.seed = 4;
  Allocation shifted = sa_alloc(sc.graph, blue, sc.red_budget, sa);
  CHECK_NOTHROW(validate_allocation(sc.graph, shifted, sc.red_budget));

  Allocation greedy = greedy_alloc(sc.graph, blue, sc.red_budget);
  CHECK(opening_value(sc.graph, blue, shifted, sc.blue_budget, sc.red_budget) ==
        opening_value(sc.graph, blue, greedy, sc.blue_budget, sc.red_budget));
  for (int i = 0; i < sc.graph.n; ++i)
    CHECK((shifted.amounts[i] > 0.0) == (greedy.amounts[i] > 0.0));
}

TEST_CASE("grid search finds the cheapest winning reinforcement") {
  GameGraph g = path3();
  GameState state;
  state.red = {2.0, 0.0, 0.0};
  state.blue = {0.0, 1.5, 0.0};

  TransferPlan plan = myopic_transfer(g, state);
  CHECK_NOTHROW(validate_plan(g, plan));
  // sending 3/4 of the stock puts 1.5 on node 1, tying blue out of it;
  // sending everything wins too but pays more transport
  CHECK(plan.rows[0].at(1) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(plan.rows[0].at(0) == doctest::Approx(0.25).epsilon(1e-12));
  // empty rows hold
  CHECK(plan.rows[1].at(1) == 1.0);
  CHECK(plan.rows[2].at(2) == 1.0);

  GameState next = apply_transfers(g, state, plan, identity_plan(3));
  CHECK(controlled_value_red(g, next) ==
        doctest::Approx(0.5 + 1.0 + 0.25).epsilon(1e-12));
}

TEST_CASE("grid search holds when no move beats holding") {
  GameGraph g = path3();
  GameState state;
  state.red = {2.0, 0.0, 0.0};
  state.blue = {0.0, 99.0, 0.0};  // node 1 is out of reach

  TransferPlan plan = myopic_transfer(g, state);
  CHECK(plan.rows[0].size() == 1);
  CHECK(plan.rows[0].at(0) == 1.0);
}

TEST_CASE("grid search refuses oversized boards and exhausted budgets") {
  ScenarioConfig cfg;
  cfg.n_nodes = 13;
  cfg.rng_seed = 2;
  Scenario sc = make_scenario(cfg);
  GameState s;
  s.red.assign(13, 1.0);
  s.blue.assign(13, 0.0);
  CHECK_THROWS(myopic_transfer(sc.graph, s));

  GameGraph g = path3();
  GameState small;
  small.red = {1.0, 0.0, 0.0};
  small.blue = {0.0, 0.0, 0.0};
  MyopicConfig tight;
  tight.search_budget = 1;
  CHECK_THROWS(myopic_transfer(g, small, tight));
}
