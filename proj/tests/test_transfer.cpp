#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blotto/game.hpp"
#include "blotto/transfer.hpp"

using namespace blotto;
using namespace blotto::nn;

namespace {

TransferConfig tiny_cfg() {
  TransferConfig cfg;
  cfg.egte.layers = 2;
  cfg.egte.heads = 2;
  cfg.egte.dim = 8;
  cfg.egte.ffn_dim = 16;
  cfg.egte.max_spd = 4;
  cfg.egte.max_degree = 16;
  cfg.gat_heads = 2;
  return cfg;
}

// mid-game board on a seeded 8-node graph
struct Board {
  Scenario sc;
  GameState state;
};

Board make_board(uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n_nodes = 8;
  cfg.rng_seed = seed;
  Board b{make_scenario(cfg), {}};
  Allocation blue = blue_rule_alloc(b.sc.graph, b.sc.blue_budget);
  Rng rng(derive_seed(seed, 17));
  Allocation red;
  red.amounts.assign(b.sc.graph.n, 0.0);
  double left = b.sc.red_budget;
  for (int i = 0; i < b.sc.graph.n && left > 0; ++i) {
    double x = rng.uniform(0.0, left);
    red.amounts[i] = x;
    left -= x;
  }
  b.state = resolve_initial(b.sc.graph, blue, red, b.sc.blue_budget, b.sc.red_budget);
  return b;
}

}  // namespace

TEST_CASE("candidate sets are the sorted neighborhood plus the node itself") {
  GameGraph g = build_graph(4, {{2, 0, 0.5}, {0, 1, 0.5}, {1, 3, 0.5}}, {0.5, 0.5, 0.5, 0.5});
  CHECK(TransferModel::candidates(g, 0) == std::vector<int>{0, 1, 2});
  CHECK(TransferModel::candidates(g, 1) == std::vector<int>{0, 1, 3});
  CHECK(TransferModel::candidates(g, 2) == std::vector<int>{0, 2});
  CHECK(TransferModel::candidates(g, 3) == std::vector<int>{1, 3});
}

TEST_CASE("greedy moves are valid local plans with exact self remainders") {
  Board b = make_board(501);
  TransferModel model(tiny_cfg(), 321);

  Tape tape;
  TransferActResult res = model.act(tape, b.sc.graph, b.state, DecodeMode::Greedy);
  CHECK_NOTHROW(validate_plan(b.sc.graph, res.plan));
  CHECK(res.action.sources.empty());  // greedy records no action
  CHECK(res.log_prob == 0.0);
  CHECK(std::isfinite(res.value));

  for (int i = 0; i < b.sc.graph.n; ++i) {
    const auto& row = res.plan.rows[i];
    if (b.state.red[i] <= 0.0) {
      CHECK(row.size() == 1);
      CHECK(row.at(i) == 1.0);  // nothing to move, hold
      continue;
    }
    double out = 0.0;
    for (const auto& [j, mu] : row) {
      CHECK((j == i || b.sc.graph.has_edge(i, j)));  // strictly local
      CHECK(mu >= 0.0);
      if (j != i) out += mu;
    }
    CHECK(row.at(i) == 1.0 - out);  // pinned remainder, not a float echo
  }
}

TEST_CASE("sampled moves are valid and reproducible under the same seed") {
  Board b = make_board(502);
  TransferModel model(tiny_cfg(), 642);

  Tape t1, t2;
  Rng r1(77), r2(77);
  TransferActResult a1 = model.act(t1, b.sc.graph, b.state, DecodeMode::Sample, &r1);
  TransferActResult a2 = model.act(t2, b.sc.graph, b.state, DecodeMode::Sample, &r2);
  CHECK_NOTHROW(validate_plan(b.sc.graph, a1.plan));
  CHECK(a1.action.sources == a2.action.sources);
  CHECK(a1.action.logits == a2.action.logits);
  CHECK(a1.log_prob == a2.log_prob);

  Tape t3;
  Rng r3(78);
  TransferActResult a3 = model.act(t3, b.sc.graph, b.state, DecodeMode::Sample, &r3);
  CHECK(a1.action.logits != a3.action.logits);

  // every red-held node is a source row, in ascending order
  std::vector<int> expect;
  for (int i = 0; i < b.sc.graph.n; ++i)
    if (b.state.red[i] > 0.0) expect.push_back(i);
  CHECK(a1.action.sources == expect);
}

TEST_CASE("re-scoring a sampled action reproduces its log density exactly") {
  for (uint64_t board_seed : {503u, 504u, 505u}) {
    Board b = make_board(board_seed);
    TransferModel model(tiny_cfg(), derive_seed(board_seed, 3));

    Tape t1;
    Rng rng(derive_seed(board_seed, 4));
    TransferActResult res = model.act(t1, b.sc.graph, b.state, DecodeMode::Sample, &rng);
    REQUIRE(!res.action.sources.empty());

    Tape t2;
    TransferEval ev = model.evaluate(t2, b.sc.graph, b.state, res.action);
    CHECK(ev.log_prob.value() == res.log_prob);  // bitwise, not approximate
    CHECK(ev.value.value() == res.value);
    CHECK(std::isfinite(ev.entropy.value()));
    CHECK(ev.entropy.value() >= 0.0);
  }
}

TEST_CASE("a board with no red stock yields the identity plan and zero log density") {
  Board b = make_board(506);
  GameState empty = b.state;
  empty.red.assign(b.sc.graph.n, 0.0);
  TransferModel model(tiny_cfg(), 7);

  Tape t;
  Rng rng(1);
  TransferActResult res = model.act(t, b.sc.graph, empty, DecodeMode::Sample, &rng);
  CHECK(res.action.sources.empty());
  CHECK(res.log_prob == 0.0);
  for (int i = 0; i < b.sc.graph.n; ++i) {
    CHECK(res.plan.rows[i].size() == 1);
    CHECK(res.plan.rows[i].at(i) == 1.0);
  }

  Tape t2;
  TransferEval ev = model.evaluate(t2, b.sc.graph, empty, res.action);
  CHECK(ev.log_prob.value() == 0.0);
  CHECK(ev.entropy.value() == 0.0);
}

TEST_CASE("evaluate rejects actions that do not fit the board") {
  Board b = make_board(507);
  TransferModel model(tiny_cfg(), 8);

  Tape t1;
  Rng rng(2);
  TransferActResult res = model.act(t1, b.sc.graph, b.state, DecodeMode::Sample, &rng);
  REQUIRE(!res.action.sources.empty());

  TransferAction bad = res.action;
  bad.logits[0].push_back(0.0);  // wrong candidate count for that source
  Tape t2;
  CHECK_THROWS(model.evaluate(t2, b.sc.graph, b.state, bad));
}

TEST_CASE("sampling nudges the greedy move rather than replacing it") {
  // with sigma tiny the sampled plan collapses onto the greedy one
  Board b = make_board(508);
  TransferConfig cfg = tiny_cfg();
  cfg.logit_noise_sigma = 1e-8;
  TransferModel model(cfg, 9);

  Tape t1, t2;
  Rng rng(3);
  TransferActResult greedy = model.act(t1, b.sc.graph, b.state, DecodeMode::Greedy);
  TransferActResult sampled = model.act(t2, b.sc.graph, b.state, DecodeMode::Sample, &rng);
  for (int i = 0; i < b.sc.graph.n; ++i) {
    for (const auto& [j, mu] : greedy.plan.rows[i]) {
      CHECK(sampled.plan.rows[i].at(j) == doctest::Approx(mu).epsilon(1e-6));
    }
  }
}

TEST_CASE("critic and policy react to the board state") {
  Board b = make_board(509);
  TransferModel model(tiny_cfg(), 10);

  GameState other = b.state;
  // hand red a different board by flipping the largest blue node
  int big = 0;
  for (int i = 1; i < b.sc.graph.n; ++i)
    if (other.blue[i] > other.blue[big]) big = i;
  other.red[big] = other.blue[big] + 1.0;
  other.blue[big] = 0.0;

  Tape t1, t2;
  TransferActResult r1 = model.act(t1, b.sc.graph, b.state, DecodeMode::Greedy);
  TransferActResult r2 = model.act(t2, b.sc.graph, other, DecodeMode::Greedy);
  CHECK(r1.value != r2.value);
  CHECK(r1.plan.rows != r2.plan.rows);
}
