#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blotto/egte.hpp"

using namespace blotto;
using namespace blotto::nn;

namespace {

EgteConfig tiny() {
  EgteConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.dim = 8;
  cfg.ffn_dim = 16;
  cfg.max_spd = 4;
  cfg.max_degree = 16;
  return cfg;
}

GameState uniform_state(int n, double red, double blue) {
  GameState s;
  s.red.assign(n, red);
  s.blue.assign(n, blue);
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::fabs(a.at(i, j) - b.at(i, j)));
  return m;
}

}  // namespace

TEST_CASE("encoder output shapes and determinism") {
  ParamStore store;
  Rng rng(5);
  Egte enc(store, "egte/", tiny(), rng);
  GameGraph g = build_graph(4, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.5}}, {0.1, 0.9, 0.4, 0.7});
  GameState s = uniform_state(4, 1.0, 2.0);

  Tape t1;
  EgteOut o1 = enc.encode(t1, g, s);
  CHECK(o1.nodes.rows() == 4);
  CHECK(o1.nodes.cols() == 8);
  CHECK(o1.global.rows() == 1);
  CHECK(o1.global.cols() == 8);

  Tape t2;
  EgteOut o2 = enc.encode(t2, g, s);
  CHECK(o1.nodes.values() == o2.nodes.values());  // bitwise repeatable
  CHECK(o1.global.values() == o2.global.values());
}

TEST_CASE("node relabeling permutes node rows and leaves the readout unchanged") {
  ParamStore store;
  Rng rng(6);
  Egte enc(store, "egte/", tiny(), rng);

  // irregular graph: star center 0 plus tail, distinct values and stocks
  std::vector<std::vector<double>> edges = {{0, 1, 0.3}, {0, 2, 0.8}, {0, 3, 0.2}, {3, 4, 0.6}};
  std::vector<double> values = {0.9, 0.2, 0.55, 0.31, 0.77};
  GameGraph g = build_graph(5, edges, values);
  GameState s;
  s.red = {0.0, 2.0, 0.0, 1.5, 0.25};
  s.blue = {3.0, 0.0, 1.0, 0.0, 0.0};

  std::vector<int> perm = {2, 0, 4, 1, 3};  // perm[i] = new label of old node i
  std::vector<std::vector<double>> pedges;
  for (auto& e : edges)
    pedges.push_back({static_cast<double>(perm[static_cast<int>(e[0])]),
                      static_cast<double>(perm[static_cast<int>(e[1])]), e[2]});
  std::vector<double> pvalues(5);
  GameState ps;
  ps.red.resize(5);
  ps.blue.resize(5);
  for (int i = 0; i < 5; ++i) {
    pvalues[perm[i]] = values[i];
    ps.red[perm[i]] = s.red[i];
    ps.blue[perm[i]] = s.blue[i];
  }
  GameGraph pg = build_graph(5, pedges, pvalues);

  Tape t1, t2;
  EgteOut a = enc.encode(t1, g, s);
  EgteOut b = enc.encode(t2, pg, ps);
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < 8; ++c)
      CHECK(std::fabs(a.nodes.at(i, c) - b.nodes.at(perm[i], c)) < 1e-9);
  for (int c = 0; c < 8; ++c) CHECK(std::fabs(a.global.at(0, c) - b.global.at(0, c)) < 1e-9);
}

TEST_CASE("symmetric nodes of a cycle encode identically") {
  ParamStore store;
  Rng rng(7);
  Egte enc(store, "egte/", tiny(), rng);
  GameGraph g = build_graph(
      6, {{0, 1, 0.4}, {1, 2, 0.4}, {2, 3, 0.4}, {3, 4, 0.4}, {4, 5, 0.4}, {5, 0, 0.4}},
      {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  GameState s = uniform_state(6, 1.0, 0.5);
  Tape t;
  EgteOut o = enc.encode(t, g, s);
  for (int i = 1; i < 6; ++i)
    for (int c = 0; c < 8; ++c) CHECK(std::fabs(o.nodes.at(i, c) - o.nodes.at(0, c)) < 1e-9);
}

TEST_CASE("hop-distance bias, degree table and readout seed are all wired in") {
  ParamStore store;
  Rng rng(8);
  Egte enc(store, "egte/", tiny(), rng);
  GameGraph g = build_graph(4, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.5}}, {0.1, 0.9, 0.4, 0.7});
  GameState s = uniform_state(4, 1.0, 2.0);

  Tape t0;
  EgteOut base = enc.encode(t0, g, s);

  Tensor spd = store.get("egte/spd_bias");
  spd.at(0, 2) += 0.5;  // pairs two hops apart score differently now
  Tape t1;
  EgteOut bumped = enc.encode(t1, g, s);
  CHECK(max_abs_diff(base.nodes, bumped.nodes) > 1e-6);
  spd.at(0, 2) -= 0.5;

  Tensor deg = store.get("egte/deg_emb");
  deg.at(1, 0) += 0.5;  // degree-1 endpoints shift
  Tape t2;
  EgteOut bumped2 = enc.encode(t2, g, s);
  CHECK(max_abs_diff(base.nodes, bumped2.nodes) > 1e-6);
  deg.at(1, 0) -= 0.5;

  Tensor hv0 = store.get("egte/hv0");
  hv0.at(0, 3) += 0.5;  // virtual-node seed reaches the readout
  Tape t3;
  EgteOut bumped3 = enc.encode(t3, g, s);
  CHECK(max_abs_diff(base.global, bumped3.global) > 1e-6);
  hv0.at(0, 3) -= 0.5;

  Tape t4;
  EgteOut back = enc.encode(t4, g, s);
  CHECK(base.nodes.values() == back.nodes.values());
}

TEST_CASE("distances past the clip share one bias bucket") {
  EgteConfig cfg = tiny();  // clip at 4
  ParamStore store;
  Rng rng(9);
  Egte enc(store, "egte/", cfg, rng);

  // path of 8: distances run 0..7, everything >= 4 lands in the last bucket
  std::vector<std::vector<double>> edges;
  for (int i = 0; i < 7; ++i) edges.push_back({double(i), double(i + 1), 0.5});
  GameGraph g = build_graph(8, edges, std::vector<double>(8, 0.5));
  GameState s = uniform_state(8, 1.0, 1.0);

  Tape t0;
  EgteOut base = enc.encode(t0, g, s);

  // bucket 4 covers hops 4..7; bumping it must move far-apart pairs
  Tensor spd = store.get("egte/spd_bias");
  spd.at(0, 4) += 1.0;
  Tape t1;
  EgteOut bumped = enc.encode(t1, g, s);
  CHECK(max_abs_diff(base.nodes, bumped.nodes) > 1e-6);
}

TEST_CASE("state levels change the encoding") {
  ParamStore store;
  Rng rng(10);
  Egte enc(store, "egte/", tiny(), rng);
  GameGraph g = build_graph(3, {{0, 1, 0.2}, {1, 2, 0.4}}, {0.5, 1.0, 0.25});

  Tape t1, t2;
  EgteOut a = enc.encode(t1, g, uniform_state(3, 1.0, 0.0));
  EgteOut b = enc.encode(t2, g, uniform_state(3, 0.0, 1.0));
  CHECK(max_abs_diff(a.nodes, b.nodes) > 1e-6);
}

TEST_CASE("backward through the encoder reaches every layer with finite gradients") {
  ParamStore store;
  Rng rng(11);
  Egte enc(store, "egte/", tiny(), rng);
  GameGraph g = build_graph(4, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.5}, {0, 2, 0.9}},
                            {0.1, 0.9, 0.4, 0.7});
  GameState s;
  s.red = {1.0, 0.0, 2.0, 0.5};
  s.blue = {0.0, 1.5, 0.0, 0.25};

  Tape t;
  EgteOut o = enc.encode(t, g, s);
  Tensor loss = t.add(t.sum(o.nodes), t.sum(o.global));
  t.backward(loss);

  for (const std::string& name : store.names()) {
    Tensor p = store.get(name);
    for (double gr : p.grads()) CHECK(std::isfinite(gr));
  }
  // lift weights and both attention/ffn stacks actually receive signal
  for (const char* name : {"egte/mlp1_w", "egte/l0/wq", "egte/l1/ffn_w1", "egte/hv0"}) {
    Tensor p = store.get(name);
    double mag = 0.0;
    for (double gr : p.grads()) mag += std::fabs(gr);
    CHECK(mag > 0.0);
  }
}
