#include "blotto/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "blotto/rng.hpp"

namespace blotto {

namespace {
constexpr int kUnreached = -1;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::vector<int>> hop_distances(int n, const std::vector<std::vector<int>>& adj) {
  std::vector<std::vector<int>> spd(n, std::vector<int>(n, kUnreached));
  for (int s = 0; s < n; ++s) {
    std::deque<int> q{s};
    spd[s][s] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v : adj[u]) {
        if (spd[s][v] == kUnreached) {
          spd[s][v] = spd[s][u] + 1;
          q.push_back(v);
        }
      }
    }
  }
  return spd;
}
}  // namespace

int GameGraph::edge_count() const {
  int m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (w[i][j] > 0.0) ++m;
  return m;
}

GameGraph build_graph(int n, const std::vector<std::vector<double>>& edges_ijw,
                      const std::vector<double>& values) {
  if (n < 1) throw std::invalid_argument("build_graph: need at least one node");
  if (static_cast<int>(values.size()) != n)
    throw std::invalid_argument("build_graph: value count does not match node count");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("build_graph: node value outside [0,1]");

  GameGraph g;
  g.n = n;
  g.values = values;
  g.w.assign(n, std::vector<double>(n, 0.0));
  g.adj.assign(n, {});
  for (const auto& e : edges_ijw) {
    if (e.size() != 3) throw std::invalid_argument("build_graph: edge entry needs i j w");
    int i = static_cast<int>(e[0]);
    int j = static_cast<int>(e[1]);
    double wt = e[2];
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw std::invalid_argument("build_graph: edge index out of range");
    if (i == j) throw std::invalid_argument("build_graph: self-loop");
    if (!(wt > 0.0)) throw std::invalid_argument("build_graph: edge weight must be positive");
    if (g.w[i][j] != 0.0) throw std::invalid_argument("build_graph: duplicate edge");
    g.w[i][j] = wt;
    g.w[j][i] = wt;
    g.adj[i].push_back(j);
    g.adj[j].push_back(i);
  }
  g.degree.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    std::sort(g.adj[i].begin(), g.adj[i].end());
    g.degree[i] = static_cast<int>(g.adj[i].size());
  }
  g.spd = hop_distances(n, g.adj);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (g.spd[i][j] == kUnreached)
        throw std::invalid_argument("build_graph: graph is not connected");
  return g;
}

namespace {

// Union components with randomly chosen cross edges so the result is
// connected without disturbing the sampled structure much.
void connect_components(int n, std::vector<std::vector<double>>& edges, Rng& rng,
                        double w_lo, double w_hi) {
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : edges) parent[find(static_cast<int>(e[0]))] = find(static_cast<int>(e[1]));

  std::vector<int> roots;
  for (int i = 0; i < n; ++i)
    if (find(i) == i) roots.push_back(i);
  while (roots.size() > 1) {
    // pick random members of two distinct components
    std::vector<int> comp_a, comp_b;
    int ra = roots[0], rb = roots[1];
    for (int i = 0; i < n; ++i) {
      int r = find(i);
      if (r == ra) comp_a.push_back(i);
      else if (r == rb) comp_b.push_back(i);
    }
    int u = comp_a[rng.uniform_int(static_cast<int>(comp_a.size()))];
    int v = comp_b[rng.uniform_int(static_cast<int>(comp_b.size()))];
    edges.push_back({static_cast<double>(u), static_cast<double>(v), rng.uniform(w_lo, w_hi)});
    parent[find(u)] = find(v);
    roots.clear();
    for (int i = 0; i < n; ++i)
      if (find(i) == i) roots.push_back(i);
  }
}

}  // namespace

GameGraph generate_graph(const ScenarioConfig& cfg) {
  int n = cfg.n_nodes;
  if (n < 2) throw std::invalid_argument("generate_graph: n_nodes must be at least 2");
  if (!(cfg.edge_w_lo > 0.0 && cfg.edge_w_hi >= cfg.edge_w_lo))
    throw std::invalid_argument("generate_graph: bad edge weight range");

  Rng rng(cfg.rng_seed);
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) values[i] = rng.uniform01();

  std::vector<std::vector<double>> edges;
  if (cfg.topology == Topology::ErdosRenyi) {
    double p = 2.0 * std::log(static_cast<double>(n)) / static_cast<double>(n);
    if (p > 1.0) p = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform01() < p)
          edges.push_back({static_cast<double>(i), static_cast<double>(j),
                           rng.uniform(cfg.edge_w_lo, cfg.edge_w_hi)});
  } else {
    std::vector<double> px(n), py(n);
    for (int i = 0; i < n; ++i) {
      px[i] = rng.uniform01();
      py[i] = rng.uniform01();
    }
    double r2 = 1.5 * std::log(static_cast<double>(n)) / (3.14159265358979323846 * n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double dx = px[i] - px[j], dy = py[i] - py[j];
        if (dx * dx + dy * dy <= r2)
          edges.push_back({static_cast<double>(i), static_cast<double>(j),
                           rng.uniform(cfg.edge_w_lo, cfg.edge_w_hi)});
      }
  }
  connect_components(n, edges, rng, cfg.edge_w_lo, cfg.edge_w_hi);
  return build_graph(n, edges, values);
}

Scenario make_scenario(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.graph = generate_graph(cfg);
  sc.blue_budget = cfg.blue_budget_factor * cfg.n_nodes;
  sc.red_budget = cfg.red_budget_ratio * sc.blue_budget;
  sc.max_rounds = cfg.max_rounds;
  return sc;
}

std::string scenario_to_string(const Scenario& sc) {
  std::ostringstream out;
  out << "blotto-scenario v1\n";
  out << "nodes " << sc.graph.n << "\n";
  out << "max_rounds " << sc.max_rounds << "\n";
  out << "blue_budget " << fmt_double(sc.blue_budget) << "\n";
  out << "red_budget " << fmt_double(sc.red_budget) << "\n";
  for (int i = 0; i < sc.graph.n; ++i)
    out << "value " << i << " " << fmt_double(sc.graph.values[i]) << "\n";
  for (int i = 0; i < sc.graph.n; ++i)
    for (int j = i + 1; j < sc.graph.n; ++j)
      if (sc.graph.w[i][j] > 0.0)
        out << "edge " << i << " " << j << " " << fmt_double(sc.graph.w[i][j]) << "\n";
  return out.str();
}

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
  out << scenario_to_string(sc);
  if (!out) throw std::runtime_error("save_scenario: write failed: " + path);
}

Scenario scenario_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  if (header != "blotto-scenario v1")
    throw std::runtime_error("scenario: unrecognized header '" + header + "'");

  int n = -1, max_rounds = 20;
  double blue_budget = 0.0, red_budget = 0.0;
  std::vector<double> values;
  std::vector<std::vector<double>> edges;
  std::vector<uint8_t> value_seen;

  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto bad = [&](const std::string& why) {
      return std::runtime_error("scenario line " + std::to_string(lineno) + ": " + why);
    };
    if (key == "nodes") {
      if (!(ls >> n) || n < 1) throw bad("bad node count");
      values.assign(n, 0.0);
      value_seen.assign(n, 0);
    } else if (key == "max_rounds") {
      if (!(ls >> max_rounds) || max_rounds < 0) throw bad("bad max_rounds");
    } else if (key == "blue_budget") {
      if (!(ls >> blue_budget)) throw bad("bad blue_budget");
    } else if (key == "red_budget") {
      if (!(ls >> red_budget)) throw bad("bad red_budget");
    } else if (key == "value") {
      int i;
      double v;
      if (!(ls >> i >> v)) throw bad("bad value line");
      if (n < 0) throw bad("value before nodes");
      if (i < 0 || i >= n) throw bad("value index out of range");
      values[i] = v;
      value_seen[i] = 1;
    } else if (key == "edge") {
      int i, j;
      double w;
      if (!(ls >> i >> j >> w)) throw bad("bad edge line");
      edges.push_back({static_cast<double>(i), static_cast<double>(j), w});
    } else {
      throw bad("unknown key '" + key + "'");
    }
  }
  if (n < 0) throw std::runtime_error("scenario: missing nodes line");
  for (int i = 0; i < n; ++i)
    if (!value_seen[i])
      throw std::runtime_error("scenario: missing value for node " + std::to_string(i));

  Scenario sc;
  sc.graph = build_graph(n, edges, values);
  sc.blue_budget = blue_budget;
  sc.red_budget = red_budget;
  sc.max_rounds = max_rounds;
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_string(buf.str());
}

}  // namespace blotto
