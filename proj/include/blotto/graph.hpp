#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace blotto {

// Weighted connected undirected battlefield graph. Node values are the
// prizes; edge weights are per-unit transfer costs; spd holds unweighted
// hop distances (used as the attention distance signal).
struct GameGraph {
  int n = 0;
  std::vector<double> values;            // v_i, in [0,1]
  std::vector<std::vector<int>> adj;     // sorted neighbor lists
  std::vector<int> degree;
  std::vector<std::vector<double>> w;    // dense symmetric weights, 0 = no edge
  std::vector<std::vector<int>> spd;     // hop counts, spd[i][i] = 0

  bool has_edge(int i, int j) const { return i != j && w[i][j] > 0.0; }
  double edge_weight(int i, int j) const { return w[i][j]; }
  int edge_count() const;
};

// Validates (indices, self-loops, duplicate edges, positive weights, values
// in [0,1], connectivity) and fills adjacency/degree/spd.
GameGraph build_graph(int n, const std::vector<std::vector<double>>& edges_ijw,
                      const std::vector<double>& values);

enum class Topology { ErdosRenyi, RandomGeometric };

struct ScenarioConfig {
  int n_nodes = 10;
  double blue_budget_factor = 5.0;  // blue budget = factor * n
  double red_budget_ratio = 0.5;    // red budget = ratio * blue budget
  Topology topology = Topology::ErdosRenyi;
  double edge_w_lo = 0.1;
  double edge_w_hi = 1.0;
  int max_rounds = 20;
  uint64_t rng_seed = 0;
};

struct Scenario {
  GameGraph graph;
  double blue_budget = 0.0;
  double red_budget = 0.0;
  int max_rounds = 20;
};

// Same seed, same graph. Values are drawn first, then edges; graphs that
// come out disconnected are augmented with a random spanning structure.
GameGraph generate_graph(const ScenarioConfig& cfg);
Scenario make_scenario(const ScenarioConfig& cfg);

// Plain-text scenario document (key/value plus `value i v` / `edge i j w`
// lines, %.17g everywhere) whose load/save round-trip is lossless.
void save_scenario(const Scenario& sc, const std::string& path);
Scenario load_scenario(const std::string& path);
std::string scenario_to_string(const Scenario& sc);
Scenario scenario_from_string(const std::string& text);

}  // namespace blotto
