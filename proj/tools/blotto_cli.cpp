// Command-line front end: scenario generation, the three training phases,
// evaluation suites, small-board oracle reports, and a self-check battery.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blotto/baselines.hpp"
#include "blotto/game.hpp"
#include "blotto/graph.hpp"
#include "blotto/harness.hpp"
#include "blotto/kernels.hpp"
#include "blotto/param_store.hpp"
#include "blotto/planner.hpp"
#include "blotto/rng.hpp"
#include "blotto/training.hpp"
#include "blotto/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace blotto;

namespace {

constexpr uint64_t kGenTag = 0x6E;
constexpr uint64_t kInitTag = 0x11;
constexpr uint64_t kPhaseATag = 0x0A;
constexpr uint64_t kPhaseBTag = 0x0B;
constexpr uint64_t kPhaseCTag = 0x0C;
constexpr uint64_t kSaSeedTag = 0x5A;

struct CliConfig {
  ScenarioConfig scenario;
  PlannerConfig planner;
  TransferConfig transfer;
  ReinforceConfig reinforce;
  PpoTrainConfig ppo;
  FeedbackConfig feedback;
  std::vector<int> eval_sizes{10};
  int eval_instances = 100;
  std::vector<std::string> eval_methods{"greedy", "sa", "greedy-rule"};
  bool eval_latency = false;
  int gen_count = 10;
};

void require_known(const json& j, const std::set<std::string>& keys, const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key()))
      throw std::runtime_error("config: unknown key '" + it.key() + "' in " + section);
}

Topology topology_from_string(const std::string& s) {
  if (s == "erdos_renyi") return Topology::ErdosRenyi;
  if (s == "random_geometric") return Topology::RandomGeometric;
  throw std::runtime_error("config: unknown topology '" + s + "'");
}

std::string topology_to_string(Topology t) {
  return t == Topology::ErdosRenyi ? "erdos_renyi" : "random_geometric";
}

void apply_json(CliConfig& c, const json& j) {
  require_known(j, {"scenario", "model", "reinforce", "ppo", "feedback", "eval", "gen"}, "root");
  if (j.contains("scenario")) {
    const json& s = j["scenario"];
    require_known(s,
                  {"n_nodes", "blue_budget_factor", "red_budget_ratio", "topology", "edge_w_lo",
                   "edge_w_hi", "max_rounds"},
                  "scenario");
    c.scenario.n_nodes = s.value("n_nodes", c.scenario.n_nodes);
    c.scenario.blue_budget_factor = s.value("blue_budget_factor", c.scenario.blue_budget_factor);
    c.scenario.red_budget_ratio = s.value("red_budget_ratio", c.scenario.red_budget_ratio);
    if (s.contains("topology"))
      c.scenario.topology = topology_from_string(s["topology"].get<std::string>());
    c.scenario.edge_w_lo = s.value("edge_w_lo", c.scenario.edge_w_lo);
    c.scenario.edge_w_hi = s.value("edge_w_hi", c.scenario.edge_w_hi);
    c.scenario.max_rounds = s.value("max_rounds", c.scenario.max_rounds);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    require_known(m,
                  {"layers", "heads", "dim", "ffn_dim", "max_spd", "max_degree", "score_heads",
                   "win_margin", "gat_heads", "leaky_slope", "noise_sigma"},
                  "model");
    EgteConfig& e = c.planner.egte;
    e.layers = m.value("layers", e.layers);
    e.heads = m.value("heads", e.heads);
    e.dim = m.value("dim", e.dim);
    e.ffn_dim = m.value("ffn_dim", e.ffn_dim);
    e.max_spd = m.value("max_spd", e.max_spd);
    e.max_degree = m.value("max_degree", e.max_degree);
    c.transfer.egte = e;
    c.planner.score_heads = m.value("score_heads", c.planner.score_heads);
    c.planner.win_margin = m.value("win_margin", c.planner.win_margin);
    c.transfer.gat_heads = m.value("gat_heads", c.transfer.gat_heads);
    c.transfer.leaky_slope = m.value("leaky_slope", c.transfer.leaky_slope);
    c.transfer.logit_noise_sigma = m.value("noise_sigma", c.transfer.logit_noise_sigma);
  }
  if (j.contains("reinforce")) {
    const json& r = j["reinforce"];
    require_known(r, {"iterations", "batch", "lr", "baseline_coef", "checkpoint_every"},
                  "reinforce");
    c.reinforce.iterations = r.value("iterations", c.reinforce.iterations);
    c.reinforce.batch = r.value("batch", c.reinforce.batch);
    c.reinforce.lr = r.value("lr", c.reinforce.lr);
    c.reinforce.baseline_coef = r.value("baseline_coef", c.reinforce.baseline_coef);
    c.reinforce.checkpoint_every = r.value("checkpoint_every", c.reinforce.checkpoint_every);
  }
  if (j.contains("ppo")) {
    const json& p = j["ppo"];
    require_known(p,
                  {"iterations", "batch_episodes", "epochs", "lr", "clip_eps", "value_coef",
                   "entropy_coef", "gamma", "gae_lambda", "alpha_s", "normalize_advantages",
                   "checkpoint_every"},
                  "ppo");
    c.ppo.iterations = p.value("iterations", c.ppo.iterations);
    c.ppo.batch_episodes = p.value("batch_episodes", c.ppo.batch_episodes);
    c.ppo.epochs = p.value("epochs", c.ppo.epochs);
    c.ppo.lr = p.value("lr", c.ppo.lr);
    c.ppo.clip_eps = p.value("clip_eps", c.ppo.clip_eps);
    c.ppo.value_coef = p.value("value_coef", c.ppo.value_coef);
    c.ppo.entropy_coef = p.value("entropy_coef", c.ppo.entropy_coef);
    c.ppo.gamma = p.value("gamma", c.ppo.gamma);
    c.ppo.gae_lambda = p.value("gae_lambda", c.ppo.gae_lambda);
    c.ppo.alpha_s = p.value("alpha_s", c.ppo.alpha_s);
    c.ppo.normalize_advantages = p.value("normalize_advantages", c.ppo.normalize_advantages);
    c.ppo.checkpoint_every = p.value("checkpoint_every", c.ppo.checkpoint_every);
  }
  if (j.contains("feedback")) {
    const json& f = j["feedback"];
    require_known(f, {"iterations", "batch", "lr", "lambda", "baseline_coef", "checkpoint_every"},
                  "feedback");
    c.feedback.iterations = f.value("iterations", c.feedback.iterations);
    c.feedback.batch = f.value("batch", c.feedback.batch);
    c.feedback.lr = f.value("lr", c.feedback.lr);
    c.feedback.lambda = f.value("lambda", c.feedback.lambda);
    c.feedback.baseline_coef = f.value("baseline_coef", c.feedback.baseline_coef);
    c.feedback.checkpoint_every = f.value("checkpoint_every", c.feedback.checkpoint_every);
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    require_known(e, {"sizes", "instances", "methods", "latency"}, "eval");
    if (e.contains("sizes")) c.eval_sizes = e["sizes"].get<std::vector<int>>();
    c.eval_instances = e.value("instances", c.eval_instances);
    if (e.contains("methods")) c.eval_methods = e["methods"].get<std::vector<std::string>>();
    c.eval_latency = e.value("latency", c.eval_latency);
  }
  if (j.contains("gen")) {
    const json& g = j["gen"];
    require_known(g, {"count"}, "gen");
    c.gen_count = g.value("count", c.gen_count);
  }
}

ordered_json config_to_json(const CliConfig& c) {
  ordered_json j;
  j["scenario"] = {{"n_nodes", c.scenario.n_nodes},
                   {"blue_budget_factor", c.scenario.blue_budget_factor},
                   {"red_budget_ratio", c.scenario.red_budget_ratio},
                   {"topology", topology_to_string(c.scenario.topology)},
                   {"edge_w_lo", c.scenario.edge_w_lo},
                   {"edge_w_hi", c.scenario.edge_w_hi},
                   {"max_rounds", c.scenario.max_rounds}};
  j["model"] = {{"layers", c.planner.egte.layers},
                {"heads", c.planner.egte.heads},
                {"dim", c.planner.egte.dim},
                {"ffn_dim", c.planner.egte.ffn_dim},
                {"max_spd", c.planner.egte.max_spd},
                {"max_degree", c.planner.egte.max_degree},
                {"score_heads", c.planner.score_heads},
                {"win_margin", c.planner.win_margin},
                {"gat_heads", c.transfer.gat_heads},
                {"leaky_slope", c.transfer.leaky_slope},
                {"noise_sigma", c.transfer.logit_noise_sigma}};
  j["reinforce"] = {{"iterations", c.reinforce.iterations},
                    {"batch", c.reinforce.batch},
                    {"lr", c.reinforce.lr},
                    {"baseline_coef", c.reinforce.baseline_coef},
                    {"checkpoint_every", c.reinforce.checkpoint_every}};
  j["ppo"] = {{"iterations", c.ppo.iterations},
              {"batch_episodes", c.ppo.batch_episodes},
              {"epochs", c.ppo.epochs},
              {"lr", c.ppo.lr},
              {"clip_eps", c.ppo.clip_eps},
              {"value_coef", c.ppo.value_coef},
              {"entropy_coef", c.ppo.entropy_coef},
              {"gamma", c.ppo.gamma},
              {"gae_lambda", c.ppo.gae_lambda},
              {"alpha_s", c.ppo.alpha_s},
              {"normalize_advantages", c.ppo.normalize_advantages},
              {"checkpoint_every", c.ppo.checkpoint_every}};
  j["feedback"] = {{"iterations", c.feedback.iterations},
                   {"batch", c.feedback.batch},
                   {"lr", c.feedback.lr},
                   {"lambda", c.feedback.lambda},
                   {"baseline_coef", c.feedback.baseline_coef},
                   {"checkpoint_every", c.feedback.checkpoint_every}};
  j["eval"] = {{"sizes", c.eval_sizes},
               {"instances", c.eval_instances},
               {"methods", c.eval_methods},
               {"latency", c.eval_latency}};
  j["gen"] = {{"count", c.gen_count}};
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

void echo_config(const CliConfig& cfg, uint64_t seed, const fs::path& out_dir) {
  ordered_json j = config_to_json(cfg);
  j["seed"] = seed;
  write_text(out_dir / "config.json", j.dump(2) + "\n");
}

// ---- method registry for eval -------------------------------------------

RedStrategy make_method(const std::string& name, const CliConfig& cfg, uint64_t seed,
                        const PlannerModel* planner, const TransferModel* transfer) {
  RedStrategy m;
  m.name = name;
  RedAllocPolicy greedy = [](const GameGraph& g, const Allocation& blue, double budget) {
    return greedy_alloc(g, blue, budget);
  };
  SaConfig sa_cfg;
  sa_cfg.seed = derive_seed(seed, kSaSeedTag, 0, 0);
  RedAllocPolicy sa = [sa_cfg](const GameGraph& g, const Allocation& blue, double budget) {
    return sa_alloc(g, blue, budget, sa_cfg);
  };
  TransferPolicy rule = [](const GameGraph& g, const GameState& obs, const GameState& prev) {
    return red_rule_transfer(g, obs, prev);
  };

  if (name == "greedy") {
    m.alloc = greedy;
  } else if (name == "sa") {
    m.alloc = sa;
  } else if (name == "exact") {
    m.alloc = [](const GameGraph& g, const Allocation& blue, double budget) {
      return exact_alloc_small(g, blue, budget).alloc;
    };
  } else if (name == "greedy-rule") {
    m.alloc = greedy;
    m.transfer = rule;
  } else if (name == "sa-rule") {
    m.alloc = sa;
    m.transfer = rule;
  } else if (name == "myopic") {
    m.alloc = greedy;
    m.transfer = [](const GameGraph& g, const GameState& obs, const GameState&) {
      return myopic_transfer(g, obs);
    };
  } else if (name == "neural" || name == "neural-hold") {
    if (!planner) throw std::runtime_error("method '" + name + "' needs a planner model");
    m.alloc = [planner](const GameGraph& g, const Allocation& blue, double budget) {
      nn::Tape tape;
      PlannerDecision d = planner->plan(tape, g, blue, budget, DecodeMode::Greedy);
      return planner->decision_to_allocation(g, d);
    };
    if (name == "neural") {
      if (!transfer) throw std::runtime_error("method 'neural' needs a transfer model");
      m.transfer = [transfer](const GameGraph& g, const GameState& obs, const GameState&) {
        nn::Tape tape;
        return transfer->act(tape, g, obs, DecodeMode::Greedy).plan;
      };
    }
  } else {
    throw std::runtime_error(
        "unknown method '" + name +
        "' (expected greedy, sa, exact, greedy-rule, sa-rule, myopic, neural, neural-hold)");
  }
  (void)cfg;
  return m;
}

// ---- subcommands ----------------------------------------------------------

int cmd_gen(const CliConfig& cfg, uint64_t seed, const fs::path& out_dir, int count) {
  fs::create_directories(out_dir);
  echo_config(cfg, seed, out_dir);
  for (int i = 0; i < count; ++i) {
    ScenarioConfig sc_cfg = cfg.scenario;
    sc_cfg.rng_seed = derive_seed(seed, static_cast<uint64_t>(i), 0, kGenTag);
    Scenario sc = make_scenario(sc_cfg);
    char name[32];
    std::snprintf(name, sizeof name, "scenario_%04d.txt", i);
    save_scenario(sc, (out_dir / name).string());
  }
  std::printf("wrote %d scenarios to %s\n", count, out_dir.string().c_str());
  return 0;
}

int cmd_train(CliConfig cfg, uint64_t seed, const fs::path& out_dir, const std::string& phase,
              const std::string& planner_ckpt, const std::string& transfer_ckpt) {
  fs::create_directories(out_dir);
  echo_config(cfg, seed, out_dir);

  PlannerModel planner(cfg.planner, derive_seed(seed, 1, 0, kInitTag));
  TransferModel transfer(cfg.transfer, derive_seed(seed, 2, 0, kInitTag));
  if (!planner_ckpt.empty()) planner.store().load(planner_ckpt);
  if (!transfer_ckpt.empty()) transfer.store().load(transfer_ckpt);

  cfg.reinforce.seed = seed;
  cfg.ppo.seed = seed;
  cfg.feedback.seed = seed;
  cfg.reinforce.log_stderr = cfg.ppo.log_stderr = cfg.feedback.log_stderr = true;

  bool run_a = phase == "a" || phase == "all";
  bool run_b = phase == "b" || phase == "all";
  bool run_c = phase == "c" || phase == "all";

  if (run_a) {
    if (planner_ckpt.empty() && phase == "a")
      std::fprintf(stderr, "training planner from fresh weights\n");
    ScenarioStream stream{cfg.scenario, seed, kPhaseATag};
    TrainCurve curve = train_planner_reinforce(stream, planner, cfg.reinforce);
    planner.store().save((out_dir / "planner.ckpt").string());
    save_curve(curve, (out_dir / "train_reinforce.csv").string());
    std::printf("opening policy: %d iterations, final mean return %.17g\n", cfg.reinforce.iterations,
                curve.rows.empty() ? 0.0 : curve.rows.back().mean_return);
  }
  if (run_b) {
    if (!run_a && planner_ckpt.empty())
      std::fprintf(stderr, "warning: training mover against an untrained planner\n");
    ScenarioStream stream{cfg.scenario, seed, kPhaseBTag};
    TrainCurve curve = train_transfer_ppo(stream, planner, transfer, cfg.ppo);
    transfer.store().save((out_dir / "transfer.ckpt").string());
    save_curve(curve, (out_dir / "train_ppo.csv").string());
    std::printf("mover policy: %d iterations, final mean reward %.17g\n", cfg.ppo.iterations,
                curve.rows.empty() ? 0.0 : curve.rows.back().mean_return);
  }
  if (run_c) {
    if (!run_b && transfer_ckpt.empty())
      std::fprintf(stderr, "warning: fine-tuning against an untrained mover\n");
    ScenarioStream stream{cfg.scenario, seed, kPhaseCTag};
    TrainCurve curve = lfrt_feedback(stream, planner, transfer, cfg.feedback);
    planner.store().save((out_dir / "planner_tuned.ckpt").string());
    save_curve(curve, (out_dir / "train_feedback.csv").string());
    std::printf("feedback pass: %d iterations, final mean return %.17g\n", cfg.feedback.iterations,
                curve.rows.empty() ? 0.0 : curve.rows.back().mean_return);
  }
  return 0;
}

int cmd_eval(const CliConfig& cfg, uint64_t seed, const fs::path& out_dir,
             const std::string& planner_ckpt, const std::string& transfer_ckpt) {
  fs::create_directories(out_dir);
  echo_config(cfg, seed, out_dir);

  bool needs_models = false;
  for (const std::string& name : cfg.eval_methods)
    needs_models = needs_models || name == "neural" || name == "neural-hold";

  std::unique_ptr<PlannerModel> planner;
  std::unique_ptr<TransferModel> transfer;
  if (needs_models) {
    planner = std::make_unique<PlannerModel>(cfg.planner, derive_seed(seed, 1, 0, kInitTag));
    transfer = std::make_unique<TransferModel>(cfg.transfer, derive_seed(seed, 2, 0, kInitTag));
    if (!planner_ckpt.empty())
      planner->store().load(planner_ckpt);
    else
      std::fprintf(stderr, "warning: evaluating an untrained planner\n");
    if (!transfer_ckpt.empty())
      transfer->store().load(transfer_ckpt);
    else
      std::fprintf(stderr, "warning: evaluating an untrained mover\n");
  }

  std::vector<RedStrategy> methods;
  for (const std::string& name : cfg.eval_methods)
    methods.push_back(make_method(name, cfg, seed, planner.get(), transfer.get()));

  SuiteConfig suite;
  suite.sizes = cfg.eval_sizes;
  suite.instances = cfg.eval_instances;
  suite.master_seed = seed;
  suite.scenario = cfg.scenario;
  suite.measure_latency = cfg.eval_latency;
  SuiteResult res = run_suite(suite, methods);

  write_text(out_dir / "metrics.csv", emit_tables(res.rows, TableFormat::Csv));
  write_text(out_dir / "metrics.jsonl", emit_tables(res.rows, TableFormat::JsonLines));
  std::string aligned = emit_tables(res.rows, TableFormat::Aligned);
  write_text(out_dir / "metrics.txt", aligned);
  write_text(out_dir / "instances.csv", instance_log_csv(res.records));
  std::fputs(aligned.c_str(), stdout);
  std::printf("wrote metrics to %s\n", out_dir.string().c_str());
  return 0;
}

int cmd_oracle(const CliConfig& cfg, uint64_t seed, const std::string& scenario_path,
               const std::string& out_path) {
  Scenario sc;
  if (!scenario_path.empty()) {
    sc = load_scenario(scenario_path);
  } else {
    ScenarioConfig sc_cfg = cfg.scenario;
    sc_cfg.rng_seed = derive_seed(seed, 0, 0, kGenTag);
    sc = make_scenario(sc_cfg);
  }
  const GameGraph& g = sc.graph;
  Allocation blue = blue_rule_alloc(g, sc.blue_budget);

  auto opening_value = [&](const Allocation& red) {
    GameState st = resolve_initial(g, blue, red, sc.blue_budget, sc.red_budget);
    return controlled_value_red(g, st);
  };

  ExactResult exact = exact_alloc_small(g, blue, sc.red_budget);
  Allocation greedy = greedy_alloc(g, blue, sc.red_budget);
  SaConfig sa_cfg;
  sa_cfg.seed = derive_seed(seed, kSaSeedTag, 0, 0);
  Allocation sa = sa_alloc(g, blue, sc.red_budget, sa_cfg);

  std::string report;
  char line[256];
  std::snprintf(line, sizeof line, "nodes %d blue_budget %.17g red_budget %.17g\n", g.n,
                sc.blue_budget, sc.red_budget);
  report += line;
  std::snprintf(line, sizeof line, "exact  %.17g\n", opening_value(exact.alloc));
  report += line;
  std::snprintf(line, sizeof line, "greedy %.17g\n", opening_value(greedy));
  report += line;
  std::snprintf(line, sizeof line, "sa     %.17g\n", opening_value(sa));
  report += line;
  report += "exact_subset";
  for (int i : exact.subset) report += " " + std::to_string(i);
  report += "\n";

  std::fputs(report.c_str(), stdout);
  if (!out_path.empty()) write_text(out_path, report);
  return 0;
}

int cmd_check(uint64_t seed) {
  int failures = 0;
  auto report = [&](const char* name, bool ok, const std::string& detail = "") {
    if (ok) {
      std::printf("ok: %s\n", name);
    } else {
      ++failures;
      std::printf("FAIL: %s%s%s\n", name, detail.empty() ? "" : ": ", detail.c_str());
    }
  };

  {  // parallel kernels agree with the serial reference, bit for bit
    Rng rng(derive_seed(seed, 1, 2, 3));
    int m = 61, k = 47, n = 53;
    std::vector<double> a(m * k), b(k * n), bt(n * k), at(k * m);
    for (double& x : a) x = rng.normal();
    for (double& x : b) x = rng.normal();
    for (double& x : bt) x = rng.normal();
    for (double& x : at) x = rng.normal();
    std::vector<double> c1(m * n), c2(m * n);
    bool ok = true;
    nn::kern::matmul_serial(a.data(), b.data(), c1.data(), m, k, n, false);
    nn::kern::matmul_omp(a.data(), b.data(), c2.data(), m, k, n, false);
    ok = ok && std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0;
    nn::kern::matmul_nt_serial(a.data(), bt.data(), c1.data(), m, k, n, false);
    nn::kern::matmul_nt_omp(a.data(), bt.data(), c2.data(), m, k, n, false);
    ok = ok && std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0;
    nn::kern::matmul_tn_serial(at.data(), b.data(), c1.data(), k, m, n, false);
    nn::kern::matmul_tn_omp(at.data(), b.data(), c2.data(), k, m, n, false);
    ok = ok && std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0;
    report("kernel variants bit-identical", ok);
  }

  {  // autodiff vs finite differences on a tiny encoder stack
    try {
      EgteConfig ecfg;
      ecfg.layers = 1;
      ecfg.heads = 2;
      ecfg.dim = 8;
      ecfg.ffn_dim = 12;
      ecfg.max_degree = 8;
      nn::ParamStore store;
      Rng rng(derive_seed(seed, 7, 7, 7));
      Egte egte(store, "egte/", ecfg, rng);
      ScenarioConfig sc_cfg;
      sc_cfg.n_nodes = 5;
      sc_cfg.rng_seed = derive_seed(seed, 9, 9, 9);
      Scenario sc = make_scenario(sc_cfg);
      GameState st;
      Rng srng(derive_seed(seed, 4, 4, 4));
      for (int i = 0; i < sc.graph.n; ++i) {
        st.red.push_back(srng.uniform(0.0, 3.0));
        st.blue.push_back(srng.uniform(0.0, 3.0));
      }
      auto loss_fn = [&](nn::Tape& tape) {
        EgteOut out = egte.encode(tape, sc.graph, st);
        return tape.sum(tape.tanh(tape.concat_rows(out.nodes, out.global)));
      };
      nn::FdReport fd = nn::finite_difference_check(store, loss_fn, 1e-4);
      report("encoder gradients match finite differences", fd.pass,
             "max rel err " + std::to_string(fd.max_rel_err));
    } catch (const std::exception& e) {
      report("encoder gradients match finite differences", false, e.what());
    }
  }

  {  // environment invariants over random rule-vs-rule episodes
    try {
      bool ok = true;
      std::string detail;
      for (int i = 0; i < 50 && ok; ++i) {
        ScenarioConfig sc_cfg;
        sc_cfg.n_nodes = 4 + static_cast<int>(i % 9);
        sc_cfg.rng_seed = derive_seed(seed, 21, static_cast<uint64_t>(i), 0);
        Scenario sc = make_scenario(sc_cfg);
        EpisodeResult res = run_episode(
            sc, [](const GameGraph& g, double b) { return blue_rule_alloc(g, b); },
            [](const GameGraph& g, const Allocation& blue, double b) {
              return greedy_alloc(g, blue, b);
            },
            [](const GameGraph& g, const GameState& s, const GameState& p) {
              return blue_rule_transfer(g, s, p);
            },
            [](const GameGraph& g, const GameState& s, const GameState& p) {
              return red_rule_transfer(g, s, p);
            });
        for (const TraceRound& r : res.trace.rounds)
          for (int v = 0; v < sc.graph.n; ++v)
            if (r.red[v] < 0.0 || r.blue[v] < 0.0) {
              ok = false;
              detail = "negative stock";
            }
        UtilityReport rep = compute_utilities(sc.graph, res.final_state);
        if (std::abs(rep.red_utility - res.report.red_utility) != 0.0) {
          ok = false;
          detail = "utility recomputation mismatch";
        }
      }
      report("episode invariants hold", ok, detail);
    } catch (const std::exception& e) {
      report("episode invariants hold", false, e.what());
    }
  }

  {  // sampled mover action re-scores to the stored log-density exactly
    try {
      TransferConfig tcfg;
      tcfg.egte.layers = 1;
      tcfg.egte.heads = 2;
      tcfg.egte.dim = 8;
      tcfg.egte.ffn_dim = 12;
      TransferModel model(tcfg, derive_seed(seed, 31, 0, 0));
      bool ok = true;
      std::string detail;
      for (int i = 0; i < 10 && ok; ++i) {
        ScenarioConfig sc_cfg;
        sc_cfg.n_nodes = 6;
        sc_cfg.rng_seed = derive_seed(seed, 32, static_cast<uint64_t>(i), 0);
        Scenario sc = make_scenario(sc_cfg);
        Allocation blue = blue_rule_alloc(sc.graph, sc.blue_budget);
        Allocation red = greedy_alloc(sc.graph, blue, sc.red_budget);
        GameState st = resolve_initial(sc.graph, blue, red, sc.blue_budget, sc.red_budget);
        Rng rng(derive_seed(seed, 33, static_cast<uint64_t>(i), 0));
        nn::Tape t1;
        TransferActResult act = model.act(t1, sc.graph, st, DecodeMode::Sample, &rng);
        nn::Tape t2;
        TransferEval ev = model.evaluate(t2, sc.graph, st, act.action);
        if (ev.log_prob.value() != act.log_prob) {
          ok = false;
          detail = "log-density mismatch";
        }
      }
      report("mover act/evaluate consistency", ok, detail);
    } catch (const std::exception& e) {
      report("mover act/evaluate consistency", false, e.what());
    }
  }

  {  // checkpoints round-trip and reject shape mismatches
    try {
      PlannerConfig pc;
      pc.egte.layers = 1;
      pc.egte.heads = 2;
      pc.egte.dim = 8;
      pc.egte.ffn_dim = 12;
      PlannerModel m1(pc, derive_seed(seed, 41, 0, 0));
      PlannerModel m2(pc, derive_seed(seed, 42, 0, 0));
      fs::path tmp = fs::temp_directory_path() / "blotto_check_planner.ckpt";
      m1.store().save(tmp.string());
      m2.store().load(tmp.string());
      bool ok = m1.store().value_checksum() == m2.store().value_checksum();
      PlannerConfig pc3 = pc;
      pc3.egte.dim = 16;
      pc3.egte.ffn_dim = 24;
      PlannerModel m3(pc3, derive_seed(seed, 43, 0, 0));
      bool rejected = false;
      try {
        m3.store().load(tmp.string());
      } catch (const std::exception&) {
        rejected = true;
      }
      fs::remove(tmp);
      report("checkpoint round-trip and shape guard", ok && rejected);
    } catch (const std::exception& e) {
      report("checkpoint round-trip and shape guard", false, e.what());
    }
  }

  if (failures == 0) {
    std::printf("all checks passed\n");
    return 0;
  }
  std::printf("%d check(s) failed\n", failures);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage resource duel on weighted graphs"};
  app.fallthrough();
  app.require_subcommand(1);

  uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = "run_out";
  app.add_option("--seed", seed, "master seed (default 0)");
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default run_out)");

  CLI::App* gen = app.add_subcommand("gen", "generate scenario files");
  int gen_count = -1;
  gen->add_option("--count", gen_count, "number of scenarios");

  CLI::App* train = app.add_subcommand("train", "run the training phases");
  std::string phase = "all";
  std::string planner_ckpt, transfer_ckpt;
  int iters = -1;
  train->add_option("--phase", phase, "a | b | c | all")
      ->check(CLI::IsMember({"a", "b", "c", "all"}));
  train->add_option("--iters", iters, "override iteration count for the selected phases");
  train->add_option("--planner-ckpt", planner_ckpt, "start from this planner checkpoint")
      ->check(CLI::ExistingFile);
  train->add_option("--transfer-ckpt", transfer_ckpt, "start from this mover checkpoint")
      ->check(CLI::ExistingFile);

  CLI::App* eval = app.add_subcommand("eval", "run an evaluation suite");
  std::vector<std::string> methods;
  std::vector<int> sizes;
  int instances = -1;
  bool latency = false;
  std::string eval_planner_ckpt, eval_transfer_ckpt;
  eval->add_option("--methods", methods, "methods to evaluate")->delimiter(',');
  eval->add_option("--sizes", sizes, "board sizes")->delimiter(',');
  eval->add_option("--instances", instances, "instances per size");
  eval->add_flag("--latency", latency, "measure red decision latency (serial run)");
  eval->add_option("--planner-ckpt", eval_planner_ckpt, "planner checkpoint for neural methods")
      ->check(CLI::ExistingFile);
  eval->add_option("--transfer-ckpt", eval_transfer_ckpt, "mover checkpoint for neural methods")
      ->check(CLI::ExistingFile);

  CLI::App* oracle = app.add_subcommand("oracle", "small-board opening oracle report");
  std::string scenario_path, oracle_out;
  oracle->add_option("--scenario", scenario_path, "scenario file (default: generate one)")
      ->check(CLI::ExistingFile);
  oracle->add_option("--report", oracle_out, "also write the report to this file");

  CLI::App* check = app.add_subcommand("check", "fast internal consistency battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CliConfig cfg;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      json j = json::parse(f);
      apply_json(cfg, j);
    }
    if (gen_count > 0) cfg.gen_count = gen_count;
    if (iters > 0) {
      cfg.reinforce.iterations = iters;
      cfg.ppo.iterations = iters;
      cfg.feedback.iterations = iters;
    }
    if (!methods.empty()) cfg.eval_methods = methods;
    if (!sizes.empty()) cfg.eval_sizes = sizes;
    if (instances > 0) cfg.eval_instances = instances;
    if (latency) cfg.eval_latency = true;

    if (gen->parsed()) return cmd_gen(cfg, seed, out_dir, cfg.gen_count);
    if (train->parsed()) return cmd_train(cfg, seed, out_dir, phase, planner_ckpt, transfer_ckpt);
    if (eval->parsed()) return cmd_eval(cfg, seed, out_dir, eval_planner_ckpt, eval_transfer_ckpt);
    if (oracle->parsed()) return cmd_oracle(cfg, seed, scenario_path, oracle_out);
    if (check->parsed()) return cmd_check(seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
