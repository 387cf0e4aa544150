#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blotto/baselines.hpp"
#include "blotto/harness.hpp"
#include "blotto/rng.hpp"

using namespace blotto;

namespace {

RedStrategy greedy_strategy() {
  RedStrategy s;
  s.name = "greedy";
  s.alloc = [](const GameGraph& g, const Allocation& blue, double budget) {
    return greedy_alloc(g, blue, budget);
  };
  return s;  // no transfer: hold every round
}

RedStrategy rule_strategy() {
  RedStrategy s;
  s.name = "greedy-rule";
  s.alloc = [](const GameGraph& g, const Allocation& blue, double budget) {
    return greedy_alloc(g, blue, budget);
  };
  s.transfer = [](const GameGraph& g, const GameState& obs, const GameState& prev) {
    return red_rule_transfer(g, obs, prev);
  };
  return s;
}

RedStrategy failing_strategy() {
  RedStrategy s;
  s.name = "broken";
  s.alloc = [](const GameGraph&, const Allocation&, double) -> Allocation {
    throw std::runtime_error("policy exploded");
  };
  return s;
}

SuiteConfig small_suite() {
  SuiteConfig cfg;
  cfg.sizes = {5, 6};
  cfg.instances = 8;
  cfg.master_seed = 31;
  cfg.scenario.max_rounds = 4;
  return cfg;
}

}  // namespace

TEST_CASE("suite results are identical with and without instance parallelism") {
  SuiteConfig cfg = small_suite();
  std::vector<RedStrategy> methods = {greedy_strategy(), rule_strategy()};

  cfg.parallel = true;
  SuiteResult par = run_suite(cfg, methods);
  cfg.parallel = false;
  SuiteResult ser = run_suite(cfg, methods);

  CHECK(emit_tables(par.rows, TableFormat::Csv) == emit_tables(ser.rows, TableFormat::Csv));
  CHECK(instance_log_csv(par.records) == instance_log_csv(ser.records));
  REQUIRE(par.records.size() == ser.records.size());
  for (size_t i = 0; i < par.records.size(); ++i) {
    CHECK(par.records[i].utility == ser.records[i].utility);  // bitwise
    CHECK(par.records[i].cost == ser.records[i].cost);
  }
}

TEST_CASE("every method sees the same board at the same coordinates") {
  SuiteConfig cfg = small_suite();
  SuiteResult res = run_suite(cfg, {greedy_strategy(), rule_strategy()});

  // records are method-major, instance-minor, in declaration order
  int per_method = 2 * cfg.instances;  // two sizes
  REQUIRE(static_cast<int>(res.records.size()) == 2 * per_method);
  for (int k = 0; k < per_method; ++k) {
    const InstanceRecord& a = res.records[k];
    const InstanceRecord& b = res.records[per_method + k];
    CHECK(a.size == b.size);
    CHECK(a.index == b.index);
    CHECK(a.method == "greedy");
    CHECK(b.method == "greedy-rule");
  }

  // the hold-everywhere strategy pays no transfer cost
  for (int k = 0; k < per_method; ++k) CHECK(res.records[k].cost == 0.0);
}

TEST_CASE("aggregates recompute from the per-instance records") {
  SuiteConfig cfg = small_suite();
  SuiteResult res = run_suite(cfg, {greedy_strategy()});

  for (const MetricsRow& row : res.rows) {
    std::vector<double> utils;
    for (const InstanceRecord& r : res.records)
      if (r.method == row.method && r.size == row.size && !r.failed) utils.push_back(r.utility);
    CHECK(static_cast<int>(utils.size()) == row.instances);

    double mean = 0.0;
    for (double u : utils) mean += u;
    mean /= utils.size();
    double var = 0.0;
    for (double u : utils) var += (u - mean) * (u - mean);
    double sd = utils.size() > 1 ? std::sqrt(var / (utils.size() - 1)) : 0.0;
    CHECK(row.mean_utility == doctest::Approx(mean).epsilon(1e-12));
    CHECK(row.sd_utility == doctest::Approx(sd).epsilon(1e-12));
  }
}

TEST_CASE("a failing method is recorded per instance without sinking the suite") {
  SuiteConfig cfg = small_suite();
  SuiteResult res = run_suite(cfg, {greedy_strategy(), failing_strategy()});

  int broken_failed = 0;
  for (const MetricsRow& row : res.rows) {
    if (row.method == "broken") {
      CHECK(row.instances == 0);
      CHECK(row.failed == cfg.instances);
      broken_failed += row.failed;
    } else {
      CHECK(row.failed == 0);
    }
  }
  CHECK(broken_failed == 2 * cfg.instances);

  bool saw_error = false;
  for (const InstanceRecord& r : res.records)
    if (r.method == "broken") {
      CHECK(r.failed);
      if (r.error.find("policy exploded") != std::string::npos) saw_error = true;
    }
  CHECK(saw_error);
}

TEST_CASE("metrics tables survive a csv round trip byte for byte") {
  SuiteConfig cfg = small_suite();
  SuiteResult res = run_suite(cfg, {greedy_strategy(), rule_strategy()});

  std::string csv = emit_tables(res.rows, TableFormat::Csv);
  std::vector<MetricsRow> back = parse_tables_csv(csv);
  CHECK(emit_tables(back, TableFormat::Csv) == csv);
  CHECK(csv.rfind("size,metric,", 0) == 0);
}

TEST_CASE("metrics tables survive a json-lines round trip byte for byte") {
  SuiteConfig cfg = small_suite();
  cfg.measure_latency = true;  // exercise the optional field too
  SuiteResult res = run_suite(cfg, {greedy_strategy(), rule_strategy()});

  std::string jl = emit_tables(res.rows, TableFormat::JsonLines);
  std::vector<MetricsRow> back = parse_tables_jsonl(jl);
  CHECK(emit_tables(back, TableFormat::JsonLines) == jl);

  // json-lines is fully lossless, field by field
  REQUIRE(back.size() == res.rows.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].method == res.rows[i].method);
    CHECK(back[i].size == res.rows[i].size);
    CHECK(back[i].instances == res.rows[i].instances);
    CHECK(back[i].failed == res.rows[i].failed);
    CHECK(back[i].mean_utility == res.rows[i].mean_utility);
    CHECK(back[i].sd_utility == res.rows[i].sd_utility);
    CHECK(back[i].mean_cost == res.rows[i].mean_cost);
    CHECK(back[i].sd_cost == res.rows[i].sd_cost);
    CHECK(back[i].mean_latency == res.rows[i].mean_latency);
    CHECK(back[i].latency_enabled == res.rows[i].latency_enabled);
  }

  // latency was measured and is nonnegative
  for (const MetricsRow& row : res.rows) {
    CHECK(row.latency_enabled);
    CHECK(row.mean_latency >= 0.0);
  }
}

TEST_CASE("aligned tables are for reading, instance logs quote freely") {
  SuiteConfig cfg = small_suite();
  cfg.instances = 3;
  SuiteResult res = run_suite(cfg, {greedy_strategy()});
  std::string aligned = emit_tables(res.rows, TableFormat::Aligned);
  CHECK(aligned.find("greedy") != std::string::npos);
  CHECK(aligned.find("utility") != std::string::npos);

  std::vector<InstanceRecord> recs = {{
      "odd,name\"quoted\"", 5, 0, 1.0, 0.5, 0.0, 3, true, "line\nbreak, and \"quotes\"",
  }};
  std::string csv = instance_log_csv(recs);
  CHECK(csv.find("\"odd,name\"\"quoted\"\"\"") != std::string::npos);
  CHECK(csv.rfind("method,size,index,utility,cost,latency,rounds,failed,error", 0) == 0);
}

TEST_CASE("suite runs are a pure function of the master seed") {
  SuiteConfig cfg = small_suite();
  SuiteResult a = run_suite(cfg, {rule_strategy()});
  SuiteResult b = run_suite(cfg, {rule_strategy()});
  CHECK(instance_log_csv(a.records) == instance_log_csv(b.records));

  cfg.master_seed = 32;
  SuiteResult c = run_suite(cfg, {rule_strategy()});
  CHECK(instance_log_csv(a.records) != instance_log_csv(c.records));
}
