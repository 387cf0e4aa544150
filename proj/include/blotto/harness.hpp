#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blotto/game.hpp"
#include "blotto/graph.hpp"

namespace blotto {

// A red side under test: an opening allocator plus an optional per-round
// mover (empty transfer = hold everywhere). Blue always plays its doctrine.
struct RedStrategy {
  std::string name;
  RedAllocPolicy alloc;
  TransferPolicy transfer;
};

struct MetricsRow {
  std::string method;
  int size = 0;
  int instances = 0;  // evaluated successfully
  int failed = 0;
  double mean_utility = 0.0, sd_utility = 0.0;
  double mean_cost = 0.0, sd_cost = 0.0;
  double mean_latency = 0.0;  // seconds inside red's policy calls
  bool latency_enabled = false;
};

struct InstanceRecord {
  std::string method;
  int size = 0;
  int index = 0;
  double utility = 0.0;
  double cost = 0.0;
  double latency = 0.0;
  int rounds = 0;
  bool failed = false;
  std::string error;
};

struct SuiteConfig {
  std::vector<int> sizes{10};
  int instances = 100;
  uint64_t master_seed = 0;
  ScenarioConfig scenario;  // template; n_nodes is replaced per size
  bool measure_latency = false;  // forces serial execution for clean timing
  bool parallel = true;
};

struct SuiteResult {
  std::vector<MetricsRow> rows;        // one per (method, size)
  std::vector<InstanceRecord> records; // every instance, failures included
};

// Board (size, index) is the same for every method (seeds do not involve the
// method), so cross-method comparisons are paired. Instances run in parallel
// when enabled; aggregation is always done serially in index order, so the
// output is identical at any thread count.
SuiteResult run_suite(const SuiteConfig& cfg, const std::vector<RedStrategy>& methods);

enum class TableFormat { Csv, Aligned, JsonLines };

// Csv and JsonLines are machine formats: parse(emit(rows)) re-emits byte
// identically. Aligned is for terminals only.
std::string emit_tables(const std::vector<MetricsRow>& rows, TableFormat fmt);
std::vector<MetricsRow> parse_tables_csv(const std::string& text);
std::vector<MetricsRow> parse_tables_jsonl(const std::string& text);

std::string instance_log_csv(const std::vector<InstanceRecord>& records);

}  // namespace blotto
