#include "blotto/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "blotto/rng.hpp"

namespace blotto {

namespace {

constexpr uint64_t kSuiteTag = 0xE7;
constexpr const char* kPlusMinus = "\xc2\xb1";

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void mean_sd(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

}  // namespace

SuiteResult run_suite(const SuiteConfig& cfg, const std::vector<RedStrategy>& methods) {
  if (cfg.instances < 1) throw std::invalid_argument("run_suite: instances must be >= 1");
  SuiteResult out;
  for (const RedStrategy& m : methods) {
    if (!m.alloc)
      throw std::invalid_argument("run_suite: method '" + m.name + "' has no allocator");
    for (int size : cfg.sizes) {
      std::vector<InstanceRecord> recs(cfg.instances);
      const bool use_par = cfg.parallel && !cfg.measure_latency;
#pragma omp parallel for schedule(dynamic) if (use_par)
      for (int k = 0; k < cfg.instances; ++k) {
        InstanceRecord rec;
        rec.method = m.name;
        rec.size = size;
        rec.index = k;
        try {
          ScenarioConfig sc_cfg = cfg.scenario;
          sc_cfg.n_nodes = size;
          sc_cfg.rng_seed = derive_seed(cfg.master_seed, static_cast<uint64_t>(size),
                                        static_cast<uint64_t>(k), kSuiteTag);
          Scenario sc = make_scenario(sc_cfg);

          double lat = 0.0;
          RedAllocPolicy alloc = m.alloc;
          TransferPolicy transfer = m.transfer;
          if (!transfer)
            transfer = [](const GameGraph& gg, const GameState&, const GameState&) {
              return identity_plan(gg.n);
            };
          if (cfg.measure_latency) {
            RedAllocPolicy inner_a = std::move(alloc);
            alloc = [&lat, inner_a](const GameGraph& gg, const Allocation& bl, double bud) {
              double t0 = now_seconds();
              Allocation a = inner_a(gg, bl, bud);
              lat += now_seconds() - t0;
              return a;
            };
            TransferPolicy inner_t = std::move(transfer);
            transfer = [&lat, inner_t](const GameGraph& gg, const GameState& obs,
                                       const GameState& prev) {
              double t0 = now_seconds();
              TransferPlan p = inner_t(gg, obs, prev);
              lat += now_seconds() - t0;
              return p;
            };
          }

          EpisodeResult res = run_episode(
              sc, [](const GameGraph& gg, double bud) { return blue_rule_alloc(gg, bud); },
              alloc,
              [](const GameGraph& gg, const GameState& st, const GameState& pv) {
                return blue_rule_transfer(gg, st, pv);
              },
              transfer);
          // headline metric is final controlled value; cost is its own column
          rec.utility = res.report.red_value;
          rec.cost = res.report.red_cost;
          rec.rounds = res.report.rounds_played;
          rec.latency = lat;
        } catch (const std::exception& e) {
          rec.failed = true;
          rec.error = e.what();
        } catch (...) {
          rec.failed = true;
          rec.error = "unknown error";
        }
        recs[k] = std::move(rec);
      }

      MetricsRow row;
      row.method = m.name;
      row.size = size;
      row.latency_enabled = cfg.measure_latency;
      std::vector<double> us, cs, ls;
      for (const InstanceRecord& r : recs) {
        if (r.failed) {
          ++row.failed;
          continue;
        }
        us.push_back(r.utility);
        cs.push_back(r.cost);
        ls.push_back(r.latency);
      }
      row.instances = static_cast<int>(us.size());
      mean_sd(us, row.mean_utility, row.sd_utility);
      mean_sd(cs, row.mean_cost, row.sd_cost);
      double lat_sd = 0.0;
      mean_sd(ls, row.mean_latency, lat_sd);
      out.rows.push_back(std::move(row));
      for (InstanceRecord& r : recs) out.records.push_back(std::move(r));
    }
  }
  return out;
}

namespace {

std::vector<std::string> method_order(const std::vector<MetricsRow>& rows) {
  std::vector<std::string> ms;
  for (const MetricsRow& r : rows)
    if (std::find(ms.begin(), ms.end(), r.method) == ms.end()) ms.push_back(r.method);
  return ms;
}

std::vector<int> size_order(const std::vector<MetricsRow>& rows) {
  std::vector<int> ss;
  for (const MetricsRow& r : rows)
    if (std::find(ss.begin(), ss.end(), r.size) == ss.end()) ss.push_back(r.size);
  return ss;
}

const MetricsRow* find_row(const std::vector<MetricsRow>& rows, const std::string& m, int s) {
  for (const MetricsRow& r : rows)
    if (r.method == m && r.size == s) return &r;
  return nullptr;
}

std::string emit_csv(const std::vector<MetricsRow>& rows) {
  std::vector<std::string> ms = method_order(rows);
  std::vector<int> ss = size_order(rows);
  bool any_latency = false;
  for (const MetricsRow& r : rows) any_latency = any_latency || r.latency_enabled;

  std::string out = "size,metric";
  for (const std::string& m : ms) out += "," + csv_quote(m);
  out += '\n';

  std::vector<std::string> metrics = {"utility", "cost", "instances", "failed"};
  if (any_latency) metrics.push_back("latency");
  for (int s : ss) {
    for (const std::string& metric : metrics) {
      out += std::to_string(s) + "," + metric;
      for (const std::string& m : ms) {
        out += ',';
        const MetricsRow* r = find_row(rows, m, s);
        if (!r) continue;
        if (metric == "utility")
          out += fmt_g(r->mean_utility) + kPlusMinus + fmt_g(r->sd_utility);
        else if (metric == "cost")
          out += fmt_g(r->mean_cost) + kPlusMinus + fmt_g(r->sd_cost);
        else if (metric == "instances")
          out += std::to_string(r->instances);
        else if (metric == "failed")
          out += std::to_string(r->failed);
        else
          out += fmt_g(r->mean_latency);
      }
      out += '\n';
    }
  }
  return out;
}

std::string emit_jsonl(const std::vector<MetricsRow>& rows) {
  std::string out;
  for (const MetricsRow& r : rows) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["size"] = r.size;
    j["instances"] = r.instances;
    j["failed"] = r.failed;
    j["mean_utility"] = r.mean_utility;
    j["sd_utility"] = r.sd_utility;
    j["mean_cost"] = r.mean_cost;
    j["sd_cost"] = r.sd_cost;
    j["mean_latency"] = r.mean_latency;
    j["latency_enabled"] = r.latency_enabled;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string emit_aligned(const std::vector<MetricsRow>& rows) {
  bool any_latency = false;
  for (const MetricsRow& r : rows) any_latency = any_latency || r.latency_enabled;
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> head = {"method", "size", "utility", "cost", "n", "failed"};
  if (any_latency) head.push_back("latency_ms");
  table.push_back(head);
  char buf[96];
  for (const MetricsRow& r : rows) {
    std::vector<std::string> line;
    line.push_back(r.method);
    line.push_back(std::to_string(r.size));
    std::snprintf(buf, sizeof buf, "%.2f %s %.2f", r.mean_utility, kPlusMinus, r.sd_utility);
    line.push_back(buf);
    std::snprintf(buf, sizeof buf, "%.2f %s %.2f", r.mean_cost, kPlusMinus, r.sd_cost);
    line.push_back(buf);
    line.push_back(std::to_string(r.instances));
    line.push_back(std::to_string(r.failed));
    if (any_latency) {
      std::snprintf(buf, sizeof buf, "%.3f", r.mean_latency * 1e3);
      line.push_back(buf);
    }
    table.push_back(line);
  }
  std::vector<size_t> width(table[0].size(), 0);
  for (const auto& line : table)
    for (size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (const auto& line : table) {
    for (size_t c = 0; c < line.size(); ++c) {
      out += line[c];
      if (c + 1 < line.size()) out.append(width[c] - line[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string emit_tables(const std::vector<MetricsRow>& rows, TableFormat fmt) {
  switch (fmt) {
    case TableFormat::Csv:
      return emit_csv(rows);
    case TableFormat::JsonLines:
      return emit_jsonl(rows);
    default:
      return emit_aligned(rows);
  }
}

std::vector<MetricsRow> parse_tables_csv(const std::string& text) {
  std::vector<std::string> lines = split(text, '\n');
  if (lines.empty() || lines[0].rfind("size,metric", 0) != 0)
    throw std::runtime_error("metrics csv: missing header");
  std::vector<std::string> header = split(lines[0], ',');
  std::vector<std::string> methods(header.begin() + 2, header.end());

  std::vector<MetricsRow> rows;
  auto row_for = [&](const std::string& m, int s) -> MetricsRow& {
    for (MetricsRow& r : rows)
      if (r.method == m && r.size == s) return r;
    MetricsRow r;
    r.method = m;
    r.size = s;
    rows.push_back(std::move(r));
    return rows.back();
  };

  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    std::vector<std::string> cells = split(lines[li], ',');
    if (cells.size() != methods.size() + 2)
      throw std::runtime_error("metrics csv: bad cell count on line " + std::to_string(li + 1));
    int s = std::stoi(cells[0]);
    const std::string& metric = cells[1];
    for (size_t mi = 0; mi < methods.size(); ++mi) {
      const std::string& cell = cells[mi + 2];
      if (cell.empty()) continue;
      MetricsRow& r = row_for(methods[mi], s);
      if (metric == "utility" || metric == "cost") {
        size_t pm = cell.find(kPlusMinus);
        if (pm == std::string::npos)
          throw std::runtime_error("metrics csv: malformed mean" + std::string(kPlusMinus) +
                                   "sd cell '" + cell + "'");
        double mean = std::stod(cell.substr(0, pm));
        double sd = std::stod(cell.substr(pm + 2));
        if (metric == "utility") {
          r.mean_utility = mean;
          r.sd_utility = sd;
        } else {
          r.mean_cost = mean;
          r.sd_cost = sd;
        }
      } else if (metric == "instances") {
        r.instances = std::stoi(cell);
      } else if (metric == "failed") {
        r.failed = std::stoi(cell);
      } else if (metric == "latency") {
        r.mean_latency = std::stod(cell);
        r.latency_enabled = true;
      } else {
        throw std::runtime_error("metrics csv: unknown metric '" + metric + "'");
      }
    }
  }

  // method-major, size order as first seen: matches the emitter's walk
  std::vector<MetricsRow> ordered;
  for (const std::string& m : methods)
    for (const MetricsRow& r : rows)
      if (r.method == m) ordered.push_back(r);
  return ordered;
}

std::vector<MetricsRow> parse_tables_jsonl(const std::string& text) {
  std::vector<MetricsRow> rows;
  for (const std::string& line : split(text, '\n')) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    MetricsRow r;
    r.method = j.at("method").get<std::string>();
    r.size = j.at("size").get<int>();
    r.instances = j.at("instances").get<int>();
    r.failed = j.at("failed").get<int>();
    r.mean_utility = j.at("mean_utility").get<double>();
    r.sd_utility = j.at("sd_utility").get<double>();
    r.mean_cost = j.at("mean_cost").get<double>();
    r.sd_cost = j.at("sd_cost").get<double>();
    r.mean_latency = j.at("mean_latency").get<double>();
    r.latency_enabled = j.at("latency_enabled").get<bool>();
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string instance_log_csv(const std::vector<InstanceRecord>& records) {
  std::string out = "method,size,index,utility,cost,latency,rounds,failed,error\n";
  for (const InstanceRecord& r : records) {
    out += csv_quote(r.method);
    out += ',' + std::to_string(r.size) + ',' + std::to_string(r.index) + ',';
    out += fmt_g(r.utility);
    out += ',';
    out += fmt_g(r.cost);
    out += ',';
    out += fmt_g(r.latency);
    out += ',' + std::to_string(r.rounds) + ',' + (r.failed ? std::string("1") : std::string("0"));
    out += ',' + csv_quote(r.error) + '\n';
  }
  return out;
}

}  // namespace blotto
