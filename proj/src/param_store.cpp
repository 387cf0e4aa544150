#include "blotto/param_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace blotto::nn {

namespace {
constexpr char kMagic[8] = {'B', 'L', 'T', 'K', '0', '0', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
}
}  // namespace

Tensor ParamStore::add(const std::string& name, int rows, int cols, bool trainable) {
  if (index_.count(name)) throw std::invalid_argument("param exists: " + name);
  Entry e;
  e.name = name;
  e.t = make_tensor(rows, cols, true);
  e.m.assign(static_cast<size_t>(rows) * cols, 0.0);
  e.v.assign(static_cast<size_t>(rows) * cols, 0.0);
  e.trainable = trainable;
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return entries_.back().t;
}

Tensor ParamStore::add_uniform(const std::string& name, int rows, int cols, Rng& rng, int fan_in,
                               bool trainable) {
  Tensor t = add(name, rows, cols, trainable);
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor ParamStore::add_constant_fill(const std::string& name, int rows, int cols, double fill,
                                     bool trainable) {
  Tensor t = add(name, rows, cols, trainable);
  for (double& v : t.values()) v = fill;
  return t;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) > 0; }

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("no such param: " + name);
  return entries_[it->second];
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("no such param: " + name);
  return entries_[it->second];
}

Tensor ParamStore::get(const std::string& name) const { return entry(name).t; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& e : entries_) n += e.t.values().size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_)
    for (double& g : e.t.grads()) g = 0.0;
}

AdamStatus ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  AdamStatus status;
  for (const auto& e : entries_) {
    if (!e.trainable) continue;
    for (double g : e.t.grads()) {
      if (!std::isfinite(g)) {
        status.applied = false;
        status.bad_param = e.name;
        break;
      }
    }
    if (!status.applied) break;
  }
  if (status.applied) {
    ++adam_t_;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
    for (auto& e : entries_) {
      if (!e.trainable) continue;
      auto& val = e.t.values();
      auto& grad = e.t.grads();
      for (size_t i = 0; i < val.size(); ++i) {
        double g = grad[i];
        e.m[i] = beta1 * e.m[i] + (1.0 - beta1) * g;
        e.v[i] = beta2 * e.v[i] + (1.0 - beta2) * g * g;
        double mhat = e.m[i] / bc1;
        double vhat = e.v[i] / bc2;
        val[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
  zero_grads();
  return status;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  out.write(kMagic, sizeof(kMagic));
  uint64_t count = entries_.size();
  write_pod(out, count);
  for (const auto& e : entries_) {
    uint32_t len = static_cast<uint32_t>(e.name.size());
    write_pod(out, len);
    out.write(e.name.data(), len);
    uint32_t rows = static_cast<uint32_t>(e.t.rows());
    uint32_t cols = static_cast<uint32_t>(e.t.cols());
    write_pod(out, rows);
    write_pod(out, cols);
    out.write(reinterpret_cast<const char*>(e.t.values().data()),
              static_cast<std::streamsize>(e.t.values().size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

void ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic/version in " + path);
  uint64_t count = 0;
  read_pod(in, count);

  std::vector<uint8_t> seen(entries_.size(), 0);
  for (uint64_t k = 0; k < count; ++k) {
    uint32_t len = 0;
    read_pod(in, len);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    uint32_t rows = 0, cols = 0;
    read_pod(in, rows);
    read_pod(in, cols);
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::runtime_error("checkpoint: unknown param '" + name + "' in " + path);
    Entry& e = entries_[it->second];
    if (static_cast<int>(rows) != e.t.rows() || static_cast<int>(cols) != e.t.cols())
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file " +
                               std::to_string(rows) + "x" + std::to_string(cols) + " vs store " +
                               e.t.shape_str());
    in.read(reinterpret_cast<char*>(e.t.values().data()),
            static_cast<std::streamsize>(e.t.values().size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    seen[it->second] = 1;
  }
  for (size_t i = 0; i < entries_.size(); ++i)
    if (!seen[i])
      throw std::runtime_error("checkpoint: param '" + entries_[i].name + "' missing from " + path);
}

uint64_t ParamStore::value_checksum() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& e : entries_) {
    mix(e.name.data(), e.name.size());
    mix(e.t.values().data(), e.t.values().size() * sizeof(double));
  }
  return h;
}

FdReport finite_difference_check(ParamStore& store, const std::function<Tensor(Tape&)>& loss_fn,
                                 double tolerance, double h) {
  FdReport report;
  report.tolerance = tolerance;

  store.zero_grads();
  {
    Tape tape;
    Tensor loss = loss_fn(tape);
    tape.backward(loss);
  }

  auto eval = [&]() {
    Tape tape;
    return loss_fn(tape).value();
  };

  for (const auto& name : store.names()) {
    Tensor p = store.get(name);
    FdParamReport pr;
    pr.name = name;
    for (size_t i = 0; i < p.values().size(); ++i) {
      double saved = p.values()[i];
      p.values()[i] = saved + h;
      double up = eval();
      p.values()[i] = saved - h;
      double down = eval();
      p.values()[i] = saved;
      double numeric = (up - down) / (2.0 * h);
      double analytic = p.grads()[i];
      double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
      double rel = std::fabs(numeric - analytic) / denom;
      if (rel > pr.max_rel_err) pr.max_rel_err = rel;
    }
    if (pr.max_rel_err > report.max_rel_err) report.max_rel_err = pr.max_rel_err;
    report.params.push_back(std::move(pr));
  }
  store.zero_grads();
  report.pass = report.max_rel_err <= tolerance;
  return report;
}

}  // namespace blotto::nn
