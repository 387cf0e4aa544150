#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "blotto/rng.hpp"
#include "blotto/tensor.hpp"

namespace blotto::nn {

struct AdamStatus {
  bool applied = true;
  std::string bad_param;  // first parameter whose gradient was non-finite
};

// Named parameters plus Adam state. Names carry group prefixes like
// "egte/l0/wq"; a model owns one store, so planner and transfer weights can
// be stepped, frozen, and checkpointed independently.
class ParamStore {
 public:
  Tensor add(const std::string& name, int rows, int cols, bool trainable = true);
  Tensor add_uniform(const std::string& name, int rows, int cols, Rng& rng, int fan_in,
                     bool trainable = true);
  Tensor add_constant_fill(const std::string& name, int rows, int cols, double fill,
                           bool trainable = true);

  bool has(const std::string& name) const;
  Tensor get(const std::string& name) const;
  std::vector<std::string> names() const;  // insertion order
  size_t count() const { return entries_.size(); }
  size_t scalar_count() const;

  void zero_grads();

  // One bias-corrected Adam step over every trainable entry. If any gradient
  // is non-finite the whole update is skipped (no parameter moves), the
  // offending name is reported, and gradients are cleared either way.
  AdamStatus adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Named-tensor archive, versioned header, raw little-endian float64.
  // load() rejects unknown names, missing names, and shape mismatches.
  void save(const std::string& path) const;
  void load(const std::string& path);

  // FNV-1a over all values in insertion order; for freeze verification.
  uint64_t value_checksum() const;

 private:
  struct Entry {
    std::string name;
    Tensor t;
    std::vector<double> m, v;  // Adam moments
    bool trainable;
  };
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
  int64_t adam_t_ = 0;
};

struct FdParamReport {
  std::string name;
  double max_rel_err = 0.0;
};

struct FdReport {
  std::vector<FdParamReport> params;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Central finite differences (step h) against the tape's analytic gradients,
// sweeping every element of every registered parameter (frozen ones still
// carry tape gradients). loss_fn must be a deterministic pure function of
// the store's current values.
FdReport finite_difference_check(ParamStore& store,
                                 const std::function<Tensor(Tape&)>& loss_fn,
                                 double tolerance, double h = 1e-4);

}  // namespace blotto::nn
