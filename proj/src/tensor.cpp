#include "blotto/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "blotto/kernels.hpp"

namespace blotto::nn {

namespace {
void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
std::string shp(const Tensor& t) { return t.shape_str(); }
}  // namespace

std::string Tensor::shape_str() const {
  if (!defined()) return "<undef>";
  return std::to_string(rows()) + "x" + std::to_string(cols());
}

double Tensor::value() const {
  require(defined() && size() == 1, "value(): tensor is not 1x1 but " + shape_str());
  return d_->val[0];
}

Tensor make_tensor(int rows, int cols, bool requires_grad) {
  require(rows > 0 && cols > 0, "make_tensor: non-positive shape");
  auto d = std::make_shared<TensorData>();
  d->rows = rows;
  d->cols = cols;
  d->val.assign(static_cast<size_t>(rows) * cols, 0.0);
  d->grad.assign(static_cast<size_t>(rows) * cols, 0.0);
  d->requires_grad = requires_grad;
  return Tensor(d);
}

Tensor Tape::fresh(int rows, int cols, bool requires_grad) {
  return make_tensor(rows, cols, requires_grad);
}

Tensor Tape::constant(int rows, int cols, const std::vector<double>& vals) {
  require(vals.size() == static_cast<size_t>(rows) * cols, "constant: value count does not match shape");
  Tensor t = fresh(rows, cols, false);
  t.values() = vals;
  return t;
}

Tensor Tape::constant_scalar(double v) { return constant(1, 1, {v}); }

Tensor Tape::zeros(int rows, int cols, bool requires_grad) {
  return fresh(rows, cols, requires_grad);
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dims differ, lhs " + shp(a) + " rhs " + shp(b));
  int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = fresh(m, n, a.requires_grad() || b.requires_grad());
  kern::matmul(a.values().data(), b.values().data(), out.values().data(), m, k, n);
  if (out.requires_grad()) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    record([ad, bd, od, m, k, n] {
      if (ad->requires_grad)
        kern::matmul_nt(od->grad.data(), bd->val.data(), ad->grad.data(), m, n, k, true);
      if (bd->requires_grad)
        kern::matmul_tn(ad->val.data(), od->grad.data(), bd->grad.data(), k, m, n, true);
    });
  }
  return out;
}

Tensor Tape::matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dims differ, lhs " + shp(a) + " rhs " + shp(b));
  int m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out = fresh(m, n, a.requires_grad() || b.requires_grad());
  kern::matmul_nt(a.values().data(), b.values().data(), out.values().data(), m, k, n);
  if (out.requires_grad()) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    record([ad, bd, od, m, k, n] {
      if (ad->requires_grad)
        kern::matmul(od->grad.data(), bd->val.data(), ad->grad.data(), m, n, k, true);
      if (bd->requires_grad)
        kern::matmul_tn(od->grad.data(), ad->val.data(), bd->grad.data(), n, m, k, true);
    });
  }
  return out;
}

Tensor Tape::transpose(const Tensor& a) {
  int m = a.rows(), n = a.cols();
  Tensor out = fresh(n, m, a.requires_grad());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od, m, n] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          ad->grad[static_cast<size_t>(i) * n + j] += od->grad[static_cast<size_t>(j) * m + i];
    });
  }
  return out;
}

namespace {
enum class BinKind { Add, Sub, Mul, Min };
}

static Tensor binary_op(Tape& tape, std::vector<std::function<void()>>* nodes, const Tensor& a,
                        const Tensor& b, BinKind kind, const char* name) {
  (void)tape;
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(name) + ": shape mismatch, lhs " + shp(a) + " rhs " + shp(b));
  Tensor out = make_tensor(a.rows(), a.cols(), a.requires_grad() || b.requires_grad());
  size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) {
    double x = a.values()[i], y = b.values()[i];
    switch (kind) {
      case BinKind::Add: out.values()[i] = x + y; break;
      case BinKind::Sub: out.values()[i] = x - y; break;
      case BinKind::Mul: out.values()[i] = x * y; break;
      case BinKind::Min: out.values()[i] = (x <= y) ? x : y; break;
    }
  }
  if (out.requires_grad()) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    nodes->push_back([ad, bd, od, kind, n] {
      for (size_t i = 0; i < n; ++i) {
        double g = od->grad[i];
        if (g == 0.0) continue;
        switch (kind) {
          case BinKind::Add:
            if (ad->requires_grad) ad->grad[i] += g;
            if (bd->requires_grad) bd->grad[i] += g;
            break;
          case BinKind::Sub:
            if (ad->requires_grad) ad->grad[i] += g;
            if (bd->requires_grad) bd->grad[i] -= g;
            break;
          case BinKind::Mul:
            if (ad->requires_grad) ad->grad[i] += g * bd->val[i];
            if (bd->requires_grad) bd->grad[i] += g * ad->val[i];
            break;
          case BinKind::Min:
            if (ad->val[i] <= bd->val[i]) {
              if (ad->requires_grad) ad->grad[i] += g;
            } else {
              if (bd->requires_grad) bd->grad[i] += g;
            }
            break;
        }
      }
    });
  }
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) { return binary_op(*this, &nodes_, a, b, BinKind::Add, "add"); }
Tensor Tape::sub(const Tensor& a, const Tensor& b) { return binary_op(*this, &nodes_, a, b, BinKind::Sub, "sub"); }
Tensor Tape::mul(const Tensor& a, const Tensor& b) { return binary_op(*this, &nodes_, a, b, BinKind::Mul, "mul"); }
Tensor Tape::minimum(const Tensor& a, const Tensor& b) { return binary_op(*this, &nodes_, a, b, BinKind::Min, "minimum"); }

Tensor Tape::scale(const Tensor& a, double c) {
  Tensor out = fresh(a.rows(), a.cols(), a.requires_grad());
  size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * c;
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od, c, n] {
      for (size_t i = 0; i < n; ++i) ad->grad[i] += od->grad[i] * c;
    });
  }
  return out;
}

Tensor Tape::add_const(const Tensor& a, double c) {
  Tensor out = fresh(a.rows(), a.cols(), a.requires_grad());
  size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + c;
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od, n] {
      for (size_t i = 0; i < n; ++i) ad->grad[i] += od->grad[i];
    });
  }
  return out;
}

Tensor Tape::clip(const Tensor& a, double lo, double hi) {
  require(lo <= hi, "clip: lo > hi");
  Tensor out = fresh(a.rows(), a.cols(), a.requires_grad());
  size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) {
    double x = a.values()[i];
    out.values()[i] = x < lo ? lo : (x > hi ? hi : x);
  }
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od, lo, hi, n] {
      for (size_t i = 0; i < n; ++i)
        if (ad->val[i] >= lo && ad->val[i] <= hi) ad->grad[i] += od->grad[i];
    });
  }
  return out;
}

// unary maps share this scaffold: fwd(x) and dfdx evaluated from x (and y when handy)
template <typename F, typename DF>
static Tensor unary_op(std::vector<std::function<void()>>* nodes, const Tensor& a, F fwd, DF dfdx) {
  Tensor out = make_tensor(a.rows(), a.cols(), a.requires_grad());
  size_t n = out.values().size();
  for (size_t i = 0; i < n; ++i) out.values()[i] = fwd(a.values()[i]);
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    nodes->push_back([ad, od, dfdx, n] {
      for (size_t i = 0; i < n; ++i) ad->grad[i] += od->grad[i] * dfdx(ad->val[i], od->val[i]);
    });
  }
  return out;
}

Tensor Tape::relu(const Tensor& a) {
  return unary_op(&nodes_, a, [](double x) { return x > 0 ? x : 0.0; },
                  [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor Tape::leaky_relu(const Tensor& a, double slope) {
  return unary_op(&nodes_, a, [slope](double x) { return x > 0 ? x : slope * x; },
                  [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Tensor Tape::sigmoid(const Tensor& a) {
  return unary_op(&nodes_, a,
                  [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor Tape::tanh(const Tensor& a) {
  return unary_op(&nodes_, a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor Tape::exp(const Tensor& a) {
  return unary_op(&nodes_, a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor Tape::log(const Tensor& a) {
  return unary_op(&nodes_, a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor Tape::xlogx(const Tensor& a) {
  return unary_op(&nodes_, a, [](double x) { return x > 0 ? x * std::log(x) : 0.0; },
                  [](double x, double) { return x > 0 ? std::log(x) + 1.0 : 0.0; });
}

Tensor Tape::add_bias(const Tensor& m, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == m.cols(),
          "add_bias: bias " + shp(row) + " does not broadcast over " + shp(m));
  int r = m.rows(), c = m.cols();
  Tensor out = fresh(r, c, m.requires_grad() || row.requires_grad());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = m.at(i, j) + row.at(0, j);
  if (out.requires_grad()) {
    auto md = m.ptr(), rd = row.ptr(), od = out.ptr();
    record([md, rd, od, r, c] {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
          double g = od->grad[static_cast<size_t>(i) * c + j];
          if (md->requires_grad) md->grad[static_cast<size_t>(i) * c + j] += g;
          if (rd->requires_grad) rd->grad[j] += g;
        }
    });
  }
  return out;
}

Tensor Tape::repeat_row(const Tensor& row, int n) {
  require(row.rows() == 1, "repeat_row: input must be 1xD, got " + shp(row));
  require(n > 0, "repeat_row: n must be positive");
  int c = row.cols();
  Tensor out = fresh(n, c, row.requires_grad());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = row.at(0, j);
  if (out.requires_grad()) {
    auto rd = row.ptr();
    auto od = out.ptr();
    record([rd, od, n, c] {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) rd->grad[j] += od->grad[static_cast<size_t>(i) * c + j];
    });
  }
  return out;
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), "concat_cols: row counts differ, " + shp(a) + " vs " + shp(b));
  int r = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out = fresh(r, ca + cb, a.requires_grad() || b.requires_grad());
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = a.at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = b.at(i, j);
  }
  if (out.requires_grad()) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    record([ad, bd, od, r, ca, cb] {
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < ca; ++j)
          if (ad->requires_grad) ad->grad[static_cast<size_t>(i) * ca + j] += od->grad[static_cast<size_t>(i) * (ca + cb) + j];
        for (int j = 0; j < cb; ++j)
          if (bd->requires_grad) bd->grad[static_cast<size_t>(i) * cb + j] += od->grad[static_cast<size_t>(i) * (ca + cb) + ca + j];
      }
    });
  }
  return out;
}

Tensor Tape::concat_rows(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "concat_rows: col counts differ, " + shp(a) + " vs " + shp(b));
  int c = a.cols(), ra = a.rows(), rb = b.rows();
  Tensor out = fresh(ra + rb, c, a.requires_grad() || b.requires_grad());
  for (int i = 0; i < ra; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = a.at(i, j);
  for (int i = 0; i < rb; ++i)
    for (int j = 0; j < c; ++j) out.at(ra + i, j) = b.at(i, j);
  if (out.requires_grad()) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    record([ad, bd, od, c, ra, rb] {
      if (ad->requires_grad)
        for (size_t i = 0; i < static_cast<size_t>(ra) * c; ++i) ad->grad[i] += od->grad[i];
      if (bd->requires_grad)
        for (size_t i = 0; i < static_cast<size_t>(rb) * c; ++i)
          bd->grad[i] += od->grad[static_cast<size_t>(ra) * c + i];
    });
  }
  return out;
}

Tensor Tape::slice_rows(const Tensor& a, int r0, int r1) {
  require(0 <= r0 && r0 < r1 && r1 <= a.rows(), "slice_rows: bad range on " + shp(a));
  int c = a.cols(), r = r1 - r0;
  Tensor out = fresh(r, c, a.requires_grad());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = a.at(r0 + i, j);
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od, r0, r, c] {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          ad->grad[static_cast<size_t>(r0 + i) * c + j] += od->grad[static_cast<size_t>(i) * c + j];
    });
  }
  return out;
}

Tensor Tape::slice_cols(const Tensor& a, int c0, int c1) {
  require(0 <= c0 && c0 < c1 && c1 <= a.cols(), "slice_cols: bad range on " + shp(a));
  int r = a.rows(), c = c1 - c0, ac = a.cols();
  Tensor out = fresh(r, c, a.requires_grad());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = a.at(i, c0 + j);
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od, c0, r, c, ac] {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          ad->grad[static_cast<size_t>(i) * ac + c0 + j] += od->grad[static_cast<size_t>(i) * c + j];
    });
  }
  return out;
}

Tensor Tape::rows_select(const Tensor& a, const std::vector<int>& idx) {
  require(!idx.empty(), "rows_select: empty index list");
  for (int i : idx) require(0 <= i && i < a.rows(), "rows_select: index out of range on " + shp(a));
  int c = a.cols(), r = static_cast<int>(idx.size());
  Tensor out = fresh(r, c, a.requires_grad());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = a.at(idx[i], j);
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od, idx, r, c] {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          ad->grad[static_cast<size_t>(idx[i]) * c + j] += od->grad[static_cast<size_t>(i) * c + j];
    });
  }
  return out;
}

Tensor Tape::pick(const Tensor& a, int r, int c) {
  require(0 <= r && r < a.rows() && 0 <= c && c < a.cols(), "pick: index out of range on " + shp(a));
  Tensor out = fresh(1, 1, a.requires_grad());
  out.values()[0] = a.at(r, c);
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    int cols = a.cols();
    record([ad, od, r, c, cols] { ad->grad[static_cast<size_t>(r) * cols + c] += od->grad[0]; });
  }
  return out;
}

Tensor Tape::row_gather(const Tensor& a, int r, const std::vector<int>& cols) {
  require(0 <= r && r < a.rows(), "row_gather: row out of range on " + shp(a));
  require(!cols.empty(), "row_gather: empty column list");
  for (int c : cols) require(0 <= c && c < a.cols(), "row_gather: column out of range on " + shp(a));
  int k = static_cast<int>(cols.size());
  Tensor out = fresh(1, k, a.requires_grad());
  for (int i = 0; i < k; ++i) out.at(0, i) = a.at(r, cols[i]);
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    int ac = a.cols();
    record([ad, od, r, cols, k, ac] {
      for (int i = 0; i < k; ++i) ad->grad[static_cast<size_t>(r) * ac + cols[i]] += od->grad[i];
    });
  }
  return out;
}

Tensor Tape::lookup(const Tensor& table, const std::vector<int>& idx, int rows, int cols) {
  require(table.rows() == 1, "lookup: table must be 1xK, got " + shp(table));
  require(idx.size() == static_cast<size_t>(rows) * cols, "lookup: index count does not match shape");
  for (int i : idx) require(0 <= i && i < table.cols(), "lookup: index out of table range");
  Tensor out = fresh(rows, cols, table.requires_grad());
  for (size_t i = 0; i < idx.size(); ++i) out.values()[i] = table.values()[idx[i]];
  if (out.requires_grad()) {
    auto td = table.ptr();
    auto od = out.ptr();
    record([td, od, idx] {
      for (size_t i = 0; i < idx.size(); ++i) td->grad[idx[i]] += od->grad[i];
    });
  }
  return out;
}

Tensor Tape::sum(const Tensor& a) {
  Tensor out = fresh(1, 1, a.requires_grad());
  double s = 0.0;
  for (double v : a.values()) s += v;
  out.values()[0] = s;
  if (out.requires_grad()) {
    auto ad = a.ptr();
    auto od = out.ptr();
    record([ad, od] {
      double g = od->grad[0];
      for (size_t i = 0; i < ad->grad.size(); ++i) ad->grad[i] += g;
    });
  }
  return out;
}

Tensor Tape::masked_softmax(const Tensor& scores, const std::vector<uint8_t>& keep) {
  require(keep.size() == static_cast<size_t>(scores.rows()) * scores.cols(),
          "masked_softmax: mask size does not match " + shp(scores));
  int r = scores.rows(), c = scores.cols();
  Tensor out = fresh(r, c, scores.requires_grad());
  for (int i = 0; i < r; ++i) {
    size_t base = static_cast<size_t>(i) * c;
    double mx = -1.0;
    bool any = false;
    for (int j = 0; j < c; ++j) {
      if (!keep[base + j]) continue;
      double v = scores.values()[base + j];
      if (!any || v > mx) mx = v;
      any = true;
    }
    if (!any) continue;  // row stays all-zero
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      if (!keep[base + j]) continue;
      double e = std::exp(scores.values()[base + j] - mx);
      out.values()[base + j] = e;
      z += e;
    }
    for (int j = 0; j < c; ++j)
      if (keep[base + j]) out.values()[base + j] /= z;
  }
  if (out.requires_grad()) {
    auto sd = scores.ptr();
    auto od = out.ptr();
    record([sd, od, keep, r, c] {
      for (int i = 0; i < r; ++i) {
        size_t base = static_cast<size_t>(i) * c;
        double dot = 0.0;
        for (int j = 0; j < c; ++j)
          if (keep[base + j]) dot += od->grad[base + j] * od->val[base + j];
        for (int j = 0; j < c; ++j)
          if (keep[base + j])
            sd->grad[base + j] += od->val[base + j] * (od->grad[base + j] - dot);
      }
    });
  }
  return out;
}

Tensor Tape::softmax(const Tensor& scores) {
  std::vector<uint8_t> keep(static_cast<size_t>(scores.rows()) * scores.cols(), 1);
  return masked_softmax(scores, keep);
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm: gamma " + shp(gamma) + " vs x " + shp(x));
  require(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm: beta " + shp(beta) + " vs x " + shp(x));
  int r = x.rows(), c = x.cols();
  Tensor out = fresh(r, c, x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  std::vector<double> inv(r), mean(r);
  for (int i = 0; i < r; ++i) {
    size_t base = static_cast<size_t>(i) * c;
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += x.values()[base + j];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      double d = x.values()[base + j] - mu;
      var += d * d;
    }
    var /= c;
    double in = 1.0 / std::sqrt(var + eps);
    mean[i] = mu;
    inv[i] = in;
    for (int j = 0; j < c; ++j)
      out.values()[base + j] = gamma.values()[j] * (x.values()[base + j] - mu) * in + beta.values()[j];
  }
  if (out.requires_grad()) {
    auto xd = x.ptr(), gd = gamma.ptr(), bd = beta.ptr(), od = out.ptr();
    record([xd, gd, bd, od, mean, inv, r, c] {
      for (int i = 0; i < r; ++i) {
        size_t base = static_cast<size_t>(i) * c;
        double m1 = 0.0, m2 = 0.0;  // mean of dxhat, mean of dxhat*xhat
        for (int j = 0; j < c; ++j) {
          double xhat = (xd->val[base + j] - mean[i]) * inv[i];
          double g = od->grad[base + j];
          if (bd->requires_grad) bd->grad[j] += g;
          if (gd->requires_grad) gd->grad[j] += g * xhat;
          double dxhat = g * gd->val[j];
          m1 += dxhat;
          m2 += dxhat * xhat;
        }
        m1 /= c;
        m2 /= c;
        if (xd->requires_grad) {
          for (int j = 0; j < c; ++j) {
            double xhat = (xd->val[base + j] - mean[i]) * inv[i];
            double dxhat = od->grad[base + j] * gd->val[j];
            xd->grad[base + j] += inv[i] * (dxhat - m1 - xhat * m2);
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::gatv2_pair_scores(const Tensor& l, const Tensor& r, const Tensor& a, double slope) {
  require(l.cols() == r.cols(), "gatv2_pair_scores: feature dims differ, " + shp(l) + " vs " + shp(r));
  require(a.cols() == 1 && a.rows() == l.cols(), "gatv2_pair_scores: read-out must be dx1, got " + shp(a));
  int n = l.rows(), m = r.rows(), d = l.cols();
  Tensor out = fresh(n, m, l.requires_grad() || r.requires_grad() || a.requires_grad());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        double u = l.at(i, k) + r.at(j, k);
        s += a.values()[k] * (u > 0 ? u : slope * u);
      }
      out.at(i, j) = s;
    }
  }
  if (out.requires_grad()) {
    auto ld = l.ptr(), rd = r.ptr(), ad = a.ptr(), od = out.ptr();
    record([ld, rd, ad, od, n, m, d, slope] {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
          double g = od->grad[static_cast<size_t>(i) * m + j];
          if (g == 0.0) continue;
          for (int k = 0; k < d; ++k) {
            double u = ld->val[static_cast<size_t>(i) * d + k] + rd->val[static_cast<size_t>(j) * d + k];
            double t = u > 0 ? u : slope * u;
            if (ad->requires_grad) ad->grad[k] += g * t;
            double du = g * ad->val[k] * (u > 0 ? 1.0 : slope);
            if (ld->requires_grad) ld->grad[static_cast<size_t>(i) * d + k] += du;
            if (rd->requires_grad) rd->grad[static_cast<size_t>(j) * d + k] += du;
          }
        }
      }
    });
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1, "backward: loss must be 1x1");
  if (backward_done_) throw std::logic_error("backward: tape already walked");
  backward_done_ = true;
  if (!loss.requires_grad()) return;  // loss does not depend on any leaf
  loss.data()->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace blotto::nn
