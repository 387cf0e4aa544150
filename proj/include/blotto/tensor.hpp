#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace blotto::nn {

// Dense 2-D float64 tensor, row-major. Scalars are 1x1, row vectors 1xn.
struct TensorData {
  int rows = 0;
  int cols = 0;
  std::vector<double> val;
  std::vector<double> grad;  // same length as val, zero until backward touches it
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}

  bool defined() const { return d_ != nullptr; }
  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  int size() const { return d_->rows * d_->cols; }
  bool requires_grad() const { return d_->requires_grad; }

  double at(int r, int c) const { return d_->val[idx(r, c)]; }
  double& at(int r, int c) { return d_->val[idx(r, c)]; }
  double grad_at(int r, int c) const { return d_->grad[idx(r, c)]; }

  // value of a 1x1 tensor
  double value() const;

  std::vector<double>& values() { return d_->val; }
  const std::vector<double>& values() const { return d_->val; }
  std::vector<double>& grads() { return d_->grad; }
  const std::vector<double>& grads() const { return d_->grad; }

  TensorData* data() const { return d_.get(); }
  std::shared_ptr<TensorData> ptr() const { return d_; }

  std::string shape_str() const;

 private:
  size_t idx(int r, int c) const { return static_cast<size_t>(r) * d_->cols + c; }
  std::shared_ptr<TensorData> d_;
};

// Fresh zero tensor, detached from any tape. ParamStore uses this for leaves.
Tensor make_tensor(int rows, int cols, bool requires_grad);

// Records one op per forward call; backward() replays the closures in reverse.
// A tape and the tensors it created belong to a single thread.
class Tape {
 public:
  // ---- leaves ----
  Tensor constant(int rows, int cols, const std::vector<double>& vals);
  Tensor constant_scalar(double v);
  Tensor zeros(int rows, int cols, bool requires_grad = false);

  // ---- linear algebra ----
  Tensor matmul(const Tensor& a, const Tensor& b);     // a[m,k] * b[k,n]
  Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a[m,k] * b[n,k]^T
  Tensor transpose(const Tensor& a);

  // ---- elementwise, same shape ----
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor minimum(const Tensor& a, const Tensor& b);  // ties take a's gradient

  // ---- scalar-argument maps ----
  Tensor scale(const Tensor& a, double c);
  Tensor add_const(const Tensor& a, double c);
  Tensor clip(const Tensor& a, double lo, double hi);  // gradient passes inside [lo,hi]

  // ---- nonlinearities ----
  Tensor relu(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double slope = 0.01);
  Tensor sigmoid(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);
  Tensor xlogx(const Tensor& a);  // x*ln(x) with f(0)=0, f'(0)=0; entropy-safe

  // ---- broadcast / structure ----
  Tensor add_bias(const Tensor& m, const Tensor& row);    // m[n,d] + row[1,d]
  Tensor repeat_row(const Tensor& row, int n);            // row[1,d] -> [n,d]
  Tensor concat_cols(const Tensor& a, const Tensor& b);
  Tensor concat_rows(const Tensor& a, const Tensor& b);
  Tensor slice_rows(const Tensor& a, int r0, int r1);     // [r0,r1)
  Tensor slice_cols(const Tensor& a, int c0, int c1);     // [c0,c1)
  Tensor rows_select(const Tensor& a, const std::vector<int>& idx);
  Tensor pick(const Tensor& a, int r, int c);             // -> 1x1
  Tensor row_gather(const Tensor& a, int r, const std::vector<int>& cols);  // -> 1xK

  // scalar table lookup: table is 1xK, idx has rows*cols entries in [0,K)
  Tensor lookup(const Tensor& table, const std::vector<int>& idx, int rows, int cols);

  // ---- reductions ----
  Tensor sum(const Tensor& a);  // -> 1x1

  // ---- fused / structured ops ----
  // Row-wise softmax over entries with keep!=0; dropped entries are exactly 0.
  // A row with no kept entries comes out all zero.
  Tensor masked_softmax(const Tensor& scores, const std::vector<uint8_t>& keep);
  Tensor softmax(const Tensor& scores);

  // y[r,:] = gamma * (x[r,:]-mean)/sqrt(var+eps) + beta, per row
  Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

  // s[i,j] = sum_k a[k] * leaky_relu(l[i,k] + r[j,k]); l:[n,d] r:[m,d] a:[d,1] -> [n,m]
  Tensor gatv2_pair_scores(const Tensor& l, const Tensor& r, const Tensor& a, double slope = 0.01);

  // Seeds d(loss)/d(loss)=1 and walks the tape once, newest to oldest.
  // Single-shot per tape; leaf gradients accumulate across tapes until zeroed.
  void backward(const Tensor& loss);

  size_t num_ops() const { return nodes_.size(); }

 private:
  Tensor fresh(int rows, int cols, bool requires_grad);
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }

  std::vector<std::function<void()>> nodes_;
  bool backward_done_ = false;
};

}  // namespace blotto::nn
