#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "forenlab/common.hpp"

namespace forenlab {

namespace detail {

// One record on the tape. Nodes are created in forward order with strictly
// increasing ids; backward replays closures in strictly decreasing id order,
// which is a valid reverse topological order because an op can only consume
// nodes that already exist.
struct Node {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized on first accumulation
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // accumulates into inputs' grad

  std::size_t numel() const { return value.size(); }
  void accumulate(std::size_t i, double v) {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    grad[i] += v;
  }
};

bool grad_enabled();
void set_grad_enabled(bool on);

// Registers a new op result on the tape. If recording is off or no input
// requires grad, the result is a detached constant.
std::shared_ptr<Node> make_op(std::vector<std::size_t> shape, std::vector<double> value,
                              std::vector<std::shared_ptr<Node>> inputs,
                              std::function<void(Node&)> backward);

}  // namespace detail

// Disables graph recording for its lifetime (evaluation passes).
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double fill, bool requires_grad = false);
  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  // 2D accessors; throw on other ranks
  std::size_t rows() const;
  std::size_t cols() const;

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;  // scalar only

  bool requires_grad() const { return node_->requires_grad; }
  std::uint64_t node_id() const { return node_->id; }

  // grad is empty until something accumulated into it
  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& grad() { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  // Reverse pass seeded with d(this)/d(this) = 1. Scalar outputs only.
  // Grads accumulate across calls until explicitly zeroed.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// elementwise / broadcast
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// multiply every element by a scalar tensor (used by the learnable fusion weight)
Tensor scale_by(const Tensor& a, const Tensor& s);
// adds a length-D vector to every row of an NxD matrix
Tensor add_rowvec(const Tensor& m, const Tensor& v);

// structure
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);

// reductions
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// nonlinearities
Tensor relu(const Tensor& a);
Tensor abs_elem(const Tensor& a);
// sin(omega0 * x); omega0 scales the backward cosine as well
Tensor sin_act(const Tensor& a, double omega0);
// softmax along each row of a 2D tensor (rows sum to 1)
Tensor softmax_rows(const Tensor& a);
// per-row normalisation with learned gain/bias (both length D)
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Samples a feature lattice (rows*cols tokens of dim D, row-major) at M
// continuous coordinates in [-1,1]^2 (x right, y down). Gradients scatter
// back to the four surrounding tokens with the same bilinear weights.
Tensor bilinear_sample(const Tensor& tokens, std::size_t lattice_rows, std::size_t lattice_cols,
                       const std::vector<double>& coords_xy);

}  // namespace forenlab
