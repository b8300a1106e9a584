#include "forenlab/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace forenlab {

namespace detail {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
thread_local bool t_grad_enabled = true;
}  // namespace

bool grad_enabled() { return t_grad_enabled; }

void set_grad_enabled(bool on) { t_grad_enabled = on; }

std::shared_ptr<Node> make_op(std::vector<std::size_t> shape, std::vector<double> value,
                              std::vector<std::shared_ptr<Node>> inputs,
                              std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  bool needs = false;
  for (const auto& in : inputs)
    if (in->requires_grad) needs = true;
  if (needs && t_grad_enabled) {
    n->requires_grad = true;
    n->inputs = std::move(inputs);
    n->backward = std::move(backward);
  }
  return n;
}

}  // namespace detail

NoGradGuard::NoGradGuard() : prev_(detail::grad_enabled()) { detail::set_grad_enabled(false); }
NoGradGuard::~NoGradGuard() { detail::set_grad_enabled(prev_); }

namespace {

using detail::Node;

std::size_t numel_of(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void require_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2)
    throw ShapeError(std::string(op) + ": expected a 2D tensor, got " + shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill, bool requires_grad) {
  std::size_t n = numel_of(shape);
  return from_data(std::move(shape), std::vector<double>(n, fill), requires_grad);
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
  if (numel_of(shape) != data.size())
    throw ShapeError("from_data: shape " + shape_str(shape) + " holds " +
                     std::to_string(numel_of(shape)) + " elements, got " +
                     std::to_string(data.size()));
  auto n = detail::make_op(std::move(shape), std::move(data), {}, nullptr);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_data({1}, {v}, requires_grad);
}

std::size_t Tensor::rows() const {
  require_2d(*this, "rows");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  require_2d(*this, "cols");
  return shape()[1];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  require_2d(*this, "at");
  return node_->value[r * shape()[1] + c];
}

double Tensor::item() const {
  if (numel() != 1)
    throw ShapeError("item: expected a scalar, got " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::backward() const {
  if (numel() != 1)
    throw ShapeError("backward: loss must be a scalar, got " + shape_str(shape()));
  // Collect every node reachable through grad-requiring edges, then replay
  // closures by decreasing id. Constant subtrees are pruned up front.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& in : n->inputs)
      if (in->requires_grad && seen.insert(in.get()).second) stack.push_back(in.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });
  // Interior cotangents are per-pass scratch; only leaf grads accumulate
  // across backward calls (until zero_grad).
  for (Node* n : order)
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  node_->accumulate(0, 1.0);
  for (Node* n : order)
    if (n->backward) n->backward(*n);
}

// ---------------------------------------------------------------------------
// elementwise ops

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (std::size_t i = 0; i < self.numel(); ++i) {
      double g = self.grad[i];
      if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate(i, g);
      if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(i, g);
    }
  }));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (std::size_t i = 0; i < self.numel(); ++i) {
      double g = self.grad[i];
      if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate(i, g);
      if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(i, -g);
    }
  }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    for (std::size_t i = 0; i < self.numel(); ++i) {
      double g = self.grad[i];
      if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate(i, g * bv[i]);
      if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(i, g * av[i]);
    }
  }));
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node()}, [c](Node& self) {
    for (std::size_t i = 0; i < self.numel(); ++i)
      self.inputs[0]->accumulate(i, self.grad[i] * c);
  }));
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.numel() != 1)
    throw ShapeError("scale_by: scale must be a scalar, got " + shape_str(s.shape()));
  double sv = s.data()[0];
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * sv;
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node(), s.node()}, [](Node& self) {
    const auto& av = self.inputs[0]->value;
    double sv = self.inputs[1]->value[0];
    double ds = 0.0;
    for (std::size_t i = 0; i < self.numel(); ++i) {
      double g = self.grad[i];
      if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate(i, g * sv);
      ds += g * av[i];
    }
    if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(0, ds);
  }));
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  require_2d(m, "add_rowvec");
  std::size_t rows = m.shape()[0], cols = m.shape()[1];
  if (v.numel() != cols)
    throw ShapeError("add_rowvec: vector " + shape_str(v.shape()) + " does not match row width of " +
                     shape_str(m.shape()));
  std::vector<double> out(m.numel());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = m.data()[r * cols + c] + v.data()[c];
  return Tensor(detail::make_op(m.shape(), std::move(out), {m.node(), v.node()},
                                [rows, cols](Node& self) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        double g = self.grad[r * cols + c];
        if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate(r * cols + c, g);
        if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(c, g);
      }
  }));
}

// ---------------------------------------------------------------------------
// structural ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k)
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double av = ap[i * k + p];
      const double* brow = bp + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  return Tensor(detail::make_op({m, n}, std::move(out), {a.node(), b.node()},
                                [m, k, n](Node& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    if (self.inputs[0]->requires_grad) {
      Node& na = *self.inputs[0];
      if (na.grad.empty()) na.grad.assign(na.value.size(), 0.0);
      // dA[i,p] += sum_j dC[i,j] * B[p,j]
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* grow = self.grad.data() + i * n;
          const double* brow = bv.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          na.grad[i * k + p] += acc;
        }
    }
    if (self.inputs[1]->requires_grad) {
      Node& nb = *self.inputs[1];
      if (nb.grad.empty()) nb.grad.assign(nb.value.size(), 0.0);
      // dB[p,j] += sum_i A[i,p] * dC[i,j]
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double a_ip = av[i * k + p];
          const double* grow = self.grad.data() + i * n;
          double* brow = nb.grad.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) brow[j] += a_ip * grow[j];
        }
    }
  }));
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
  return Tensor(detail::make_op({n, m}, std::move(out), {a.node()}, [m, n](Node& self) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        self.inputs[0]->accumulate(i * n + j, self.grad[j * m + i]);
  }));
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (numel_of(shape) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  std::vector<double> out = a.data();
  return Tensor(detail::make_op(std::move(shape), std::move(out), {a.node()}, [](Node& self) {
    for (std::size_t i = 0; i < self.numel(); ++i)
      self.inputs[0]->accumulate(i, self.grad[i]);
  }));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_2d(a, "concat_cols");
  require_2d(b, "concat_cols");
  if (a.shape()[0] != b.shape()[0])
    throw ShapeError("concat_cols: row counts differ, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::size_t rows = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  std::vector<double> out(rows * (ca + cb));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ca; ++c) out[r * (ca + cb) + c] = a.data()[r * ca + c];
    for (std::size_t c = 0; c < cb; ++c) out[r * (ca + cb) + ca + c] = b.data()[r * cb + c];
  }
  return Tensor(detail::make_op({rows, ca + cb}, std::move(out), {a.node(), b.node()},
                                [rows, ca, cb](Node& self) {
    for (std::size_t r = 0; r < rows; ++r) {
      if (self.inputs[0]->requires_grad)
        for (std::size_t c = 0; c < ca; ++c)
          self.inputs[0]->accumulate(r * ca + c, self.grad[r * (ca + cb) + c]);
      if (self.inputs[1]->requires_grad)
        for (std::size_t c = 0; c < cb; ++c)
          self.inputs[1]->accumulate(r * cb + c, self.grad[r * (ca + cb) + ca + c]);
    }
  }));
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
  require_2d(a, "slice_cols");
  std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (start + len > cols)
    throw ShapeError("slice_cols: [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of range for " + shape_str(a.shape()));
  std::vector<double> out(rows * len);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < len; ++c) out[r * len + c] = a.data()[r * cols + start + c];
  return Tensor(detail::make_op({rows, len}, std::move(out), {a.node()},
                                [rows, cols, start, len](Node& self) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < len; ++c)
        self.inputs[0]->accumulate(r * cols + start + c, self.grad[r * len + c]);
  }));
}

// ---------------------------------------------------------------------------
// reductions

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return Tensor(detail::make_op({1}, {s}, {a.node()}, [](Node& self) {
    double g = self.grad[0];
    for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i)
      self.inputs[0]->accumulate(i, g);
  }));
}

Tensor mean(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  double inv = 1.0 / static_cast<double>(a.numel());
  return Tensor(detail::make_op({1}, {s * inv}, {a.node()}, [inv](Node& self) {
    double g = self.grad[0] * inv;
    for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i)
      self.inputs[0]->accumulate(i, g);
  }));
}

// ---------------------------------------------------------------------------
// nonlinearities

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    const auto& x = self.inputs[0]->value;
    for (std::size_t i = 0; i < self.numel(); ++i)
      self.inputs[0]->accumulate(i, x[i] > 0.0 ? self.grad[i] : 0.0);
  }));
}

Tensor abs_elem(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(a.data()[i]);
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    const auto& x = self.inputs[0]->value;
    for (std::size_t i = 0; i < self.numel(); ++i) {
      double s = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
      self.inputs[0]->accumulate(i, self.grad[i] * s);
    }
  }));
}

Tensor sin_act(const Tensor& a, double omega0) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(omega0 * a.data()[i]);
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node()}, [omega0](Node& self) {
    const auto& x = self.inputs[0]->value;
    for (std::size_t i = 0; i < self.numel(); ++i)
      self.inputs[0]->accumulate(i, self.grad[i] * omega0 * std::cos(omega0 * x[i]));
  }));
}

Tensor softmax_rows(const Tensor& a) {
  require_2d(a, "softmax_rows");
  std::size_t rows = a.shape()[0], cols = a.shape()[1];
  std::vector<double> out(a.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data().data() + r * cols;
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = std::exp(x[c] - mx);
      z += out[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  return Tensor(detail::make_op(a.shape(), std::move(out), {a.node()}, [rows, cols](Node& self) {
    // dx = y * (g - <g, y>) per row
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
      for (std::size_t c = 0; c < cols; ++c)
        self.inputs[0]->accumulate(r * cols + c, y[c] * (g[c] - dot));
    }
  }));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_2d(x, "layer_norm");
  std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (gain.numel() != cols || bias.numel() != cols)
    throw ShapeError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " +
                     shape_str(bias.shape()) + " do not match row width of " + shape_str(x.shape()));
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xp = x.data().data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += xp[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (xp[c] - mu) * (xp[c] - mu);
    var /= static_cast<double>(cols);
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < cols; ++c) {
      double h = (xp[c] - mu) * is;
      xhat[r * cols + c] = h;
      out[r * cols + c] = h * gain.data()[c] + bias.data()[c];
    }
  }
  return Tensor(detail::make_op(
      x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const auto& gv = self.inputs[1]->value;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* g = self.grad.data() + r * cols;
          const double* h = xhat.data() + r * cols;
          // reduce the two row means needed by the input gradient
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            double gy = g[c] * gv[c];
            m1 += gy;
            m2 += gy * h[c];
          }
          m1 /= static_cast<double>(cols);
          m2 /= static_cast<double>(cols);
          for (std::size_t c = 0; c < cols; ++c) {
            double gy = g[c] * gv[c];
            if (self.inputs[0]->requires_grad)
              self.inputs[0]->accumulate(r * cols + c, inv_std[r] * (gy - m1 - h[c] * m2));
            if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(c, g[c] * h[c]);
            if (self.inputs[2]->requires_grad) self.inputs[2]->accumulate(c, g[c]);
          }
        }
      }));
}

Tensor bilinear_sample(const Tensor& tokens, std::size_t lattice_rows, std::size_t lattice_cols,
                       const std::vector<double>& coords_xy) {
  require_2d(tokens, "bilinear_sample");
  if (tokens.shape()[0] != lattice_rows * lattice_cols)
    throw ShapeError("bilinear_sample: token count " + shape_str(tokens.shape()) +
                     " does not match a " + std::to_string(lattice_rows) + "x" +
                     std::to_string(lattice_cols) + " lattice");
  if (coords_xy.size() % 2 != 0) throw ShapeError("bilinear_sample: coords must be (x,y) pairs");
  std::size_t m = coords_xy.size() / 2;
  std::size_t d = tokens.shape()[1];
  // per query: 4 corner token indices and weights, reused by the backward scatter
  std::vector<std::size_t> idx(4 * m);
  std::vector<double> w(4 * m);
  std::vector<double> out(m * d, 0.0);
  for (std::size_t q = 0; q < m; ++q) {
    double x = std::clamp(coords_xy[2 * q], -1.0, 1.0);
    double y = std::clamp(coords_xy[2 * q + 1], -1.0, 1.0);
    double u = (x + 1.0) * 0.5 * static_cast<double>(lattice_cols - 1);
    double v = (y + 1.0) * 0.5 * static_cast<double>(lattice_rows - 1);
    std::size_t c0 = std::min(static_cast<std::size_t>(u), lattice_cols >= 2 ? lattice_cols - 2 : 0);
    std::size_t r0 = std::min(static_cast<std::size_t>(v), lattice_rows >= 2 ? lattice_rows - 2 : 0);
    double fu = lattice_cols >= 2 ? u - static_cast<double>(c0) : 0.0;
    double fv = lattice_rows >= 2 ? v - static_cast<double>(r0) : 0.0;
    std::size_t c1 = lattice_cols >= 2 ? c0 + 1 : c0;
    std::size_t r1 = lattice_rows >= 2 ? r0 + 1 : r0;
    idx[4 * q + 0] = r0 * lattice_cols + c0;
    idx[4 * q + 1] = r0 * lattice_cols + c1;
    idx[4 * q + 2] = r1 * lattice_cols + c0;
    idx[4 * q + 3] = r1 * lattice_cols + c1;
    w[4 * q + 0] = (1.0 - fv) * (1.0 - fu);
    w[4 * q + 1] = (1.0 - fv) * fu;
    w[4 * q + 2] = fv * (1.0 - fu);
    w[4 * q + 3] = fv * fu;
    for (int corner = 0; corner < 4; ++corner) {
      double wt = w[4 * q + corner];
      if (wt == 0.0) continue;
      const double* tok = tokens.data().data() + idx[4 * q + corner] * d;
      double* orow = out.data() + q * d;
      for (std::size_t c = 0; c < d; ++c) orow[c] += wt * tok[c];
    }
  }
  return Tensor(detail::make_op(
      {m, d}, std::move(out), {tokens.node()},
      [m, d, idx = std::move(idx), w = std::move(w)](Node& self) {
        Node& nt = *self.inputs[0];
        if (nt.grad.empty()) nt.grad.assign(nt.value.size(), 0.0);
        for (std::size_t q = 0; q < m; ++q)
          for (int corner = 0; corner < 4; ++corner) {
            double wt = w[4 * q + corner];
            if (wt == 0.0) continue;
            double* trow = nt.grad.data() + idx[4 * q + corner] * d;
            const double* grow = self.grad.data() + q * d;
            for (std::size_t c = 0; c < d; ++c) trow[c] += wt * grow[c];
          }
      }));
}

}  // namespace forenlab
