#include "textkg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace textkg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool g_grad_enabled = true;
bool g_corrupt_matmul = false;

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_2d(const Tensor& t, const char* what) {
  if (!t.defined()) fail(std::string(what) + ": tensor is undefined");
  if (t.ndim() != 2) fail(std::string(what) + ": expected 2-D tensor, got shape " + shape_str(t.shape()));
}

std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<double> values) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  return n;
}

// Registers parents + backprop on `out` when grad mode is on and at least one
// input is tracked. `parents` must contain only tracked nodes.
void attach(const std::shared_ptr<detail::Node>& out,
            std::vector<std::shared_ptr<detail::Node>> parents,
            std::function<void(detail::Node&)> fn) {
  if (!g_grad_enabled || parents.empty()) return;
  out->tracked = true;
  out->parents = std::move(parents);
  out->backprop = std::move(fn);
}

std::vector<std::shared_ptr<detail::Node>> tracked_of(
    std::initializer_list<std::shared_ptr<detail::Node>> nodes) {
  std::vector<std::shared_ptr<detail::Node>> out;
  for (const auto& n : nodes)
    if (n->tracked) out.push_back(n);
  return out;
}

bool wants(const std::shared_ptr<detail::Node>& n) { return !n->adjoint.empty(); }

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << ")";
  return os.str();
}

// --- Tensor ------------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size())
    fail("tensor: shape " + shape_str(shape) + " wants " + std::to_string(shape_numel(shape)) +
         " values, got " + std::to_string(values.size()));
  node_ = make_node(std::move(shape), std::move(values));
  if (requires_grad) set_requires_grad(true);
}

Tensor wrap_node(std::shared_ptr<detail::Node> n) { return Tensor(std::move(n)); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double v) {
  std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::row(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::ndim() const { return node_->shape.size(); }
std::size_t Tensor::size() const { return node_->values.size(); }

std::size_t Tensor::rows() const {
  check_2d(*this, "rows");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  check_2d(*this, "cols");
  return node_->shape[1];
}

double Tensor::operator()(std::size_t r, std::size_t c) const {
  check_2d(*this, "operator()");
  return node_->values[r * node_->shape[1] + c];
}

double Tensor::at(std::size_t flat) const { return node_->values.at(flat); }

const std::vector<double>& Tensor::values() const { return node_->values; }
std::vector<double>& Tensor::raw() { return node_->values; }

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  node_->tracked = on || !node_->parents.empty();
  if (on)
    node_->grad.assign(node_->values.size(), 0.0);
  else
    node_->grad.clear();
}

const std::vector<double>& Tensor::grad() const {
  if (!node_->requires_grad) fail("grad: tensor does not require grad");
  return node_->grad;
}

std::vector<double>& Tensor::grad_mut() {
  if (!node_->requires_grad) fail("grad: tensor does not require grad");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

// --- grad mode ---------------------------------------------------------------

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void debug_corrupt_matmul_backward(bool enabled) { g_corrupt_matmul = enabled; }

// --- ops ---------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    fail("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const double* A = a.values().data();
  const double* B = b.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    double* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double av = arow[p];
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  auto node = make_node({m, n}, std::move(out));
  auto an = a.node(), bn = b.node();
  attach(node, tracked_of({an, bn}), [an, bn, m, k, n](detail::Node& self) {
    const double* dC = self.adjoint.data();
    if (wants(an)) {  // dA = dC·Bᵀ
      const double* B = bn->values.data();
      double* dA = an->adjoint.data();
      double corrupt = g_corrupt_matmul ? 1.01 : 1.0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* dcrow = dC + i * n;
          const double* brow = B + p * n;
          for (std::size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
          dA[i * k + p] += corrupt * s;
        }
    }
    if (wants(bn)) {  // dB = Aᵀ·dC
      const double* A = an->values.data();
      double* dB = bn->adjoint.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* dcrow = dC + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          double av = A[i * k + p];
          double* dbrow = dB + p * n;
          for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
        }
      }
    }
  });
  return wrap_node(node);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul_nt");
  check_2d(b, "matmul_nt");
  std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k)
    fail("matmul_nt: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const double* A = a.values().data();
  const double* B = b.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    double* crow = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = B + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = s;
    }
  }
  auto node = make_node({m, n}, std::move(out));
  auto an = a.node(), bn = b.node();
  attach(node, tracked_of({an, bn}), [an, bn, m, k, n](detail::Node& self) {
    const double* dC = self.adjoint.data();
    if (wants(an)) {  // dA = dC·B
      const double* B = bn->values.data();
      double* dA = an->adjoint.data();
      for (std::size_t i = 0; i < m; ++i) {
        double* darow = dA + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          double dc = dC[i * n + j];
          const double* brow = B + j * k;
          for (std::size_t p = 0; p < k; ++p) darow[p] += dc * brow[p];
        }
      }
    }
    if (wants(bn)) {  // dB = dCᵀ·A
      const double* A = an->values.data();
      double* dB = bn->adjoint.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          double dc = dC[i * n + j];
          double* dbrow = dB + j * k;
          for (std::size_t p = 0; p < k; ++p) dbrow[p] += dc * arow[p];
        }
      }
    }
  });
  return wrap_node(node);
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    fail("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  auto node = make_node(a.shape(), std::move(out));
  auto an = a.node(), bn = b.node();
  attach(node, tracked_of({an, bn}), [an, bn](detail::Node& self) {
    if (wants(an))
      for (std::size_t i = 0; i < self.adjoint.size(); ++i) an->adjoint[i] += self.adjoint[i];
    if (wants(bn))
      for (std::size_t i = 0; i < self.adjoint.size(); ++i) bn->adjoint[i] += self.adjoint[i];
  });
  return wrap_node(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    fail("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  auto node = make_node(a.shape(), std::move(out));
  auto an = a.node(), bn = b.node();
  attach(node, tracked_of({an, bn}), [an, bn](detail::Node& self) {
    if (wants(an))
      for (std::size_t i = 0; i < self.adjoint.size(); ++i)
        an->adjoint[i] += self.adjoint[i] * bn->values[i];
    if (wants(bn))
      for (std::size_t i = 0; i < self.adjoint.size(); ++i)
        bn->adjoint[i] += self.adjoint[i] * an->values[i];
  });
  return wrap_node(node);
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * c;
  auto node = make_node(a.shape(), std::move(out));
  auto an = a.node();
  attach(node, tracked_of({an}), [an, c](detail::Node& self) {
    for (std::size_t i = 0; i < self.adjoint.size(); ++i) an->adjoint[i] += self.adjoint[i] * c;
  });
  return wrap_node(node);
}

Tensor add_row(const Tensor& a, const Tensor& r) {
  check_2d(a, "add_row");
  std::size_t d = a.cols();
  if (r.size() != d)
    fail("add_row: row size " + std::to_string(r.size()) + " vs " + std::to_string(d) +
         " columns");
  std::size_t m = a.rows();
  std::vector<double> out(a.values());
  const double* rv = r.values().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += rv[j];
  auto node = make_node(a.shape(), std::move(out));
  auto an = a.node(), rn = r.node();
  attach(node, tracked_of({an, rn}), [an, rn, m, d](detail::Node& self) {
    if (wants(an))
      for (std::size_t i = 0; i < self.adjoint.size(); ++i) an->adjoint[i] += self.adjoint[i];
    if (wants(rn))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) rn->adjoint[j] += self.adjoint[i * d + j];
  });
  return wrap_node(node);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  std::size_t cols = 0, total = 0;
  bool have_cols = false;
  for (const auto& p : parts) {
    if (!p.defined()) continue;
    check_2d(p, "concat_rows");
    if (!have_cols) {
      cols = p.cols();
      have_cols = true;
    } else if (p.cols() != cols) {
      fail("concat_rows: column mismatch " + std::to_string(p.cols()) + " vs " +
           std::to_string(cols));
    }
    total += p.rows();
  }
  if (!have_cols) fail("concat_rows: no parts");
  std::vector<double> out;
  out.reserve(total * cols);
  for (const auto& p : parts)
    if (p.defined()) out.insert(out.end(), p.values().begin(), p.values().end());
  auto node = make_node({total, cols}, std::move(out));
  std::vector<std::shared_ptr<detail::Node>> tracked;
  struct Piece {
    std::shared_ptr<detail::Node> n;
    std::size_t offset, count;
  };
  std::vector<Piece> pieces;
  std::size_t off = 0;
  for (const auto& p : parts) {
    if (!p.defined()) continue;
    std::size_t cnt = p.size();
    if (p.node()->tracked) {
      pieces.push_back({p.node(), off, cnt});
      tracked.push_back(p.node());
    }
    off += cnt;
  }
  attach(node, std::move(tracked), [pieces](detail::Node& self) {
    for (const auto& pc : pieces)
      if (wants(pc.n))
        for (std::size_t i = 0; i < pc.count; ++i) pc.n->adjoint[i] += self.adjoint[pc.offset + i];
  });
  return wrap_node(node);
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t len) {
  check_2d(a, "slice_rows");
  if (start + len > a.rows())
    fail("slice_rows: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
         ") exceeds " + std::to_string(a.rows()) + " rows");
  std::size_t d = a.cols();
  std::vector<double> out(a.values().begin() + start * d, a.values().begin() + (start + len) * d);
  auto node = make_node({len, d}, std::move(out));
  auto an = a.node();
  attach(node, tracked_of({an}), [an, start, d](detail::Node& self) {
    for (std::size_t i = 0; i < self.adjoint.size(); ++i)
      an->adjoint[start * d + i] += self.adjoint[i];
  });
  return wrap_node(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail("concat_cols: no parts");
  std::size_t rows = parts[0].rows(), total = 0;
  for (const auto& p : parts) {
    check_2d(p, "concat_cols");
    if (p.rows() != rows)
      fail("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " +
           std::to_string(rows));
    total += p.cols();
  }
  std::vector<double> out(rows * total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::size_t c = p.cols();
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(p.values().begin() + i * c, p.values().begin() + (i + 1) * c,
                out.begin() + i * total + off);
    off += c;
  }
  auto node = make_node({rows, total}, std::move(out));
  std::vector<std::shared_ptr<detail::Node>> tracked;
  struct Piece {
    std::shared_ptr<detail::Node> n;
    std::size_t offset, cols;
  };
  std::vector<Piece> pieces;
  off = 0;
  for (const auto& p : parts) {
    if (p.node()->tracked) {
      pieces.push_back({p.node(), off, p.cols()});
      tracked.push_back(p.node());
    }
    off += p.cols();
  }
  attach(node, std::move(tracked), [pieces, rows, total](detail::Node& self) {
    for (const auto& pc : pieces)
      if (wants(pc.n))
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < pc.cols; ++j)
            pc.n->adjoint[i * pc.cols + j] += self.adjoint[i * total + pc.offset + j];
  });
  return wrap_node(node);
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
  check_2d(a, "slice_cols");
  if (start + len > a.cols())
    fail("slice_cols: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
         ") exceeds " + std::to_string(a.cols()) + " columns");
  std::size_t m = a.rows(), d = a.cols();
  std::vector<double> out(m * len);
  for (std::size_t i = 0; i < m; ++i)
    std::copy(a.values().begin() + i * d + start, a.values().begin() + i * d + start + len,
              out.begin() + i * len);
  auto node = make_node({m, len}, std::move(out));
  auto an = a.node();
  attach(node, tracked_of({an}), [an, start, len, m, d](detail::Node& self) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < len; ++j)
        an->adjoint[i * d + start + j] += self.adjoint[i * len + j];
  });
  return wrap_node(node);
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx) {
  check_2d(table, "gather_rows");
  std::size_t n = table.rows(), d = table.cols();
  for (std::size_t i : idx)
    if (i >= n)
      fail("gather_rows: index " + std::to_string(i) + " out of range " + std::to_string(n));
  std::vector<double> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(table.values().begin() + idx[r] * d, table.values().begin() + (idx[r] + 1) * d,
              out.begin() + r * d);
  auto node = make_node({idx.size(), d}, std::move(out));
  auto tn = table.node();
  attach(node, tracked_of({tn}), [tn, idx, d](detail::Node& self) {
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) tn->adjoint[idx[r] * d + j] += self.adjoint[r * d + j];
  });
  return wrap_node(node);
}

namespace {

// Shared softmax kernel. `mask` may be null. Masked positions contribute
// exactly zero weight; adding those zeros to the normalizer is bitwise
// identical to summing only the surviving entries, which is what makes the
// mask-equals-deletion property exact.
Tensor softmax_impl(const Tensor& logits, const Tensor* mask, bool allow_empty_rows) {
  check_2d(logits, "softmax");
  std::size_t m = logits.rows(), n = logits.cols();
  if (mask) {
    if (mask->shape() != logits.shape())
      fail("masked_softmax: mask shape " + shape_str(mask->shape()) + " vs logits " +
           shape_str(logits.shape()));
    for (double v : mask->values())
      if (!(v == 0.0 || (std::isinf(v) && v < 0)))
        fail("masked_softmax: mask entries must be 0 or -inf");
  }
  std::vector<double> out(m * n, 0.0);
  const double* L = logits.values().data();
  const double* M = mask ? mask->values().data() : nullptr;
  for (std::size_t i = 0; i < m; ++i) {
    double mx = kNegInf;
    for (std::size_t j = 0; j < n; ++j) {
      double v = L[i * n + j] + (M ? M[i * n + j] : 0.0);
      if (v > mx) mx = v;
    }
    if (mx == kNegInf) {
      if (!allow_empty_rows)
        throw std::runtime_error("masked_softmax: row " + std::to_string(i) +
                                 " is fully masked (configuration produced an unattendable token)");
      continue;  // weights stay zero
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double v = L[i * n + j] + (M ? M[i * n + j] : 0.0);
      double e = (v == kNegInf) ? 0.0 : std::exp(v - mx);
      out[i * n + j] = e;
      sum += e;
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= sum;
  }
  auto node = make_node({m, n}, std::move(out));
  auto ln = logits.node();
  attach(node, tracked_of({ln}), [ln, m, n](detail::Node& self) {
    // dL/dl_j = y_j (dy_j − Σ_k dy_k y_k); masked positions have y = 0.
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += self.adjoint[i * n + j] * self.values[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ln->adjoint[i * n + j] += self.values[i * n + j] * (self.adjoint[i * n + j] - dot);
    }
  });
  return wrap_node(node);
}

}  // namespace

Tensor row_softmax(const Tensor& logits) { return softmax_impl(logits, nullptr, false); }

Tensor masked_softmax(const Tensor& logits, const Tensor& mask, bool allow_empty_rows) {
  return softmax_impl(logits, &mask, allow_empty_rows);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  check_2d(x, "layer_norm");
  std::size_t m = x.rows(), d = x.cols();
  if (gain.size() != d || bias.size() != d)
    fail("layer_norm: gain/bias size must match " + std::to_string(d) + " columns");
  constexpr double eps = 1e-5;
  std::vector<double> out(m * d), xhat(m * d), inv_std(m);
  const double* X = x.values().data();
  const double* G = gain.values().data();
  const double* B = bias.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = X + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      double xh = (xr[j] - mean) * is;
      xhat[i * d + j] = xh;
      out[i * d + j] = xh * G[j] + B[j];
    }
  }
  auto node = make_node({m, d}, std::move(out));
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  attach(node, tracked_of({xn, gn, bn}),
         [xn, gn, bn, xhat = std::move(xhat), inv_std = std::move(inv_std), m,
          d](detail::Node& self) {
           const double* G = gn->values.data();
           for (std::size_t i = 0; i < m; ++i) {
             const double* dy = self.adjoint.data() + i * d;
             const double* xh = xhat.data() + i * d;
             if (wants(gn))
               for (std::size_t j = 0; j < d; ++j) gn->adjoint[j] += dy[j] * xh[j];
             if (wants(bn))
               for (std::size_t j = 0; j < d; ++j) bn->adjoint[j] += dy[j];
             if (wants(xn)) {
               double mean_g = 0.0, mean_gx = 0.0;
               for (std::size_t j = 0; j < d; ++j) {
                 double gj = dy[j] * G[j];
                 mean_g += gj;
                 mean_gx += gj * xh[j];
               }
               mean_g /= static_cast<double>(d);
               mean_gx /= static_cast<double>(d);
               for (std::size_t j = 0; j < d; ++j) {
                 double gj = dy[j] * G[j];
                 xn->adjoint[i * d + j] += inv_std[i] * (gj - mean_g - xh[j] * mean_gx);
               }
             }
           }
         });
  return wrap_node(node);
}

Tensor gelu(const Tensor& x) {
  constexpr double c = 0.79788456080286535588;  // sqrt(2/pi)
  constexpr double a = 0.044715;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = x.at(i);
    out[i] = 0.5 * v * (1.0 + std::tanh(c * (v + a * v * v * v)));
  }
  auto node = make_node(x.shape(), std::move(out));
  auto xn = x.node();
  attach(node, tracked_of({xn}), [xn, c, a](detail::Node& self) {
    for (std::size_t i = 0; i < self.adjoint.size(); ++i) {
      double v = xn->values[i];
      double t = std::tanh(c * (v + a * v * v * v));
      double dt = (1.0 - t * t) * c * (1.0 + 3.0 * a * v * v);
      xn->adjoint[i] += self.adjoint[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  });
  return wrap_node(node);
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  auto node = make_node({1}, {s});
  auto an = a.node();
  attach(node, tracked_of({an}), [an](detail::Node& self) {
    for (double& g : an->adjoint) g += self.adjoint[0];
  });
  return wrap_node(node);
}

Tensor pick_per_row(const Tensor& a, const std::vector<std::size_t>& idx) {
  check_2d(a, "pick_per_row");
  std::size_t m = a.rows(), n = a.cols();
  if (idx.size() != m)
    fail("pick_per_row: " + std::to_string(idx.size()) + " indices for " + std::to_string(m) +
         " rows");
  for (std::size_t i = 0; i < m; ++i)
    if (idx[i] >= n)
      throw std::out_of_range("pick_per_row: index " + std::to_string(idx[i]) + " at row " +
                              std::to_string(i) + " out of range " + std::to_string(n));
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = a.at(i * n + idx[i]);
  auto node = make_node({m}, std::move(out));
  auto an = a.node();
  attach(node, tracked_of({an}), [an, idx, n](detail::Node& self) {
    for (std::size_t i = 0; i < self.adjoint.size(); ++i)
      an->adjoint[i * n + idx[i]] += self.adjoint[i];
  });
  return wrap_node(node);
}

Tensor log_floor(const Tensor& a, double floor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(a.at(i), floor));
  auto node = make_node(a.shape(), std::move(out));
  auto an = a.node();
  attach(node, tracked_of({an}), [an, floor](detail::Node& self) {
    for (std::size_t i = 0; i < self.adjoint.size(); ++i) {
      double v = an->values[i];
      if (v > floor) an->adjoint[i] += self.adjoint[i] / v;
    }
  });
  return wrap_node(node);
}

// --- backward ------------------------------------------------------------------

void backward(const Tensor& loss) {
  auto root = loss.node();
  if (!root) fail("backward: undefined tensor");
  if (root->values.size() != 1)
    fail("backward: loss must be a scalar, got shape " + shape_str(root->shape));

  // Iterative post-order DFS; reverse order visits every node before its parents.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  struct Frame {
    detail::Node* n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  if (root->tracked) {
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      detail::Node* p = f.n->parents[f.next++].get();
      if (seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) n->adjoint.assign(n->values.size(), 0.0);
  if (root->tracked) root->adjoint[0] = 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);

  for (detail::Node* n : order) {
    if (n->requires_grad)
      for (std::size_t i = 0; i < n->grad.size(); ++i) n->grad[i] += n->adjoint[i];
    n->adjoint.clear();
    n->adjoint.shrink_to_fit();
  }
}

}  // namespace textkg
