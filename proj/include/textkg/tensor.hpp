#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace textkg {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

namespace detail {

// One node of the computation graph. Ops allocate a node per output and hang
// a backprop closure off it; `backward` walks the graph in reverse topological
// order. `adjoint` only lives for the duration of a backward pass, `grad` is
// persistent and only present on tensors the caller marked requires_grad.
struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  bool tracked = false;  // participates in graph construction
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
  std::vector<double> adjoint;
};

}  // namespace detail

// Value-semantic handle over a shared graph node. Copies alias the same
// storage. All numerics are 64-bit floats.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);  // shape {1, n}
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const;
  std::size_t size() const;
  // 2-D accessors; throw on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;
  double operator()(std::size_t r, std::size_t c) const;
  double at(std::size_t flat) const;

  const std::vector<double>& values() const;
  // Mutable flat storage; for leaf setup and optimizer updates only. Mutating
  // a non-leaf invalidates any graph built from it.
  std::vector<double>& raw();

  bool requires_grad() const;
  void set_requires_grad(bool on);
  const std::vector<double>& grad() const;
  std::vector<double>& grad_mut();
  void zero_grad();

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
  friend Tensor wrap_node(std::shared_ptr<detail::Node>);
};

// Graph construction toggle. Parameters keep requires_grad; inference paths
// disable graph building wholesale with a guard.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k]·[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k]·[n,k]ᵀ
Tensor add(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor scale(const Tensor& a, double c);
Tensor add_row(const Tensor& a, const Tensor& r);  // broadcast {1,d} (or {d}) over rows
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t len);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx);
Tensor row_softmax(const Tensor& logits);
// mask entries must be exactly 0 or -inf. A fully masked row is an error
// (an unattendable token) unless allow_empty_rows, in which case the row's
// weights are all zero.
Tensor masked_softmax(const Tensor& logits, const Tensor& mask, bool allow_empty_rows = false);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);  // eps 1e-5
Tensor gelu(const Tensor& x);  // tanh approximation
Tensor sum_all(const Tensor& a);  // scalar
Tensor pick_per_row(const Tensor& a, const std::vector<std::size_t>& idx);  // [L,V] → {L}
Tensor log_floor(const Tensor& a, double floor = 1e-12);

// d(loss)/d(t) for every requires_grad tensor reachable from loss; repeated
// calls accumulate into .grad.
void backward(const Tensor& loss);

// Test hook: scale matmul's dA rule by 1.01 so gradient checks can prove they
// catch a broken backward pass.
void debug_corrupt_matmul_backward(bool enabled);

}  // namespace textkg
