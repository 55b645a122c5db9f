#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "doctest.h"
#include "textkg/rng.hpp"
#include "textkg/tensor.hpp"

using namespace textkg;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Tensor random_leaf(Rng& rng, std::size_t r, std::size_t c, double s = 0.5) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.uniform(-s, s);
  return Tensor::matrix(r, c, std::move(v), true);
}

// Central-difference check of d(loss)/d(leaf) for every element of every leaf.
// `build` must reconstruct the graph from the leaves' current values.
void check_grads(std::vector<Tensor> leaves, const std::function<Tensor()>& build,
                 double tol = 1e-5) {
  for (auto& l : leaves) l.zero_grad();
  backward(build());
  const double h = 1e-5;
  for (auto& leaf : leaves) {
    for (std::size_t e = 0; e < leaf.size(); ++e) {
      double saved = leaf.raw()[e];
      leaf.raw()[e] = saved + h;
      double f1 = build().at(0);
      leaf.raw()[e] = saved - h;
      double f2 = build().at(0);
      leaf.raw()[e] = saved;
      double fd = (f1 - f2) / (2.0 * h);
      double an = leaf.grad()[e];
      double rel = std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-6});
      CAPTURE(e);
      CAPTURE(an);
      CAPTURE(fd);
      CHECK(rel <= tol);
    }
  }
}

}  // namespace

TEST_CASE("matmul against identity and hand result") {
  Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor out = matmul(a, eye);
  for (std::size_t i = 0; i < 6; ++i) CHECK(out.at(i) == a.at(i));

  Tensor b = Tensor::matrix(3, 2, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  CHECK(c(0, 0) == doctest::Approx(58));
  CHECK(c(0, 1) == doctest::Approx(64));
  CHECK(c(1, 0) == doctest::Approx(139));
  CHECK(c(1, 1) == doctest::Approx(154));

  Tensor cnt = matmul_nt(a, Tensor::matrix(2, 3, {7, 9, 11, 8, 10, 12}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(cnt.at(i) == doctest::Approx(c.at(i)));
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::matrix(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(matmul_nt(a, Tensor::matrix(2, 2, {1, 2, 3, 4})), std::invalid_argument);
}

TEST_CASE("backward of sum gives ones") {
  Tensor x = Tensor::matrix(2, 2, {1, 2, 3, 4}, true);
  backward(sum_all(x));
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::matrix(1, 2, {1, -2}, true);
  backward(sum_all(mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(-4.0));
}

TEST_CASE("repeated backward accumulates") {
  Tensor x = Tensor::matrix(1, 2, {1, -2}, true);
  backward(sum_all(mul(x, x)));
  backward(sum_all(mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  CHECK(x.grad()[1] == doctest::Approx(-8.0));
}

TEST_CASE("backward requires scalar loss") {
  Tensor x = Tensor::matrix(1, 2, {1, 2}, true);
  CHECK_THROWS_AS(backward(mul(x, x)), std::invalid_argument);
}

TEST_CASE("masked softmax hand value") {
  Tensor logits = Tensor::matrix(1, 3, {2, 5, 0});
  Tensor mask = Tensor::matrix(1, 3, {0, -kInf, 0});
  Tensor w = masked_softmax(logits, mask);
  double z = std::exp(2.0) + 1.0;
  CHECK(w.at(0) == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
  CHECK(w.at(1) == 0.0);
  CHECK(w.at(2) == doctest::Approx(1.0 / z).epsilon(1e-12));
}

TEST_CASE("masked softmax equals softmax over surviving columns, bitwise") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> lv(8);
    for (auto& v : lv) v = rng.uniform(-4, 4);
    std::vector<double> mv(8, 0.0);
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < 8; ++j)
      if (rng.uniform() < 0.4)
        mv[j] = -kInf;
      else
        kept.push_back(j);
    if (kept.empty()) {
      mv[0] = 0.0;
      kept.push_back(0);
    }
    Tensor full = masked_softmax(Tensor::matrix(1, 8, lv), Tensor::matrix(1, 8, mv));
    std::vector<double> packed;
    for (std::size_t j : kept) packed.push_back(lv[j]);
    Tensor del = row_softmax(Tensor::matrix(1, kept.size(), packed));
    for (std::size_t r = 0; r < kept.size(); ++r) CHECK(full.at(kept[r]) == del.at(r));
    for (std::size_t j = 0; j < 8; ++j)
      if (std::isinf(mv[j])) CHECK(full.at(j) == 0.0);
  }
}

TEST_CASE("fully masked row is an error unless explicitly allowed") {
  Tensor logits = Tensor::matrix(1, 2, {1, 2});
  Tensor mask = Tensor::matrix(1, 2, {-kInf, -kInf});
  CHECK_THROWS_AS(masked_softmax(logits, mask), std::runtime_error);
  Tensor w = masked_softmax(logits, mask, true);
  CHECK(w.at(0) == 0.0);
  CHECK(w.at(1) == 0.0);
}

TEST_CASE("mask entries other than 0 and -inf are rejected") {
  Tensor logits = Tensor::matrix(1, 2, {1, 2});
  CHECK_THROWS_AS(masked_softmax(logits, Tensor::matrix(1, 2, {0, -1e30})),
                  std::invalid_argument);
}

TEST_CASE("layer_norm of a constant row is the bias") {
  Tensor x = Tensor::matrix(1, 4, {3, 3, 3, 3});
  Tensor g({4}, {2, 2, 2, 2});
  Tensor b({4}, {0.5, -0.5, 1, 0});
  Tensor out = layer_norm(x, g, b);
  CHECK(out.at(0) == doctest::Approx(0.5));
  CHECK(out.at(1) == doctest::Approx(-0.5));
  CHECK(out.at(2) == doctest::Approx(1.0));
  CHECK(out.at(3) == doctest::Approx(0.0));
}

TEST_CASE("gather_rows picks and range-checks") {
  Tensor t = Tensor::matrix(3, 2, {0, 1, 10, 11, 20, 21});
  Tensor out = gather_rows(t, {2, 0, 2});
  CHECK(out.rows() == 3);
  CHECK(out(0, 0) == 20);
  CHECK(out(1, 1) == 1);
  CHECK(out(2, 1) == 21);
  CHECK_THROWS_AS(gather_rows(t, {3}), std::invalid_argument);
}

TEST_CASE("pick_per_row out of range") {
  Tensor t = Tensor::matrix(2, 3, {0, 1, 2, 3, 4, 5});
  CHECK(pick_per_row(t, {2, 0}).at(1) == 3.0);
  CHECK_THROWS_AS(pick_per_row(t, {3, 0}), std::out_of_range);
}

TEST_CASE("slice and concat round trips") {
  Tensor t = Tensor::matrix(3, 4, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  Tensor back = concat_rows({slice_rows(t, 0, 1), slice_rows(t, 1, 2)});
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.at(i) == t.at(i));
  Tensor backc = concat_cols({slice_cols(t, 0, 3), slice_cols(t, 3, 1)});
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(backc.at(i) == t.at(i));
  // zero-row parts flow through row concat
  Tensor empty = Tensor::zeros({0, 4});
  Tensor withe = concat_rows({empty, t});
  CHECK(withe.rows() == 3);
}

TEST_CASE("no_grad guard suppresses graph construction") {
  Tensor x = Tensor::matrix(1, 2, {1, 2}, true);
  NoGradGuard guard;
  Tensor y = mul(x, x);
  CHECK_FALSE(y.node()->tracked);
  CHECK(y.node()->parents.empty());
}

TEST_CASE("finite differences: dense + gelu + layer_norm + attention-style composite") {
  Rng rng(42);
  Tensor x = random_leaf(rng, 3, 4);
  Tensor w1 = random_leaf(rng, 4, 6);
  Tensor b1 = random_leaf(rng, 1, 6);
  Tensor g({6}, {1.1, 0.9, 1.0, 1.2, 0.8, 1.0}, true);
  Tensor b({6}, {0.1, -0.1, 0.0, 0.2, 0.0, -0.2}, true);
  Tensor mask = Tensor::matrix(3, 3, {0, -kInf, 0, 0, 0, -kInf, -kInf, 0, 0});

  auto build = [&]() {
    Tensor h = gelu(add_row(matmul(x, w1), b1));
    Tensor n = layer_norm(h, g, b);
    Tensor logits = scale(matmul_nt(n, n), 1.0 / std::sqrt(6.0));
    Tensor probs = masked_softmax(logits, mask);
    Tensor out = matmul(probs, n);
    return sum_all(mul(out, out));
  };
  check_grads({x, w1, b1, g, b}, build, 2e-5);
}

TEST_CASE("finite differences: gather, slices, pick, log_floor") {
  Rng rng(9);
  Tensor table = random_leaf(rng, 5, 4);
  Tensor w = random_leaf(rng, 4, 3);

  auto build = [&]() {
    Tensor rows = gather_rows(table, {4, 1, 1});
    Tensor left = slice_cols(rows, 0, 2);
    Tensor right = slice_cols(rows, 2, 2);
    Tensor mixed = concat_cols({right, left});
    Tensor stacked = concat_rows({mixed, slice_rows(rows, 0, 1)});  // 4x4
    Tensor probs = row_softmax(matmul(slice_rows(stacked, 0, 2), w));
    Tensor picked = pick_per_row(probs, {2, 0});
    return scale(sum_all(log_floor(picked)), -1.0);
  };
  check_grads({table, w}, build, 2e-5);
}

TEST_CASE("corrupted backward hook is caught by finite differences") {
  Rng rng(3);
  Tensor x = random_leaf(rng, 2, 3);
  Tensor w = random_leaf(rng, 3, 2);
  auto build = [&]() { return sum_all(mul(matmul(x, w), matmul(x, w))); };

  x.zero_grad();
  backward(build());
  std::vector<double> clean = x.grad();

  debug_corrupt_matmul_backward(true);
  x.zero_grad();
  backward(build());
  std::vector<double> dirty = x.grad();
  debug_corrupt_matmul_backward(false);

  bool differs = false;
  for (std::size_t i = 0; i < clean.size(); ++i)
    if (std::fabs(clean[i] - dirty[i]) > 1e-9 * std::max(1.0, std::fabs(clean[i])))
      differs = true;
  CHECK(differs);
}

TEST_CASE("log_floor clamps and zeroes gradient below the floor") {
  Tensor x({3}, {0.5, 1e-13, 1e-12}, true);
  Tensor out = log_floor(x);
  CHECK(out.at(0) == doctest::Approx(std::log(0.5)));
  CHECK(out.at(1) == doctest::Approx(std::log(1e-12)));
  backward(sum_all(out));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("rng streams are reproducible and shuffles deterministic") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  c.shuffle(v);
  Rng d(5);
  std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7};
  d.shuffle(w);
  CHECK(v == w);
  Rng e(99);
  double n1 = e.normal(), n2 = e.normal();
  Rng f(99);
  CHECK(f.normal() == n1);
  CHECK(f.normal() == n2);
}
