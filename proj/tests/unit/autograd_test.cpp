#include <gtest/gtest.h>

#include "caer/error.hpp"
#include "caer/model/layers.hpp"
#include "caer/model/ops.hpp"
#include "support/gradcheck.hpp"

using namespace caer;
using namespace caer::model;
using caer::testing::gradcheck;

namespace {

Rng rng(42);

Var p(long r, long c, double s = 1.0) { return parameter(randn(r, c, s, rng)); }

// Weighted sum so every output element gets a distinct upstream gradient.
Var probe(const Var& y) {
  Rng r(static_cast<std::uint64_t>(y->rows() * 131 + y->cols()));
  return sum(mul(y, constant(randn(y->rows(), y->cols(), 1.0, r))));
}

void expect_ok(const std::function<Var()>& f, const std::vector<ParamRef>& ps) {
  auto r = gradcheck(f, ps);
  EXPECT_LT(r.worst_relative_error, 1e-6) << r.worst_name;
}

}  // namespace

TEST(Autograd, Matmul) {
  auto a = p(3, 4), b = p(4, 2), c = p(5, 4);
  expect_ok([&] { return probe(matmul(a, b)); }, {{"a", a}, {"b", b}});
  expect_ok([&] { return probe(matmul_nt(a, c)); }, {{"a", a}, {"c", c}});
}

TEST(Autograd, Elementwise) {
  auto a = p(3, 4), b = p(3, 4), r = p(1, 4);
  expect_ok([&] { return probe(add(a, b)); }, {{"a", a}, {"b", b}});
  expect_ok([&] { return probe(sub(a, b)); }, {{"a", a}, {"b", b}});
  expect_ok([&] { return probe(mul(a, b)); }, {{"a", a}, {"b", b}});
  expect_ok([&] { return probe(scale(a, -2.5)); }, {{"a", a}});
  expect_ok([&] { return probe(add_row(a, r)); }, {{"a", a}, {"r", r}});
  expect_ok([&] { return probe(gelu(a)); }, {{"a", a}});
  expect_ok([&] { return probe(quick_gelu(a)); }, {{"a", a}});
}

TEST(Autograd, SoftmaxAndNorms) {
  auto a = p(4, 4), g = p(1, 4), b = p(1, 4);
  expect_ok([&] { return probe(softmax_rows(a, false)); }, {{"a", a}});
  expect_ok([&] { return probe(softmax_rows(a, true)); }, {{"a", a}});
  expect_ok([&] { return probe(layer_norm(a, g, b)); }, {{"a", a}, {"g", g}, {"b", b}});
  expect_ok([&] { return probe(l2_normalize_rows(a)); }, {{"a", a}});
}

TEST(Autograd, Structural) {
  auto a = p(2, 3), b = p(4, 3), c = p(2, 5);
  expect_ok([&] { return probe(concat_rows(std::vector<Var>{a, b})); }, {{"a", a}, {"b", b}});
  expect_ok([&] { return probe(concat_cols(std::vector<Var>{a, c})); }, {{"a", a}, {"c", c}});
  expect_ok([&] { return probe(slice_rows(b, 1, 2)); }, {{"b", b}});
  expect_ok([&] { return probe(slice_cols(c, 2, 3)); }, {{"c", c}});
}

TEST(Autograd, CrossEntropy) {
  auto logits = p(3, 5);
  std::vector<int> y{0, 4, 2};
  expect_ok([&] { return cross_entropy_logits(logits, y); }, {{"l", logits}});
  // uniform logits -> ln K
  auto z = constant(Mat::Zero(2, 5));
  std::vector<int> y2{1, 3};
  EXPECT_NEAR(cross_entropy_logits(z, y2)->value(0, 0), std::log(5.0), 1e-12);
}

TEST(Autograd, SharedSubgraph) {
  auto a = p(3, 3);
  expect_ok([&] {
    Var t = gelu(a);
    return probe(add(matmul(t, t), t));
  }, {{"a", a}});
}

TEST(Autograd, TransformerBlock) {
  Rng r(1);
  TransformerBlock block(8, 2, 16, Activation::gelu, r);
  std::vector<ParamRef> ps;
  block.collect(ps, "b");
  auto x = p(5, 8);
  ps.push_back({"x", x});
  expect_ok([&] { return probe(block(x, false)); }, ps);
  expect_ok([&] { return probe(block(x, true)); }, ps);
}

TEST(Autograd, NoGradRecordsNothing) {
  auto a = p(2, 2);
  NoGradGuard g;
  auto y = gelu(a);
  EXPECT_FALSE(y->requires_grad);
  EXPECT_TRUE(y->parents.empty());
}

TEST(Autograd, ShapeErrors) {
  auto a = p(2, 3);
  EXPECT_THROW(matmul(a, a), Error);
  EXPECT_THROW(slice_rows(a, 1, 2), Error);
  EXPECT_THROW(l2_normalize_rows(constant(Mat::Zero(1, 3))), Error);
  EXPECT_THROW(backward(a), Error);
}
