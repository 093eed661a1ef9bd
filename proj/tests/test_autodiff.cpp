// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "protoseq/autodiff.hpp"
#include "support.hpp"

using namespace protoseq;
using protoseq::testing::finite_difference_check;
using protoseq::testing::random_tensor;

namespace {

// Contracts an op's output with fixed random weights so every output entry
// reaches the loss with a distinct coefficient.
ad::Var contract(ad::Tape &tape, ad::Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return tape.sum(tape.mul(y, tape.constant(random_tensor(y.rows(), y.cols(), rng))));
}

struct OpCase {
  const char *name;
  std::function<ad::Var(ad::Tape &, ad::Var, ad::Var)> op;
  std::size_t ar, ac, br, bc;
  double lo = -1.0, hi = 1.0;
};

} // namespace

TEST_CASE("evaluate examples") {
  ad::Tape tape;
  const ad::Var x = tape.input("x", 1, 1);
  const ad::Var y = tape.exp_neg_square(x);
  CHECK(tape.evaluate(y, {{"x", Tensor::scalar(0.0)}})[0] == 1.0);

  const ad::Var sq = tape.mul(x, x);
  CHECK(tape.evaluate(sq, {{"x", Tensor::scalar(3.0)}})[0] == 9.0);

  ad::Tape t2;
  const ad::Var a = t2.constant(Tensor(1, 2, 0.0));
  const ad::Var b = t2.constant(Tensor(1, 2, 1.0));
  CHECK(t2.pairwise_sq_dist(a, b).value()[0] == 2.0);
}

TEST_CASE("gradient examples") {
  ad::Parameter x("x", Tensor::scalar(3.0));
  {
    ad::Tape tape;
    const ad::Var v = tape.parameter(x);
    auto g = ad::gradients(tape, tape.mul(v, v));
    CHECK(g.at(&x)[0] == doctest::Approx(6.0).epsilon(1e-15));
  }
  x.value[0] = 1.0;
  {
    ad::Tape tape;
    auto g = ad::gradients(tape, tape.exp_neg_square(tape.parameter(x)));
    CHECK(g.at(&x)[0] == doctest::Approx(-2.0 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(g.at(&x)[0] == doctest::Approx(-0.73576).epsilon(1e-5));
  }
}

TEST_CASE("shape mismatch names the node") {
  ad::Tape tape;
  const ad::Var a = tape.constant(Tensor(2, 1));
  const ad::Var b = tape.constant(Tensor(3, 1));
  try {
    (void)tape.add(a, b);
    FAIL("expected a GraphError");
  } catch (const ad::GraphError &e) {
    CHECK(e.op() == "add");
    CHECK(e.node() == 2);
  }
  const ad::Var x = tape.input("x", 2, 1);
  CHECK_THROWS_AS(tape.evaluate(x, {{"x", Tensor(1, 1)}}), ad::GraphError);
  CHECK_THROWS_AS(tape.evaluate(x, {{"nope", Tensor(2, 1)}}), ad::GraphError);
}

TEST_CASE("non-scalar loss is rejected") {
  ad::Tape tape;
  const ad::Var v = tape.constant(Tensor(2, 1, 1.0));
  CHECK_THROWS_AS(tape.backward(v), ad::GraphError);
}

TEST_CASE("operands from another tape are rejected") {
  ad::Tape t1, t2;
  const ad::Var a = t1.constant(Tensor::scalar(1.0));
  const ad::Var b = t2.constant(Tensor::scalar(1.0));
  CHECK_THROWS_AS(t1.add(a, b), ad::GraphError);
}

TEST_CASE("every primitive matches central differences") {
  const std::vector<OpCase> cases = {
      {"add", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.add(a, b); }, 3, 2, 3, 2},
      {"sub", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.sub(a, b); }, 3, 2, 3, 2},
      {"mul", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.mul(a, b); }, 3, 2, 3, 2},
      {"affine", [](ad::Tape &t, ad::Var a, ad::Var) { return t.affine(a, -1.7, 0.3); }, 4, 1, 1, 1},
      {"matvec", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.matvec(a, b); }, 3, 4, 4, 1},
      {"sigmoid", [](ad::Tape &t, ad::Var a, ad::Var) { return t.sigmoid(a); }, 5, 1, 1, 1, -3, 3},
      {"tanh", [](ad::Tape &t, ad::Var a, ad::Var) { return t.tanh(a); }, 5, 1, 1, 1, -3, 3},
      {"exp", [](ad::Tape &t, ad::Var a, ad::Var) { return t.exp(a); }, 5, 1, 1, 1},
      {"exp_neg_square", [](ad::Tape &t, ad::Var a, ad::Var) { return t.exp_neg_square(a); }, 5, 1, 1, 1, -2, 2},
      {"relu", [](ad::Tape &t, ad::Var a, ad::Var) { return t.relu(a); }, 6, 1, 1, 1},
      {"sqrt", [](ad::Tape &t, ad::Var a, ad::Var) { return t.sqrt(a); }, 5, 1, 1, 1, 0.2, 3},
      {"abs", [](ad::Tape &t, ad::Var a, ad::Var) { return t.abs(a); }, 6, 1, 1, 1},
      {"slice", [](ad::Tape &t, ad::Var a, ad::Var) { return t.slice(a, 2, 3); }, 7, 1, 1, 1},
      {"concat", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.concat({a, b, a}); }, 3, 1, 2, 1},
      {"gather_row", [](ad::Tape &t, ad::Var a, ad::Var) { return t.gather_row(a, 2); }, 4, 3, 1, 1},
      {"stack_rows", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.stack_rows({a, b, a}); }, 3, 1, 3, 1},
      {"sum", [](ad::Tape &t, ad::Var a, ad::Var) { return t.sum(a); }, 3, 4, 1, 1},
      {"gaussian_similarity", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.gaussian_similarity(a, b); }, 3, 1, 4, 3},
      {"pairwise_sq_dist", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.pairwise_sq_dist(a, b); }, 3, 4, 2, 4},
      {"pairwise_dist", [](ad::Tape &t, ad::Var a, ad::Var b) { return t.pairwise_dist(a, b); }, 3, 4, 2, 4},
      {"row_min", [](ad::Tape &t, ad::Var a, ad::Var) { return t.row_min(a); }, 4, 5, 1, 1},
      {"col_min", [](ad::Tape &t, ad::Var a, ad::Var) { return t.col_min(a); }, 4, 5, 1, 1},
      {"softmax", [](ad::Tape &t, ad::Var a, ad::Var) { return t.softmax(a); }, 5, 1, 1, 1, -2, 2},
      {"cross_entropy", [](ad::Tape &t, ad::Var a, ad::Var) { return t.cross_entropy(t.softmax(a), 2); }, 4, 1, 1, 1},
      {"binary_cross_entropy",
       [](ad::Tape &t, ad::Var a, ad::Var) {
         Tensor y = Tensor::column({1, 0, 1, 0});
         return t.binary_cross_entropy(t.sigmoid(a), y);
       },
       4, 1, 1, 1, -2, 2},
  };
  std::mt19937_64 rng(7);
  for (const OpCase &c : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      ad::Parameter a("a", random_tensor(c.ar, c.ac, rng, c.lo, c.hi));
      ad::Parameter b("b", random_tensor(c.br, c.bc, rng, c.lo, c.hi));
      const std::uint64_t seed = rng();
      const auto report = finite_difference_check(
          [&](ad::Tape &t) {
            return contract(t, c.op(t, t.parameter(a), t.parameter(b)), seed);
          },
          {&a, &b});
      INFO(c.name, " trial ", trial, " worst at ", report.where);
      CHECK(report.worst < 1e-4);
    }
  }
}

TEST_CASE("nonsmooth points use the documented subgradients") {
  ad::Parameter x("x", Tensor::column({0.0, 0.0}));
  {
    ad::Tape t;
    auto g = ad::gradients(t, t.sum(t.abs(t.parameter(x))));
    CHECK(g.at(&x)[0] == 0.0);
  }
  {
    ad::Tape t;
    auto g = ad::gradients(t, t.sum(t.sqrt(t.parameter(x))));
    CHECK(g.at(&x)[0] == 0.0);
  }
  {
    ad::Tape t;
    auto g = ad::gradients(t, t.sum(t.relu(t.parameter(x))));
    CHECK(g.at(&x)[0] == 0.0);
  }
  // Coincident rows: unit subgradient along the first axis.
  ad::Parameter P("P", Tensor(2, 3, 0.5));
  ad::Tape t;
  const ad::Var p = t.parameter(P);
  const ad::Var d = t.pairwise_dist(p, p);
  CHECK(d.value()(0, 1) == 0.0);
  Tensor upper(2, 2);
  upper(0, 1) = 1.0;
  auto g = ad::gradients(t, t.sum(t.mul(d, t.constant(upper))));
  CHECK(std::abs(g.at(&P)(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(g.at(&P)(1, 0)) == doctest::Approx(1.0));
  CHECK(g.at(&P)(0, 0) == doctest::Approx(-g.at(&P)(1, 0)));
  CHECK(g.at(&P)(0, 1) == 0.0);
}

TEST_CASE("random three-layer graph matches central differences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    ad::Parameter W1("W1", random_tensor(5, 4, rng)), W2("W2", random_tensor(4, 5, rng)),
        W3("W3", random_tensor(3, 4, rng)), x("x", random_tensor(4, 1, rng));
    const auto report = finite_difference_check(
        [&](ad::Tape &t) {
          const ad::Var h1 = t.tanh(t.matvec(t.parameter(W1), t.parameter(x)));
          const ad::Var h2 = t.sigmoid(t.matvec(t.parameter(W2), h1));
          const ad::Var z = t.matvec(t.parameter(W3), h2);
          return t.cross_entropy(t.softmax(z), static_cast<std::size_t>(trial % 3));
        },
        {&W1, &W2, &W3, &x});
    INFO("worst at ", report.where);
    CHECK(report.worst < 1e-4);
  }
}

TEST_CASE("evaluate is pure") {
  std::mt19937_64 rng(3);
  ad::Parameter W("W", random_tensor(4, 3, rng));
  ad::Tape t;
  const ad::Var x = t.input("x", 3, 1);
  const ad::Var y = t.softmax(t.tanh(t.matvec(t.parameter(W), x)));
  const Tensor in = random_tensor(3, 1, rng);
  const Tensor first = t.evaluate(y, {{"x", in}});
  for (int i = 0; i < 5; ++i) {
    const Tensor again = t.evaluate(y, {{"x", in}});
    CHECK(again.data == first.data);
  }
}

TEST_CASE("gradient of a sum is the sum of gradients") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    ad::Parameter W("W", random_tensor(3, 3, rng)), v("v", random_tensor(3, 1, rng));
    const auto f = [&](ad::Tape &t) {
      return t.sum(t.exp_neg_square(t.matvec(t.parameter(W), t.parameter(v))));
    };
    const auto g = [&](ad::Tape &t) {
      return t.sum(t.mul(t.tanh(t.parameter(v)), t.matvec(t.parameter(W), t.parameter(v))));
    };
    ad::Tape tf, tg, tfg;
    auto gf = ad::gradients(tf, f(tf));
    auto gg = ad::gradients(tg, g(tg));
    auto gfg = ad::gradients(tfg, tfg.add(f(tfg), g(tfg)));
    for (ad::Parameter *p : {&W, &v})
      for (std::size_t i = 0; i < p->value.size(); ++i)
        CHECK(gfg.at(p)[i] == doctest::Approx(gf.at(p)[i] + gg.at(p)[i]).epsilon(1e-12));
  }
}
