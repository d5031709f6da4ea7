#include "fbmhypo/errors.hpp"
#include "fbmhypo/parallel.hpp"
#include "fbmhypo/expr.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace fbmhypo;
using namespace fbmhypo::expr;

namespace {

std::vector<double> pt(std::initializer_list<double> v) { return v; }

// Random smooth expression over x1..xn. Divisions are by 1 + e^2 and exp is
// only applied to bounded arguments, so everything stays finite.
Expr random_expr(std::mt19937_64& rng, int n, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  std::uniform_int_distribution<int> var(0, n - 1);
  switch (pick(rng)) {
    case 0: return Expr::variable(var(rng));
    case 1: return Expr::constant(std::round(c(rng) * 100) / 100);
    case 2: return random_expr(rng, n, depth - 1) + random_expr(rng, n, depth - 1);
    case 3: return random_expr(rng, n, depth - 1) - random_expr(rng, n, depth - 1);
    case 4: return random_expr(rng, n, depth - 1) * random_expr(rng, n, depth - 1);
    case 5: return random_expr(rng, n, depth - 1) / (Expr::constant(1) + pow(random_expr(rng, n, depth - 1), 2));
    case 6: return sin(random_expr(rng, n, depth - 1));
    case 7: return cos(random_expr(rng, n, depth - 1));
    case 8: return exp(tanh(random_expr(rng, n, depth - 1)));
    default: return pow(random_expr(rng, n, depth - 1), 3);
  }
}

}  // namespace

TEST_SUITE("expr") {
  TEST_CASE("fOU field set parses and evaluates") {
    const VectorFieldSet fs = parse_field_set("V0 = [-x1]; V1 = [1]", 1, 1);
    CHECK(fs.n == 1);
    CHECK(fs.d == 1);
    const auto x = pt({2.0});
    CHECK(evaluate(fs.drift(), x)(0) == -2.0);
    CHECK(evaluate(fs.noise(1), x)(0) == 1.0);
    CHECK(fs.additive_affine());
  }

  TEST_CASE("constant and hypoelliptic sets") {
    const VectorFieldSet deg = parse_field_set("V0 = [0,0]; V1 = [1,0]", 2, 1);
    CHECK(evaluate(deg.drift(), pt({3, 4})).norm() == 0.0);
    const VectorFieldSet hyp = parse_field_set("V0 = [0, x1]; V1 = [1, 0]", 2, 1);
    const Eigen::VectorXd v = evaluate(hyp.drift(), pt({3, 7}));
    CHECK(v(0) == 0.0);
    CHECK(v(1) == 3.0);
  }

  TEST_CASE("evaluation examples") {
    CHECK(parse_expression("sin(x1)*x2", 2).eval(pt({0, 5})) == 0.0);
    CHECK(parse_expression("x1^2 - 3*x2", 2).eval(pt({2, 1})) == doctest::Approx(1.0));
    CHECK(parse_expression("x1^(-2)", 1).eval(pt({2})) == doctest::Approx(0.25));
    CHECK(parse_expression("-x1^2", 1).eval(pt({3})) == doctest::Approx(-9.0));
    CHECK_THROWS_AS(parse_expression("1/(x1 - 1)", 1).eval(pt({1})), DomainError);
    CHECK_THROWS_AS(parse_expression("1/0", 1).eval(pt({1})), DomainError);
  }

  TEST_CASE("Jacobian examples") {
    const ExprMatrix a = jacobian(parse_field_set("V0 = [-x1]; V1 = [1]", 1, 1).drift());
    CHECK(a[0][0].eval(pt({0.3})) == -1.0);

    const ExprMatrix b = jacobian(parse_field_set("V0 = [0, x1]; V1 = [1, 0]", 2, 1).drift());
    const Eigen::MatrixXd B = evaluate(b, pt({0.4, -2}));
    CHECK(B(0, 0) == 0.0);
    CHECK(B(0, 1) == 0.0);
    CHECK(B(1, 0) == 1.0);
    CHECK(B(1, 1) == 0.0);

    const FieldVector f{parse_expression("x1*x2", 2), parse_expression("x2^2", 2)};
    const ExprMatrix c = jacobian(f);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 5; ++trial) {
      const std::vector<double> x{u(rng), u(rng)};
      const Eigen::MatrixXd J = evaluate(c, x);
      CHECK(J(0, 0) == doctest::Approx(x[1]));
      CHECK(J(0, 1) == doctest::Approx(x[0]));
      CHECK(J(1, 0) == 0.0);
      CHECK(J(1, 1) == doctest::Approx(2 * x[1]));
      // Central differences.
      const double h = 1e-5;
      for (int j = 0; j < 2; ++j) {
        std::vector<double> xp = x, xm = x;
        xp[static_cast<std::size_t>(j)] += h;
        xm[static_cast<std::size_t>(j)] -= h;
        const Eigen::VectorXd fd = (evaluate(f, xp) - evaluate(f, xm)) / (2 * h);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(fd(i) - J(i, j)) <= 1e-6 * std::max(1.0, std::abs(J(i, j))));
      }
    }
  }

  TEST_CASE("derivatives agree with central differences on random expressions") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const double h = 1e-5;
    int checked = 0;
    for (int e = 0; e < 20; ++e) {
      const Expr f = random_expr(rng, 3, 4);
      for (int p = 0; p < 5; ++p) {
        const std::vector<double> x{u(rng), u(rng), u(rng)};
        for (int j = 0; j < 3; ++j) {
          std::vector<double> xp = x, xm = x;
          xp[static_cast<std::size_t>(j)] += h;
          xm[static_cast<std::size_t>(j)] -= h;
          const double fd = (f.eval(xp) - f.eval(xm)) / (2 * h);
          const double exact = f.derivative(j).eval(x);
          CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
          ++checked;
        }
      }
    }
    CHECK(checked == 300);
  }

  TEST_CASE("Lie brackets") {
    const VectorFieldSet hyp = parse_field_set("V0 = [0, x1]; V1 = [1, 0]", 2, 1);
    const FieldVector b = lie_bracket(hyp.noise(1), hyp.drift());
    const Eigen::VectorXd v = evaluate(b, pt({0.7, -1.2}));
    CHECK(v(0) == 0.0);
    CHECK(v(1) == 1.0);

    const FieldVector self = lie_bracket(hyp.drift(), hyp.drift());
    CHECK(evaluate(self, pt({1.3, 2.0})).norm() == 0.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 10; ++trial) {
      const FieldVector V{random_expr(rng, 2, 3), random_expr(rng, 2, 3)};
      const FieldVector W{random_expr(rng, 2, 3), random_expr(rng, 2, 3)};
      const std::vector<double> x{u(rng), u(rng)};
      const Eigen::VectorXd vw = evaluate(lie_bracket(V, W), x);
      const Eigen::VectorXd wv = evaluate(lie_bracket(W, V), x);
      CHECK((vw + wv).norm() == 0.0);
    }
    CHECK_THROWS_AS(lie_bracket(FieldVector{Expr::variable(0)}, hyp.drift()), DomainError);
  }

  TEST_CASE("print then parse evaluates identically") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 10; ++trial) {
      VectorFieldSet fs;
      fs.n = 2;
      fs.d = 1;
      fs.fields = {{random_expr(rng, 2, 4), random_expr(rng, 2, 4)}, {random_expr(rng, 2, 3), random_expr(rng, 2, 3)}};
      fs.bounded_claimed = {false, true};
      const VectorFieldSet back = parse_field_set(fs.to_string(), 2, 1);
      CHECK(back.bounded_claimed[1]);
      for (int p = 0; p < 10; ++p) {
        const std::vector<double> x{u(rng), u(rng)};
        for (int k = 0; k < 2; ++k) {
          CHECK((evaluate(back.fields[static_cast<std::size_t>(k)], x) - evaluate(fs.fields[static_cast<std::size_t>(k)], x)).norm() == 0.0);
        }
      }
    }
  }

  TEST_CASE("parse errors carry positions") {
    try {
      parse_field_set("V0 = [x1]\nV1 = [x1 + ]", 1, 1);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    try {
      parse_field_set("V0 = [x3]; V1 = [1]", 2, 1);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(e.column() == 7);
    }
    CHECK_THROWS_AS(parse_field_set("V0 = [x1, x2]; V1 = [1]", 2, 1), ParseError);  // dimension mismatch
    CHECK_THROWS_AS(parse_field_set("V0 = [x1]", 1, 1), ParseError);                  // missing V1
    CHECK_THROWS_AS(parse_field_set("V0 = [x1]; V0 = [1]; V1 = [1]", 1, 1), ParseError);
    CHECK_THROWS_AS(parse_expression("foo(x1)", 1), ParseError);
    CHECK_THROWS_AS(parse_expression("x1^1.5", 1), ParseError);
  }

  TEST_CASE("comments and the bounded flag") {
    const VectorFieldSet fs = parse_field_set("# fOU\nV0 = [-x1]  # drift\nV1 = [1] bounded\n", 1, 1);
    CHECK_FALSE(fs.bounded_claimed[0]);
    CHECK(fs.bounded_claimed[1]);
  }

  TEST_CASE("compiled program matches tree evaluation") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<Expr> outs;
    for (int i = 0; i < 6; ++i) outs.push_back(random_expr(rng, 3, 4));
    const Program prog(outs);
    std::vector<double> out(outs.size()), stack;
    for (int p = 0; p < 10; ++p) {
      const std::vector<double> x{u(rng), u(rng), u(rng)};
      prog.run(x, out, stack);
      for (std::size_t i = 0; i < outs.size(); ++i) CHECK(out[i] == doctest::Approx(outs[i].eval(x)).epsilon(1e-13));
    }
  }
}
