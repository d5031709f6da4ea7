#include "fbmhypo/errors.hpp"
#include "fbmhypo/hormander.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fbmhypo;

namespace {

const char* kElliptic = "V0 = [-x1, -x2]\nV1 = [1, 0]\nV2 = [0, 1]";
const char* kCanonical = "V0 = [0, x1]\nV1 = [1, 0]";
const char* kDegenerate = "V0 = [0, 0]\nV1 = [1, 0]";

}  // namespace

TEST_SUITE("hormander") {
  TEST_CASE("elliptic, hypoelliptic and degenerate examples") {
    const Eigen::Vector2d x0(0.3, -0.4);
    const auto ell = expr::parse_field_set(kElliptic, 2, 2);
    const RankReport e1 = hormander_rank(ell, 1, x0);
    CHECK(e1.satisfied);
    CHECK(e1.rank == 2);
    CHECK(e1.sigma_min == doctest::Approx(1.0));

    const auto can = expr::parse_field_set(kCanonical, 2, 1);
    const RankReport c1 = hormander_rank(can, 1, x0);
    CHECK_FALSE(c1.satisfied);
    CHECK(c1.rank == 1);
    const RankReport c2 = hormander_rank(can, 2, x0);
    CHECK(c2.satisfied);
    CHECK(c2.sigma_min > 0.5);

    const auto deg = expr::parse_field_set(kDegenerate, 2, 1);
    for (int N = 1; N <= 4; ++N) CHECK_FALSE(hormander_rank(deg, N, x0).satisfied);
  }

  TEST_CASE("bracket family sizes and indices") {
    const auto can = expr::parse_field_set(kCanonical, 2, 1);
    // d = 1: level k has 2^(k-1) words.
    CHECK(bracket_family(can, 1).entries.size() == 1);
    CHECK(bracket_family(can, 3).entries.size() == 1 + 2 + 4);
    const BracketFamily f = bracket_family(can, 2);
    CHECK(index_to_string(f.entries[0].index) == "(1)");
    for (const auto& e : f.entries) CHECK(e.index.back() >= 1);
  }

  TEST_CASE("rank is monotone in the depth") {
    const auto nl = expr::parse_field_set("V0 = [-x1, sin(x1) - x2]\nV1 = [1, 0]", 2, 1);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Vector2d x(u(rng), u(rng));
      int prev = 0;
      for (int N = 1; N <= 4; ++N) {
        const RankReport r = hormander_rank(nl, N, x);
        CHECK(r.rank >= prev);
        if (r.satisfied) CHECK(r.sigma_min > 0);
        prev = r.rank;
      }
    }
  }

  TEST_CASE("recombining the fields does not change the rank") {
    // V1 and V2 replaced by V1 + V2 and V1 - V2 span the same distribution.
    const auto a = expr::parse_field_set("V0 = [0, x1, x2]\nV1 = [1, 0, 0]\nV2 = [0, 0, x1]", 3, 2);
    const auto b = expr::parse_field_set("V0 = [0, x1, x2]\nV1 = [1, 0, x1]\nV2 = [1, 0, -x1]", 3, 2);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Vector3d x(u(rng), u(rng), u(rng));
      for (int N = 1; N <= 3; ++N) CHECK(hormander_rank(a, N, x).rank == hormander_rank(b, N, x).rank);
    }
  }

  TEST_CASE("rank of explicit columns") {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 0, 0, 0, 0;
    const RankReport r = rank_of_columns(m);
    CHECK(r.rank == 1);
    CHECK_FALSE(r.satisfied);
  }

  TEST_CASE("dissipativity examples") {
    const auto lin = expr::parse_field_set("V0 = [-x1]\nV1 = [1]", 1, 1);
    const DissipativityReport a = dissipativity_check(lin.drift(), 10, 2000);
    CHECK(a.satisfied);
    CHECK(a.M2 == doctest::Approx(1.0));
    CHECK(a.M1 == doctest::Approx(0.0));

    const auto anti = expr::parse_field_set("V0 = [x1]\nV1 = [1]", 1, 1);
    const DissipativityReport b = dissipativity_check(anti.drift(), 10, 2000);
    CHECK_FALSE(b.satisfied);
    REQUIRE(b.counterexample.has_value());
    CHECK(std::abs((*b.counterexample)(0)) > 0);

    // <x, -x + sin x> <= |x| - x^2; with M2 = 1 the least M1 is sup x sin x
    // over the sampled region, checked on a fine grid.
    const auto wig = expr::parse_field_set("V0 = [-x1 + sin(x1)]\nV1 = [1]", 1, 1);
    const DissipativityReport c = dissipativity_check(wig.drift(), 10, 4000);
    CHECK(c.satisfied);
    const double M2 = c.M2;
    double oracle = 0;
    for (int k = -200000; k <= 200000; ++k) {
      const double x = 10.0 * k / 200000.0;
      oracle = std::max(oracle, x * (-x + std::sin(x)) + M2 * x * x);
    }
    CHECK(c.M1 <= oracle * (1 + 1e-9));
    CHECK(c.M1 >= 0.9 * oracle);
  }
}
