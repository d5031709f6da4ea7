#include "fbmhypo/ergodicity.hpp"
#include "fbmhypo/errors.hpp"
#include "fbmhypo/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fbmhypo;

namespace {

ConditionedNoise noise_with_past(double H, std::size_t d, double dt, std::size_t bins, bool zero_past, std::uint64_t seed) {
  const HurstParams p = HurstParams::with_defaults(H);
  SampledPath omega(-4.0, 1.0 / 64, 257, d);
  if (!zero_past) {
    const FbmSampler past = past_sampler(H, 1.0 / 64, 256);
    for (std::size_t c = 0; c < d; ++c) {
      auto rng = make_engine(seed, 500 + c);
      const SampledPath w = past.sample(rng);
      for (std::size_t k = 0; k < w.size(); ++k) omega(k, c) = w(k);
    }
  }
  return ConditionedNoise(p, omega, dt, bins);
}

double column_mean(const RowMatrix& m, Eigen::Index c, double* se) {
  const double n = static_cast<double>(m.rows());
  const double mean = m.col(c).mean();
  const double var = (m.col(c).array() - mean).square().sum() / (n - 1);
  *se = std::sqrt(var / n);
  return mean;
}

}  // namespace

TEST_SUITE("ergodicity") {
  TEST_CASE("fOU conditioned means") {
    const auto fs = expr::parse_field_set("V0 = [-x1]\nV1 = [1]", 1, 1);
    const MonteCarloSettings mc{.n_mc = 2000, .seed = 21};

    const auto quiet = noise_with_past(0.7, 1, 1.0 / 64, 64, true, 21);
    const LawSamples a = conditional_law_sample(fs, Eigen::VectorXd::Zero(1), quiet, mc);
    REQUIRE(a.checkpoints.size() == 3);
    CHECK(a.checkpoints[0] == doctest::Approx(0.25));
    CHECK(a.checkpoints[2] == doctest::Approx(1.0));
    double se = 0;
    const double quiet_mean = column_mean(a.samples[2], 0, &se);
    CHECK(std::abs(quiet_mean) <= 3 * se);

    // E X_T = x0 e^-T + int_0^T e^-(T-s) dm(s) = x0 e^-T + m(T) - int_0^T e^-(T-s) m(s) ds.
    const auto noise = noise_with_past(0.7, 1, 1.0 / 64, 64, false, 22);
    const double x0 = 0.8;
    const LawSamples b = conditional_law_sample(fs, Eigen::VectorXd::Constant(1, x0), noise, mc);
    const SampledPath& m = noise.m();
    double conv = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double w = (k == 0 || k + 1 == m.size()) ? 0.5 : 1.0;
      conv += w * m.dt() * std::exp(-(1.0 - m.time(k))) * m(k);
    }
    const double expected = x0 * std::exp(-1.0) + m(m.size() - 1) - conv;
    const double got = column_mean(b.samples[2], 0, &se);
    MESSAGE("mean " << got << " expected " << expected << " se " << se);
    CHECK(std::abs(got - expected) <= 3 * se);
  }

  TEST_CASE("deterministic fields") {
    const auto fs = expr::parse_field_set("V0 = [-x1]\nV1 = [0]", 1, 1);
    const auto noise = noise_with_past(0.7, 1, 1.0 / 256, 256, false, 23);
    const LawSamples s = conditional_law_sample(fs, Eigen::VectorXd::Ones(1), noise, {.n_mc = 20, .seed = 23});
    for (Eigen::Index r = 0; r < 20; ++r) {
      CHECK(s.samples[2](r, 0) == s.samples[2](0, 0));
      CHECK(s.samples[2](r, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-5));
    }
    CHECK_THROWS_AS(conditional_law_sample(fs, Eigen::VectorXd::Ones(1), noise_with_past(0.7, 1, 0.1, 10, true, 1),
                                           {.n_mc = 2, .seed = 1}),
                    DomainError);
  }

  TEST_CASE("empirical distances") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z;
    RowMatrix a(500, 2);
    for (Eigen::Index r = 0; r < 500; ++r) a.row(r) << z(rng), z(rng);
    const Distance same = empirical_distance(a, a);
    CHECK(same.ks[0] == 0.0);
    CHECK(same.w1[1] == 0.0);
    RowMatrix b = a;
    b.col(0).array() += 0.75;
    const Distance shift = empirical_distance(a, b);
    CHECK(shift.w1[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(shift.w1[1] == 0.0);
    const Distance back = empirical_distance(b, a);
    CHECK(back.ks[0] == shift.ks[0]);
    CHECK(back.w1[0] == shift.w1[0]);
    CHECK_THROWS_AS(empirical_distance(RowMatrix(0, 1), RowMatrix(0, 1)), DomainError);
    CHECK_THROWS_AS(empirical_distance(a, RowMatrix(10, 2)), DomainError);

    // Two-sample KS at the 1% level: sqrt(2/n) * 1.6276 = 0.0230 for n = 10^4.
    const double critical = 1.62762 * std::sqrt(2.0 / 1e4);
    int below = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
      RowMatrix x(10000, 1), y(10000, 1);
      for (Eigen::Index r = 0; r < 10000; ++r) {
        x(r, 0) = z(rng);
        y(r, 0) = z(rng);
      }
      below += empirical_distance(x, y).ks[0] < critical ? 1 : 0;
    }
    CHECK(below >= 0.98 * reps);
  }

  TEST_CASE("stationary oracle") {
    CHECK(fou_stationary_oracle(0.5) == doctest::Approx(0.5).epsilon(1e-8));
    double prev = 0;
    for (double H : {0.55, 0.65, 0.75, 0.85, 0.95}) {
      const double v = fou_stationary_oracle(H);
      CHECK(v > prev);
      prev = v;
    }
    // Independent closed form H Gamma(2H).
    for (double H : {0.6, 0.7, 0.75}) CHECK(fou_stationary_oracle(H) == doctest::Approx(H * std::tgamma(2 * H)).epsilon(1e-6));
    CHECK_THROWS_AS(fou_stationary_oracle(1.0), DomainError);
  }

  TEST_CASE("common random numbers couple fOU exactly") {
    const auto fs = expr::parse_field_set("V0 = [-x1]\nV1 = [1]", 1, 1);
    const auto noise = noise_with_past(0.7, 1, 1.0 / 256, 512, false, 24);
    const EnsembleSummary s =
        convergence_experiment(fs, Eigen::VectorXd::Constant(1, -2), Eigen::VectorXd::Constant(1, 2), noise, {.n_mc = 200, .seed = 24});
    REQUIRE(s.checkpoints.size() == 4);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(s.w1_total[c] == doctest::Approx(4 * std::exp(-s.checkpoints[c])).epsilon(1e-5));
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const Eigen::VectorXd diff = s.b.samples[c].col(0) - s.a.samples[c].col(0);
      CHECK(diff.maxCoeff() - diff.minCoeff() < 1e-12);
    }
    CHECK(s.monotone);
    CHECK(s.failed == 0);
  }

  TEST_CASE("anti-dissipative drift does not converge") {
    const auto fs = expr::parse_field_set("V0 = [x1]\nV1 = [1]", 1, 1);
    const auto noise = noise_with_past(0.7, 1, 1.0 / 64, 128, false, 25);
    const EnsembleSummary s =
        convergence_experiment(fs, Eigen::VectorXd::Constant(1, -1), Eigen::VectorXd::Constant(1, 1), noise, {.n_mc = 100, .seed = 25});
    CHECK_FALSE(s.monotone);
    CHECK_FALSE(s.converged);
    CHECK(s.w1_total.back() > s.initial_separation);
  }

  TEST_CASE("damped hypoelliptic set merges") {
    const auto fs = expr::parse_field_set("V0 = [-x1, x1 - x2]\nV1 = [1, 0]", 2, 1);
    const auto noise = noise_with_past(0.7, 1, 1.0 / 32, 320, false, 26);
    const EnsembleSummary s =
        convergence_experiment(fs, Eigen::Vector2d(-2, 1), Eigen::Vector2d(2, -1), noise, {.n_mc = 200, .seed = 26});
    CHECK(s.monotone);
    CHECK(s.converged);
    MESSAGE("W1 at T=10: " << s.w1_total.back() << ", doubling z " << s.doubling_z);
  }

  TEST_CASE("fOU stationary variance") {
    const StationaryVariance v = fou_stationary_experiment(0.7, 20.0, 1.0 / 64, {.n_mc = 2000, .seed = 27});
    MESSAGE("variance " << v.variance << " +- " << v.stderr_ << ", oracle " << v.oracle);
    CHECK(v.z <= 3.0);
    CHECK(std::abs(v.mean) <= 3 * std::sqrt(v.variance / 2000));
  }
}
