#include "fbmhypo/errors.hpp"
#include "fbmhypo/parallel.hpp"
#include "fbmhypo/holder.hpp"
#include "fbmhypo/noise.hpp"
#include "fbmhypo/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fbmhypo;

namespace {

// Sample mean of x*y and its standard error.
struct MeanSe {
  double mean, se;
};

MeanSe product_mean(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::ArrayXd p = x.array() * y.array();
  const double m = p.mean();
  const double var = (p - m).square().sum() / static_cast<double>(p.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(p.size()))};
}

SampledPath sampled_past(double H, double past_dt, std::size_t bins, std::uint64_t seed, std::uint64_t stream) {
  auto rng = make_engine(seed, stream);
  return past_sampler(H, past_dt, bins).sample(rng);
}

}  // namespace

TEST_SUITE("noise") {
  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(HurstParams::make(0.7, 0.6, 0.25));
    CHECK_THROWS_AS(HurstParams::make(0.7, 0.75, 0.2), DomainError);  // gamma above H
    CHECK_THROWS_AS(HurstParams::make(0.7, 0.45, 0.4), DomainError);  // gamma below 1/2
    CHECK_THROWS_AS(HurstParams::make(0.7, 0.6, 0.45), DomainError);  // gamma + delta >= 1
    CHECK_THROWS_AS(HurstParams::make(0.7, 0.6, 0.05), DomainError);  // gamma + delta <= H
    CHECK_THROWS_AS(HurstParams::with_defaults(0.5), DomainError);
    CHECK_THROWS_AS(HurstParams::with_defaults(1.0), DomainError);
    const HurstParams p = HurstParams::with_defaults(0.7);
    CHECK(p.gamma > 0.5);
    CHECK(p.gamma < p.H);
    CHECK(p.gamma + p.delta > p.H);
    CHECK(p.gamma + p.delta < 1.0);
  }

  TEST_CASE("normalising constants") {
    // Reference values from a 30-digit evaluation of the Gamma products.
    CHECK(volterra_normalizer(0.6) == doctest::Approx(1.0760051841318072).epsilon(1e-14));
    CHECK(volterra_normalizer(0.7) == doctest::Approx(1.0918091308839126).epsilon(1e-14));
    CHECK(volterra_normalizer(0.75) == doctest::Approx(1.0696446350319903).epsilon(1e-14));
    const HurstParams p = HurstParams::with_defaults(0.7);
    CHECK(p.drift_constant == doctest::Approx(-std::sin(0.2 * std::numbers::pi) / std::numbers::pi).epsilon(1e-14));
    CHECK(p.gamma_H_product == doctest::Approx(0.2 * p.alpha_H * volterra_normalizer(0.3)).epsilon(1e-14));
  }

  TEST_CASE("kernel g") {
    for (double H : {0.6, 0.75, 0.9}) {
      double worst = 0;
      for (double x = 1e-4; x < 1e-2; x *= 1.5) worst = std::max(worst, kernel_g(x, H) / x);
      CHECK(worst < 1.0);
      CHECK(kernel_g(1e3, H) / std::pow(1e3, H - 0.5) == doctest::Approx(1.0).epsilon(5e-2));
      for (double x : {1e-3, 0.1, 0.5, 1.0, 3.0, 40.0}) {
        CHECK(kernel_g(x, H) == doctest::Approx(kernel_g_closed(x, H)).epsilon(1e-10));
        const double h = 1e-6 * x;
        const double fd = x * (kernel_g_closed(x + h, H) - kernel_g_closed(x - h, H)) / (2 * h);
        CHECK(kernel_xdg(x, H) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
    // 30-digit quadrature of the defining integral gives 0.5 at H = 0.75, x = 1.
    CHECK(std::abs(kernel_g(1.0, 0.75) - 0.5) < 1e-8);
    CHECK_THROWS_AS(kernel_g(0.0, 0.7), DomainError);
    CHECK_THROWS_AS(kernel_g(-1.0, 0.7), DomainError);
  }

  TEST_CASE("exact fBm sampling") {
    const double H = 0.7;
    const std::size_t N = 64;
    const FbmSampler sampler(H, 0.0, 1.0 / N, N + 1);
    const std::size_t n = 10000;
    Eigen::MatrixXd paths(N + 1, n);
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = make_engine(3, i);
      paths.col(static_cast<Eigen::Index>(i)) = sampler.sample(rng).component(0);
    }
    CHECK(paths.row(0).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t k = 1; k <= N; ++k) {
      const Eigen::VectorXd x = paths.row(static_cast<Eigen::Index>(k)).transpose();
      const MeanSe v = product_mean(x, x);
      const double t = static_cast<double>(k) / N;
      CHECK(std::abs(v.mean - std::pow(t, 2 * H)) < 4 * v.se);
    }
    const auto a = sampler.sample(2, 99);
    const auto b = sampler.sample(2, 99);
    CHECK((a[1].values() - b[1].values()).cwiseAbs().maxCoeff() == 0.0);

    // Two-sided grid; the value at 0 is pinned.
    const FbmSampler two(H, -1.0, 0.25, 9);
    auto rng = make_engine(1, 0);
    CHECK(two.sample(rng)(4) == 0.0);
    CHECK_THROWS_AS(FbmSampler(H, -0.3, 0.25, 9), DomainError);  // 0 not on the grid

    CHECK(fbm_covariance(0.3, 0.7, 0.5) == doctest::Approx(0.3));
    CHECK(fbm_covariance(-0.5, 0.5, 0.5) == doctest::Approx(0.0));
    CHECK_NOTHROW(FbmSampler(0.5, 0.0, 0.1, 11));
  }

  TEST_CASE("conditional covariance") {
    for (double H : {0.6, 0.7, 0.85}) {
      const double a2 = std::pow(volterra_normalizer(H), 2);
      CHECK(conditional_cov(0.0, 0.8, H) == doctest::Approx(a2 * std::pow(0.8, 2 * H) / (2 * H)).epsilon(1e-10));
      CHECK(tilde_covariance(1.0, 1.0, H) == doctest::Approx(a2 / (2 * H)).epsilon(1e-10));
    }
    // 30-digit quadrature of the direct form.
    CHECK(conditional_cov(0.3, 1.0, 0.7) == doctest::Approx(0.554678696814325).epsilon(1e-10));
    const ConditionalCov f = conditional_cov_forms(0.3, 1.0, 0.7);
    CHECK(std::abs(f.direct - f.increment) / f.direct < 1e-6);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        const double s = 0.1 * i;
        const double t = s + 0.05 + 0.2 * j;
        const ConditionalCov c = conditional_cov_forms(s, t, 0.7);
        CHECK(c.direct > 0.0);
        CHECK(std::abs(c.direct - c.increment) / c.direct < 1e-6);
      }
    }
    CHECK_THROWS_AS(conditional_cov(0.5, 0.5, 0.7), DomainError);
    CHECK_THROWS_AS(conditional_cov(0.6, 0.5, 0.7), DomainError);
  }

  TEST_CASE("Volterra part") {
    const double H = 0.7;
    const std::size_t N = 32;
    const double dt = 1.0 / N;
    const VolterraKernel K(H, dt, N);
    const RowMatrix zero = RowMatrix::Zero(N, 1);
    CHECK(K.apply(zero).values().cwiseAbs().maxCoeff() == 0.0);

    const std::size_t n = 10000;
    Eigen::MatrixXd paths(N + 1, n);
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = make_engine(17, i);
      paths.col(static_cast<Eigen::Index>(i)) = K.apply(draw_increments(rng, N, 1, dt)).component(0);
    }
    for (auto [ks, kt] : {std::pair<std::size_t, std::size_t>{32, 32}, {8, 32}, {16, 24}, {4, 5}, {10, 10}}) {
      const MeanSe c = product_mean(paths.row(static_cast<Eigen::Index>(ks)).transpose(), paths.row(static_cast<Eigen::Index>(kt)).transpose());
      CHECK(std::abs(c.mean - tilde_covariance(ks * dt, kt * dt, H)) < 4 * c.se);
    }
    const MeanSe v = product_mean(paths.row(N).transpose(), paths.row(N).transpose());
    CHECK(std::abs(v.mean - conditional_cov(0.0, 1.0, H)) < 4 * v.se);

    // Exact variance of the discrete kernel against f(0, t).
    const Eigen::MatrixXd M = K.matrix();
    for (std::size_t k = 1; k <= N; ++k) {
      const double var = M.row(static_cast<Eigen::Index>(k)).squaredNorm() * dt;
      CHECK(var == doctest::Approx(conditional_cov(0.0, k * dt, H)).epsilon(2e-2));
    }
  }

  TEST_CASE("conditional drift") {
    const HurstParams p = HurstParams::with_defaults(0.7);
    const double past_dt = 1.0 / 32;
    const std::size_t past_bins = 256;
    const SampledPath zero(-past_dt * past_bins, past_dt, past_bins + 1, 1);
    const DriftResult m0 = conditional_drift_G(zero, p, 1.0 / 32, 32);
    CHECK(m0.path.values().cwiseAbs().maxCoeff() == 0.0);

    const SampledPath w1 = sampled_past(0.7, past_dt, past_bins, 5, 0);
    const SampledPath w2 = sampled_past(0.7, past_dt, past_bins, 5, 1);
    const SampledPath mix = 2.0 * w1 + (-3.0) * w2;
    const SampledPath a = conditional_drift_G(mix, p, 1.0 / 32, 32).path;
    const SampledPath b = 2.0 * conditional_drift_G(w1, p, 1.0 / 32, 32).path + (-3.0) * conditional_drift_G(w2, p, 1.0 / 32, 32).path;
    CHECK(a(0) == 0.0);
    for (std::size_t k = 3; k <= 32; k += 3) CHECK(std::abs(a(k) - b(k)) <= 1e-12 * (1 + std::abs(a(k))));

    SampledPath bad = w1;
    bad(past_bins) = 0.1;
    CHECK_THROWS_AS(conditional_drift_G(bad, p, 1.0 / 32, 32), DomainError);
  }

  TEST_CASE("f_omega vanishes at 0 and stays Hölder") {
    const HurstParams p = HurstParams::with_defaults(0.7);
    const double past_dt = 1.0 / 32;
    const std::size_t past_bins = 256;
    const SampledPath zero(-past_dt * past_bins, past_dt, past_bins + 1, 1);
    CHECK(f_omega(zero, p, 1.0 / 32, 32).path.values().cwiseAbs().maxCoeff() == 0.0);

    const ConditionalDrift op(p, past_dt, past_bins, 1.0 / 32, 32, DriftKernel::TimesDerivative);
    double worst_ratio = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      const SampledPath w = sampled_past(0.7, past_dt, past_bins, 21, i);
      const double norm = weighted_norm(w, p.gamma, p.delta);
      const SampledPath f = op.apply(w);
      if (i < 20) CHECK(std::abs(f(0)) <= 1e-6 * norm);
      worst_ratio = std::max(worst_ratio, holder_norm(f, p.gamma) / norm);
    }
    CHECK(std::isfinite(worst_ratio));
    CHECK(worst_ratio > 0.0);
    MESSAGE("max |f_omega|_gamma / |omega| over 100 pasts: " << worst_ratio);
  }

  TEST_CASE("weighted norm") {
    const HurstParams p = HurstParams::with_defaults(0.7);
    const double past_dt = 1.0 / 16;
    const std::size_t bins = 128;
    const SampledPath zero(-past_dt * bins, past_dt, bins + 1, 1);
    CHECK(weighted_norm(zero, p.gamma, p.delta) == 0.0);
    const SampledPath w = sampled_past(0.7, past_dt, bins, 9, 0);
    const double n = weighted_norm(w, p.gamma, p.delta);
    CHECK(weighted_norm(-2.5 * w, p.gamma, p.delta) == doctest::Approx(2.5 * n).epsilon(1e-14));
    const double plain = holder_norm(w, p.gamma);
    const double T = past_dt * bins;
    CHECK(plain / n >= 1.0 - 1e-12);
    CHECK(plain / n <= std::pow(1 + 2 * T, p.delta) + 1e-12);
  }

  TEST_CASE("conditioned noise split") {
    const HurstParams p = HurstParams::with_defaults(0.7);
    const double past_dt = 1.0 / 32;
    const SampledPath w = sampled_past(0.7, past_dt, 256, 4, 0);
    const ConditionedNoise noise(p, w, 1.0 / 32, 32);
    auto rng = make_engine(4, 1);
    const NoiseSplit s = noise.split(noise.draw(rng));
    CHECK(s.omega(256) == 0.0);
    CHECK(s.m(0) == 0.0);
    CHECK(s.tildeB(0) == 0.0);
    CHECK((s.driver().values() - (s.tildeB + s.m).values()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((noise.driver(s.W_increments).values() - s.driver().values()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(noise.tail_budget().maxCoeff() >= 0.0);
  }
}
