#include "fbmhypo/errors.hpp"
#include "fbmhypo/parallel.hpp"
#include "fbmhypo/flow.hpp"
#include "fbmhypo/noise.hpp"
#include "fbmhypo/parallel.hpp"

#include <doctest.h>

#include <cmath>

using namespace fbmhypo;

namespace {

const char* kFou = "V0 = [-x1]\nV1 = [1]";
const char* kHypo = "V0 = [0, x1]\nV1 = [1, 0]";
const char* kNonlinear = "V0 = [-x1, sin(x1) - x2]\nV1 = [1, 0]";

SampledPath fbm_path(double H, std::size_t bins, double T, std::uint64_t seed, std::uint64_t stream) {
  auto rng = make_engine(seed, stream);
  return FbmSampler(H, 0.0, T / static_cast<double>(bins), bins + 1).sample(rng);
}

SampledPath subsample(const SampledPath& p, std::size_t stride) {
  const std::size_t points = (p.size() - 1) / stride + 1;
  SampledPath out(p.t0(), p.dt() * static_cast<double>(stride), points, p.dim());
  for (std::size_t k = 0; k < points; ++k) {
    for (std::size_t c = 0; c < p.dim(); ++c) out(k, c) = p(k * stride, c);
  }
  return out;
}

// Exact solution of dX = -X dt + dB for B linear between grid points.
SampledPath fou_exact(const SampledPath& B, double x0) {
  SampledPath x(B.t0(), B.dt(), B.size(), 1);
  x(0) = x0;
  const double e = std::exp(-B.dt());
  for (std::size_t k = 0; k + 1 < B.size(); ++k) {
    x(k + 1) = e * x(k) + (B(k + 1) - B(k)) / B.dt() * (1 - e);
  }
  return x;
}

double max_dev_identity(const FlowPath& f) {
  double worst = 0;
  const auto n = static_cast<Eigen::Index>(f.n());
  for (std::size_t k = 0; k < f.X.size(); ++k) {
    worst = std::max(worst, (f.J_at(k) * f.Jinv_at(k) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("fOU with a smooth driver") {
    const auto fs = expr::parse_field_set(kFou, 1, 1);
    const std::size_t N = 1024;
    SampledPath B(0.0, 1.0 / N, N + 1, 1);
    for (std::size_t k = 0; k <= N; ++k) B(k) = B.time(k);
    const double x0 = 2.0;
    const FlowPath f = solve_flow(fs, Eigen::VectorXd::Constant(1, x0), B, {.second_variation = true});
    for (std::size_t k = 0; k <= N; k += 64) {
      const double t = B.time(k);
      CHECK(f.X(k) == doctest::Approx(x0 * std::exp(-t) + 1 - std::exp(-t)).epsilon(1e-6));
      CHECK(f.J(k) == doctest::Approx(std::exp(-t)).epsilon(1e-6));
      CHECK(f.Jinv(k) == doctest::Approx(std::exp(t)).epsilon(1e-6));
      CHECK((*f.Z)(k) == 0.0);
    }
    CHECK(f.J(0) == 1.0);
    CHECK(f.Jinv(0) == 1.0);
  }

  TEST_CASE("zero fields") {
    const auto fs = expr::parse_field_set("V0 = [0, 0]\nV1 = [0, 0]", 2, 1);
    const SampledPath B = fbm_path(0.7, 64, 1.0, 1, 0);
    const Eigen::Vector2d x0(0.3, -1.2);
    const FlowPath f = solve_flow(fs, x0, B);
    for (std::size_t k = 0; k < B.size(); ++k) {
      CHECK((f.x_at(k) - x0).norm() == 0.0);
      CHECK((f.J_at(k) - Eigen::Matrix2d::Identity()).norm() == 0.0);
    }
  }

  TEST_CASE("fOU convergence order against the convolution oracle") {
    const double H = 0.75;
    const auto fs = expr::parse_field_set(kFou, 1, 1);
    const FieldEvaluator eval(fs, false);
    const std::size_t fine = 4096;
    std::vector<double> dts, errs;
    const FbmSampler sampler(H, 0.0, 1.0 / static_cast<double>(fine), fine + 1);
    std::vector<SampledPath> paths;
    for (std::uint64_t p = 0; p < 10; ++p) {
      auto rng = make_engine(7, p);
      paths.push_back(sampler.sample(rng));
    }
    for (std::size_t stride : {32, 16, 8, 4, 2}) {
      double sq = 0;
      for (std::size_t p = 0; p < 10; ++p) {
        const SampledPath& B = paths[p];
        const SampledPath exact = fou_exact(B, 1.0);
        const SampledPath coarse = subsample(B, stride);
        const SampledPath X = solve_state(eval, Eigen::VectorXd::Constant(1, 1.0), coarse);
        double sup = 0;
        for (std::size_t k = 0; k < X.size(); ++k) sup = std::max(sup, std::abs(X(k) - exact(k * stride)));
        sq += sup * sup;
      }
      dts.push_back(static_cast<double>(stride) / static_cast<double>(fine));
      errs.push_back(std::sqrt(sq / 10));
    }
    // Least-squares slope of log err against log dt.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(dts.size());
    for (std::size_t i = 0; i < dts.size(); ++i) {
      const double x = std::log(dts[i]), y = std::log(errs[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    MESSAGE("measured order " << slope);
    CHECK(slope >= 1.0);
  }

  TEST_CASE("J Jinv stays at the identity") {
    for (const char* text : {kFou, kHypo}) {
      const bool scalar = text == kFou;
      const auto fs = expr::parse_field_set(text, scalar ? 1 : 2, 1);
      for (std::uint64_t s = 0; s < 5; ++s) {
        const SampledPath B = fbm_path(0.7, 1024, 1.0, 12, s);
        const FlowPath f = solve_flow(fs, Eigen::VectorXd::Constant(scalar ? 1 : 2, 0.5), B);
        CHECK(max_dev_identity(f) < 1e-6);
        CHECK(f.max_consistency == doctest::Approx(max_dev_identity(f)).epsilon(1e-9));
      }
    }
    const auto nl = expr::parse_field_set(kNonlinear, 2, 1);
    const SampledPath B = fbm_path(0.7, 1024, 1.0, 12, 0);
    const FlowPath f = solve_flow(nl, Eigen::Vector2d(1.5, 0.0), B);
    CHECK(max_dev_identity(f) < 1e-6);
  }

  TEST_CASE("finite-difference Jacobian") {
    const double eps = 1e-5;
    for (const char* text : {kHypo, kNonlinear}) {
      const auto fs = expr::parse_field_set(text, 2, 1);
      const FieldEvaluator eval(fs, false);
      const SampledPath B = fbm_path(0.7, 512, 1.0, 13, 0);
      const Eigen::Vector2d x0(0.4, -0.3);
      const FlowPath f = solve_flow(eval, x0, B);
      const std::size_t last = B.size() - 1;
      for (int i = 0; i < 2; ++i) {
        const Eigen::Vector2d xp = x0 + eps * Eigen::Vector2d::Unit(i);
        const SampledPath Xp = solve_state(eval, xp, B);
        Eigen::Vector2d fd;
        for (int r = 0; r < 2; ++r) fd(r) = (Xp(last, static_cast<std::size_t>(r)) - f.X(last, static_cast<std::size_t>(r))) / eps;
        const Eigen::Vector2d col = f.J_at(last).col(i);
        CHECK((fd - col).norm() / col.norm() < 1e-3);
      }
    }
  }

  TEST_CASE("solve_state matches solve_flow bit for bit") {
    const auto fs = expr::parse_field_set(kNonlinear, 2, 1);
    const FieldEvaluator eval(fs, false);
    const SampledPath B = fbm_path(0.7, 256, 1.0, 14, 0);
    const FlowPath f = solve_flow(eval, Eigen::Vector2d(1, 2), B);
    const SampledPath X = solve_state(eval, Eigen::Vector2d(1, 2), B);
    CHECK((f.X.values() - X.values()).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("second variation") {
    // Direct Z against symmetric second differences in x0.
    const auto fs = expr::parse_field_set("V0 = [-x1 + sin(x2), -x2 - x1^3/3]\nV1 = [1, 0]\nV2 = [0, cos(x1)]", 2, 2);
    const FieldEvaluator eval(fs, true);
    SampledPath B(0.0, 1.0 / 512, 513, 2);
    const SampledPath b1 = fbm_path(0.7, 512, 1.0, 15, 0);
    const SampledPath b2 = fbm_path(0.7, 512, 1.0, 15, 1);
    for (std::size_t k = 0; k < 513; ++k) {
      B(k, 0) = b1(k);
      B(k, 1) = b2(k);
    }
    const Eigen::Vector2d x0(0.5, -0.2);
    const FlowPath f = solve_flow(eval, x0, B, {.second_variation = true});
    const std::size_t last = 512;
    const double h = 1e-3;
    const FieldEvaluator plain(fs, false);
    for (int j = 0; j < 2; ++j) {
      for (int l = 0; l < 2; ++l) {
        const Eigen::Vector2d ej = h * Eigen::Vector2d::Unit(j), el = h * Eigen::Vector2d::Unit(l);
        auto end = [&](const Eigen::Vector2d& x) {
          const SampledPath X = solve_state(plain, x, B);
          return Eigen::Vector2d(X(last, 0), X(last, 1));
        };
        const Eigen::Vector2d fd = (end(x0 + ej + el) - end(x0 + ej - el) - end(x0 - ej + el) + end(x0 - ej - el)) / (4 * h * h);
        const Eigen::Vector2d z = f.Z_contract(last, Eigen::Vector2d::Unit(j), Eigen::Vector2d::Unit(l));
        CHECK((fd - z).norm() / std::max(z.norm(), 1e-3) < 5e-2);
      }
    }
    CHECK(f.Z->values().row(0).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("variation of constants against direct Z") {
    // Scalar cubic drift with a null driver.
    const auto fs = expr::parse_field_set("V0 = [-x1^3]\nV1 = [0]", 1, 1);
    const SampledPath B(0.0, 1.0 / 1024, 1025, 1);
    const FlowPath f = solve_flow(fs, Eigen::VectorXd::Constant(1, 1.3), B, {.second_variation = true});
    const Eigen::VectorXd y0 = Eigen::VectorXd::Constant(1, 1.0);
    const Eigen::VectorXd z0 = Eigen::VectorXd::Constant(1, 0.25);
    const SampledPath z = second_variation_vcf(f, fs, y0, z0);
    for (std::size_t k = 64; k <= 1024; k += 64) {
      const double direct = f.Z_contract(k, y0, y0)(0) + f.J(k) * 0.25;
      CHECK(std::abs(z(k) - direct) / std::abs(direct) < 1e-3);
    }

    // Linear fields: z = J z0.
    const auto lin = expr::parse_field_set(kHypo, 2, 1);
    const SampledPath Bh = fbm_path(0.7, 256, 1.0, 16, 0);
    const FlowPath fl = solve_flow(lin, Eigen::Vector2d(0.1, 0.2), Bh, {.second_variation = true});
    const Eigen::Vector2d w0(0.3, -0.7);
    const SampledPath zl = second_variation_vcf(fl, lin, Eigen::Vector2d(1, 1), w0);
    for (std::size_t k = 0; k < Bh.size(); k += 32) {
      const Eigen::Vector2d expect = fl.J_at(k) * w0;
      CHECK(std::abs(zl(k, 0) - expect(0)) < 1e-12);
      CHECK(std::abs(zl(k, 1) - expect(1)) < 1e-12);
    }
    const SampledPath zero = second_variation_vcf(fl, lin, Eigen::Vector2d(1, 1), Eigen::Vector2d::Zero());
    CHECK(zero.values().cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("blow-up is reported") {
    const auto fs = expr::parse_field_set("V0 = [x1^2]\nV1 = [0]", 1, 1);
    const SampledPath B(0.0, 1.0 / 256, 513, 1);
    try {
      solve_flow(fs, Eigen::VectorXd::Constant(1, 1.0), B, {.check_consistency = false});
      FAIL("expected blow-up");
    } catch (const BlowUpError& e) {
      CHECK(e.last_valid_index() > 0);
      CHECK(e.last_valid_index() < 512);
    }
  }

  TEST_CASE("a priori monitors") {
    const auto fs = expr::parse_field_set(kFou, 1, 1);
    const SampledPath zero(0.0, 1.0 / 256, 257, 1);
    const FlowPath f0 = solve_flow(fs, Eigen::VectorXd::Constant(1, 1.0), zero);
    const AprioriReport r0 = apriori_report(f0, Eigen::VectorXd::Constant(1, 1.0), 0.6);
    CHECK(std::isfinite(r0.holder_X));
    CHECK(std::isfinite(r0.ratio_X));

    const auto nl = expr::parse_field_set(kNonlinear, 2, 1);
    std::vector<AprioriReport> reports;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const SampledPath B = fbm_path(0.7, 256, 1.0, 18, s);
      const Eigen::Vector2d x0(0.5, 0.5);
      reports.push_back(apriori_report(solve_flow(nl, x0, B), x0, 0.6));
      const AprioriReport doubled = apriori_report(solve_flow(nl, x0, 2.0 * B), x0, 0.6);
      CHECK(doubled.bound_X >= reports.back().bound_X);
    }
    const AprioriFit fit = apriori_fit(reports, 0.6);
    CHECK(fit.finite);
    CHECK(fit.paths == 100);
    MESSAGE("max ratio X " << fit.max_ratio_X << ", J " << fit.max_ratio_J << ", log|J| slope " << fit.slope);
  }
}
