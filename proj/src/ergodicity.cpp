#include "fbmhypo/ergodicity.hpp"

#include "fbmhypo/errors.hpp"
#include "fbmhypo/flow.hpp"
#include "fbmhypo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fbmhypo {

LawSamples conditional_law_sample(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                                  const ConditionedNoise& noise, const MonteCarloSettings& mc) {
  if (noise.bins() % 4 != 0) throw DomainError("conditional_law_sample: the number of bins must be divisible by 4");
  const FieldEvaluator eval(fields, false);
  const std::size_t N = noise.bins();
  const std::size_t idx[3] = {N / 4, N / 2, N};
  const auto n = static_cast<Eigen::Index>(fields.n);

  LawSamples out;
  for (std::size_t i : idx) {
    out.checkpoints.push_back(static_cast<double>(i) * noise.dt());
    out.samples.emplace_back(RowMatrix::Constant(static_cast<Eigen::Index>(mc.n_mc), n,
                                                 std::numeric_limits<double>::quiet_NaN()));
  }
  std::vector<char> failed(mc.n_mc, 0);
  parallel_for(
      mc.n_mc,
      [&](std::size_t r) {
        auto rng = make_engine(mc.seed, r);
        const RowMatrix dW = noise.draw(rng);
        SampledPath X;
        try {
          X = solve_state(eval, x0, noise.driver(dW));
        } catch (const BlowUpError&) {
          failed[r] = 1;
          return;
        }
        for (std::size_t c = 0; c < 3; ++c) {
          for (Eigen::Index j = 0; j < n; ++j) {
            out.samples[c](static_cast<Eigen::Index>(r), j) = X(idx[c], static_cast<std::size_t>(j));
          }
        }
      },
      mc.threads);
  out.failed = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  return out;
}

Distance empirical_distance(const RowMatrix& a, const RowMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw DomainError("empirical_distance: empty sample set");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DomainError("empirical_distance: sample sets must have the same shape");
  }
  Distance d;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    std::vector<double> x, y;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (std::isnan(a(r, c)) || std::isnan(b(r, c))) continue;
      x.push_back(a(r, c));
      y.push_back(b(r, c));
    }
    if (x.empty()) throw DomainError("empirical_distance: no finite samples");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double m = static_cast<double>(x.size());

    double w1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) w1 += std::abs(x[i] - y[i]);
    d.w1.push_back(w1 / m);

    // Merge walk over both sorted samples; ties advance both sides.
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
      const double t = std::min(x[i], y[j]);
      while (i < x.size() && x[i] == t) ++i;
      while (j < y.size() && y[j] == t) ++j;
      ks = std::max(ks, std::abs(static_cast<double>(i) - static_cast<double>(j)) / m);
    }
    d.ks.push_back(ks);
  }
  return d;
}

double fou_variance_sum(double H, double S, double h) {
  const auto n = static_cast<std::size_t>(std::llround(S / h));
  const double hh = S / static_cast<double>(n);
  const double e2 = std::exp(-2.0 * hh);
  const double twoH = 2.0 * H;
  // sum_i k_i k_{i+l} with k_i = exp(-(S - (i + 1/2) h)) is geometric in i.
  auto pair_sum = [&](std::size_t l) {
    return std::exp(-hh * static_cast<double>(l + 1)) * -std::expm1(-2.0 * hh * static_cast<double>(n - l)) /
           (1.0 - e2);
  };
  const double scale = std::pow(hh, twoH);
  double acc = pair_sum(0);  // rho(0) = 1
  for (std::size_t l = 1; l < n; ++l) {
    const double ld = static_cast<double>(l);
    const double rho = 0.5 * (std::pow(ld + 1.0, twoH) + std::pow(ld - 1.0, twoH) - 2.0 * std::pow(ld, twoH));
    acc += 2.0 * rho * pair_sum(l);
  }
  return scale * acc;
}

double fou_stationary_oracle(double H) {
  if (!(H >= 0.5 && H < 1.0)) throw DomainError("fou_stationary_oracle: H must lie in [1/2, 1)");
  const double S = 30.0;
  const double coarse = fou_variance_sum(H, S, 2e-3);
  const double fine = fou_variance_sum(H, S, 1e-3);
  // The midpoint kernel gives an O(h^2) error.
  return fine + (fine - coarse) / 3.0;
}

EnsembleSummary convergence_experiment(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0_a,
                                       const Eigen::VectorXd& x0_b, const ConditionedNoise& noise,
                                       const MonteCarloSettings& mc) {
  EnsembleSummary s;
  s.a = conditional_law_sample(fields, x0_a, noise, mc);
  s.b = conditional_law_sample(fields, x0_b, noise, mc);
  s.failed = s.a.failed + s.b.failed;

  const auto n = static_cast<Eigen::Index>(fields.n);
  s.checkpoints.push_back(0.0);
  Distance d0;
  for (Eigen::Index j = 0; j < n; ++j) {
    d0.w1.push_back(std::abs(x0_a(j) - x0_b(j)));
    d0.ks.push_back(x0_a(j) == x0_b(j) ? 0.0 : 1.0);
  }
  s.distances.push_back(d0);
  for (std::size_t c = 0; c < s.a.checkpoints.size(); ++c) {
    s.checkpoints.push_back(s.a.checkpoints[c]);
    s.distances.push_back(empirical_distance(s.a.samples[c], s.b.samples[c]));
  }
  for (const auto& d : s.distances) {
    double w = 0.0;
    for (double x : d.w1) w += x;
    s.w1_total.push_back(w);
  }
  s.initial_separation = s.w1_total.front();
  for (std::size_t i = 1; i < s.w1_total.size(); ++i) {
    if (s.w1_total[i] < s.w1_total[i - 1]) ++s.decreases;
  }
  s.monotone = s.decreases + 1 == s.w1_total.size();
  s.converged = s.w1_total.back() < 0.1 * s.initial_separation;

  // Doubling test on the first initial condition: T/2 against T.
  const RowMatrix& half = s.a.samples[1];
  const RowMatrix& full = s.a.samples[2];
  double z = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double m1 = 0, m2 = 0, v1 = 0, v2 = 0, cnt = 0;
    for (Eigen::Index r = 0; r < half.rows(); ++r) {
      if (std::isnan(half(r, j)) || std::isnan(full(r, j))) continue;
      m1 += half(r, j);
      m2 += full(r, j);
      v1 += half(r, j) * half(r, j);
      v2 += full(r, j) * full(r, j);
      cnt += 1;
    }
    if (cnt < 2) continue;
    m1 /= cnt;
    m2 /= cnt;
    const double var = std::max(v1 / cnt - m1 * m1, 0.0) + std::max(v2 / cnt - m2 * m2, 0.0);
    const double se = std::sqrt(var / cnt);
    if (se > 0) z = std::max(z, std::abs(m2 - m1) / se);
  }
  s.doubling_z = z;
  s.doubling_stable = z < 2.0;
  return s;
}

StationaryVariance fou_stationary_experiment(double H, double T, double dt, const MonteCarloSettings& mc) {
  const auto bins = static_cast<std::size_t>(std::llround(T / dt));
  const FbmSampler sampler(H, 0.0, dt, bins + 1);
  const expr::VectorFieldSet fields = expr::parse_field_set("V0 = [-x1]\nV1 = [1]", 1, 1);
  const FieldEvaluator eval(fields, false);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);

  std::vector<double> xT(mc.n_mc);
  const std::size_t batch = 256;
  const std::size_t batches = (mc.n_mc + batch - 1) / batch;
  parallel_for(
      batches,
      [&](std::size_t b) {
        const std::size_t first = b * batch;
        const std::size_t count = std::min(batch, mc.n_mc - first);
        Eigen::MatrixXd z(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(count));
        for (std::size_t c = 0; c < count; ++c) {
          auto rng = make_engine(mc.seed, first + c);
          std::normal_distribution<double> normal;
          for (std::size_t k = 0; k < bins; ++k) z(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = normal(rng);
        }
        const Eigen::MatrixXd paths = sampler.apply(z);
        for (std::size_t c = 0; c < count; ++c) {
          RowMatrix values = paths.col(static_cast<Eigen::Index>(c));
          const SampledPath X = solve_state(eval, x0, SampledPath(0.0, dt, std::move(values)));
          xT[first + c] = X(bins, 0);
        }
      },
      mc.threads);

  StationaryVariance r;
  const double n = static_cast<double>(mc.n_mc);
  double sum = 0;
  for (double x : xT) sum += x;
  r.mean = sum / n;
  double m2 = 0, m4 = 0;
  for (double x : xT) {
    const double c = (x - r.mean) * (x - r.mean);
    m2 += c;
    m4 += c * c;
  }
  r.variance = m2 / (n - 1.0);
  m4 /= n;
  r.stderr_ = std::sqrt(std::max(m4 - r.variance * r.variance, 0.0) / n);
  r.oracle = fou_stationary_oracle(H);
  r.closed_form = H * std::tgamma(2.0 * H);
  r.z = std::abs(r.variance - r.oracle) / r.stderr_;
  return r;
}

}  // namespace fbmhypo
