#include "fbmhypo/holder.hpp"

#include "fbmhypo/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fbmhypo {

namespace {

constexpr std::size_t kMaxPoints = 4097;
thread_local std::size_t t_decimation = 1;

double pair_sup(const SampledPath& f, double gamma, std::size_t lo, std::size_t hi, std::size_t step) {
  const std::size_t n = (hi - lo) / step + 1;
  std::vector<double> lag(n);
  for (std::size_t p = 1; p < n; ++p) lag[p] = std::pow(static_cast<double>(p * step) * f.dt(), gamma);
  double best = 0.0;
  for (std::size_t c = 0; c < f.dim(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double fi = f(lo + i * step, c);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = std::abs(f(lo + j * step, c) - fi) / lag[j - i];
        if (v > best) best = v;
      }
    }
  }
  return best;
}

}  // namespace

double holder_norm(const SampledPath& f, double gamma, double a, double b) {
  if (!(b > a)) throw DomainError("holder_norm: empty window");
  const std::size_t lo = f.index_of(a);
  const std::size_t hi = f.index_of(b);
  if (hi <= lo) throw DomainError("holder_norm: empty window");
  std::size_t step = 1;
  while ((hi - lo) / step + 1 > kMaxPoints) ++step;
  t_decimation = step;
  // Keep the window end on the decimated grid.
  const std::size_t last = lo + ((hi - lo) / step) * step;
  return pair_sup(f, gamma, lo, last, step);
}

double holder_norm(const SampledPath& f, double gamma) { return holder_norm(f, gamma, f.t0(), f.t_end()); }

std::size_t last_decimation() { return t_decimation; }

double sup_norm(const SampledPath& f) { return f.values().cwiseAbs().maxCoeff(); }

double l2_norm(const SampledPath& f) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    double sq = 0.0;
    for (std::size_t c = 0; c < f.dim(); ++c) sq += f(k, c) * f(k, c);
    acc += (k == 0 || k + 1 == f.size()) ? 0.5 * sq : sq;
  }
  return std::sqrt(acc * f.dt());
}

InequalityReport check_interpolation(const SampledPath& f, double gamma) {
  const double T = f.t_end() - f.t0();
  const double l2 = l2_norm(f);
  const double hn = holder_norm(f, gamma);
  const double e = 2.0 * gamma + 1.0;
  InequalityReport r;
  r.lhs = sup_norm(f);
  r.rhs = 2.0 * std::max(l2 / std::sqrt(T), std::pow(l2, 2.0 * gamma / e) * std::pow(hn, 1.0 / e));
  r.ok = r.lhs <= r.rhs * (1.0 + 1e-9);
  return r;
}

InequalityReport check_subdivision(const SampledPath& f, double gamma, const std::vector<double>& partition) {
  if (partition.size() < 2) throw DomainError("check_subdivision: need at least two partition points");
  for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
    if (!(partition[i + 1] > partition[i])) throw DomainError("check_subdivision: partition not sorted");
  }
  for (double u : partition) f.index_of(u);  // throws when off-grid
  const double n = static_cast<double>(partition.size() - 1);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
    worst = std::max(worst, holder_norm(f, gamma, partition[i], partition[i + 1]));
  }
  InequalityReport r;
  r.lhs = holder_norm(f, gamma, partition.front(), partition.back());
  r.rhs = std::pow(n, 1.0 - gamma) * worst;
  r.ok = r.lhs <= r.rhs * (1.0 + 1e-9);
  return r;
}

}  // namespace fbmhypo
