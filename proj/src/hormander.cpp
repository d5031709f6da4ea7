#include "fbmhypo/hormander.hpp"

#include "fbmhypo/errors.hpp"
#include "fbmhypo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fbmhypo {

BracketFamily bracket_family(const expr::VectorFieldSet& fields, int N) {
  if (N < 1) throw DomainError("bracket_family: N must be at least 1");
  BracketFamily fam;
  fam.level = N;
  std::vector<BracketEntry> level;
  for (int i = 1; i <= fields.d; ++i) level.push_back({{i}, fields.noise(i)});
  fam.entries = level;
  for (int k = 2; k <= N; ++k) {
    std::vector<BracketEntry> next;
    for (const auto& e : level) {
      for (int i = 0; i <= fields.d; ++i) {
        BracketEntry b;
        b.index.push_back(i);
        b.index.insert(b.index.end(), e.index.begin(), e.index.end());
        b.field = expr::lie_bracket(fields.fields[static_cast<std::size_t>(i)], e.field);
        next.push_back(std::move(b));
      }
    }
    fam.entries.insert(fam.entries.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return fam;
}

std::string index_to_string(const std::vector<int>& index) {
  std::string s = "(";
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(index[i]);
  }
  return s + ")";
}

namespace {

double sigma_min_of(const Eigen::MatrixXd& columns, const std::vector<std::size_t>& pick) {
  Eigen::MatrixXd sub(columns.rows(), static_cast<Eigen::Index>(pick.size()));
  for (std::size_t i = 0; i < pick.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = columns.col(static_cast<Eigen::Index>(pick[i]));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
  return svd.singularValues().minCoeff();
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

RankReport rank_of_columns(const Eigen::MatrixXd& columns) {
  RankReport r;
  const auto n = static_cast<std::size_t>(columns.rows());
  const auto m = static_cast<std::size_t>(columns.cols());
  if (m == 0) return r;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(columns);
  const Eigen::VectorXd sv = svd.singularValues();
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double smax = sv.size() ? sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (smax > 0.0 && sv(i) > 1e-10 * smax) ++r.rank;
  }
  r.satisfied = r.rank == static_cast<int>(n);
  if (m < n) {
    r.sigma_min = 0.0;
    return r;
  }

  if (binomial(m, n) <= 1e5) {
    std::vector<std::size_t> pick(n);
    for (std::size_t i = 0; i < n; ++i) pick[i] = i;
    double best = -1.0;
    for (;;) {
      const double s = sigma_min_of(columns, pick);
      if (s > best) {
        best = s;
        r.best_columns = pick;
      }
      // next combination in lexicographic order
      std::size_t i = n;
      while (i > 0 && pick[i - 1] == m - n + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
    }
    r.sigma_min = best;
  } else {
    // Greedy: add the column that keeps the smallest singular value largest.
    r.exhaustive = false;
    std::vector<std::size_t> pick;
    for (std::size_t step = 0; step < n; ++step) {
      double best = -1.0;
      std::size_t best_col = 0;
      for (std::size_t c = 0; c < m; ++c) {
        if (std::find(pick.begin(), pick.end(), c) != pick.end()) continue;
        auto trial = pick;
        trial.push_back(c);
        const double s = sigma_min_of(columns, trial);
        if (s > best) {
          best = s;
          best_col = c;
        }
      }
      pick.push_back(best_col);
    }
    std::sort(pick.begin(), pick.end());
    r.best_columns = pick;
    r.sigma_min = sigma_min_of(columns, pick);
  }
  return r;
}

RankReport hormander_rank(const expr::VectorFieldSet& fields, int N, const Eigen::VectorXd& x0) {
  if (x0.size() != fields.n) throw DomainError("hormander_rank: x0 has the wrong dimension");
  const BracketFamily fam = bracket_family(fields, N);
  Eigen::MatrixXd cols(fields.n, static_cast<Eigen::Index>(fam.entries.size()));
  const std::span<const double> x(x0.data(), static_cast<std::size_t>(x0.size()));
  for (std::size_t k = 0; k < fam.entries.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = expr::evaluate(fam.entries[k].field, x);
  return rank_of_columns(cols);
}

DissipativityReport dissipativity_check(const expr::FieldVector& V0, double R, std::size_t n_samples,
                                        std::uint64_t seed) {
  if (!(R > 0.0)) throw DomainError("dissipativity_check: R must be positive");
  const std::size_t n = V0.size();
  if (n == 0) throw DomainError("dissipativity_check: empty field");
  const expr::Program prog(V0);

  std::vector<Eigen::VectorXd> pts;
  // Spheres.
  const std::size_t shells = 16;
  const std::size_t per_shell = std::max<std::size_t>(1, n_samples / shells);
  auto rng = make_engine(seed, 0);
  std::normal_distribution<double> normal;
  for (std::size_t l = 1; l <= shells; ++l) {
    const double r = R * static_cast<double>(l) / static_cast<double>(shells);
    for (std::size_t s = 0; s < per_shell; ++s) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(n));
      if (n == 1) {
        u(0) = (s % 2 == 0) ? 1.0 : -1.0;
      } else {
        do {
          for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = normal(rng);
        } while (u.norm() == 0.0);
        u.normalize();
      }
      pts.push_back(r * u);
    }
  }
  // Coarse grid, about n_samples points in total.
  const auto per_axis = static_cast<std::size_t>(std::max(
      3.0, std::floor(std::pow(static_cast<double>(std::max<std::size_t>(n_samples, 1)), 1.0 / static_cast<double>(n)))));
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      x(static_cast<Eigen::Index>(i)) = -R + 2.0 * R * static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
    }
    if (x.norm() > 0.0 && x.norm() <= R * (1 + 1e-12)) pts.push_back(x);
    std::size_t i = 0;
    while (i < n && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == n) break;
  }

  DissipativityReport rep;
  rep.samples = pts.size();
  std::vector<double> p(pts.size());
  std::vector<double> out(n), stack;
  double rho = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_i = 0;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    prog.run(std::span<const double>(pts[s].data(), n), out, stack);
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += pts[s](static_cast<Eigen::Index>(i)) * out[i];
    p[s] = dot;
    const double r2 = pts[s].squaredNorm();
    if (dot / r2 > worst) {
      worst = dot / r2;
      worst_i = s;
    }
    if (std::sqrt(r2) >= 0.5 * R) rho = std::min(rho, -dot / r2);
  }
  rep.rho = rho;
  rep.satisfied = rho > 0.0;
  if (!rep.satisfied) {
    rep.counterexample = pts[worst_i];
    return rep;
  }
  rep.M2 = std::min(1.0, rho);
  double m1 = 0.0;
  for (std::size_t s = 0; s < pts.size(); ++s) m1 = std::max(m1, p[s] + rep.M2 * pts[s].squaredNorm());
  rep.M1 = m1;
  return rep;
}

}  // namespace fbmhypo
