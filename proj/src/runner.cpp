#include "fbmhypo/runner.hpp"

#include "fbmhypo/ergodicity.hpp"
#include "fbmhypo/errors.hpp"
#include "fbmhypo/flow.hpp"
#include "fbmhypo/holder.hpp"
#include "fbmhypo/hormander.hpp"
#include "fbmhypo/malliavin.hpp"
#include "fbmhypo/noise.hpp"
#include "fbmhypo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace fbmhypo {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

// Streams above this offset are reserved for pasts, so they never collide
// with replica indices.
constexpr std::uint64_t past_stream = 1ull << 40;

std::size_t steps(double span, double dt, const char* what) {
  const double r = span / dt;
  const auto k = static_cast<std::size_t>(std::llround(r));
  if (k == 0 || std::abs(r - static_cast<double>(k)) > 1e-9 * r) {
    throw DomainError(std::string(what) + " is not a whole number of steps");
  }
  return k;
}

class Writer {
 public:
  Writer(const ExperimentConfig& cfg, std::filesystem::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

  void csv(const std::string& name, const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    header(os);
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
      os << '\n';
    }
    write(name, os.str());
  }

  void summary(const Summary& s) {
    std::ostringstream os;
    header(os);
    for (const auto& [k, v] : s) os << k << " = " << v << '\n';
    write("summary.txt", os.str());
  }

  std::vector<std::filesystem::path> files;

 private:
  void header(std::ostream& os) const {
    os << "# experiment config\n";
    std::istringstream in(cfg_.source);
    std::string line;
    while (std::getline(in, line)) os << "#   " << line << '\n';
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    files.push_back(path);
  }

  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
};

void put(Summary& s, const std::string& key, double v) { s.emplace_back(key, format_number(v)); }
void put(Summary& s, const std::string& key, bool v) { s.emplace_back(key, v ? "true" : "false"); }
void put(Summary& s, const std::string& key, std::size_t v) { s.emplace_back(key, std::to_string(v)); }
void put(Summary& s, const std::string& key, const std::string& v) { s.emplace_back(key, v); }

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ConditionedNoise make_noise(const ExperimentConfig& cfg, Summary& s) {
  const double past_dt = cfg.past_dt > 0 ? cfg.past_dt : cfg.dt;
  const std::size_t past_bins = steps(cfg.past_window, past_dt, "past_window / past_dt");
  const std::size_t bins = steps(cfg.T, cfg.dt, "T / dt");
  const auto d = static_cast<std::size_t>(cfg.d);
  SampledPath omega(-past_dt * static_cast<double>(past_bins), past_dt, past_bins + 1, d);
  if (cfg.past == "sample") {
    const FbmSampler sampler = past_sampler(cfg.hurst.H, past_dt, past_bins);
    for (std::size_t c = 0; c < d; ++c) {
      auto rng = make_engine(cfg.seed, past_stream + c);
      const SampledPath w = sampler.sample(rng);
      for (std::size_t k = 0; k < w.size(); ++k) omega(k, c) = w(k);
    }
  }
  ConditionedNoise noise(cfg.hurst, omega, cfg.dt, bins);
  put(s, "noise.H", cfg.hurst.H);
  put(s, "noise.gamma", cfg.hurst.gamma);
  put(s, "noise.delta", cfg.hurst.delta);
  put(s, "noise.alpha_H", cfg.hurst.alpha_H);
  put(s, "noise.drift_constant", cfg.hurst.drift_constant);
  put(s, "noise.gamma_H_product", cfg.hurst.gamma_H_product);
  put(s, "noise.past", cfg.past);
  put(s, "noise.past_dt", past_dt);
  put(s, "noise.past_bins", past_bins);
  put(s, "noise.omega_norm", weighted_norm(omega, cfg.hurst.gamma, cfg.hurst.delta));
  put(s, "noise.tail_budget_max", noise.tail_budget().size() ? noise.tail_budget().maxCoeff() : 0.0);
  return noise;
}

void grid_keys(const ExperimentConfig& cfg, Summary& s) {
  put(s, "run.experiment", to_string(cfg.kind));
  put(s, "run.seed", static_cast<std::size_t>(cfg.seed));
  put(s, "run.T", cfg.T);
  put(s, "run.dt", cfg.dt);
  put(s, "run.N", cfg.n_mc);
}

MonteCarloSettings mc_of(const ExperimentConfig& cfg) { return {cfg.n_mc, cfg.seed, cfg.threads}; }

void run_sample_fbm(const ExperimentConfig& cfg, Writer& w, Summary& s) {
  const std::size_t bins = steps(cfg.T, cfg.dt, "T / dt");
  const auto paths = fbm_sample_exact(cfg.hurst.H, 0.0, cfg.dt, bins + 1, cfg.n_mc, cfg.seed);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < paths[i].size(); ++k) rows.push_back({paths[i].time(k), paths[i](k)});
    char name[32];
    std::snprintf(name, sizeof name, "path_%04zu.csv", i);
    w.csv(name, {"t", "B"}, rows);
  }
  // Empirical covariance at (T/2, T) and variance at T against the exact values.
  const std::size_t half = bins / 2;
  double vT = 0, cHT = 0;
  for (const auto& p : paths) {
    vT += p(bins) * p(bins);
    cHT += p(half) * p(bins);
  }
  const double n = static_cast<double>(paths.size());
  put(s, "sample-fbm.paths", paths.size());
  put(s, "sample-fbm.var_T", vT / n);
  put(s, "sample-fbm.var_T_exact", fbm_covariance(cfg.T, cfg.T, cfg.hurst.H));
  put(s, "sample-fbm.cov_half_T", cHT / n);
  put(s, "sample-fbm.cov_half_T_exact", fbm_covariance(static_cast<double>(half) * cfg.dt, cfg.T, cfg.hurst.H));
}

void run_solve(const ExperimentConfig& cfg, Writer& w, Summary& s) {
  const ConditionedNoise noise = make_noise(cfg, s);
  auto rng = make_engine(cfg.seed, 0);
  const RowMatrix dW = noise.draw(rng);
  const NoiseSplit split = noise.split(dW);
  // J Jinv drift is reported rather than fatal; coarse grids exceed 1e-6.
  FlowOptions opts;
  opts.check_consistency = false;
  const FlowPath flow = solve_flow(*cfg.fields, vec(cfg.x0), split.driver(), opts);
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= cfg.n; ++i) cols.push_back("X_" + std::to_string(i));
  for (const char* m : {"J_", "Jinv_"}) {
    for (int i = 1; i <= cfg.n; ++i) {
      for (int j = 1; j <= cfg.n; ++j) cols.push_back(m + std::to_string(i) + std::to_string(j));
    }
  }
  std::vector<std::vector<double>> rows;
  const std::size_t nn = flow.n() * flow.n();
  for (std::size_t k = 0; k < flow.X.size(); ++k) {
    std::vector<double> r{flow.X.time(k)};
    for (std::size_t i = 0; i < flow.n(); ++i) r.push_back(flow.X(k, i));
    for (std::size_t i = 0; i < nn; ++i) r.push_back(flow.J(k, i));
    for (std::size_t i = 0; i < nn; ++i) r.push_back(flow.Jinv(k, i));
    rows.push_back(std::move(r));
  }
  w.csv("flow.csv", cols, rows);

  std::vector<std::string> ncols{"t"};
  for (const char* m : {"B_", "m_", "tildeB_"}) {
    for (int a = 1; a <= cfg.d; ++a) ncols.push_back(m + std::to_string(a));
  }
  rows.clear();
  for (std::size_t k = 0; k < flow.X.size(); ++k) {
    std::vector<double> r{flow.X.time(k)};
    for (std::size_t a = 0; a < flow.d(); ++a) r.push_back(flow.driver(k, a));
    for (std::size_t a = 0; a < flow.d(); ++a) r.push_back(split.m(k, a));
    for (std::size_t a = 0; a < flow.d(); ++a) r.push_back(split.tildeB(k, a));
    rows.push_back(std::move(r));
  }
  w.csv("noise.csv", ncols, rows);
  put(s, "flow.max_consistency", flow.max_consistency);
  put(s, "flow.consistency_ok", flow.max_consistency <= 1e-6);
  const std::size_t last = flow.X.size() - 1;
  for (std::size_t i = 0; i < flow.n(); ++i) put(s, "flow.x_T." + std::to_string(i + 1), flow.X(last, i));
  const AprioriReport a = apriori_report(flow, vec(cfg.x0), cfg.hurst.gamma);
  put(s, "flow.holder_B", a.holder_B);
  put(s, "flow.holder_X", a.holder_X);
  put(s, "flow.holder_J", a.holder_J);
}

void run_hormander(const ExperimentConfig& cfg, Writer& w, Summary& s) {
  std::vector<std::vector<double>> rows;
  RankReport last;
  for (int N = 1; N <= cfg.bracket_depth; ++N) {
    last = hormander_rank(*cfg.fields, N, vec(cfg.x0));
    rows.push_back({static_cast<double>(N), static_cast<double>(last.rank), last.sigma_min, last.satisfied ? 1.0 : 0.0});
  }
  w.csv("levels.csv", {"N", "rank", "sigma_min", "satisfied"}, rows);
  put(s, "hormander.depth", static_cast<std::size_t>(cfg.bracket_depth));
  put(s, "hormander.rank", static_cast<std::size_t>(last.rank));
  put(s, "hormander.sigma_min", last.sigma_min);
  put(s, "hormander.satisfied", last.satisfied);
  put(s, "hormander.exhaustive", last.exhaustive);
  const DissipativityReport dr = dissipativity_check(cfg.fields->drift(), cfg.radius, 4096, cfg.seed);
  put(s, "dissipativity.satisfied", dr.satisfied);
  put(s, "dissipativity.rho", dr.rho);
  put(s, "dissipativity.M1", dr.M1);
  put(s, "dissipativity.M2", dr.M2);
  put(s, "dissipativity.samples", dr.samples);
  put(s, "dissipativity.method", dr.method);
}

void run_malliavin_tail(const ExperimentConfig& cfg, Writer& w, Summary& s) {
  const ConditionedNoise noise = make_noise(cfg, s);
  std::vector<double> eps = cfg.eps;
  if (eps.empty()) eps = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  FlowOptions opts;
  opts.check_consistency = false;
  const TailTable t = lambda_min_tail(*cfg.fields, vec(cfg.x0), noise, eps, mc_of(cfg), opts);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < eps.size(); ++i) rows.push_back({t.eps[i], t.p_hat[i], t.stderr_[i], static_cast<double>(t.n_mc)});
  w.csv("lambda_min_tail.csv", {"eps", "p_hat", "stderr", "n_mc"}, rows);
  put(s, "malliavin.tail_slope", t.slope);
  put(s, "malliavin.tail_strictly_decreasing", t.strictly_decreasing);
  put(s, "malliavin.failed", t.failed);

  // Matrices and control residual on the first replica.
  auto rng = make_engine(cfg.seed, 0);
  const FlowPath flow = solve_flow(*cfg.fields, vec(cfg.x0), noise.driver(noise.draw(rng)), opts);
  Eigen::VectorXd xi = cfg.xi.empty() ? Eigen::VectorXd::Unit(cfg.n, 0) : vec(cfg.xi);
  const MalliavinReport r = malliavin_report(flow, xi);
  put(s, "malliavin.lambda_min", r.lambda_min);
  put(s, "malliavin.lambda_min_hat", r.lambda_min_hat);
  put(s, "malliavin.loewner_gap", r.loewner_gap);
  put(s, "malliavin.control_residual", r.control_residual);
}

void run_gradient(const ExperimentConfig& cfg, Writer& w, Summary& s) {
  const ConditionedNoise noise = make_noise(cfg, s);
  const expr::Expr psi_expr = expr::parse_expression(cfg.psi, cfg.n);
  auto psi = [&](const SampledPath& X) {
    const std::size_t last = X.size() - 1;
    return psi_expr.eval(X.row(last));
  };
  const Eigen::VectorXd xi = cfg.xi.empty() ? Eigen::VectorXd::Unit(cfg.n, 0) : vec(cfg.xi);
  const GradientResult g = gradient_estimator(*cfg.fields, vec(cfg.x0), noise, psi, xi, mc_of(cfg), cfg.fd_dx);
  w.csv("gradient.csv", {"estimate", "stderr", "fd_oracle", "rel_err"}, {{g.estimate, g.stderr_, g.fd_oracle, g.rel_err}});
  put(s, "malliavin.gradient.psi", cfg.psi);
  put(s, "malliavin.gradient.estimate", g.estimate);
  put(s, "malliavin.gradient.stderr", g.stderr_);
  put(s, "malliavin.gradient.fd_oracle", g.fd_oracle);
  put(s, "malliavin.gradient.fd_stderr", g.fd_stderr);
  put(s, "malliavin.gradient.rel_err", g.rel_err);
}

void run_ergodicity(const ExperimentConfig& cfg, Writer& w, Summary& s) {
  if (cfg.x0_b.empty()) throw DomainError("ergodicity needs 'x0_b'");
  const ConditionedNoise noise = make_noise(cfg, s);
  const EnsembleSummary e = convergence_experiment(*cfg.fields, vec(cfg.x0), vec(cfg.x0_b), noise, mc_of(cfg));
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= cfg.n; ++i) cols.push_back("ks_" + std::to_string(i));
  for (int i = 1; i <= cfg.n; ++i) cols.push_back("w1_" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  for (std::size_t c = 0; c < e.checkpoints.size(); ++c) {
    std::vector<double> r{e.checkpoints[c]};
    r.insert(r.end(), e.distances[c].ks.begin(), e.distances[c].ks.end());
    r.insert(r.end(), e.distances[c].w1.begin(), e.distances[c].w1.end());
    rows.push_back(std::move(r));
  }
  w.csv("distances.csv", cols, rows);
  put(s, "ergodicity.distance_proxy", std::string("KS and W1 per coordinate (total variation is not estimable from samples)"));
  put(s, "ergodicity.initial_separation", e.initial_separation);
  put(s, "ergodicity.final_w1", e.w1_total.back());
  put(s, "ergodicity.monotone", e.monotone);
  put(s, "ergodicity.converged", e.converged);
  put(s, "ergodicity.doubling_z", e.doubling_z);
  put(s, "ergodicity.doubling_stable", e.doubling_stable);
  put(s, "ergodicity.failed", e.failed);
}

void run_lemmas(const ExperimentConfig& cfg, Writer&, Summary& s) {
  const LemmaSuiteReport r = run_lemma_suite(cfg.hurst, cfg.lemma_paths, cfg.lemma_pasts, cfg.seed);
  put(s, "holder.paths", r.paths);
  put(s, "holder.interpolation_violations", r.interpolation_violations);
  put(s, "holder.worst_interpolation_ratio", r.worst_interpolation_ratio);
  put(s, "holder.subdivision_violations", r.subdivision_violations);
  put(s, "holder.worst_subdivision_ratio", r.worst_subdivision_ratio);
  put(s, "noise.pasts", r.pasts);
  put(s, "noise.f_omega_origin_violations", r.origin_violations);
  put(s, "noise.f_omega_origin_max", r.max_origin_value);
  put(s, "lemma-suite.violations", r.violations());
}

}  // namespace

LemmaSuiteReport run_lemma_suite(const HurstParams& p, std::size_t paths, std::size_t pasts, std::uint64_t seed) {
  LemmaSuiteReport r;
  r.paths = paths;
  r.pasts = pasts;
  const std::size_t points = 1025;
  const double dt = 1.0 / 1024.0;
  const FbmSampler sampler(p.H, 0.0, dt, points);
  for (std::size_t i = 0; i < paths; ++i) {
    auto rng = make_engine(seed, i);
    const SampledPath f = sampler.sample(rng);

    const InequalityReport a = check_interpolation(f, p.gamma);
    if (!a.ok) ++r.interpolation_violations;
    r.worst_interpolation_ratio = std::max(r.worst_interpolation_ratio, a.lhs / a.rhs);

    // A random partition of a random sub-window into 1..8 pieces.
    std::uniform_int_distribution<std::size_t> pick(0, points - 1);
    std::uniform_int_distribution<std::size_t> pieces(1, 8);
    std::vector<std::size_t> idx;
    const std::size_t m = pieces(rng) + 1;
    while (idx.size() < m) {
      const std::size_t k = pick(rng);
      if (std::find(idx.begin(), idx.end(), k) == idx.end()) idx.push_back(k);
    }
    std::sort(idx.begin(), idx.end());
    std::vector<double> partition;
    for (std::size_t k : idx) partition.push_back(f.time(k));
    const InequalityReport b = check_subdivision(f, p.gamma, partition);
    if (!b.ok) ++r.subdivision_violations;
    if (b.rhs > 0) r.worst_subdivision_ratio = std::max(r.worst_subdivision_ratio, b.lhs / b.rhs);
  }

  const double past_dt = 1.0 / 64.0;
  const std::size_t past_bins = 512;
  const FbmSampler ps = past_sampler(p.H, past_dt, past_bins);
  const ConditionalDrift op(p, past_dt, past_bins, past_dt, 64, DriftKernel::TimesDerivative);
  for (std::size_t i = 0; i < pasts; ++i) {
    auto rng = make_engine(seed, past_stream + i);
    const SampledPath omega = ps.sample(rng);
    const double v = std::abs(op.apply(omega)(0));
    if (!(v <= 1e-6 * weighted_norm(omega, p.gamma, p.delta))) ++r.origin_violations;
    r.max_origin_value = std::max(r.max_origin_value, v);
  }
  return r;
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Writer w(cfg, out_dir);
  Summary s;
  grid_keys(cfg, s);
  switch (cfg.kind) {
    case ExperimentKind::SampleFbm: run_sample_fbm(cfg, w, s); break;
    case ExperimentKind::Solve: run_solve(cfg, w, s); break;
    case ExperimentKind::Hormander: run_hormander(cfg, w, s); break;
    case ExperimentKind::MalliavinTail: run_malliavin_tail(cfg, w, s); break;
    case ExperimentKind::Gradient: run_gradient(cfg, w, s); break;
    case ExperimentKind::Ergodicity: run_ergodicity(cfg, w, s); break;
    case ExperimentKind::LemmaSuite: run_lemmas(cfg, w, s); break;
  }
  w.summary(s);
  RunResult r;
  r.files = w.files;
  r.summary = std::move(s);
  return r;
}

}  // namespace fbmhypo
