#pragma once

// Long-run experiments: samples of the conditioned law of the solution,
// distances between empirical marginals, and the stationary variance of the
// fractional Ornstein-Uhlenbeck process.

#include "fbmhypo/expr.hpp"
#include "fbmhypo/malliavin.hpp"
#include "fbmhypo/noise.hpp"
#include "fbmhypo/path.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fbmhypo {

struct LawSamples {
  std::vector<double> checkpoints;
  std::vector<RowMatrix> samples;  // per checkpoint, n_mc x n (failed rows are NaN)
  std::size_t failed = 0;          // replicas that blew up
};

/// Draws n_mc conditioned trajectories from x0 with the past of `noise` fixed
/// and records X at T/4, T/2 and T (T = bins * dt). Replica i uses
/// make_engine(seed, i), so equal seeds give common random numbers across
/// initial conditions.
LawSamples conditional_law_sample(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                                  const ConditionedNoise& noise, const MonteCarloSettings& mc);

struct Distance {
  std::vector<double> ks;  // per coordinate
  std::vector<double> w1;  // per coordinate
};

/// Kolmogorov-Smirnov statistic and sorted-sample W1 per column. NaN rows of
/// either set are dropped pairwise. Throws DomainError on empty input or on
/// different sample sizes.
Distance empirical_distance(const RowMatrix& a, const RowMatrix& b);

/// Stationary variance of dX = -X dt + dB^H from the double integral of
/// e^-(S-u) e^-(S-v) against the fBm covariance on [0, S], S = 30, summed
/// over bin increments of width h and Richardson-extrapolated in h.
double fou_stationary_oracle(double H);

/// Var of int_0^S e^-(S-u) dB(u) with exact bin-increment covariances and
/// the kernel taken at bin midpoints.
double fou_variance_sum(double H, double S, double h);

struct EnsembleSummary {
  std::vector<double> checkpoints;  // 0 first, then T/4, T/2, T
  std::vector<Distance> distances;  // one per checkpoint
  std::vector<double> w1_total;     // sum of W1 over coordinates
  double initial_separation = 0;    // |x0_a - x0_b|_1
  std::size_t decreases = 0;        // successive decreases of w1_total
  bool monotone = false;
  bool converged = false;  // last W1 below 10% of the initial separation
  // The law at T against the law at T/2: largest mean difference over
  // coordinates in units of its standard error.
  double doubling_z = 0;
  bool doubling_stable = false;  // doubling_z below 2
  std::size_t failed = 0;
  LawSamples a, b;
};

/// Conditioned laws from two initial conditions under common random numbers.
EnsembleSummary convergence_experiment(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0_a,
                                       const Eigen::VectorXd& x0_b, const ConditionedNoise& noise,
                                       const MonteCarloSettings& mc);

struct StationaryVariance {
  double variance = 0;
  double stderr_ = 0;
  double mean = 0;
  double oracle = 0;
  double closed_form = 0;  // H Gamma(2H)
  double z = 0;            // |variance - oracle| / stderr
};

/// Empirical Var X_T for fOU from x0 = 0, with the noise drawn from the
/// unconditional law on [0, T] (the mixture of the conditioned laws over
/// pasts). T / dt grid points, at most 4096.
StationaryVariance fou_stationary_experiment(double H, double T, double dt, const MonteCarloSettings& mc);

}  // namespace fbmhypo
