#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace pbfgnn {

/// ML-GNN hyperparameters: laser-column duplication a, amplification b and
/// peak-loss weight c.
struct HyperPoint {
  int a = 1;
  double b = 1.0;
  double c = 1.0;

  bool operator==(const HyperPoint&) const = default;
};

struct HyperBounds {
  double a_min = 1.0, a_max = 4.0;
  double b_min = 1.0, b_max = 1000.0;
  double c_min = 1.0, c_max = 1.0e4;

  /// Unit-cube coordinates of a point (a taken as given, not rounded).
  Eigen::Vector3d normalize(double a, double b, double c) const;
  /// Maps a unit-cube point to the box; `a_continuous` receives a before rounding.
  HyperPoint denormalize(const Eigen::Vector3d& u, double* a_continuous = nullptr) const;
};

void validate_bounds(const HyperBounds& bounds);

/// Matérn-5/2 ARD kernel k(x, x') = s²(1 + √5 r + 5r²/3) exp(−√5 r),
/// r² = Σ ((x_d − x'_d)/ℓ_d)², plus noise on the diagonal of the training
/// covariance.
struct KernelParams {
  Eigen::VectorXd length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

double matern52(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& k);

/// Exact GP regression with a constant prior mean equal to the sample mean.
struct GpPosterior {
  Eigen::MatrixXd points;  // n × d, one observation per row
  Eigen::VectorXd values;
  KernelParams kernel;
  double prior_mean = 0.0;
  double jitter = 0.0;  // extra diagonal added to reach positive definiteness
  Eigen::LLT<Eigen::MatrixXd> factor;
  Eigen::VectorXd alpha;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

GpPosterior gp_posterior(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const KernelParams& kernel);
GpPrediction query(const GpPosterior& posterior, const Eigen::VectorXd& x);

/// Log marginal likelihood of the observations under `kernel`, or -inf when
/// the covariance cannot be factorized.
double log_marginal_likelihood(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                               const KernelParams& kernel);

/// Kernel hyperparameters maximizing the marginal likelihood, found by a
/// multi-start bounded pattern search in log space. The noise variance never
/// drops below 1e-6 of the sample variance.
KernelParams fit_kernel(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, std::uint64_t seed);

/// Minimization-form expected improvement.
double expected_improvement(double mean, double variance, double best_observed);

struct TuneEvaluation {
  HyperPoint point;
  double a_continuous = 1.0;  // value proposed before rounding
  double rmse = 0.0;          // objective value, penalty if non-finite
  double best_so_far = 0.0;
  double seconds = 0.0;
};

struct TuneTrace {
  std::vector<TuneEvaluation> evaluations;
};

struct TuneResult {
  HyperPoint best;
  double best_rmse = 0.0;
  TuneTrace trace;
};

struct TuneConfig {
  HyperBounds bounds;
  int n_init = 5;
  int n_iter = 25;
  std::uint64_t seed = 0;
  double penalty = 1.0e6;  // recorded for non-finite objective values
  int acquisition_starts = 16;
};

using Objective = std::function<double(const HyperPoint&)>;

/// Bayesian optimization: n_init shifted-Halton points, then n_iter points
/// maximizing expected improvement under a refitted GP.
TuneResult tune(const Objective& objective, const TuneConfig& config);

/// Evaluations sorted by objective, best first, at most `count`.
std::vector<TuneEvaluation> best_evaluations(const TuneTrace& trace, std::size_t count);

}  // namespace pbfgnn
