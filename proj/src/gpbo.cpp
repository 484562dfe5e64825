#include "pbfgnn/gpbo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

namespace {

double unit(double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// Maximizes f over a box by compass search: try ± step along every
// coordinate, keep any improvement, halve the step when none helps.
template <class F>
double pattern_search(F&& f, Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                      double step, double min_step, int max_evals) {
  double fx = f(x);
  int evals = 1;
  while (step >= min_step && evals < max_evals) {
    bool improved = false;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd trial = x;
        trial[d] = std::clamp(x[d] + sign * step, lo[d], hi[d]);
        if (trial[d] == x[d]) continue;
        const double ft = f(trial);
        ++evals;
        if (ft > fx) {
          x = std::move(trial);
          fx = ft;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return fx;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& points, const KernelParams& k) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = k.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) K(i, j) = K(j, i) = matern52(points.row(i), points.row(j), k);
  }
  return K;
}

void check_observations(const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
  if (points.rows() < 1) throw InvalidArgument("GP needs at least one observation");
  if (points.rows() != values.size()) throw InvalidArgument("point and value counts differ");
  if (!points.allFinite() || !values.allFinite()) throw InvalidArgument("non-finite GP observation");
}

struct Standardized {
  Eigen::VectorXd values;
  double mean = 0.0;
  double variance = 1.0;
};

Standardized standardize(const Eigen::VectorXd& y) {
  Standardized s;
  s.mean = y.mean();
  const double var = y.size() > 1 ? (y.array() - s.mean).square().sum() / static_cast<double>(y.size()) : 0.0;
  s.variance = var > 0.0 ? var : 1.0;
  s.values = (y.array() - s.mean) / std::sqrt(s.variance);
  return s;
}

}  // namespace

Eigen::Vector3d HyperBounds::normalize(double a, double b, double c) const {
  return {unit(a, a_min, a_max), unit(b, b_min, b_max), unit(c, c_min, c_max)};
}

HyperPoint HyperBounds::denormalize(const Eigen::Vector3d& u, double* a_continuous) const {
  const double a = a_min + std::clamp(u[0], 0.0, 1.0) * (a_max - a_min);
  if (a_continuous) *a_continuous = a;
  HyperPoint p;
  p.a = static_cast<int>(std::clamp(std::round(a), std::ceil(a_min), std::floor(a_max)));
  p.b = b_min + std::clamp(u[1], 0.0, 1.0) * (b_max - b_min);
  p.c = c_min + std::clamp(u[2], 0.0, 1.0) * (c_max - c_min);
  return p;
}

void validate_bounds(const HyperBounds& b) {
  const double v[] = {b.a_min, b.a_max, b.b_min, b.b_max, b.c_min, b.c_max};
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument("non-finite hyperparameter bound");
  if (b.a_min < 1.0 || b.b_min < 1.0 || b.c_min < 1.0) throw InvalidArgument("hyperparameter bounds must be >= 1");
  if (b.a_max < b.a_min || b.b_max < b.b_min || b.c_max < b.c_min)
    throw InvalidArgument("hyperparameter bound max below min");
  if (std::ceil(b.a_min) > std::floor(b.a_max)) throw InvalidArgument("no integer a inside its bounds");
}

double matern52(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& k) {
  const double r = std::sqrt(((x - y).array() / k.length_scales.array()).square().sum());
  const double s5r = std::sqrt(5.0) * r;
  return k.signal_variance * (1.0 + s5r + 5.0 * r * r / 3.0) * std::exp(-s5r);
}

GpPosterior gp_posterior(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const KernelParams& kernel) {
  check_observations(points, values);
  if (kernel.length_scales.size() != points.cols()) throw InvalidArgument("length scale count mismatch");
  if (!(kernel.length_scales.array() > 0.0).all() || !(kernel.signal_variance > 0.0) ||
      !(kernel.noise_variance >= 0.0))
    throw InvalidArgument("kernel parameters must be positive");

  GpPosterior post;
  post.points = points;
  post.values = values;
  post.kernel = kernel;
  post.prior_mean = values.mean();

  Eigen::MatrixXd K = covariance(points, kernel);
  K.diagonal().array() += kernel.noise_variance;
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    post.factor.compute(Kj);
    if (post.factor.info() == Eigen::Success && (post.factor.matrixLLT().diagonal().array() > 0).all())
      break;
    jitter = jitter == 0.0 ? 1e-10 * kernel.signal_variance : jitter * 10.0;
    if (jitter > 1e-2 * kernel.signal_variance)
      throw NumericError("GP covariance not positive definite after jitter escalation");
  }
  post.jitter = jitter;
  post.alpha = post.factor.solve((values.array() - post.prior_mean).matrix());
  return post;
}

GpPrediction query(const GpPosterior& post, const Eigen::VectorXd& x) {
  if (x.size() != post.points.cols()) throw InvalidArgument("query dimension mismatch");
  const Eigen::Index n = post.points.rows();
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks[i] = matern52(post.points.row(i), x, post.kernel);
  GpPrediction p;
  p.mean = post.prior_mean + ks.dot(post.alpha);
  const Eigen::VectorXd v = post.factor.matrixL().solve(ks);
  p.variance = std::max(0.0, post.kernel.signal_variance - v.squaredNorm());
  return p;
}

double log_marginal_likelihood(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                               const KernelParams& kernel) {
  Eigen::MatrixXd K = covariance(points, kernel);
  K.diagonal().array() += kernel.noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd centered = values.array() - values.mean();
  const Eigen::VectorXd alpha = llt.solve(centered);
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if (!(diag.array() > 0).all()) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(values.size());
  const double lml = -0.5 * centered.dot(alpha) - diag.array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(lml) ? lml : -std::numeric_limits<double>::infinity();
}

KernelParams fit_kernel(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, std::uint64_t seed) {
  check_observations(points, values);
  const Standardized s = standardize(values);
  const Eigen::Index d = points.cols();

  // θ = (log ℓ_1..ℓ_d, log s², log σ²) on standardized values.
  Eigen::VectorXd lo(d + 2), hi(d + 2);
  lo.head(d).setConstant(std::log(1e-2));
  hi.head(d).setConstant(std::log(10.0));
  lo[d] = std::log(1e-2);
  hi[d] = std::log(1e2);
  lo[d + 1] = std::log(1e-6);
  hi[d + 1] = std::log(1.0);

  auto unpack = [&](const Eigen::VectorXd& th) {
    KernelParams k;
    k.length_scales = th.head(d).array().exp();
    k.signal_variance = std::exp(th[d]);
    k.noise_variance = std::exp(th[d + 1]);
    return k;
  };
  auto objective = [&](const Eigen::VectorXd& th) { return log_marginal_likelihood(points, s.values, unpack(th)); };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Eigen::VectorXd best_theta(d + 2);
  double best = -std::numeric_limits<double>::infinity();
  constexpr int kStarts = 5;
  for (int start = 0; start < kStarts; ++start) {
    Eigen::VectorXd th(d + 2);
    if (start == 0) {
      th.head(d).setConstant(std::log(0.3));
      th[d] = 0.0;
      th[d + 1] = std::log(1e-3);
    } else {
      for (Eigen::Index i = 0; i < th.size(); ++i) th[i] = lo[i] + u01(rng) * (hi[i] - lo[i]);
    }
    const double v = pattern_search(objective, th, lo, hi, 1.0, 1e-3, 400);
    if (v > best || start == 0) {
      best = v;
      best_theta = th;
    }
  }
  KernelParams k = unpack(best_theta);
  k.signal_variance *= s.variance;
  k.noise_variance *= s.variance;
  return k;
}

double expected_improvement(double mean, double variance, double best_observed) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double gain = best_observed - mean;
  if (!(sigma > 0.0)) return std::max(gain, 0.0);
  const double u = gain / sigma;
  const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-u / std::sqrt(2.0));
  return gain * cdf + sigma * pdf;
}

TuneResult tune(const Objective& objective, const TuneConfig& config) {
  validate_bounds(config.bounds);
  if (config.n_init < 2) throw InvalidArgument("n_init must be >= 2");
  if (config.n_iter < 1) throw InvalidArgument("n_iter must be >= 1");
  if (!objective) throw InvalidArgument("no objective");
  const HyperBounds& bounds = config.bounds;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Eigen::Vector3d shift(u01(rng), u01(rng), u01(rng));

  TuneResult result;
  std::vector<Eigen::Vector3d> observed;
  double best = std::numeric_limits<double>::infinity();

  auto evaluate = [&](const Eigen::Vector3d& u) {
    TuneEvaluation e;
    e.point = bounds.denormalize(u, &e.a_continuous);
    const auto t0 = std::chrono::steady_clock::now();
    const double v = objective(e.point);
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    e.rmse = std::isfinite(v) ? v : config.penalty;
    if (e.rmse < best || result.trace.evaluations.empty()) {
      best = e.rmse;
      result.best = e.point;
      result.best_rmse = e.rmse;
    }
    e.best_so_far = best;
    observed.push_back(bounds.normalize(e.point.a, e.point.b, e.point.c));
    result.trace.evaluations.push_back(e);
  };

  for (int i = 0; i < config.n_init; ++i) {
    Eigen::Vector3d u;
    const std::uint64_t bases[] = {2, 3, 5};
    for (int d = 0; d < 3; ++d) u[d] = std::fmod(radical_inverse(static_cast<std::uint64_t>(i + 1), bases[d]) + shift[d], 1.0);
    evaluate(u);
  }

  for (int it = 0; it < config.n_iter; ++it) {
    const auto n = static_cast<Eigen::Index>(observed.size());
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    // Penalized points enter the surrogate at the worst finite value so a
    // single failure does not flatten the rest of the landscape.
    double worst_finite = -std::numeric_limits<double>::infinity();
    for (const auto& e : result.trace.evaluations)
      if (e.rmse != config.penalty) worst_finite = std::max(worst_finite, e.rmse);
    for (Eigen::Index i = 0; i < n; ++i) {
      X.row(i) = observed[static_cast<std::size_t>(i)].transpose();
      const double v = result.trace.evaluations[static_cast<std::size_t>(i)].rmse;
      y[i] = (v == config.penalty && std::isfinite(worst_finite)) ? worst_finite : v;
    }
    const KernelParams kernel = fit_kernel(X, y, config.seed + 1000003ULL * static_cast<std::uint64_t>(it + 1));
    const GpPosterior post = gp_posterior(X, y, kernel);
    const double y_best = y.minCoeff();

    auto snap = [&](const Eigen::VectorXd& u) {
      const HyperPoint p = bounds.denormalize(u);
      return Eigen::VectorXd(bounds.normalize(p.a, p.b, p.c));
    };
    auto acquisition = [&](const Eigen::VectorXd& u) {
      const GpPrediction g = query(post, snap(u));
      return expected_improvement(g.mean, g.variance, y_best);
    };

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return y[a] < y[b]; });

    const Eigen::VectorXd lo = Eigen::VectorXd::Zero(3), hi = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd best_u = Eigen::VectorXd::Zero(3);
    double best_ei = -1.0;
    Eigen::VectorXd first_random;
    const int starts = std::max(config.acquisition_starts, 4);
    for (int s = 0; s < starts; ++s) {
      Eigen::VectorXd u(3);
      if (s < 3 && s < n) {
        u = X.row(order[static_cast<std::size_t>(s)]).transpose();
      } else {
        for (int d = 0; d < 3; ++d) u[d] = u01(rng);
        if (first_random.size() == 0) first_random = u;
      }
      const double v = pattern_search(acquisition, u, lo, hi, 0.25, 1e-4, 600);
      if (v > best_ei) {
        best_ei = v;
        best_u = u;
      }
    }
    if (!(best_ei > 0.0) && first_random.size() == 3) best_u = first_random;
    evaluate(best_u);
  }
  return result;
}

std::vector<TuneEvaluation> best_evaluations(const TuneTrace& trace, std::size_t count) {
  std::vector<TuneEvaluation> out = trace.evaluations;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.rmse < b.rmse; });
  if (out.size() > count) out.resize(count);
  return out;
}

}  // namespace pbfgnn
