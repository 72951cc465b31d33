#pragma once

#include "latentswipe/types.hpp"

#include <Eigen/Cholesky>

#include <cstddef>
#include <optional>
#include <vector>

namespace latentswipe {

// Index pair into a PreferenceModel's point list. winner == loser is allowed
// and carries no information (an image compared with itself).
struct Comparison {
  std::size_t winner = 0;
  std::size_t loser = 0;

  bool operator==(const Comparison&) const = default;
};

// Squared-exponential kernel with one lengthscale per input dimension.
struct KernelParams {
  Vector lengthscales;
  double signal_variance = 1.0;

  double operator()(const Vector& x, const Vector& y) const;
};

struct LaplaceOptions {
  double likelihood_noise = 0.1;
  double newton_tol = 1e-6;
  int max_newton_iters = 50;
  double jitter_initial = 1e-6;
  double jitter_max = 1e-2;
  // Re-select the lengthscale by Laplace marginal likelihood every k-th
  // observation; 0 disables it.
  int hyperparameter_refit_every = 0;
};

// Lengthscale of each kernel dimension as a fraction of the box width.
inline constexpr double kLengthscaleBoxFraction = 0.3;

KernelParams kernel_for_box(const Box& box, double signal_variance = 1.0);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Gaussian-process utility model over pairwise comparisons, with probit
// likelihood Phi((f_w - f_l) / (sqrt(2) * noise)) and a Laplace
// approximation around the MAP utilities. A plain value type: copy it to
// branch state.
class PreferenceModel {
 public:
  PreferenceModel() = default;
  PreferenceModel(std::size_t dim, KernelParams kernel, LaplaceOptions options = {});
  static PreferenceModel for_box(const Box& box, LaplaceOptions options = {});

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return comparisons_.empty(); }
  // True when the posterior reflects every stored comparison.
  bool fitted() const { return !stale_; }

  const std::vector<Vector>& points() const { return points_; }
  const std::vector<Comparison>& comparisons() const { return comparisons_; }
  const KernelParams& kernel() const { return kernel_; }
  const LaplaceOptions& options() const { return options_; }
  double jitter() const { return jitter_; }
  const Vector& map_utilities() const { return f_hat_; }
  int newton_iterations() const { return newton_iters_; }

  // Negative Hessian of the log likelihood at the MAP utilities (n x n).
  Matrix laplace_curvature() const;
  // Prior covariance of the stored points, jitter included.
  Matrix gram() const;

  // Appends the comparison, storing each coordinate vector once.
  // Marks the model stale.
  void add_observation(const Vector& a, const Vector& b, bool a_wins);

  // Newton iteration for the MAP utilities followed by the Laplace
  // curvature. Throws NewtonDivergence or IllConditionedKernel.
  void fit();
  // Posterior collapsed to the prior at the current data; used when fit()
  // diverges.
  void fit_prior_fallback();

  // Throws UnfittedModel when comparisons were added since the last fit.
  Posterior posterior(const Vector& query) const;
  // `queries` holds one point per column.
  void posterior_batch(const Matrix& queries, Vector& mean, Vector& variance,
                       bool clamp = true) const;
  // Posterior along the axis-parallel line {base + (t - base[axis]) e_axis}
  // at abscissae `ts`; equivalent to posterior_batch on those points.
  void posterior_line(const Vector& base, std::size_t axis, const Vector& ts, Vector& mean,
                      Vector& variance) const;

  // Laplace approximation of log p(comparisons | hyperparameters).
  double log_marginal_likelihood() const;

  // Argmax of the posterior mean over `box`. Unfitted or empty models and
  // flat posteriors return the box center.
  Vector incumbent(const Box& box) const;

 private:
  std::optional<std::size_t> find_point(const Vector& x) const;
  std::size_t intern(const Vector& x);
  Matrix comparison_matrix() const;
  void factor_kernel();
  void finish_fit(const Vector& a);
  void maybe_refit_hyperparameters();
  // Variance from cross-covariances kstar (n x q), clamped at zero if asked.
  Vector variance_from_cross(const Matrix& kstar, bool clamp) const;

  std::size_t dim_ = 0;
  KernelParams kernel_;
  LaplaceOptions options_;
  Vector base_lengthscales_;
  std::vector<Vector> points_;
  std::vector<Comparison> comparisons_;
  bool stale_ = false;

  double jitter_ = 0.0;
  Matrix gram_;            // K + jitter I
  Vector f_hat_;           // MAP utilities
  Vector alpha_;           // K^{-1} f_hat
  Vector curvature_diag_;  // per-comparison second derivative (D)
  Matrix scaled_c_;        // R = D^{1/2} C, m x n
  Eigen::LLT<Matrix> b_llt_;  // chol(I + R K R^T)
  Matrix variance_reduction_;  // R^T B^{-1} R, n x n
  int newton_iters_ = 0;
};

// Unnormalised log posterior  sum_k log Phi(z_k) - f^T K^{-1} f / 2  and its
// gradient, evaluated at arbitrary utilities f (length n).
double log_posterior(const PreferenceModel& model, const Vector& f);
Vector log_posterior_gradient(const PreferenceModel& model, const Vector& f);

// Numerically stable log of the standard normal CDF, and phi(z)/Phi(z).
double log_normal_cdf(double z);
double normal_hazard_ratio(double z);

}  // namespace latentswipe
