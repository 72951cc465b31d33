#include "latentswipe/prefgp.hpp"

#include "latentswipe/errors.hpp"
#include "latentswipe/maximize1d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace latentswipe {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

// Lengthscale multipliers tried by the optional marginal-likelihood refit.
constexpr std::array<double, 7> kLengthscaleFactors = {0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0};

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

struct LikelihoodTerms {
  Vector z;          // (f_w - f_l) / s, per comparison
  Vector hazard;     // phi(z) / Phi(z)
  Vector curvature;  // -(d^2/dz^2 log Phi(z)) / s^2 >= 0
  double log_lik = 0.0;
};

LikelihoodTerms likelihood_terms(const Matrix& c, const Vector& f, double s) {
  LikelihoodTerms t;
  t.z = (c * f) / s;
  const auto m = t.z.size();
  t.hazard.resize(m);
  t.curvature.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double z = t.z[k];
    const double r = normal_hazard_ratio(z);
    t.hazard[k] = r;
    t.curvature[k] = std::max(r * (r + z), 0.0) / (s * s);
    t.log_lik += log_normal_cdf(z);
  }
  return t;
}

}  // namespace

double log_normal_cdf(double z) {
  if (z > -35.0) return std::log(0.5 * std::erfc(-z / kSqrt2));
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - kLogSqrt2Pi + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double normal_hazard_ratio(double z) {
  if (z > -35.0) {
    const double pdf = std::exp(-0.5 * z * z - kLogSqrt2Pi);
    return pdf / (0.5 * std::erfc(-z / kSqrt2));
  }
  const double z2 = z * z;
  return -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2));
}

double KernelParams::operator()(const Vector& x, const Vector& y) const {
  double d2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = (x[i] - y[i]) / lengthscales[i];
    d2 += u * u;
  }
  return signal_variance * std::exp(-0.5 * d2);
}

KernelParams kernel_for_box(const Box& box, double signal_variance) {
  KernelParams k;
  k.signal_variance = signal_variance;
  k.lengthscales.resize(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double l = kLengthscaleBoxFraction * box[i].width();
    // Frozen (zero-width) dimensions never vary; any positive value works.
    k.lengthscales[static_cast<Eigen::Index>(i)] = l > 0.0 ? l : 1.0;
  }
  return k;
}

PreferenceModel::PreferenceModel(std::size_t dim, KernelParams kernel, LaplaceOptions options)
    : dim_(dim), kernel_(std::move(kernel)), options_(options), base_lengthscales_(kernel_.lengthscales) {
  if (dim_ < 1) throw DimensionMismatch("preference model needs dim >= 1");
  if (static_cast<std::size_t>(kernel_.lengthscales.size()) != dim_)
    throw DimensionMismatch("kernel lengthscales do not match model dimension");
  if (!(kernel_.signal_variance > 0.0) || !(kernel_.lengthscales.array() > 0.0).all())
    throw Error("kernel hyperparameters must be positive");
  if (!(options_.likelihood_noise > 0.0)) throw Error("likelihood noise must be positive");
  f_hat_.resize(0);
  alpha_.resize(0);
}

PreferenceModel PreferenceModel::for_box(const Box& box, LaplaceOptions options) {
  return PreferenceModel(box.size(), kernel_for_box(box), options);
}

std::optional<std::size_t> PreferenceModel::find_point(const Vector& x) const {
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (points_[i] == x) return i;
  return std::nullopt;
}

std::size_t PreferenceModel::intern(const Vector& x) {
  if (auto idx = find_point(x)) return *idx;
  points_.push_back(x);
  return points_.size() - 1;
}

void PreferenceModel::add_observation(const Vector& a, const Vector& b, bool a_wins) {
  if (static_cast<std::size_t>(a.size()) != dim_ || static_cast<std::size_t>(b.size()) != dim_)
    throw DimensionMismatch("add_observation: coordinate length does not match model dimension " +
                            std::to_string(dim_));
  if (!a.allFinite() || !b.allFinite()) throw DimensionMismatch("add_observation: non-finite coordinates");
  const std::size_t ia = intern(a);
  const std::size_t ib = intern(b);
  comparisons_.push_back(a_wins ? Comparison{ia, ib} : Comparison{ib, ia});
  stale_ = true;
}

Matrix PreferenceModel::comparison_matrix() const {
  const auto m = static_cast<Eigen::Index>(comparisons_.size());
  const auto n = static_cast<Eigen::Index>(points_.size());
  Matrix c = Matrix::Zero(m, n);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& cmp = comparisons_[static_cast<std::size_t>(k)];
    c(k, static_cast<Eigen::Index>(cmp.winner)) += 1.0;
    c(k, static_cast<Eigen::Index>(cmp.loser)) -= 1.0;
  }
  return c;
}

Matrix PreferenceModel::gram() const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = kernel_(points_[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(j)]);
      k(j, i) = k(i, j);
    }
  }
  k.diagonal().array() += jitter_;
  return k;
}

void PreferenceModel::factor_kernel() {
  jitter_ = 0.0;
  const Matrix base = gram();
  const auto n = base.rows();
  for (double j = options_.jitter_initial; j <= options_.jitter_max * (1.0 + 1e-12); j *= 10.0) {
    Matrix k = base;
    k.diagonal().array() += j;
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() == Eigen::Success && (n == 0 || llt.matrixLLT().diagonal().minCoeff() > 1e-150)) {
      jitter_ = j;
      gram_ = std::move(k);
      return;
    }
  }
  throw IllConditionedKernel("kernel matrix not positive definite with jitter up to " +
                             std::to_string(options_.jitter_max));
}

void PreferenceModel::fit() {
  if (options_.hyperparameter_refit_every > 0 && !comparisons_.empty() &&
      comparisons_.size() % static_cast<std::size_t>(options_.hyperparameter_refit_every) == 0) {
    maybe_refit_hyperparameters();
    return;
  }

  factor_kernel();
  const auto n = static_cast<Eigen::Index>(points_.size());
  if (comparisons_.empty()) {
    finish_fit(Vector::Zero(n));
    newton_iters_ = 0;
    return;
  }

  const Matrix c = comparison_matrix();
  const double s = kSqrt2 * options_.likelihood_noise;
  const auto m = c.rows();

  Vector a = Vector::Zero(n);
  Vector f = Vector::Zero(n);
  LikelihoodTerms terms = likelihood_terms(c, f, s);
  auto objective = [&](const LikelihoodTerms& t, const Vector& av, const Vector& fv) {
    return t.log_lik - 0.5 * av.dot(fv);
  };
  double psi = objective(terms, a, f);
  double grad_norm = (c.transpose() * terms.hazard / s - a).cwiseAbs().maxCoeff();

  int growth = 0;
  int iter = 0;
  for (; iter < options_.max_newton_iters && grad_norm >= options_.newton_tol; ++iter) {
    const Vector sqrt_d = terms.curvature.cwiseSqrt();
    const Matrix r = sqrt_d.asDiagonal() * c;
    const Vector g = c.transpose() * terms.hazard / s;
    const Vector b = c.transpose() * (terms.curvature.cwiseProduct(c * f)) + g;
    Matrix bmat = Matrix::Identity(m, m) + r * gram_ * r.transpose();
    Eigen::LLT<Matrix> llt(bmat);
    if (llt.info() != Eigen::Success) throw NewtonDivergence("Newton system not positive definite");
    const Vector a_newton = b - r.transpose() * llt.solve(r * (gram_ * b));
    const Vector step = a_newton - a;

    double t = 1.0;
    Vector a_try, f_try;
    LikelihoodTerms terms_try;
    double psi_try = psi;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      a_try = a + t * step;
      f_try = gram_ * a_try;
      terms_try = likelihood_terms(c, f_try, s);
      psi_try = objective(terms_try, a_try, f_try);
      if (psi_try >= psi - 1e-12 * (1.0 + std::abs(psi))) break;
    }
    a = std::move(a_try);
    f = std::move(f_try);
    terms = std::move(terms_try);
    psi = psi_try;
    const double new_norm = (c.transpose() * terms.hazard / s - a).cwiseAbs().maxCoeff();
    if (!std::isfinite(new_norm)) throw NewtonDivergence("non-finite gradient during Newton iteration");
    growth = new_norm > grad_norm ? growth + 1 : 0;
    if (growth >= 3) throw NewtonDivergence("log-posterior gradient grew for 3 consecutive iterations");
    grad_norm = new_norm;
  }
  newton_iters_ = iter;
  finish_fit(a);
}

void PreferenceModel::finish_fit(const Vector& a) {
  alpha_ = a;
  f_hat_ = gram_ * a;
  const auto m = static_cast<Eigen::Index>(comparisons_.size());
  if (m == 0) {
    curvature_diag_.resize(0);
    scaled_c_.resize(0, static_cast<Eigen::Index>(points_.size()));
    b_llt_ = Eigen::LLT<Matrix>();
    variance_reduction_.resize(0, 0);
  } else {
    const Matrix c = comparison_matrix();
    const double s = kSqrt2 * options_.likelihood_noise;
    const LikelihoodTerms terms = likelihood_terms(c, f_hat_, s);
    curvature_diag_ = terms.curvature;
    scaled_c_ = curvature_diag_.cwiseSqrt().asDiagonal() * c;
    b_llt_.compute(Matrix::Identity(m, m) + scaled_c_ * gram_ * scaled_c_.transpose());
    Matrix half = scaled_c_;
    b_llt_.matrixL().solveInPlace(half);
    variance_reduction_ = half.transpose() * half;
  }
  stale_ = false;
}

void PreferenceModel::fit_prior_fallback() {
  factor_kernel();
  finish_fit(Vector::Zero(static_cast<Eigen::Index>(points_.size())));
  newton_iters_ = 0;
}

void PreferenceModel::maybe_refit_hyperparameters() {
  const LaplaceOptions saved = options_;
  options_.hyperparameter_refit_every = 0;
  std::optional<PreferenceModel> best;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (double factor : kLengthscaleFactors) {
    PreferenceModel candidate = *this;
    candidate.kernel_.lengthscales = base_lengthscales_ * factor;
    try {
      candidate.fit();
    } catch (const Error&) {
      continue;
    }
    const double lml = candidate.log_marginal_likelihood();
    if (lml > best_lml) {
      best_lml = lml;
      best = std::move(candidate);
    }
  }
  if (!best) throw NewtonDivergence("no lengthscale candidate could be fitted");
  *this = std::move(*best);
  options_ = saved;
}

Matrix PreferenceModel::laplace_curvature() const {
  if (comparisons_.empty() || stale_)
    return Matrix::Zero(static_cast<Eigen::Index>(points_.size()), static_cast<Eigen::Index>(points_.size()));
  return scaled_c_.transpose() * scaled_c_;
}

Vector PreferenceModel::variance_from_cross(const Matrix& kstar, bool clamp) const {
  // var = sf^2 - k*^T R^T B^{-1} R k*, with the middle factor precomputed.
  const Matrix reduced = variance_reduction_ * kstar;
  Vector variance = Vector::Constant(kstar.cols(), kernel_.signal_variance) -
                    kstar.cwiseProduct(reduced).colwise().sum().transpose();
  if (clamp) variance = variance.cwiseMax(0.0);
  return variance;
}

void PreferenceModel::posterior_batch(const Matrix& queries, Vector& mean, Vector& variance,
                                      bool clamp) const {
  if (static_cast<std::size_t>(queries.rows()) != dim_)
    throw DimensionMismatch("posterior: query length does not match model dimension");
  if (stale_) throw UnfittedModel("posterior requested on a model with unfitted comparisons");
  const auto q = queries.cols();
  if (comparisons_.empty()) {
    mean = Vector::Zero(q);
    variance = Vector::Constant(q, kernel_.signal_variance);
    return;
  }
  const auto n = static_cast<Eigen::Index>(points_.size());
  const auto d = static_cast<Eigen::Index>(dim_);
  Matrix kstar(n, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector& p = points_[static_cast<std::size_t>(i)];
      double d2 = 0.0;
      for (Eigen::Index l = 0; l < d; ++l) {
        const double u = (p[l] - queries(l, j)) / kernel_.lengthscales[l];
        d2 += u * u;
      }
      kstar(i, j) = -0.5 * d2;
    }
  }
  kstar = kernel_.signal_variance * kstar.array().exp();
  mean = kstar.transpose() * alpha_;
  variance = variance_from_cross(kstar, clamp);
}

void PreferenceModel::posterior_line(const Vector& base, std::size_t axis, const Vector& ts, Vector& mean,
                                     Vector& variance) const {
  if (static_cast<std::size_t>(base.size()) != dim_ || axis >= dim_)
    throw DimensionMismatch("posterior_line: base/axis do not match model dimension");
  if (stale_) throw UnfittedModel("posterior requested on a model with unfitted comparisons");
  const auto q = ts.size();
  if (comparisons_.empty()) {
    mean = Vector::Zero(q);
    variance = Vector::Constant(q, kernel_.signal_variance);
    return;
  }
  const auto n = static_cast<Eigen::Index>(points_.size());
  const auto ax = static_cast<Eigen::Index>(axis);
  const double ell = kernel_.lengthscales[ax];
  // Off-axis part of the squared distance is shared by every t.
  Vector off(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& p = points_[static_cast<std::size_t>(i)];
    double d2 = 0.0;
    for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(dim_); ++l) {
      if (l == ax) continue;
      const double u = (p[l] - base[l]) / kernel_.lengthscales[l];
      d2 += u * u;
    }
    off[i] = d2;
  }
  Matrix kstar(n, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (points_[static_cast<std::size_t>(i)][ax] - ts[j]) / ell;
      kstar(i, j) = -0.5 * (off[i] + u * u);
    }
  }
  kstar = kernel_.signal_variance * kstar.array().exp();
  mean = kstar.transpose() * alpha_;
  variance = variance_from_cross(kstar, true);
}

Posterior PreferenceModel::posterior(const Vector& query) const {
  Vector mean, variance;
  posterior_batch(query, mean, variance);
  return {mean[0], variance[0]};
}

double PreferenceModel::log_marginal_likelihood() const {
  if (stale_) throw UnfittedModel("log_marginal_likelihood on unfitted model");
  if (comparisons_.empty()) return 0.0;
  const double s = kSqrt2 * options_.likelihood_noise;
  const LikelihoodTerms terms = likelihood_terms(comparison_matrix(), f_hat_, s);
  const double log_det_b = 2.0 * b_llt_.matrixLLT().diagonal().array().log().sum();
  return terms.log_lik - 0.5 * alpha_.dot(f_hat_) - 0.5 * log_det_b;
}

Vector PreferenceModel::incumbent(const Box& box) const {
  if (box.size() != dim_) throw DimensionMismatch("incumbent: box does not match model dimension");
  const Vector center = box_center(box);
  if (stale_ || comparisons_.empty() || alpha_.size() == 0 || alpha_.cwiseAbs().maxCoeff() <= 1e-12)
    return center;

  auto mean_at = [this](const Matrix& pts) {
    Vector mean, var;
    posterior_batch(pts, mean, var);
    return mean;
  };

  // Coordinate ascent from each start; a coordinate moves only on strict
  // improvement of the posterior mean.
  auto ascend = [&](Vector x) {
    double value = mean_at(x)[0];
    const int sweeps = dim_ == 1 ? 1 : 3;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (std::size_t j = 0; j < dim_; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        auto slice = [&](const Vector& xs) {
          Vector mean, var;
          posterior_line(x, j, xs, mean, var);
          return mean;
        };
        const Maximum1d best = grid_golden_maximize(slice, box[j]);
        if (best.value > value) {
          x[jj] = best.x;
          value = best.value;
        }
      }
    }
    return std::pair{x, value};
  };

  std::vector<Vector> starts;
  if (dim_ == 1) {
    Vector low(1);
    low[0] = box[0].low;
    starts.push_back(low);
  } else {
    starts.push_back(center);
    for (const auto& p : points_) {
      Vector s = p;
      for (std::size_t j = 0; j < dim_; ++j)
        s[static_cast<Eigen::Index>(j)] = std::clamp(s[static_cast<Eigen::Index>(j)], box[j].low, box[j].high);
      starts.push_back(std::move(s));
    }
  }

  Vector best_x = center;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    auto [x, value] = ascend(s);
    if (value > best_value || (value == best_value && lex_less(x, best_x))) {
      best_x = std::move(x);
      best_value = value;
    }
  }
  return best_x;
}

double log_posterior(const PreferenceModel& model, const Vector& f) {
  const Matrix k = model.gram();
  const auto n = k.rows();
  if (f.size() != n) throw DimensionMismatch("log_posterior: utility vector length mismatch");
  double value = 0.0;
  const double s = kSqrt2 * model.options().likelihood_noise;
  for (const auto& c : model.comparisons())
    value += log_normal_cdf((f[static_cast<Eigen::Index>(c.winner)] - f[static_cast<Eigen::Index>(c.loser)]) / s);
  if (n > 0) value -= 0.5 * f.dot(Eigen::LLT<Matrix>(k).solve(f));
  return value;
}

Vector log_posterior_gradient(const PreferenceModel& model, const Vector& f) {
  const Matrix k = model.gram();
  const auto n = k.rows();
  if (f.size() != n) throw DimensionMismatch("log_posterior_gradient: utility vector length mismatch");
  const double s = kSqrt2 * model.options().likelihood_noise;
  Vector grad = Vector::Zero(n);
  for (const auto& c : model.comparisons()) {
    const auto w = static_cast<Eigen::Index>(c.winner);
    const auto l = static_cast<Eigen::Index>(c.loser);
    const double r = normal_hazard_ratio((f[w] - f[l]) / s) / s;
    grad[w] += r;
    grad[l] -= r;
  }
  if (n > 0) grad -= Eigen::LLT<Matrix>(k).solve(f);
  return grad;
}

}  // namespace latentswipe
