#include "latentswipe/errors.hpp"
#include "latentswipe/prefgp.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace latentswipe;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

oracle::PreferenceProblem problem_of(const PreferenceModel& m) {
  oracle::PreferenceProblem p;
  for (const auto& x : m.points()) p.points.emplace_back(x.data(), x.data() + x.size());
  for (const auto& c : m.comparisons()) p.comparisons.emplace_back(static_cast<int>(c.winner), static_cast<int>(c.loser));
  p.lengthscales.assign(m.kernel().lengthscales.data(), m.kernel().lengthscales.data() + m.kernel().lengthscales.size());
  p.signal_variance = m.kernel().signal_variance;
  p.noise = m.options().likelihood_noise;
  p.jitter = m.jitter();
  return p;
}

double determinant(oracle::Mat a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  return det;
}

// Random model: n points in `dim` dimensions inside [-2, 2], m comparisons.
PreferenceModel random_model(std::uint64_t& state, std::size_t dim, std::size_t n, std::size_t m) {
  Box box(dim, Interval{-2.0, 2.0});
  PreferenceModel model = PreferenceModel::for_box(box);
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(static_cast<Eigen::Index>(dim));
    for (auto& v : x) v = oracle::uniform(state, -2.0, 2.0);
    pts.push_back(x);
  }
  for (std::size_t k = 0; k < m; ++k) {
    auto a = static_cast<std::size_t>(oracle::uniform(state, 0.0, static_cast<double>(n)));
    auto b = static_cast<std::size_t>(oracle::uniform(state, 0.0, static_cast<double>(n)));
    if (a == b) b = (a + 1) % n;
    model.add_observation(pts[a], pts[b], oracle::uniform(state, 0.0, 1.0) < 0.5);
  }
  return model;
}

}  // namespace

TEST_CASE("add_observation bookkeeping") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(1.0), v1(-1.0), true);
  CHECK(m.size() == 2);
  CHECK(m.comparisons().size() == 1);
  CHECK_FALSE(m.fitted());
  m.add_observation(v1(-1.0), v1(1.0), true);
  CHECK(m.size() == 2);
  CHECK(m.comparisons().size() == 2);
  CHECK_THROWS_AS(m.add_observation(Vector::Zero(2), v1(0.0), true), DimensionMismatch);
}

TEST_CASE("identical points: one stored point, finite MAP, flat likelihood gradient") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(0.5), v1(0.5), true);
  CHECK(m.size() == 1);
  CHECK(m.comparisons().size() == 1);
  m.fit();
  CHECK(m.map_utilities().allFinite());
  // Only the prior term depends on f: gradient = -K^{-1} f for any f.
  for (double f : {-1.0, 0.0, 0.7}) {
    const Vector g = log_posterior_gradient(m, v1(f));
    CHECK(g[0] == doctest::Approx(-f / m.gram()(0, 0)).epsilon(1e-9));
  }
}

TEST_CASE("zero comparisons: posterior is the prior") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}, Interval{-1, 1}});
  m.fit();
  const Posterior p = m.posterior(Eigen::Vector2d(0.3, -0.2));
  CHECK(p.mean == 0.0);
  CHECK(p.variance == doctest::Approx(1.0));
}

TEST_CASE("one comparison orders the MAP utilities") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(1.0), v1(-1.0), true);
  m.fit();
  CHECK(m.map_utilities()[0] > m.map_utilities()[1]);
}

TEST_CASE("chain of four: strictly decreasing and matches grid MAP") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(-1.5), v1(-0.5), true);
  m.add_observation(v1(-0.5), v1(0.5), true);
  m.add_observation(v1(0.5), v1(1.5), true);
  m.fit();
  const Vector& f = m.map_utilities();
  for (int i = 0; i < 3; ++i) CHECK(f[i] > f[i + 1]);
  const auto grid = oracle::grid_map(problem_of(m));
  for (int i = 0; i < 4; ++i) CHECK(std::abs(f[i] - grid[static_cast<std::size_t>(i)]) < 0.05);
}

TEST_CASE("stationarity after fit") {
  std::uint64_t state = 77;
  for (int k = 0; k < 20; ++k) {
    PreferenceModel m = random_model(state, 2, 6, 8);
    m.fit();
    CHECK(log_posterior_gradient(m, m.map_utilities()).cwiseAbs().maxCoeff() < m.options().newton_tol);
    CHECK(m.map_utilities().allFinite());
  }
}

TEST_CASE("gradient matches central finite differences") {
  std::uint64_t state = 101;
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(oracle::uniform(state, 0, 7));
    PreferenceModel m = random_model(state, 1 + k % 3, n, n + 2);
    m.fit();
    Vector f(static_cast<Eigen::Index>(m.size()));
    for (auto& v : f) v = oracle::uniform(state, -1.5, 1.5);
    const Vector g = log_posterior_gradient(m, f);
    Vector fd(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      Vector hi = f, lo = f;
      hi[i] += 1e-5;
      lo[i] -= 1e-5;
      fd[i] = (log_posterior(m, hi) - log_posterior(m, lo)) / 2e-5;
    }
    CHECK((fd - g).norm() / std::max(g.norm(), 1e-8) < 1e-4);
  }
}

TEST_CASE("log posterior agrees with the written-out formula") {
  std::uint64_t state = 5;
  PreferenceModel m = random_model(state, 2, 5, 6);
  m.fit();
  const auto p = problem_of(m);
  const auto kinv = oracle::inverse(oracle::gram(p));
  Vector f(static_cast<Eigen::Index>(m.size()));
  for (auto& v : f) v = oracle::uniform(state, -1, 1);
  CHECK(log_posterior(m, f) == doctest::Approx(oracle::log_posterior(p, kinv, {f.data(), f.data() + f.size()})).epsilon(1e-9));
}

TEST_CASE("Laplace MAP matches dense-grid MAP for n <= 4") {
  std::uint64_t state = 2024;
  for (int k = 0; k < 6; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 3);
    PreferenceModel m = random_model(state, 1, n, n);
    m.fit();
    if (m.size() > 4) continue;
    const auto grid = oracle::grid_map(problem_of(m));
    for (std::size_t i = 0; i < m.size(); ++i)
      CHECK(std::abs(m.map_utilities()[static_cast<Eigen::Index>(i)] - grid[i]) < 0.05);
  }
}

TEST_CASE("far query reverts to the prior") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(1.0), v1(-1.0), true);
  m.fit();
  const double ell = m.kernel().lengthscales[0];
  const Posterior p = m.posterior(v1(1.0 + 10.0 * ell));
  CHECK(std::abs(p.mean) < 1e-6);
  CHECK(std::abs(p.variance - 1.0) < 1e-6);
}

TEST_CASE("universal winner has higher mean than universal loser") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(0.2), v1(-1.0), true);
  m.add_observation(v1(0.2), v1(1.3), true);
  m.add_observation(v1(-1.0), v1(1.3), true);
  m.fit();
  CHECK(m.posterior(v1(0.2)).mean > m.posterior(v1(1.3)).mean);
  // Same ordering from the grid MAP pushed through the predictive mean.
  const auto grid = oracle::grid_map(problem_of(m));
  CHECK(grid[0] > grid[2]);
}

TEST_CASE("posterior matches an independent Laplace computation") {
  std::uint64_t state = 909;
  PreferenceModel m = random_model(state, 2, 5, 7);
  m.fit();
  const auto p = problem_of(m);
  const auto k = oracle::gram(p);
  const auto kinv = oracle::inverse(k);
  const std::size_t n = m.size();
  // W from the probit second derivatives at the MAP.
  const double s = std::sqrt(2.0) * p.noise;
  oracle::Mat w(n, oracle::Vec(n, 0.0));
  for (auto [a, b] : p.comparisons) {
    const double z = (m.map_utilities()[a] - m.map_utilities()[b]) / s;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    const double h = pdf / cdf;
    const double d = h * (z + h) / (s * s);
    w[a][a] += d;
    w[b][b] += d;
    w[a][b] -= d;
    w[b][a] -= d;
  }
  const Matrix curvature = m.laplace_curvature();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      CHECK(curvature(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == doctest::Approx(w[i][j]).epsilon(1e-6));

  oracle::Mat prec = kinv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) prec[i][j] += w[i][j];
  const auto sigma = oracle::inverse(prec);
  for (int q = 0; q < 10; ++q) {
    oracle::Vec x{oracle::uniform(state, -2, 2), oracle::uniform(state, -2, 2)};
    oracle::Vec ks(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (int l = 0; l < 2; ++l) d2 += std::pow((p.points[i][static_cast<std::size_t>(l)] - x[static_cast<std::size_t>(l)]) / p.lengthscales[static_cast<std::size_t>(l)], 2);
      ks[i] = std::exp(-0.5 * d2);
    }
    oracle::Vec a(n, 0.0);  // K^{-1} k*
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i] += kinv[i][j] * ks[j];
    double mean = 0.0, quad = 0.0, corr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) mean += ks[i] * kinv[i][j] * m.map_utilities()[static_cast<Eigen::Index>(j)];
      quad += ks[i] * a[i];
      for (std::size_t j = 0; j < n; ++j) corr += a[i] * sigma[i][j] * a[j];
    }
    const Posterior post = m.posterior(Eigen::Vector2d(x[0], x[1]));
    CHECK(post.mean == doctest::Approx(mean).epsilon(1e-6));
    CHECK(post.variance == doctest::Approx(std::max(0.0, 1.0 - quad + corr)).epsilon(1e-6));
  }
}

TEST_CASE("log marginal likelihood matches the Laplace formula") {
  std::uint64_t state = 31;
  PreferenceModel m = random_model(state, 1, 4, 4);
  m.fit();
  const auto p = problem_of(m);
  const auto k = oracle::gram(p);
  const auto kinv = oracle::inverse(k);
  const std::size_t n = m.size();
  const oracle::Vec f(m.map_utilities().data(), m.map_utilities().data() + n);
  const Matrix w = m.laplace_curvature();
  oracle::Mat b(n, oracle::Vec(n, 0.0));  // I + W K
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      b[i][j] = (i == j ? 1.0 : 0.0);
      for (std::size_t l = 0; l < n; ++l) b[i][j] += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) * k[l][j];
    }
  const double expected = oracle::log_posterior(p, kinv, f) - 0.5 * std::log(determinant(b));
  CHECK(m.log_marginal_likelihood() == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("variance is non-negative, and unclamped at most slightly negative") {
  std::uint64_t state = 4242;
  for (int k = 0; k < 10; ++k) {
    PreferenceModel m = random_model(state, 2, 8, 12);
    m.fit();
    Matrix q(2, 200);
    for (Eigen::Index j = 0; j < 200; ++j) {
      // The first queries sit on training points, where variance is smallest.
      q.col(j) = j < static_cast<Eigen::Index>(m.size()) ? m.points()[static_cast<std::size_t>(j)]
                       : Vector(Eigen::Vector2d(oracle::uniform(state, -2, 2), oracle::uniform(state, -2, 2)));
    }
    Vector mean, var, raw;
    m.posterior_batch(q, mean, var, true);
    m.posterior_batch(q, mean, raw, false);
    CHECK(var.minCoeff() >= 0.0);
    CHECK(raw.minCoeff() >= -1e-8);
  }
}

TEST_CASE("translation consistency") {
  std::uint64_t state = 606;
  Box box(2, Interval{-2.0, 2.0});
  const Vector shift = Eigen::Vector2d(3.7, -1.2);
  PreferenceModel a = PreferenceModel::for_box(box), b = PreferenceModel::for_box(box);
  for (int k = 0; k < 6; ++k) {
    Vector x = Eigen::Vector2d(oracle::uniform(state, -2, 2), oracle::uniform(state, -2, 2));
    Vector y = Eigen::Vector2d(oracle::uniform(state, -2, 2), oracle::uniform(state, -2, 2));
    const bool won = k % 2 == 0;
    a.add_observation(x, y, won);
    b.add_observation(x + shift, y + shift, won);
  }
  a.fit();
  b.fit();
  for (int k = 0; k < 20; ++k) {
    Vector q = Eigen::Vector2d(oracle::uniform(state, -2, 2), oracle::uniform(state, -2, 2));
    const Posterior pa = a.posterior(q), pb = b.posterior(q + shift);
    CHECK(std::abs(pa.mean - pb.mean) < 1e-8);
    CHECK(std::abs(pa.variance - pb.variance) < 1e-8);
  }
}

TEST_CASE("winner dominance on random single-comparison models") {
  std::uint64_t state = 8080;
  int violations = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t dim = 1 + static_cast<std::size_t>(k % 4);
    PreferenceModel m = random_model(state, dim, 2, 1);
    m.fit();
    const auto& c = m.comparisons()[0];
    if (!(m.posterior(m.points()[c.winner]).mean > m.posterior(m.points()[c.loser]).mean)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("posterior on a stale model throws") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(1.0), v1(0.0), true);
  CHECK_THROWS_AS(m.posterior(v1(0.0)), UnfittedModel);
  m.fit();
  CHECK_THROWS_AS(m.posterior(Vector::Zero(2)), DimensionMismatch);
}

TEST_CASE("prior fallback keeps the data but reports the prior") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(1.0), v1(0.0), true);
  m.fit_prior_fallback();
  CHECK(m.fitted());
  CHECK(m.comparisons().size() == 1);
  CHECK(m.posterior(v1(1.0)).mean == 0.0);
}

TEST_CASE("incumbent examples") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  CHECK(m.incumbent({Interval{-2, 2}})[0] == 0.0);

  m.add_observation(v1(1.0), v1(-1.0), true);
  m.fit();
  const double inc = m.incumbent({Interval{-2, 2}})[0];
  CHECK(std::abs(inc - 1.0) < std::abs(inc + 1.0));
  // Grid oracle at 1e-3 on the posterior mean.
  double best_x = -2.0, best = -1e300;
  for (int i = 0; i <= 4000; ++i) {
    const double x = -2.0 + 1e-3 * i;
    const double mu = m.posterior(v1(x)).mean;
    if (mu > best) {
      best = mu;
      best_x = x;
    }
  }
  CHECK(std::abs(inc - best_x) < 2e-3);
  CHECK(m.posterior(v1(inc)).mean >= best - 1e-9);

  PreferenceModel sym = PreferenceModel::for_box({Interval{-2, 2}});
  sym.add_observation(v1(1.0), v1(-1.0), true);
  sym.add_observation(v1(-1.0), v1(1.0), true);
  sym.fit();
  CHECK(std::abs(sym.incumbent({Interval{-2, 2}})[0]) < 1e-3);
}

TEST_CASE("multi-dimensional incumbent beats random probes") {
  std::uint64_t state = 1357;
  PreferenceModel m = random_model(state, 3, 6, 8);
  m.fit();
  const Box box(3, Interval{-2.0, 2.0});
  const Vector inc = m.incumbent(box);
  CHECK(box_contains(box, inc));
  const double at_inc = m.posterior(inc).mean;
  for (int k = 0; k < 500; ++k) {
    Vector q(3);
    for (auto& v : q) v = oracle::uniform(state, -2, 2);
    CHECK(m.posterior(q).mean <= at_inc + 1e-3);
  }
}

TEST_CASE("normal helpers are stable in the tails") {
  CHECK(std::isfinite(log_normal_cdf(-60.0)));
  CHECK(log_normal_cdf(-60.0) == doctest::Approx(-0.5 * 3600 - std::log(60.0 * std::sqrt(2 * M_PI))).epsilon(1e-3));
  CHECK(log_normal_cdf(0.0) == doctest::Approx(std::log(0.5)));
  CHECK(normal_hazard_ratio(-60.0) == doctest::Approx(60.0).epsilon(1e-3));
  CHECK(normal_hazard_ratio(5.0) < 1e-5);
}
