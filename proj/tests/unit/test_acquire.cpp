#include "latentswipe/acquire.hpp"
#include "latentswipe/errors.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace latentswipe;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

PreferenceModel fitted_1d() {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.add_observation(v1(1.0), v1(-1.0), true);
  m.fit();
  return m;
}

}  // namespace

TEST_CASE("beta = 0 gives the posterior mean") {
  const PreferenceModel m = fitted_1d();
  const AcquisitionSpec spec{AcquisitionKind::ucb, 0.0};
  for (double x : {-1.5, 0.0, 0.8})
    CHECK(evaluate(spec, m, v1(x), {Interval{-2, 2}}) == doctest::Approx(m.posterior(v1(x)).mean));
}

TEST_CASE("empty model with beta 2 is 2 everywhere") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-2, 2}});
  m.fit();
  for (double x : {-2.0, 0.0, 1.9}) CHECK(evaluate({}, m, v1(x), {Interval{-2, 2}}) == doctest::Approx(2.0));
  // Unfitted comparisons fall back to the prior value as well.
  m.add_observation(v1(1.0), v1(0.0), true);
  CHECK(evaluate({}, m, v1(0.3), {Interval{-2, 2}}) == doctest::Approx(2.0));
}

TEST_CASE("expected improvement closed form") {
  CHECK(expected_improvement(0.7, 0.0, 0.7) == 0.0);
  CHECK(expected_improvement(0.9, 0.0, 0.7) == doctest::Approx(0.2));
  CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  // Monte-Carlo reference for a generic case.
  std::uint64_t state = 4;
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u1 = oracle::uniform(state, 1e-12, 1.0), u2 = oracle::uniform(state, 0.0, 1.0);
    const double f = 0.3 + 0.8 * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    acc += std::max(0.0, f - 0.5);
  }
  CHECK(expected_improvement(0.3, 0.64, 0.5) == doctest::Approx(acc / n).epsilon(0.01));

  PreferenceModel empty = PreferenceModel::for_box({Interval{-2, 2}});
  empty.fit();
  const AcquisitionSpec ei{AcquisitionKind::expected_improvement, 0.0};
  CHECK(evaluate(ei, empty, v1(0.0), {Interval{-2, 2}}) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  const PreferenceModel m = fitted_1d();
  const Acquisition acq(ei, m, {Interval{-2, 2}});
  CHECK(acq.best_mean() == doctest::Approx(m.posterior(m.incumbent({Interval{-2, 2}})).mean));
}

TEST_CASE("UCB is non-decreasing in beta") {
  const PreferenceModel m = fitted_1d();
  for (double x : {-1.9, -0.3, 0.4, 1.7}) {
    double last = -1e300;
    for (double beta : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      const double v = evaluate({AcquisitionKind::ucb, beta}, m, v1(x), {Interval{-2, 2}});
      CHECK(v >= last);
      last = v;
    }
  }
}

TEST_CASE("maximize_1d tie-break, degenerate interval, and fine-grid oracle") {
  PreferenceModel empty = PreferenceModel::for_box({Interval{-2, 2}});
  empty.fit();
  CHECK(maximize_1d({}, empty, {-2.0, 2.0}) == -2.0);
  CHECK(maximize_1d({}, empty, {0.0, 0.0}) == 0.0);

  const PreferenceModel m = fitted_1d();
  const double x = maximize_1d({AcquisitionKind::ucb, 0.0}, m, {-2.0, 2.0});
  double best_x = -2.0, best = -1e300;
  for (int i = 0; i <= 40000; ++i) {
    const double t = -2.0 + 1e-4 * i;
    const double mu = m.posterior(v1(t)).mean;
    if (mu > best) {
      best = mu;
      best_x = t;
    }
  }
  CHECK(std::abs(x - best_x) < 0.2);
}

TEST_CASE("maximize_1d beats a 4096-point validation grid") {
  std::uint64_t state = 12;
  for (int k = 0; k < 20; ++k) {
    PreferenceModel m = PreferenceModel::for_box({Interval{-3, 3}});
    for (int c = 0; c < 1 + k % 6; ++c)
      m.add_observation(v1(oracle::uniform(state, -3, 3)), v1(oracle::uniform(state, -3, 3)), c % 2 == 0);
    m.fit();
    for (const auto& spec : {AcquisitionSpec{}, AcquisitionSpec{AcquisitionKind::expected_improvement, 0.0}}) {
      const Acquisition acq(spec, m, {Interval{-3, 3}});
      const double x = maximize_1d(spec, m, {-3.0, 3.0});
      double grid_best = -1e300;
      for (int i = 0; i < 4096; ++i) grid_best = std::max(grid_best, acq(v1(-3.0 + 6.0 * i / 4095.0)));
      CHECK(acq(v1(x)) >= grid_best - 1e-6);
    }
  }
}

TEST_CASE("maximize_1d rejects multi-dimensional models") {
  PreferenceModel m = PreferenceModel::for_box({Interval{-1, 1}, Interval{-1, 1}});
  m.fit();
  CHECK_THROWS_AS(maximize_1d({}, m, {-1.0, 1.0}), DimensionMismatch);
}

TEST_CASE("maximize_nd on an unfitted model returns a start point deterministically") {
  const Box box{Interval{-1, 1}, Interval{-2, 2}};
  PreferenceModel m = PreferenceModel::for_box(box);
  m.fit();
  CountingRng a(9), b(9), probe(9);
  const Vector x = maximize_nd({}, m, box, 4, a);
  const Vector y = maximize_nd({}, m, box, 4, b);
  CHECK(x == y);
  // Flat acquisition: coordinates never move, so the first start wins.
  CHECK(x[0] == probe.uniform(-1, 1));
  CHECK(x[1] == probe.uniform(-2, 2));
}

TEST_CASE("maximize_nd on a separable posterior matches 1-D and an exhaustive grid") {
  const Box box{Interval{-2, 2}, Interval{-2, 2}};
  PreferenceModel m = PreferenceModel::for_box(box);
  // Data varies only in coordinate 0; coordinate 1 is fixed at 0.
  m.add_observation(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(-1.0, 0.0), true);
  m.add_observation(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 0.0), true);
  m.fit();
  const AcquisitionSpec spec{AcquisitionKind::ucb, 0.0};
  CountingRng rng(3);
  const Vector x = maximize_nd(spec, m, box, 8, rng);

  PreferenceModel one = PreferenceModel::for_box({Interval{-2, 2}});
  one.add_observation(v1(1.0), v1(-1.0), true);
  one.add_observation(v1(1.0), v1(0.0), true);
  one.fit();
  const double x0 = maximize_1d(spec, one, {-2.0, 2.0});
  CHECK(std::abs(x[0] - x0) < 1e-2);

  const Acquisition acq(spec, m, box);
  double best = -1e300;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) best = std::max(best, acq(Eigen::Vector2d(-2 + 0.01 * i, -2 + 0.01 * j)));
  CHECK(acq(x) >= best - 1e-6);
}

TEST_CASE("maximize_nd on a collapsed box returns that point") {
  const Box box{Interval{0.5, 0.5}, Interval{-1, -1}};
  PreferenceModel m = PreferenceModel::for_box(box);
  m.fit();
  CountingRng rng(1);
  const Vector x = maximize_nd({}, m, box, 3, rng);
  CHECK(x[0] == 0.5);
  CHECK(x[1] == -1.0);
}

TEST_CASE("maximize_nd determinism with data") {
  std::uint64_t state = 99;
  const Box box(3, Interval{-2, 2});
  PreferenceModel m = PreferenceModel::for_box(box);
  for (int k = 0; k < 6; ++k) {
    Vector a(3), b(3);
    for (auto& v : a) v = oracle::uniform(state, -2, 2);
    for (auto& v : b) v = oracle::uniform(state, -2, 2);
    m.add_observation(a, b, k % 3 != 0);
  }
  m.fit();
  CountingRng r1(5), r2(5);
  const Vector x = maximize_nd({}, m, box, 8, r1);
  const Vector y = maximize_nd({}, m, box, 8, r2);
  CHECK(std::memcmp(x.data(), y.data(), sizeof(double) * 3) == 0);
  CHECK(r1.cursor() == 24);
  CHECK(box_contains(box, x));
}

TEST_CASE("acquisition kind names") {
  CHECK(to_string(AcquisitionKind::ucb) == "ucb");
  CHECK(acquisition_kind_from_string("ei") == AcquisitionKind::expected_improvement);
  CHECK_THROWS(acquisition_kind_from_string("thompson"));
  PreferenceModel m = PreferenceModel::for_box({Interval{-1, 1}});
  CHECK_THROWS(Acquisition({AcquisitionKind::ucb, -1.0}, m, {Interval{-1, 1}}));
}
