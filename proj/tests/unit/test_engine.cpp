#include "latentswipe/engine.hpp"
#include "latentswipe/errors.hpp"

#include <doctest.h>

#include <cstring>

using namespace latentswipe;

namespace {

std::shared_ptr<const SubspaceMap> make_map(std::size_t d, std::size_t d_prime) {
  Vector variance(static_cast<Eigen::Index>(d_prime));
  for (Eigen::Index i = 0; i < variance.size(); ++i) variance[i] = 4.0 / static_cast<double>(i + 1);
  return std::make_shared<const SubspaceMap>(Vector::Zero(static_cast<Eigen::Index>(d)),
                                             Matrix::Identity(static_cast<Eigen::Index>(d_prime), static_cast<Eigen::Index>(d)),
                                             variance);
}

SessionConfig config(Strategy s, std::size_t d_prime, std::uint64_t seed, std::size_t budget = 50) {
  SessionConfig c;
  c.strategy = s;
  c.d = 6;
  c.d_prime = d_prime;
  c.seed = seed;
  c.max_comparisons = budget;
  return c;
}

bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// Feedback pattern that prefers points with a larger first coordinate.
bool scripted(const Session& s) { return s.current()[0] > s.previous()[0]; }

}  // namespace

TEST_CASE("same seed gives the same initial pair") {
  auto map = make_map(6, 3);
  Session a(config(Strategy::bandit_bo, 3, 42), map), b(config(Strategy::bandit_bo, 3, 42), map);
  CHECK(same_bits(a.previous(), b.previous()));
  CHECK(same_bits(a.current(), b.current()));
  CHECK(a.shown().size() == 2);
  CHECK(a.iteration() == 0);
  CHECK(a.rng_cursor() == 6);
}

TEST_CASE("d' = 1 initial points are inside the box") {
  auto map = make_map(6, 1);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Session s(config(Strategy::random, 1, seed), map);
    CHECK(s.box()[0].contains(s.previous()[0]));
    CHECK(s.box()[0].contains(s.current()[0]));
  }
}

TEST_CASE("initial points are uniform (chi-square, 10 bins)") {
  auto map = make_map(6, 2);
  const std::size_t n = 1000;
  for (std::size_t dim = 0; dim < 2; ++dim) {
    for (int which = 0; which < 2; ++which) {
      std::vector<int> bins(10, 0);
      for (std::uint64_t seed = 0; seed < n; ++seed) {
        Session s(config(Strategy::random, 2, seed), map);
        const Interval iv = s.box()[dim];
        const double x = (which == 0 ? s.previous() : s.current())[static_cast<Eigen::Index>(dim)];
        bins[std::min<std::size_t>(9, static_cast<std::size_t>((x - iv.low) / iv.width() * 10.0))]++;
      }
      double chi2 = 0.0;
      for (int b : bins) chi2 += (b - 100.0) * (b - 100.0) / 100.0;
      // Upper 0.1% point of chi-square with 9 degrees of freedom.
      CHECK(chi2 < 27.877);
    }
  }
}

TEST_CASE("config validation") {
  auto map = make_map(6, 3);
  SessionConfig c = config(Strategy::bandit_bo, 4, 1);
  CHECK_THROWS_AS(Session(c, map), ConfigMismatch);
  c = config(Strategy::bandit_bo, 3, 1, 0);
  CHECK_THROWS_AS(Session(c, map), ConfigMismatch);
  c = config(Strategy::bandit_bo, 3, 1);
  c.d = 7;
  CHECK_THROWS_AS(Session(c, map), ConfigMismatch);
  CHECK_THROWS_AS(Session(config(Strategy::random, 3, 1), nullptr), ConfigMismatch);
  CHECK(strategy_from_string("banditbo") == Strategy::bandit_bo);
  CHECK_THROWS_AS(strategy_from_string("greedy"), ConfigMismatch);
  CHECK(pivot_from_string("latest") == Pivot::latest);
}

TEST_CASE("random strategy trajectory is reproducible bit-exactly") {
  auto map = make_map(6, 4);
  Session a(config(Strategy::random, 4, 7), map), b(config(Strategy::random, 4, 7), map);
  while (!a.finished()) {
    const bool w = scripted(a);
    a.submit_feedback(w);
    b.submit_feedback(w);
  }
  REQUIRE(a.shown().size() == 51);
  for (std::size_t i = 0; i < a.shown().size(); ++i) CHECK(same_bits(a.shown()[i].coords, b.shown()[i].coords));
}

TEST_CASE("BanditBO first step, hand-traced") {
  auto map = make_map(6, 2);
  Session s(config(Strategy::bandit_bo, 2, 3), map);
  const LatentPoint first = s.previous(), second = s.current();
  const auto next = s.submit_feedback(true);
  REQUIRE(next);
  // No producing arm for the initial pair: bandit untouched, models empty.
  CHECK(s.bandit().t() == 0);
  CHECK(s.per_dim_models()[0].empty());
  CHECK(s.per_dim_models()[1].empty());
  // Arm 0 is selected; its empty model's UCB is flat, so maximize_1d
  // returns the lower bound. Arm 1 takes its incumbent, the box center.
  CHECK(s.current_arm() == std::optional<std::size_t>(0));
  CHECK((*next)[0] == s.box()[0].low);
  CHECK((*next)[1] == 0.0);
  CHECK_FALSE(same_bits(*next, first));
  CHECK_FALSE(same_bits(*next, second));
  CHECK(same_bits(s.previous(), second));

  // Second feedback rewards arm 0 and trains only its model.
  s.submit_feedback(false);
  CHECK(s.bandit().stats()[0].pulls == 1);
  CHECK(s.bandit().stats()[0].reward_sum == 0.0);
  CHECK(s.per_dim_models()[0].comparisons().size() == 1);
  CHECK(s.per_dim_models()[1].empty());
  CHECK(s.per_dim_models()[0].points()[0][0] == s.box()[0].low);
  CHECK(s.current_arm() == std::optional<std::size_t>(1));
}

TEST_CASE("BanditBO candidates differ from the incumbent assembly in one coordinate") {
  auto map = make_map(6, 4);
  Session s(config(Strategy::bandit_bo, 4, 11), map);
  while (!s.finished()) {
    s.submit_feedback(scripted(s));
    if (s.finished()) break;
    REQUIRE(s.current_arm());
    const std::size_t arm = *s.current_arm();
    for (std::size_t i = 0; i < 4; ++i) {
      if (i == arm) continue;
      CHECK(s.current()[static_cast<Eigen::Index>(i)] == s.incumbents()[i]);
    }
    CHECK(box_contains(s.box(), s.current()));
  }
}

TEST_CASE("comparison chaining, budget and final choice") {
  auto map = make_map(6, 3);
  for (Strategy st : {Strategy::bandit_bo, Strategy::simple_bo, Strategy::random}) {
    Session s(config(st, 3, 5, 12), map);
    while (!s.finished()) s.submit_feedback(scripted(s));
    CHECK(s.shown().size() <= 12 + 2);
    CHECK(s.history().size() == 12);
    for (std::size_t k = 1; k < s.history().size(); ++k) {
      const auto& prev = s.history()[k - 1];
      const LatentPoint& winner = prev.current_won ? prev.current : prev.previous;
      CHECK(same_bits(s.history()[k].previous, winner));
      CHECK(s.history()[k].iteration == k + 1);
    }
    const auto& last = s.history().back();
    CHECK(same_bits(s.final_choice(), last.current_won ? last.current : last.previous));
    CHECK_THROWS_AS(s.submit_feedback(true), SessionFinished);
  }
}

TEST_CASE("final choice after one feedback") {
  auto map = make_map(6, 2);
  Session a(config(Strategy::random, 2, 8), map), b(config(Strategy::random, 2, 8), map);
  const LatentPoint prev = a.previous(), cur = a.current();
  a.submit_feedback(true);
  b.submit_feedback(false);
  CHECK(same_bits(a.final_choice(), cur));
  CHECK(same_bits(b.final_choice(), prev));
}

TEST_CASE("latest pivot compares against the newest image") {
  auto map = make_map(6, 2);
  SessionConfig c = config(Strategy::random, 2, 4);
  c.pivot = Pivot::latest;
  Session s(c, map);
  const LatentPoint cur = s.current();
  s.submit_feedback(false);
  CHECK(same_bits(s.previous(), cur));
  CHECK_FALSE(same_bits(s.final_choice(), cur));
}

TEST_CASE("SimpleBO feeds the full model") {
  auto map = make_map(6, 3);
  Session s(config(Strategy::simple_bo, 3, 2, 6), map);
  for (int i = 0; i < 4; ++i) s.submit_feedback(scripted(s));
  CHECK(s.full_model().comparisons().size() == 4);
  CHECK(s.full_model().fitted());
  CHECK(s.bandit().t() == 0);
  for (const auto& p : s.shown()) CHECK(box_contains(s.box(), p.coords));
}

TEST_CASE("identical inputs give identical sessions for every strategy") {
  auto map = make_map(6, 3);
  for (Strategy st : {Strategy::bandit_bo, Strategy::simple_bo, Strategy::random}) {
    Session a(config(st, 3, 77, 20), map), b(config(st, 3, 77, 20), map);
    while (!a.finished()) {
      const bool w = scripted(a);
      a.submit_feedback(w, 100.0);
      b.submit_feedback(w, 100.0);
    }
    for (std::size_t i = 0; i < a.shown().size(); ++i) CHECK(same_bits(a.shown()[i].coords, b.shown()[i].coords));
    CHECK(a.rng_cursor() == b.rng_cursor());
    CHECK(a.history().back().decision_time_ms == std::optional<double>(100.0));
  }
}
