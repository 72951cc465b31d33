#pragma once

#include "latentswipe/prefgp.hpp"
#include "latentswipe/rng.hpp"
#include "latentswipe/types.hpp"

#include <string>
#include <string_view>

namespace latentswipe {

enum class AcquisitionKind { ucb, expected_improvement };

std::string_view to_string(AcquisitionKind kind);
AcquisitionKind acquisition_kind_from_string(std::string_view name);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::ucb;
  double beta = 2.0;
};

// E[max(0, f - best)] for f ~ N(mean, variance).
double expected_improvement(double mean, double variance, double best);

inline constexpr int kDefaultRestarts = 8;
inline constexpr int kCoordinateSweeps = 3;

// Acquisition function bound to one model snapshot and search box. For
// expected improvement the reference value is the posterior mean at the
// model's incumbent. A stale model is evaluated under its prior.
class Acquisition {
 public:
  Acquisition(AcquisitionSpec spec, const PreferenceModel& model, const Box& box);

  double operator()(const Vector& query) const;
  // One query per column.
  Vector batch(const Matrix& queries) const;
  // Values along an axis-parallel line through `base`.
  Vector line(const Vector& base, std::size_t axis, const Vector& ts) const;

  double best_mean() const { return best_mean_; }

 private:
  Vector combine(const Vector& mean, const Vector& variance) const;

  AcquisitionSpec spec_;
  const PreferenceModel* model_;
  double best_mean_ = 0.0;
};

double evaluate(const AcquisitionSpec& spec, const PreferenceModel& model, const Vector& query,
                const Box& box);

// Maximiser of a 1-D model's acquisition over [low, high]: 512-point grid
// then golden-section refinement. Ties resolve to the smaller coordinate.
double maximize_1d(const AcquisitionSpec& spec, const PreferenceModel& model, Interval interval);

// Multi-start coordinate ascent: `restarts` uniform starts drawn from `rng`,
// each followed by kCoordinateSweeps sweeps of 1-D maximisation. A
// coordinate only moves on strict improvement.
Vector maximize_nd(const AcquisitionSpec& spec, const PreferenceModel& model, const Box& box,
                   int restarts, CountingRng& rng);

}  // namespace latentswipe
