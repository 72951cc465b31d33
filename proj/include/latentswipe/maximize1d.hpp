#pragma once

#include "latentswipe/types.hpp"

#include <cmath>
#include <cstddef>

namespace latentswipe {

inline constexpr std::size_t kGridPoints1d = 512;

struct Maximum1d {
  double x = 0.0;
  double value = 0.0;
};

// Grid scan over `grid` evenly spaced points (endpoints included), then
// golden-section refinement on the bracket around the best grid point. The
// refined point is only accepted when it strictly improves on the grid, so
// flat objectives resolve to the smallest x. `batch` maps a Vector of
// abscissae to a Vector of objective values.
template <typename BatchFn>
Maximum1d grid_golden_maximize(BatchFn&& batch, Interval interval,
                               std::size_t grid = kGridPoints1d) {
  const double lo = interval.low;
  const double hi = interval.high;
  auto eval1 = [&](double x) {
    Vector xs(1);
    xs[0] = x;
    return static_cast<double>(batch(xs)[0]);
  };
  if (!(hi > lo)) return {lo, eval1(lo)};

  const auto n = static_cast<Eigen::Index>(grid < 2 ? 2 : grid);
  Vector xs(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) xs[i] = lo + step * static_cast<double>(i);
  xs[n - 1] = hi;
  const Vector values = batch(xs);

  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if (values[i] > values[best]) best = i;
  Maximum1d result{xs[best], values[best]};

  double a = xs[best > 0 ? best - 1 : 0];
  double b = xs[best + 1 < n ? best + 1 : n - 1];
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval1(c);
  double fd = eval1(d);
  for (int iter = 0; iter < 100 && (b - a) > 1e-10 * (1.0 + std::abs(a)); ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval1(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval1(d);
    }
  }
  const double xr = fc >= fd ? c : d;
  const double fr = fc >= fd ? fc : fd;
  if (fr > result.value) result = {xr, fr};
  return result;
}

}  // namespace latentswipe
