#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace latentswipe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Full latent coordinates w (length d).
using LatentSample = Vector;
// Coordinates in the reduced search subspace (length d').
using LatentPoint = Vector;

struct Interval {
  double low = 0.0;
  double high = 0.0;

  double width() const { return high - low; }
  double center() const { return 0.5 * (low + high); }
  bool contains(double x) const { return x >= low && x <= high; }
};

using Box = std::vector<Interval>;

inline Vector box_center(const Box& box) {
  Vector c(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) c[static_cast<Eigen::Index>(i)] = box[i].center();
  return c;
}

inline bool box_contains(const Box& box, const Vector& p) {
  if (static_cast<std::size_t>(p.size()) != box.size()) return false;
  for (std::size_t i = 0; i < box.size(); ++i)
    if (!box[i].contains(p[static_cast<Eigen::Index>(i)])) return false;
  return true;
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace latentswipe
