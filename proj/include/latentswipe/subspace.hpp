#pragma once

#include "latentswipe/types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace latentswipe {

// Default number of latent samples drawn for PCA fitting.
inline constexpr std::size_t kDefaultPcaPopulation = 10000;
// Default half-width of the search box, in principal standard deviations.
inline constexpr double kDefaultBoxConstant = 3.0;

// PCA model of the generator's latent distribution. Rows of the basis are
// orthonormal principal directions sorted by explained variance (descending).
// Immutable once constructed.
class SubspaceMap {
 public:
  SubspaceMap(Vector mean, Matrix basis, Vector explained_variance);

  std::size_t d() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t d_prime() const { return static_cast<std::size_t>(basis_.rows()); }

  const Vector& mean() const { return mean_; }
  const Matrix& basis() const { return basis_; }
  const Vector& explained_variance() const { return variance_; }

  // coords = basis * (w - mean)
  LatentPoint project(const LatentSample& w) const;
  // w = mean + basis^T * coords
  LatentSample inverse(const LatentPoint& coords) const;

  // Dimension i spans [-c*sqrt(lambda_i), +c*sqrt(lambda_i)].
  Box search_box(double c = kDefaultBoxConstant) const;

  // Versioned text document; doubles are written as hex floats so a
  // write/read cycle is bit-exact.
  void write(std::ostream& out) const;
  static SubspaceMap read(std::istream& in);
  std::string to_string() const;
  static SubspaceMap from_string(const std::string& text);

  bool operator==(const SubspaceMap& other) const;

 private:
  Vector mean_;
  Matrix basis_;
  Vector variance_;
};

// PCA via eigendecomposition of the sample covariance (divisor n - 1).
// Basis vectors are sign-normalised so their first nonzero entry is positive.
// Throws TooFewSamples, DimensionMismatch, DegenerateCovariance.
SubspaceMap fit_subspace(std::span<const LatentSample> samples, std::size_t d_prime);

}  // namespace latentswipe
