#include "latentswipe/subspace.hpp"

#include "latentswipe/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace latentswipe {

namespace {

constexpr const char* kMagic = "latentswipe-subspace";
constexpr int kFormatVersion = 1;

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_hex(const std::string& token) {
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw FormatError("bad number: " + token);
  return v;
}

std::string expect_key(std::istream& in, const std::string& key) {
  std::string got;
  if (!(in >> got) || got != key) throw FormatError("expected '" + key + "', got '" + got + "'");
  return got;
}

Vector read_vector(std::istream& in, Eigen::Index n) {
  Vector v(n);
  std::string token;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(in >> token)) throw FormatError("truncated subspace document");
    v[i] = parse_hex(token);
  }
  return v;
}

}  // namespace

SubspaceMap::SubspaceMap(Vector mean, Matrix basis, Vector explained_variance)
    : mean_(std::move(mean)), basis_(std::move(basis)), variance_(std::move(explained_variance)) {
  const auto d = mean_.size();
  const auto dp = basis_.rows();
  if (dp < 1 || dp > d) throw DimensionMismatch("subspace requires 1 <= d' <= d");
  if (basis_.cols() != d || variance_.size() != dp)
    throw DimensionMismatch("subspace basis/variance shape does not match mean");
  if (!mean_.allFinite() || !basis_.allFinite() || !variance_.allFinite())
    throw Error("subspace contains non-finite values");
  const Matrix gram = basis_ * basis_.transpose();
  if ((gram - Matrix::Identity(dp, dp)).cwiseAbs().maxCoeff() > 1e-8)
    throw Error("subspace basis rows are not orthonormal");
  for (Eigen::Index i = 0; i < dp; ++i) {
    if (variance_[i] < 0.0) throw Error("negative explained variance");
    if (i > 0 && variance_[i] > variance_[i - 1]) throw Error("explained variance not sorted");
  }
}

LatentPoint SubspaceMap::project(const LatentSample& w) const {
  if (w.size() != mean_.size())
    throw DimensionMismatch("project: expected length " + std::to_string(d()) + ", got " +
                            std::to_string(w.size()));
  return basis_ * (w - mean_);
}

LatentSample SubspaceMap::inverse(const LatentPoint& coords) const {
  if (coords.size() != basis_.rows())
    throw DimensionMismatch("inverse: expected length " + std::to_string(d_prime()) + ", got " +
                            std::to_string(coords.size()));
  return mean_ + basis_.transpose() * coords;
}

Box SubspaceMap::search_box(double c) const {
  Box box(d_prime());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double half = c * std::sqrt(variance_[static_cast<Eigen::Index>(i)]);
    box[i] = {-half, half};
  }
  return box;
}

void SubspaceMap::write(std::ostream& out) const {
  out << kMagic << " v" << kFormatVersion << "\n";
  out << "d " << d() << "\n";
  out << "d_prime " << d_prime() << "\n";
  out << "mean";
  for (Eigen::Index i = 0; i < mean_.size(); ++i) out << ' ' << hex(mean_[i]);
  out << "\nbasis\n";
  for (Eigen::Index r = 0; r < basis_.rows(); ++r) {
    for (Eigen::Index c = 0; c < basis_.cols(); ++c) out << (c ? " " : "") << hex(basis_(r, c));
    out << "\n";
  }
  out << "variance";
  for (Eigen::Index i = 0; i < variance_.size(); ++i) out << ' ' << hex(variance_[i]);
  out << "\n";
}

SubspaceMap SubspaceMap::read(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != kMagic)
    throw FormatError("not a subspace document");
  if (version != "v" + std::to_string(kFormatVersion))
    throw FormatError("unsupported subspace version " + version);
  std::size_t d = 0, dp = 0;
  expect_key(in, "d");
  in >> d;
  expect_key(in, "d_prime");
  in >> dp;
  if (!in || d == 0 || dp == 0 || dp > d) throw FormatError("bad subspace dimensions");
  expect_key(in, "mean");
  Vector mean = read_vector(in, static_cast<Eigen::Index>(d));
  expect_key(in, "basis");
  Matrix basis(static_cast<Eigen::Index>(dp), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < basis.rows(); ++r)
    basis.row(r) = read_vector(in, basis.cols()).transpose();
  expect_key(in, "variance");
  Vector variance = read_vector(in, static_cast<Eigen::Index>(dp));
  return SubspaceMap(std::move(mean), std::move(basis), std::move(variance));
}

std::string SubspaceMap::to_string() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

SubspaceMap SubspaceMap::from_string(const std::string& text) {
  std::istringstream in(text);
  return read(in);
}

bool SubspaceMap::operator==(const SubspaceMap& other) const {
  return mean_.size() == other.mean_.size() && basis_.rows() == other.basis_.rows() &&
         mean_ == other.mean_ && basis_ == other.basis_ && variance_ == other.variance_;
}

SubspaceMap fit_subspace(std::span<const LatentSample> samples, std::size_t d_prime) {
  if (samples.empty() || samples.size() < d_prime + 1)
    throw TooFewSamples("fit_subspace needs at least d'+1 = " + std::to_string(d_prime + 1) +
                        " samples, got " + std::to_string(samples.size()));
  const auto d = samples.front().size();
  if (d_prime < 1 || static_cast<Eigen::Index>(d_prime) > d)
    throw DimensionMismatch("fit_subspace requires 1 <= d' <= d");
  for (const auto& s : samples) {
    if (s.size() != d) throw DimensionMismatch("fit_subspace: samples differ in length");
    if (!s.allFinite()) throw Error("fit_subspace: non-finite sample");
  }

  const auto n = static_cast<double>(samples.size());
  Vector mean = Vector::Zero(d);
  for (const auto& s : samples) mean += s;
  mean /= n;

  Matrix cov = Matrix::Zero(d, d);
  for (const auto& s : samples) {
    const Vector c = s - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= (n - 1.0);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("fit_subspace: eigendecomposition failed");
  const Vector& values = eig.eigenvalues();  // ascending
  const double largest = std::max(values[d - 1], 0.0);
  const double tol = largest * static_cast<double>(d) * 1e-12;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (largest > 0.0 && values[i] > tol) ++rank;
  if (rank < d_prime) throw DegenerateCovariance(rank, d_prime);

  const auto dp = static_cast<Eigen::Index>(d_prime);
  Matrix basis(dp, d);
  Vector variance(dp);
  for (Eigen::Index k = 0; k < dp; ++k) {
    Vector dir = eig.eigenvectors().col(d - 1 - k);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (std::abs(dir[j]) > 1e-14) {
        if (dir[j] < 0.0) dir = -dir;
        break;
      }
    }
    basis.row(k) = dir.normalized().transpose();
    variance[k] = std::max(values[d - 1 - k], 0.0);
  }
  return SubspaceMap(std::move(mean), std::move(basis), std::move(variance));
}

}  // namespace latentswipe
