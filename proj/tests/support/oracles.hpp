#pragma once

// Brute-force reference computations used by the tests. Everything here is
// written with plain loops over std::vector so it shares no code with the
// library under test.

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Mat sample_covariance(const std::vector<Vec>& samples);

// Eigenvalues of a symmetric 3x3 matrix in descending order (closed form).
std::array<double, 3> sym3_eigenvalues(const Mat& a);

// Cyclic Jacobi eigen-solver for symmetric matrices, values descending.
struct Eigen {
  Vec values;
  Mat vectors;  // vectors[k] is the eigenvector of values[k]
};
Eigen jacobi_eigen(Mat a);

// Gauss-Jordan inverse with partial pivoting.
Mat inverse(Mat a);

// Pairwise probit preference problem written out from the model definition.
struct PreferenceProblem {
  std::vector<Vec> points;
  std::vector<std::pair<int, int>> comparisons;  // (winner, loser)
  Vec lengthscales;
  double signal_variance = 1.0;
  double noise = 0.1;
  double jitter = 0.0;
};

Mat gram(const PreferenceProblem& p);
double log_posterior(const PreferenceProblem& p, const Mat& k_inv, const Vec& f);

// MAP utilities by exhaustive search: a 0.1 grid over [lo, hi]^n, then
// repeated 0.01 grids on a +-0.1 window around the incumbent until it is
// interior. Feasible for n <= 4.
Vec grid_map(const PreferenceProblem& p, double lo = -3.0, double hi = 3.0);

double cosine(const Vec& a, const Vec& b);

double uniform(std::uint64_t& state, double lo, double hi);  // splitmix64 based

std::filesystem::path temp_dir(const std::string& tag);

}  // namespace oracle
