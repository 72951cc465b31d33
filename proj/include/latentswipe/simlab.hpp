#pragma once

#include "latentswipe/engine.hpp"
#include "latentswipe/genkit.hpp"
#include "latentswipe/subspace.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace latentswipe {

enum class TieRule { previous_wins, current_wins };

// Simulated user: prefers whichever image's embedding has the higher cosine
// similarity to a fixed target's embedding.
class SimilarityOracle {
 public:
  SimilarityOracle(const Generator& gen, std::shared_ptr<const SubspaceMap> subspace, LatentPoint target,
                   TieRule tie_rule = TieRule::previous_wins);

  double similarity(const LatentPoint& p) const;
  bool current_wins(const LatentPoint& previous, const LatentPoint& current) const;

  const LatentPoint& target() const { return target_; }
  const Vector& target_embedding() const { return target_embedding_; }
  TieRule tie_rule() const { return tie_rule_; }

 private:
  const Generator* gen_;
  std::shared_ptr<const SubspaceMap> subspace_;
  LatentPoint target_;
  Vector target_embedding_;
  TieRule tie_rule_;
};

struct RunResult {
  Strategy strategy = Strategy::bandit_bo;
  std::size_t d_prime = 0;
  std::size_t target_index = 0;
  std::size_t seed_index = 0;
  std::uint64_t session_seed = 0;
  // Similarity of the image shown as `current` at each feedback.
  std::vector<double> similarity_trace;
  std::vector<std::optional<std::size_t>> chosen_arms;
  double final_similarity = 0.0;
  std::optional<std::string> error;
};

struct ExperimentConfig {
  std::vector<Strategy> strategies{Strategy::bandit_bo, Strategy::simple_bo, Strategy::random};
  std::vector<std::size_t> d_primes{4, 8, 16};
  std::size_t targets = 10;
  std::size_t seeds = 5;
  std::size_t budget = kDefaultBudget;
  std::size_t pca_population = kDefaultPcaPopulation;
  std::uint64_t pca_seed = 20240101;
  std::uint64_t target_seed = 7;
  std::uint64_t base_seed = 1000;
  std::size_t moving_average_window = 5;
  TieRule tie_rule = TieRule::previous_wins;
  // Worker threads; 0 means hardware concurrency.
  unsigned jobs = 0;
};

inline constexpr std::size_t kDefaultMovingAverageWindow = 5;

// Trailing moving average; the first window-1 entries average what exists.
std::vector<double> moving_average(std::span<const double> trace, std::size_t window);

// Target points, uniform in the search box; identical for every strategy.
std::vector<LatentPoint> draw_targets(const Box& box, std::size_t count, std::uint64_t seed);

// Session seed shared by all strategies for a given (d', target, seed) cell.
std::uint64_t session_seed(const ExperimentConfig& cfg, std::size_t d_prime, std::size_t target_index,
                           std::size_t seed_index);

RunResult run_single(const Generator& gen, std::shared_ptr<const SubspaceMap> subspace, const SessionConfig& config,
                     const SimilarityOracle& oracle);

// Full cross product, sorted by (strategy, d', target, seed).
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, const Generator& gen);

struct SummaryRow {
  Strategy strategy = Strategy::bandit_bo;
  std::size_t d_prime = 0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double mean_final = 0.0;
  double sd_final = 0.0;
  // Mean over runs of each run's moving-average trace.
  std::vector<double> mean_curve;
};

std::vector<SummaryRow> summarize(std::span<const RunResult> results, std::size_t window);

// Writes summary.jsonl and runs/<strategy>_d<d'>_t<target>_s<seed>.jsonl.
void write_results(const std::filesystem::path& dir, std::span<const RunResult> results, std::size_t window);
std::vector<RunResult> read_results(const std::filesystem::path& dir);
// Line plot of the mean moving-average curve per (strategy, d').
void write_plots(const std::filesystem::path& dir, std::span<const SummaryRow> rows);

}  // namespace latentswipe
