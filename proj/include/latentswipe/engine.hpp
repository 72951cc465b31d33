#pragma once

#include "latentswipe/acquire.hpp"
#include "latentswipe/bandit.hpp"
#include "latentswipe/prefgp.hpp"
#include "latentswipe/rng.hpp"
#include "latentswipe/subspace.hpp"
#include "latentswipe/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latentswipe {

enum class Strategy { bandit_bo, simple_bo, random };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);

// Which point the next candidate is compared against: the winner of the
// last comparison, or the newest image regardless of the swipe.
enum class Pivot { winner, latest };

std::string_view to_string(Pivot p);
Pivot pivot_from_string(std::string_view name);

inline constexpr std::size_t kDefaultBudget = 50;

struct SessionConfig {
  Strategy strategy = Strategy::bandit_bo;
  std::size_t d = 64;
  std::size_t d_prime = 8;
  std::size_t max_comparisons = kDefaultBudget;
  std::uint64_t seed = 0;
  AcquisitionSpec acquisition{};
  double box_constant = kDefaultBoxConstant;
  double bandit_alpha = kDefaultBanditAlpha;
  Pivot pivot = Pivot::winner;
  int restarts = kDefaultRestarts;
  LaplaceOptions laplace{};

  // Throws ConfigMismatch.
  void validate() const;
  bool operator==(const SessionConfig& o) const;
};

struct ShownPoint {
  LatentPoint coords;
  std::optional<std::size_t> arm;
  std::int64_t timestamp_ms = 0;
};

struct ComparisonRecord {
  LatentPoint previous;
  LatentPoint current;
  bool current_won = false;
  std::optional<std::size_t> arm;
  std::size_t iteration = 0;
  std::optional<double> decision_time_ms;
};

// One swipe-optimisation run. Construction samples the initial pair; each
// submit_feedback() consumes one comparison of `current` against
// `previous` and proposes the next candidate. Copyable: a copy is an
// independent branch of the same run.
class Session {
 public:
  Session(SessionConfig config, std::shared_ptr<const SubspaceMap> subspace);

  const SessionConfig& config() const { return config_; }
  const SubspaceMap& subspace() const { return *subspace_; }
  std::shared_ptr<const SubspaceMap> subspace_ptr() const { return subspace_; }
  const Box& box() const { return box_; }

  const LatentPoint& previous() const { return previous_; }
  const LatentPoint& current() const { return current_; }
  std::optional<std::size_t> current_arm() const { return current_arm_; }

  // Number of feedbacks consumed so far.
  std::size_t iteration() const { return history_.size(); }
  bool finished() const { return history_.size() >= config_.max_comparisons; }

  // Returns the next candidate, or nullopt once the budget is used up.
  // Throws SessionFinished when called on a finished session.
  std::optional<LatentPoint> submit_feedback(bool current_won, std::optional<double> decision_time_ms = {});

  // Winner of the latest comparison (the first point before any feedback).
  LatentPoint final_choice() const;

  const std::vector<ShownPoint>& shown() const { return shown_; }
  const std::vector<ComparisonRecord>& history() const { return history_; }
  const BanditState& bandit() const { return bandit_; }
  const std::vector<PreferenceModel>& per_dim_models() const { return dim_models_; }
  const PreferenceModel& full_model() const { return full_model_; }
  const std::vector<double>& incumbents() const { return incumbents_; }
  std::uint64_t rng_cursor() const { return rng_.cursor(); }

 private:
  LatentPoint uniform_point();
  void show(const LatentPoint& p, std::optional<std::size_t> arm);
  LatentPoint propose_bandit();
  static void refit(PreferenceModel& model);

  SessionConfig config_;
  std::shared_ptr<const SubspaceMap> subspace_;
  Box box_;
  CountingRng rng_;

  BanditState bandit_;
  std::vector<PreferenceModel> dim_models_;
  std::vector<double> incumbents_;
  PreferenceModel full_model_;

  LatentPoint previous_;
  LatentPoint current_;
  std::optional<std::size_t> current_arm_;
  LatentPoint last_winner_;

  std::vector<ShownPoint> shown_;
  std::vector<ComparisonRecord> history_;
};

}  // namespace latentswipe
