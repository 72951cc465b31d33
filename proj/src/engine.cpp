#include "latentswipe/engine.hpp"

#include "latentswipe/errors.hpp"

#include <chrono>

namespace latentswipe {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Box single(const Interval& iv) { return Box{iv}; }

Vector scalar(double x) {
  Vector v(1);
  v[0] = x;
  return v;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::bandit_bo:
      return "banditbo";
    case Strategy::simple_bo:
      return "simplebo";
    case Strategy::random:
      return "random";
  }
  return "banditbo";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "banditbo") return Strategy::bandit_bo;
  if (name == "simplebo") return Strategy::simple_bo;
  if (name == "random") return Strategy::random;
  throw ConfigMismatch("unknown strategy: " + std::string(name));
}

std::string_view to_string(Pivot p) { return p == Pivot::winner ? "winner" : "latest"; }

Pivot pivot_from_string(std::string_view name) {
  if (name == "winner") return Pivot::winner;
  if (name == "latest") return Pivot::latest;
  throw ConfigMismatch("unknown pivot rule: " + std::string(name));
}

void SessionConfig::validate() const {
  if (max_comparisons < 1) throw ConfigMismatch("max_comparisons must be >= 1");
  if (d < 1 || d_prime < 1 || d_prime > d) throw ConfigMismatch("need 1 <= d_prime <= d");
  if (!(box_constant > 0.0)) throw ConfigMismatch("box constant must be positive");
  if (!(bandit_alpha > 0.0)) throw ConfigMismatch("bandit alpha must be positive");
  if (restarts < 1) throw ConfigMismatch("restarts must be >= 1");
  if (!(acquisition.beta >= 0.0) || !std::isfinite(acquisition.beta))
    throw ConfigMismatch("acquisition beta must be finite and >= 0");
}

bool SessionConfig::operator==(const SessionConfig& o) const {
  return strategy == o.strategy && d == o.d && d_prime == o.d_prime && max_comparisons == o.max_comparisons &&
         seed == o.seed && acquisition.kind == o.acquisition.kind && acquisition.beta == o.acquisition.beta &&
         box_constant == o.box_constant && bandit_alpha == o.bandit_alpha && pivot == o.pivot &&
         restarts == o.restarts && laplace.likelihood_noise == o.laplace.likelihood_noise &&
         laplace.newton_tol == o.laplace.newton_tol && laplace.max_newton_iters == o.laplace.max_newton_iters &&
         laplace.jitter_initial == o.laplace.jitter_initial && laplace.jitter_max == o.laplace.jitter_max &&
         laplace.hyperparameter_refit_every == o.laplace.hyperparameter_refit_every;
}

Session::Session(SessionConfig config, std::shared_ptr<const SubspaceMap> subspace)
    : config_(std::move(config)), subspace_(std::move(subspace)), rng_(config_.seed) {
  config_.validate();
  if (!subspace_) throw ConfigMismatch("session needs a subspace");
  if (subspace_->d() != config_.d || subspace_->d_prime() != config_.d_prime)
    throw ConfigMismatch("subspace is " + std::to_string(subspace_->d()) + "->" +
                         std::to_string(subspace_->d_prime()) + " but config asks for " + std::to_string(config_.d) +
                         "->" + std::to_string(config_.d_prime));
  box_ = subspace_->search_box(config_.box_constant);
  bandit_ = BanditState(config_.d_prime, config_.bandit_alpha);
  dim_models_.reserve(box_.size());
  incumbents_.reserve(box_.size());
  for (const auto& iv : box_) {
    dim_models_.push_back(PreferenceModel::for_box(single(iv), config_.laplace));
    incumbents_.push_back(iv.center());
  }
  full_model_ = PreferenceModel::for_box(box_, config_.laplace);

  previous_ = uniform_point();
  show(previous_, std::nullopt);
  current_ = uniform_point();
  show(current_, std::nullopt);
  last_winner_ = previous_;
}

LatentPoint Session::uniform_point() {
  LatentPoint p(static_cast<Eigen::Index>(box_.size()));
  for (std::size_t i = 0; i < box_.size(); ++i) p[static_cast<Eigen::Index>(i)] = rng_.uniform(box_[i].low, box_[i].high);
  return p;
}

void Session::show(const LatentPoint& p, std::optional<std::size_t> arm) {
  shown_.push_back({p, arm, now_ms()});
}

void Session::refit(PreferenceModel& model) {
  try {
    model.fit();
  } catch (const NewtonDivergence&) {
    model.fit_prior_fallback();
  }
}

LatentPoint Session::propose_bandit() {
  const std::size_t arm = bandit_.select_arm();
  LatentPoint next(static_cast<Eigen::Index>(box_.size()));
  for (std::size_t i = 0; i < box_.size(); ++i) next[static_cast<Eigen::Index>(i)] = incumbents_[i];
  next[static_cast<Eigen::Index>(arm)] = maximize_1d(config_.acquisition, dim_models_[arm], box_[arm]);
  current_arm_ = arm;
  return next;
}

std::optional<LatentPoint> Session::submit_feedback(bool current_won, std::optional<double> decision_time_ms) {
  if (finished()) throw SessionFinished("session budget of " + std::to_string(config_.max_comparisons) + " used up");

  history_.push_back({previous_, current_, current_won, current_arm_, history_.size() + 1, decision_time_ms});
  const LatentPoint winner = current_won ? current_ : previous_;

  switch (config_.strategy) {
    case Strategy::bandit_bo:
      if (current_arm_) {
        const std::size_t arm = *current_arm_;
        const auto a = static_cast<Eigen::Index>(arm);
        bandit_.record_reward(arm, current_won ? 1 : 0);
        dim_models_[arm].add_observation(scalar(current_[a]), scalar(previous_[a]), current_won);
        refit(dim_models_[arm]);
        incumbents_[arm] = dim_models_[arm].incumbent(single(box_[arm]))[0];
      }
      break;
    case Strategy::simple_bo:
      full_model_.add_observation(current_, previous_, current_won);
      refit(full_model_);
      break;
    case Strategy::random:
      break;
  }

  last_winner_ = winner;
  const LatentPoint pivot = config_.pivot == Pivot::winner ? winner : current_;
  if (finished()) return std::nullopt;

  LatentPoint next;
  switch (config_.strategy) {
    case Strategy::bandit_bo:
      next = propose_bandit();
      break;
    case Strategy::simple_bo:
      next = maximize_nd(config_.acquisition, full_model_, box_, config_.restarts, rng_);
      current_arm_.reset();
      break;
    case Strategy::random:
      next = uniform_point();
      current_arm_.reset();
      break;
  }
  previous_ = pivot;
  current_ = next;
  show(current_, current_arm_);
  return current_;
}

LatentPoint Session::final_choice() const { return last_winner_; }

}  // namespace latentswipe
