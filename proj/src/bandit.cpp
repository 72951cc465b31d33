#include "latentswipe/bandit.hpp"

#include "latentswipe/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace latentswipe {

BanditState::BanditState(std::size_t arms, double alpha) : alpha_(alpha), arms_(arms) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("bandit alpha must be positive");
}

std::vector<double> BanditState::ucb_scores(std::uint64_t t) const {
  std::vector<double> scores(arms_.size());
  const double log_t = t > 0 ? std::log(static_cast<double>(t)) : 0.0;
  for (std::size_t i = 0; i < arms_.size(); ++i) {
    const auto& a = arms_[i];
    if (a.pulls == 0) {
      scores[i] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double n = static_cast<double>(a.pulls);
    scores[i] = a.reward_sum / n + std::sqrt(alpha_ * log_t / n);
  }
  return scores;
}

std::size_t BanditState::select_arm() const {
  if (arms_.empty()) throw NoArms("bandit has no arms");
  const auto scores = ucb_scores(t_ + 1);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

void BanditState::record_reward(std::size_t arm, int reward) {
  if (arm >= arms_.size())
    throw InvalidArm("arm " + std::to_string(arm) + " out of range (" + std::to_string(arms_.size()) + " arms)");
  if (reward != 0 && reward != 1) throw InvalidArm("bandit rewards must be 0 or 1");
  arms_[arm].pulls += 1;
  arms_[arm].reward_sum += reward;
  t_ += 1;
}

}  // namespace latentswipe
