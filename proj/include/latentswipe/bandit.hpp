#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace latentswipe {

inline constexpr double kDefaultBanditAlpha = 0.5;

struct ArmStats {
  std::uint64_t pulls = 0;
  double reward_sum = 0.0;

  double mean_reward() const { return pulls ? reward_sum / static_cast<double>(pulls) : 0.0; }
  bool operator==(const ArmStats&) const = default;
};

// UCB bandit over subspace dimensions with 0/1 rewards:
//   U_i = r_i + sqrt(alpha * ln t / N_i),  unpulled arms score +inf.
class BanditState {
 public:
  BanditState() = default;
  BanditState(std::size_t arms, double alpha = kDefaultBanditAlpha);

  std::size_t arms() const { return arms_.size(); }
  double alpha() const { return alpha_; }
  std::uint64_t t() const { return t_; }
  const std::vector<ArmStats>& stats() const { return arms_; }

  // Scores using the stored t.
  std::vector<double> ucb_scores() const { return ucb_scores(t_); }
  std::vector<double> ucb_scores(std::uint64_t t) const;

  // Argmax of the scores at t + 1; lowest index wins ties. Throws NoArms.
  std::size_t select_arm() const;

  // Throws InvalidArm for an out-of-range arm or a reward other than 0/1.
  void record_reward(std::size_t arm, int reward);

  bool operator==(const BanditState&) const = default;

 private:
  double alpha_ = kDefaultBanditAlpha;
  std::uint64_t t_ = 0;
  std::vector<ArmStats> arms_;
};

}  // namespace latentswipe
