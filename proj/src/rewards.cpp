#include "tutorloop/rewards.hpp"

#include <cmath>

#include "tutorloop/errors.hpp"

namespace tutorloop {

void RewardConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("gamma must be in (0, 1], got " + std::to_string(gamma));
}

std::pair<int, double> assign_reward(const Trajectory& trajectory, const RewardConfig& config) {
    config.validate();
    if (trajectory.aborted) throw AbortedTrajectory();
    if (!trajectory.dialogue.terminated)
        throw Error("assign_reward: trajectory not terminated");
    if (!trajectory.success_turn) return {0, 0.0};
    int raw = 1;
    double discounted = std::pow(config.gamma, *trajectory.success_turn - 1);
    return {raw, discounted};
}

void apply_reward(Trajectory& trajectory, const RewardConfig& config) {
    auto [raw, discounted] = assign_reward(trajectory, config);
    trajectory.raw_reward = raw;
    trajectory.discounted_reward = discounted;
}

}  // namespace tutorloop
