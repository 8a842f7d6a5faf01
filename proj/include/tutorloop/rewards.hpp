#pragma once

#include <utility>

#include "tutorloop/dialogue.hpp"

namespace tutorloop {

// Trajectory-level binary reward with turn discounting. Turn 1 is undiscounted:
// discounted = raw * gamma^(success_turn - 1).
struct RewardConfig {
    double gamma = 0.7;

    void validate() const;
};

// Pure. Requires a terminated, non-aborted trajectory.
std::pair<int, double> assign_reward(const Trajectory& trajectory, const RewardConfig& config);

// Stores the assigned rewards back into the trajectory.
void apply_reward(Trajectory& trajectory, const RewardConfig& config);

}  // namespace tutorloop
