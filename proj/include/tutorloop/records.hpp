#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tutorloop/dialogue.hpp"

namespace tutorloop {

// A dialogue flattened to role-tagged segments with loss masks: the export
// unit shared by the SFT and RL pipelines. Student segments train, teacher
// segments do not.
struct Segment {
    Role role = Role::Teacher;
    std::string text;
    bool train = false;
};

struct TrainingRecord {
    std::string task_id;
    double advantage = 1.0;
    std::vector<Segment> segments;
    int reward_raw = 0;
    double reward_discounted = 0.0;
    std::optional<int> success_turn;
    std::uint64_t seed = 0;
    int policy_version = 0;
};

TrainingRecord to_training_record(const Trajectory& trajectory, double advantage);

// Hash of the serialized history, used to deduplicate identical dialogues.
std::uint64_t dialogue_hash(const Trajectory& trajectory);

}  // namespace tutorloop
