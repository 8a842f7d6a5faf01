#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tutorloop/episode.hpp"

namespace tutorloop {

struct EpisodeSpec {
    const TaskInstance* task = nullptr;
    std::uint64_t seed = 0;
};

struct BatchParams {
    int max_turns = 4;
    double temperature = 1.0;
    RewardConfig reward;
};

// Serial reference kernel. Kept as the ground truth the parallel kernel is
// tested against; also what workers=1 dispatches to.
std::vector<Trajectory> run_batch_serial(std::span<const EpisodeSpec> episodes,
                                         const StudentFactory& student,
                                         const TeacherPolicy& teacher,
                                         const BatchParams& params);

// OpenMP kernel over independent episodes. Output is index-ordered and
// byte-identical to the serial kernel for any worker count.
std::vector<Trajectory> run_batch_parallel(std::span<const EpisodeSpec> episodes,
                                           const StudentFactory& student,
                                           const TeacherPolicy& teacher,
                                           const BatchParams& params, int workers);

// Dispatch: workers <= 1 runs the serial kernel, 0 means all cores.
std::vector<Trajectory> run_batch(std::span<const EpisodeSpec> episodes,
                                  const StudentFactory& student, const TeacherPolicy& teacher,
                                  const BatchParams& params, int workers = 0);

// Expand (tasks x samples_per_task) into episode specs with derived seeds.
std::vector<EpisodeSpec> make_episode_specs(const std::vector<TaskInstance>& tasks,
                                            int samples_per_task, std::uint64_t base_seed);

}  // namespace tutorloop
