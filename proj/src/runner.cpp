#include "tutorloop/runner.hpp"

#include <exception>
#include <string>

#include <omp.h>

#include "tutorloop/errors.hpp"

namespace tutorloop {

namespace {

Trajectory run_one(const EpisodeSpec& spec, const StudentFactory& student,
                   const TeacherPolicy& teacher, const BatchParams& params) {
    std::unique_ptr<StudentPolicy> policy = student.make(*spec.task);
    Trajectory traj = run_episode(*spec.task, *policy, teacher, params.max_turns, spec.seed,
                                  params.temperature);
    if (!traj.aborted) apply_reward(traj, params.reward);
    return traj;
}

}  // namespace

std::vector<Trajectory> run_batch_serial(std::span<const EpisodeSpec> episodes,
                                         const StudentFactory& student,
                                         const TeacherPolicy& teacher,
                                         const BatchParams& params) {
    params.reward.validate();
    std::vector<Trajectory> out;
    out.reserve(episodes.size());
    for (const EpisodeSpec& spec : episodes) out.push_back(run_one(spec, student, teacher, params));
    return out;
}

std::vector<Trajectory> run_batch_parallel(std::span<const EpisodeSpec> episodes,
                                           const StudentFactory& student,
                                           const TeacherPolicy& teacher,
                                           const BatchParams& params, int workers) {
    params.reward.validate();
    if (workers <= 0) workers = omp_get_max_threads();
    std::vector<Trajectory> out(episodes.size());
    std::exception_ptr failure = nullptr;
    const auto n = static_cast<std::int64_t>(episodes.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] =
                run_one(episodes[static_cast<std::size_t>(i)], student, teacher, params);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<Trajectory> run_batch(std::span<const EpisodeSpec> episodes,
                                  const StudentFactory& student, const TeacherPolicy& teacher,
                                  const BatchParams& params, int workers) {
    if (workers == 1) return run_batch_serial(episodes, student, teacher, params);
    return run_batch_parallel(episodes, student, teacher, params, workers);
}

std::vector<EpisodeSpec> make_episode_specs(const std::vector<TaskInstance>& tasks,
                                            int samples_per_task, std::uint64_t base_seed) {
    if (samples_per_task < 1) throw ConfigError("samples_per_task must be >= 1");
    std::vector<EpisodeSpec> specs;
    specs.reserve(tasks.size() * static_cast<std::size_t>(samples_per_task));
    std::uint64_t index = 0;
    for (const auto& task : tasks) {
        for (int s = 0; s < samples_per_task; ++s) {
            specs.push_back({&task, derive_seed(base_seed, fnv1a64(task.task_id), index)});
            ++index;
        }
    }
    return specs;
}

}  // namespace tutorloop
