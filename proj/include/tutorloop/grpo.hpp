#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tutorloop/runner.hpp"
#include "tutorloop/toy_policy.hpp"

namespace tutorloop {

// g trajectories sharing one task, with group-normalised advantages.
struct RolloutGroup {
    std::string task_id;
    int policy_version = 0;
    std::vector<Trajectory> trajectories;
    std::vector<double> rewards;     // r_k fed to the normaliser
    std::vector<double> advantages;  // A_k
};

struct GrpoConfig {
    int group_size = 8;   // g
    double beta = 0.0;    // KL coefficient; 0 disables the penalty
    double learning_rate = 0.5;
    int batch_groups = 8;
    int max_turns = 4;    // N
    double temperature = 1.0;
    std::uint64_t seed = 0;
    // extra episodes allowed per group before the group is dropped
    int abort_retry_cap = 8;
    // feed discounted rewards into the normaliser (raw when false)
    bool advantage_from_discounted = true;
    RewardConfig reward;

    void validate() const;
};

// A_k = (r_k - mean(r)) / std(r), population std. Zero-variance groups get
// all-zero advantages. Throws GroupTooSmall for fewer than 2 rewards.
std::vector<double> group_advantages(std::span<const double> rewards);

// g independent episodes with distinct derived seeds. Aborted episodes are
// re-sampled up to the retry cap, after which GroupAbort is thrown; groups
// are never padded.
RolloutGroup rollout_group(const TaskInstance& task, const StudentFactory& student,
                           const TeacherPolicy& teacher, const GrpoConfig& config,
                           std::uint64_t group_seed, int policy_version = 0, int workers = 1);

struct StepReport {
    int step = 0;
    int groups = 0;
    int episodes = 0;
    double mean_reward_raw = 0;
    double mean_reward_discounted = 0;
    double mean_abs_advantage = 0;
    double kl_to_reference = 0;
    double grad_norm = 0;
    int skipped_actions = 0;  // utterances that did not parse as toy actions
};

// Surrogate the gradient ascends, as a pure function of theta with the
// rollouts held fixed:
//   J = mean_groups[(1/g) sum_k A_k * sum_t log pi(a_t|o_t)]
//       - beta * mean_obs KL(pi || ref)
// The finite-difference acceptance check differentiates exactly this.
double grpo_surrogate(const ToySoftmaxPolicy& policy, std::span<const RolloutGroup> groups,
                      const ToySoftmaxPolicy* reference, double beta);

// Closed-form gradient of grpo_surrogate with respect to theta.
// Throws NonFiniteGradient if any component is not finite.
std::vector<double> grpo_gradient(const ToySoftmaxPolicy& policy,
                                  std::span<const RolloutGroup> groups,
                                  const ToySoftmaxPolicy* reference, double beta,
                                  StepReport* report = nullptr);

// One SGD ascent step on the surrogate; bumps the policy version.
StepReport policy_gradient_step(ToySoftmaxPolicy& policy, std::span<const RolloutGroup> groups,
                                const ToySoftmaxPolicy* reference, const GrpoConfig& config);

// One TrainingRecord per trajectory, advantage = its A_k.
void export_rl_batch(std::span<const RolloutGroup> groups, const std::string& path);
std::vector<TrainingRecord> rl_batch_records(std::span<const RolloutGroup> groups);

struct DroppedGroup {
    int step;
    std::string task_id;
};

struct TrainCallbacks {
    std::function<void(const StepReport&)> on_step;
    std::function<void(const DroppedGroup&)> on_dropped_group;
    // Called with each step's finalized groups before the gradient step.
    std::function<void(int step, std::span<const RolloutGroup>)> on_groups;
};

// Full training loop: per step, sample batch_groups tasks, roll out groups,
// apply one gradient step. The KL reference is a snapshot taken on entry.
std::vector<StepReport> train_grpo(ToySoftmaxPolicy& policy,
                                   const std::vector<TaskInstance>& tasks,
                                   const TeacherPolicy& teacher, const GrpoConfig& config,
                                   int steps, int workers = 1,
                                   const TrainCallbacks& callbacks = {});

}  // namespace tutorloop
