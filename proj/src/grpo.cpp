#include "tutorloop/grpo.hpp"

#include <cmath>

#include "tutorloop/errors.hpp"
#include "tutorloop/jsonio.hpp"
#include "tutorloop/stats.hpp"

namespace tutorloop {

void GrpoConfig::validate() const {
    if (group_size < 2) throw ConfigError("group_size must be >= 2");
    if (beta < 0) throw ConfigError("beta must be >= 0");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (batch_groups < 1) throw ConfigError("batch_groups must be >= 1");
    if (max_turns < 1) throw ConfigError("max_turns must be >= 1");
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (abort_retry_cap < 0) throw ConfigError("abort_retry_cap must be >= 0");
    reward.validate();
}

std::vector<double> group_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw GroupTooSmall();
    double m = mean(rewards);
    double sd = population_std(rewards);
    std::vector<double> a(rewards.size(), 0.0);
    if (sd == 0.0) return a;  // zero-variance group: uniform outcome carries no signal
    for (std::size_t i = 0; i < rewards.size(); ++i) a[i] = (rewards[i] - m) / sd;
    return a;
}

RolloutGroup rollout_group(const TaskInstance& task, const StudentFactory& student,
                           const TeacherPolicy& teacher, const GrpoConfig& config,
                           std::uint64_t group_seed, int policy_version, int workers) {
    config.validate();
    BatchParams params{config.max_turns, config.temperature, config.reward};

    std::vector<EpisodeSpec> specs;
    specs.reserve(static_cast<std::size_t>(config.group_size));
    for (int k = 0; k < config.group_size; ++k)
        specs.push_back({&task, derive_seed(group_seed, static_cast<std::uint64_t>(k), 0)});

    std::vector<Trajectory> trajectories = run_batch(specs, student, teacher, params, workers);

    int retries = 0;
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        std::uint64_t attempt = 1;
        while (trajectories[k].aborted) {
            if (++retries > config.abort_retry_cap) throw GroupAbort(task.task_id);
            EpisodeSpec retry{&task, derive_seed(group_seed, k, attempt++)};
            trajectories[k] = run_batch_serial({&retry, 1}, student, teacher, params)[0];
        }
    }

    RolloutGroup group;
    group.task_id = task.task_id;
    group.policy_version = policy_version;
    group.rewards.reserve(trajectories.size());
    for (auto& t : trajectories) {
        t.policy_version = policy_version;
        group.rewards.push_back(config.advantage_from_discounted
                                    ? t.discounted_reward
                                    : static_cast<double>(t.raw_reward));
    }
    group.advantages = group_advantages(group.rewards);
    group.trajectories = std::move(trajectories);
    return group;
}

namespace {

struct VisitedAction {
    std::vector<int> active;  // feature indices
    int action;
    double weight;  // A_k / (n_groups * g)
};

// Student turns whose utterances parse as toy actions, with their
// observations re-encoded from the dialogue prefix.
std::vector<VisitedAction> collect_actions(const ToySoftmaxPolicy& policy,
                                           std::span<const RolloutGroup> groups,
                                           int* skipped) {
    std::vector<VisitedAction> visited;
    const double n_groups = static_cast<double>(groups.size());
    for (const auto& group : groups) {
        const double g = static_cast<double>(group.trajectories.size());
        for (std::size_t k = 0; k < group.trajectories.size(); ++k) {
            const Trajectory& traj = group.trajectories[k];
            const double weight = group.advantages[k] / (n_groups * g);
            const auto& history = traj.dialogue.history;
            for (std::size_t i = 0; i < history.size(); ++i) {
                if (history[i].role != Role::Student) continue;
                std::optional<int> action = policy.action_index(history[i].text);
                if (!action) {
                    if (skipped) ++*skipped;
                    continue;
                }
                Observation obs = observe_prefix(history, i);
                visited.push_back({policy.active_features(obs), *action, weight});
            }
        }
    }
    return visited;
}

}  // namespace

double grpo_surrogate(const ToySoftmaxPolicy& policy, std::span<const RolloutGroup> groups,
                      const ToySoftmaxPolicy* reference, double beta) {
    std::vector<VisitedAction> visited = collect_actions(policy, groups, nullptr);
    double j = 0;
    for (const auto& v : visited) {
        std::vector<double> z = policy.logits_from_active(v.active);
        j += v.weight * (z[static_cast<std::size_t>(v.action)] - log_sum_exp(z));
    }
    if (reference != nullptr && beta != 0.0 && !visited.empty()) {
        double kl_sum = 0;
        for (const auto& v : visited) {
            std::vector<double> zp = policy.logits_from_active(v.active);
            std::vector<double> zq = reference->logits_from_active(v.active);
            double lp = log_sum_exp(zp);
            double lq = log_sum_exp(zq);
            for (std::size_t a = 0; a < zp.size(); ++a) {
                double logp = zp[a] - lp;
                kl_sum += std::exp(logp) * (logp - (zq[a] - lq));
            }
        }
        j -= beta * kl_sum / static_cast<double>(visited.size());
    }
    return j;
}

std::vector<double> grpo_gradient(const ToySoftmaxPolicy& policy,
                                  std::span<const RolloutGroup> groups,
                                  const ToySoftmaxPolicy* reference, double beta,
                                  StepReport* report) {
    const int actions = policy.action_count();
    std::vector<double> grad(policy.theta().size(), 0.0);

    int skipped = 0;
    std::vector<VisitedAction> visited = collect_actions(policy, groups, &skipped);

    // advantage-weighted score function: grad log pi(a|o) = phi (x) (e_a - pi)
    for (const auto& v : visited) {
        if (v.weight == 0.0) continue;
        std::vector<double> probs = softmax(policy.logits_from_active(v.active));
        for (int f : v.active) {
            double* row = grad.data() + static_cast<std::size_t>(f) * actions;
            for (int a = 0; a < actions; ++a) row[a] -= v.weight * probs[static_cast<std::size_t>(a)];
            row[v.action] += v.weight;
        }
    }

    // KL penalty and reporting against the reference snapshot
    double kl_mean = 0;
    if (reference != nullptr && !visited.empty()) {
        const double n_obs = static_cast<double>(visited.size());
        for (const auto& v : visited) {
            std::vector<double> zp = policy.logits_from_active(v.active);
            std::vector<double> zq = reference->logits_from_active(v.active);
            double lp = log_sum_exp(zp);
            double lq = log_sum_exp(zq);
            double kl_o = 0;
            std::vector<double> logdiff(zp.size());
            for (std::size_t a = 0; a < zp.size(); ++a) {
                double logp = zp[a] - lp;
                logdiff[a] = logp - (zq[a] - lq);
                kl_o += std::exp(logp) * logdiff[a];
            }
            kl_mean += kl_o / n_obs;
            if (beta != 0.0) {
                // dKL/dz_a = p_a * (log(p_a/q_a) - KL)
                for (int f : v.active) {
                    double* row = grad.data() + static_cast<std::size_t>(f) * actions;
                    for (std::size_t a = 0; a < zp.size(); ++a) {
                        double p_a = std::exp(zp[a] - lp);
                        row[a] -= beta / n_obs * p_a * (logdiff[a] - kl_o);
                    }
                }
            }
        }
    }

    for (double gv : grad) {
        if (!std::isfinite(gv))
            throw NonFiniteGradient("non-finite gradient component; policy version " +
                                    std::to_string(policy.version()));
    }

    if (report != nullptr) {
        report->skipped_actions = skipped;
        report->kl_to_reference = kl_mean;
    }
    return grad;
}

StepReport policy_gradient_step(ToySoftmaxPolicy& policy, std::span<const RolloutGroup> groups,
                                const ToySoftmaxPolicy* reference, const GrpoConfig& config) {
    config.validate();
    StepReport report;
    report.groups = static_cast<int>(groups.size());
    if (groups.empty()) return report;

    std::vector<double> raw;
    std::vector<double> discounted;
    std::vector<double> abs_advantages;
    for (const auto& group : groups) {
        for (std::size_t k = 0; k < group.trajectories.size(); ++k) {
            raw.push_back(group.trajectories[k].raw_reward);
            discounted.push_back(group.trajectories[k].discounted_reward);
            abs_advantages.push_back(std::abs(group.advantages[k]));
        }
    }
    report.episodes = static_cast<int>(raw.size());
    report.mean_reward_raw = mean(raw);
    report.mean_reward_discounted = mean(discounted);
    report.mean_abs_advantage = mean(abs_advantages);

    std::vector<double> grad = grpo_gradient(policy, groups, reference, config.beta, &report);

    double norm_sq = 0;
    for (double gv : grad) norm_sq += gv * gv;
    report.grad_norm = std::sqrt(norm_sq);

    std::vector<double>& theta = policy.theta();
    for (std::size_t i = 0; i < theta.size(); ++i)
        theta[i] += config.learning_rate * grad[i];
    policy.bump_version();
    return report;
}

std::vector<TrainingRecord> rl_batch_records(std::span<const RolloutGroup> groups) {
    std::vector<TrainingRecord> records;
    for (const auto& group : groups) {
        for (std::size_t k = 0; k < group.trajectories.size(); ++k)
            records.push_back(to_training_record(group.trajectories[k], group.advantages[k]));
    }
    return records;
}

void export_rl_batch(std::span<const RolloutGroup> groups, const std::string& path) {
    write_records_jsonl(rl_batch_records(groups), path);
}

std::vector<StepReport> train_grpo(ToySoftmaxPolicy& policy,
                                   const std::vector<TaskInstance>& tasks,
                                   const TeacherPolicy& teacher, const GrpoConfig& config,
                                   int steps, int workers, const TrainCallbacks& callbacks) {
    config.validate();
    if (tasks.empty()) throw ConfigError("train_grpo: no tasks");
    if (steps < 1) throw ConfigError("train_grpo: steps must be >= 1");

    const ToySoftmaxPolicy reference = policy.make_snapshot();
    std::vector<StepReport> reports;
    reports.reserve(static_cast<std::size_t>(steps));

    for (int step = 1; step <= steps; ++step) {
        std::vector<RolloutGroup> groups;
        groups.reserve(static_cast<std::size_t>(config.batch_groups));
        for (int i = 0; i < config.batch_groups; ++i) {
            std::uint64_t pick = derive_seed(config.seed ^ 0x7461736b73ULL,
                                             static_cast<std::uint64_t>(step),
                                             static_cast<std::uint64_t>(i));
            const TaskInstance& task = tasks[pick % tasks.size()];
            std::uint64_t group_seed = derive_seed(config.seed, static_cast<std::uint64_t>(step),
                                                   static_cast<std::uint64_t>(i));
            try {
                groups.push_back(rollout_group(task, ToyStudentFactory(policy), teacher, config,
                                               group_seed, policy.version(), workers));
            } catch (const GroupAbort&) {
                if (callbacks.on_dropped_group) callbacks.on_dropped_group({step, task.task_id});
            }
        }
        if (callbacks.on_groups) callbacks.on_groups(step, groups);
        StepReport report = policy_gradient_step(policy, groups, &reference, config);
        report.step = step;
        if (callbacks.on_step) callbacks.on_step(report);
        reports.push_back(report);
    }
    return reports;
}

}  // namespace tutorloop
