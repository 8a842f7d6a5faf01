#include "tutorloop/probes.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"

namespace tutorloop {

std::vector<CurvePoint> success_by_turn(std::span<const Trajectory> trajectories, int n_eval) {
    std::vector<CurvePoint> curve;
    if (trajectories.empty()) return curve;
    if (n_eval < 1) throw ConfigError("n_eval must be >= 1");
    int n = 0;
    for (const auto& t : trajectories)
        if (!t.aborted) ++n;
    if (n == 0) return curve;
    for (int turn = 1; turn <= n_eval; ++turn) {
        int successes = 0;
        for (const auto& t : trajectories) {
            if (t.aborted) continue;
            if (t.success_turn && *t.success_turn <= turn) ++successes;
        }
        WilsonInterval w = wilson95(successes, n);
        curve.push_back({turn, w.rate, n, w.half_width});
    }
    return curve;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "turn,cumulative_success_rate,n,ci95\n";
    for (const auto& p : curve) {
        out << p.turn << "," << p.cumulative_success_rate << "," << p.n << "," << p.ci95
            << "\n";
    }
}

std::vector<double> loss_on_answer(const StudentPolicy& policy, const Trajectory& trajectory,
                                   const std::string& ground_truth_answer) {
    if (!policy.scoring_capable()) throw NotScoringCapable(policy.kind());
    const auto& history = trajectory.dialogue.history;
    std::vector<double> losses;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].role != Role::Teacher) continue;
        Observation prefix = observe_prefix(history, i + 1);
        losses.push_back(-policy.score(prefix, ground_truth_answer));
    }
    if (losses.empty()) throw Error("loss_on_answer: trajectory has no teacher turn");
    return losses;
}

std::vector<LossCurvePoint> mean_loss_by_teacher_turn(
    const StudentPolicy& policy, std::span<const Trajectory> trajectories,
    const TaskIndex& tasks, int workers) {
    if (!policy.scoring_capable()) throw NotScoringCapable(policy.kind());
    std::vector<std::vector<double>> per_traj(trajectories.size());
    std::exception_ptr failure = nullptr;
    const auto n = static_cast<std::int64_t>(trajectories.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers > 0 ? workers : 1) \
    if (workers != 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            const Trajectory& traj = trajectories[static_cast<std::size_t>(i)];
            if (traj.aborted) continue;
            auto it = tasks.find(traj.task_id);
            if (it == tasks.end())
                throw ConfigError("no task '" + traj.task_id + "' for trajectory");
            std::string answer = it->second.ground_truth_answer();
            if (const auto* toy = std::get_if<ToyGuess>(&it->second.checker))
                answer = "GUESS " + std::to_string(toy->secret);
            per_traj[static_cast<std::size_t>(i)] = loss_on_answer(policy, traj, answer);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<LossCurvePoint> curve;
    for (std::size_t turn = 0;; ++turn) {
        double sum = 0;
        int count = 0;
        for (const auto& losses : per_traj) {
            if (turn < losses.size()) {
                sum += losses[turn];
                ++count;
            }
        }
        if (count == 0) break;
        curve.push_back({static_cast<int>(turn) + 1, sum / count, count});
    }
    return curve;
}

void write_loss_csv(const std::vector<LossCurvePoint>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "teacher_turn,mean_loss,n\n";
    for (const auto& p : curve) out << p.teacher_turn << "," << p.mean_loss << "," << p.n << "\n";
}

// ---- classification ----------------------------------------------------------

const char* turn_type_name(TurnType t) {
    switch (t) {
        case TurnType::AnswerAttempt: return "answer_attempt";
        case TurnType::ClarificationQuestion: return "clarification_question";
        case TurnType::Discussion: return "discussion";
        case TurnType::Other: return "other";
    }
    return "other";
}

TurnType RuleJudge::classify(const Observation&, const std::string& utterance) const {
    if (has_extractable_answer(utterance)) return TurnType::AnswerAttempt;
    if (is_question(utterance)) return TurnType::ClarificationQuestion;
    return TurnType::Discussion;
}

ClassifyResult classify_turns(std::span<const Trajectory> trajectories, const Judge& judge) {
    ClassifyResult result;
    std::map<int, std::map<TurnType, int>> counts;
    int conversations = 0;
    int total_questions = 0;

    for (const auto& traj : trajectories) {
        if (traj.aborted) continue;
        ++conversations;
        const auto& history = traj.dialogue.history;
        int turn = 0;
        for (std::size_t i = 0; i < history.size(); ++i) {
            if (history[i].role != Role::Student) continue;
            ++turn;
            TurnType label = judge.classify(observe_prefix(history, i), history[i].text);
            result.labels.push_back({traj.id(), turn, label, judge.id()});
            counts[turn][label] += 1;
            if (label == TurnType::ClarificationQuestion) ++total_questions;
        }
    }

    for (const auto& [turn, row] : counts) {
        int total = 0;
        for (const auto& [label, c] : row) total += c;
        result.frequencies.turns.push_back(turn);
        for (const auto& [label, c] : row)
            result.frequencies.rows[turn][label] = static_cast<double>(c) / total;
    }
    if (conversations > 0)
        result.frequencies.questions_per_conversation =
            static_cast<double>(total_questions) / conversations;
    return result;
}

void write_labels_jsonl(const std::vector<TurnTypeLabel>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    for (const auto& l : labels) {
        nlohmann::ordered_json j;
        j["trajectory_id"] = l.trajectory_id;
        j["turn"] = l.turn;
        j["label"] = turn_type_name(l.label);
        j["judge_id"] = l.judge_id;
        out << j.dump() << "\n";
    }
}

void write_frequencies_csv(const TurnTypeFrequencies& freq, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "turn,answer_attempt,clarification_question,discussion,other\n";
    for (int turn : freq.turns) {
        const auto& row = freq.rows.at(turn);
        auto get = [&](TurnType t) {
            auto it = row.find(t);
            return it == row.end() ? 0.0 : it->second;
        };
        out << turn << "," << get(TurnType::AnswerAttempt) << ","
            << get(TurnType::ClarificationQuestion) << "," << get(TurnType::Discussion) << ","
            << get(TurnType::Other) << "\n";
    }
}

}  // namespace tutorloop
