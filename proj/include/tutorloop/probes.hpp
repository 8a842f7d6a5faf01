#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tutorloop/policy.hpp"
#include "tutorloop/stats.hpp"

namespace tutorloop {

struct CurvePoint {
    int turn = 0;
    double cumulative_success_rate = 0.0;
    int n = 0;
    double ci95 = 0.0;  // Wilson half-width
};

// Point t = fraction of episodes with success_turn <= t, for t in 1..n_eval.
// Empty input yields an empty curve. Aborted trajectories are excluded.
std::vector<CurvePoint> success_by_turn(std::span<const Trajectory> trajectories, int n_eval);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);

// Negative log-likelihood of the ground-truth answer after each teacher turn:
// entry i scores the answer against the prefix ending at the (i+1)-th teacher
// utterance. Requires at least one teacher turn and a scoring-capable policy.
std::vector<double> loss_on_answer(const StudentPolicy& policy, const Trajectory& trajectory,
                                   const std::string& ground_truth_answer);

struct LossCurvePoint {
    int teacher_turn = 0;
    double mean_loss = 0.0;
    int n = 0;
};

std::vector<LossCurvePoint> mean_loss_by_teacher_turn(
    const StudentPolicy& policy, std::span<const Trajectory> trajectories,
    const TaskIndex& tasks, int workers = 1);

void write_loss_csv(const std::vector<LossCurvePoint>& curve, const std::string& path);

// ---- behavioural turn classification ----------------------------------------

enum class TurnType { AnswerAttempt, ClarificationQuestion, Discussion, Other };

const char* turn_type_name(TurnType t);

struct TurnTypeLabel {
    std::string trajectory_id;
    int turn = 0;
    TurnType label = TurnType::Other;
    std::string judge_id;
};

class Judge {
public:
    virtual ~Judge() = default;
    virtual std::string id() const = 0;
    virtual TurnType classify(const Observation& context,
                              const std::string& student_utterance) const = 0;
};

// Deterministic fallback so the probe suite runs offline: extractable answer
// -> answer_attempt; trailing '?' -> clarification_question; else discussion.
class RuleJudge : public Judge {
public:
    std::string id() const override { return "rule"; }
    TurnType classify(const Observation& context,
                      const std::string& student_utterance) const override;
};

// Frequencies per turn position; each row sums to 1 over the labels.
struct TurnTypeFrequencies {
    std::vector<int> turns;
    std::map<int, std::map<TurnType, double>> rows;
    // Mean count of clarification questions per conversation.
    double questions_per_conversation = 0.0;
};

struct ClassifyResult {
    std::vector<TurnTypeLabel> labels;
    TurnTypeFrequencies frequencies;
};

ClassifyResult classify_turns(std::span<const Trajectory> trajectories, const Judge& judge);

void write_labels_jsonl(const std::vector<TurnTypeLabel>& labels, const std::string& path);
void write_frequencies_csv(const TurnTypeFrequencies& freq, const std::string& path);

}  // namespace tutorloop
