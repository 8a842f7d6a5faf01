#pragma once

#include <string>
#include <vector>

#include "tutorloop/offline.hpp"
#include "tutorloop/policy.hpp"

namespace tutorloop {

// P(t) = base^t for an incorrect turn, 0 for a correct one. t is 1-based:
// the first student turn fires with probability base itself.
double injection_probability(int t, bool turn_was_correct, double base = 0.75);

struct InjectionEvent {
    std::string trajectory_id;
    int turn = 0;
    double p = 0.0;
    bool fired = false;
    std::string question_text;  // nonempty iff fired
    std::string generator;      // "template", "privileged_prompted", ...
};

// Produces one information-seeking question from the student's prior attempt
// and the teacher's private knowledge.
class QuestionGenerator {
public:
    virtual ~QuestionGenerator() = default;
    virtual std::string name() const = 0;
    virtual std::string generate(const std::string& student_attempt,
                                 const PrivateKnowledge& knowledge, Rng& rng) const = 0;
};

// Deterministic desk-scale generator; needs no remote model.
class TemplateQuestionGenerator : public QuestionGenerator {
public:
    std::string name() const override { return "template"; }
    std::string generate(const std::string& student_attempt,
                         const PrivateKnowledge& knowledge, Rng& rng) const override;
};

struct QuestionValidation {
    bool ok = false;
    std::string why;
};

// A valid question ends with '?' and never contains the ground-truth answer
// string verbatim.
QuestionValidation validate_question(const std::string& question,
                                     const PrivateKnowledge& knowledge);

// Generate + validate; one regeneration on a leaked answer, then fall back to
// the template generator. Requires knowledge.kind != empty.
std::string generate_privileged_question(const std::string& student_attempt,
                                         const PrivateKnowledge& knowledge,
                                         const QuestionGenerator& generator, Rng& rng,
                                         std::string* generator_used = nullptr);

struct QprimeOptions {
    std::uint64_t seed = 0;
    int max_turns = 4;
    RewardConfig reward;
    double temperature = 1.0;
    double decay_base = 0.75;
    bool deduplicate = true;
    int workers = 1;
    std::string run_id = "qprime";
};

struct QprimeResult {
    SftDataset dataset;                    // successful re-rolled dialogues only
    std::vector<InjectionEvent> events;    // one per student turn processed
    std::vector<Trajectory> trajectories;  // the re-rolled dialogues (all outcomes)
};

// Replays each source trajectory; each not-correct student turn fires with
// probability decay_base^t (per-(trajectory, turn) RNG, so ordering never
// matters). A fired turn is replaced by a privileged question, the teacher
// answers it, and the dialogue is re-rolled from there with `student`.
QprimeResult build_qprimed_dataset(const std::vector<Trajectory>& sources,
                                   const TaskIndex& tasks, const StudentFactory& student,
                                   const TeacherPolicy& teacher,
                                   const QuestionGenerator& generator,
                                   const QprimeOptions& options);

void write_injection_events_jsonl(const std::vector<InjectionEvent>& events,
                                  const std::string& path);
std::vector<InjectionEvent> read_injection_events_jsonl(const std::string& path);

}  // namespace tutorloop
