#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tutorloop/dialogue.hpp"
#include "tutorloop/rng.hpp"
#include "tutorloop/tasks.hpp"

namespace tutorloop {

// A student policy maps an observation (the public history) to an utterance.
// Implementations must be safe to call concurrently from multiple episodes.
class StudentPolicy {
public:
    virtual ~StudentPolicy() = default;
    virtual std::string kind() const = 0;
    virtual std::string act(const Observation& obs, double temperature, Rng& rng) const = 0;
    virtual bool scoring_capable() const { return false; }
    // Total log-probability of `target` given `obs`. Throws NotScoringCapable
    // unless scoring_capable().
    virtual double score(const Observation& obs, const std::string& target) const;
};

// The teacher sees the full state, including private knowledge.
class TeacherPolicy {
public:
    virtual ~TeacherPolicy() = default;
    virtual std::string kind() const = 0;
    // Precondition: state.history ends with the student utterance awaiting a reply.
    virtual std::string reply(const TaskInstance& task, const DialogueState& state,
                              Rng& rng) const = 0;
};

// Binds a student policy to a concrete task before an episode starts. Scripted
// test students need the task; learned and remote students ignore it.
class StudentFactory {
public:
    virtual ~StudentFactory() = default;
    virtual std::unique_ptr<StudentPolicy> make(const TaskInstance& task) const = 0;
};

// ---- scripted students -----------------------------------------------------

// Emits the correct answer immediately, reading nothing.
std::unique_ptr<StudentPolicy> make_oracle_student(const TaskInstance& task);
// Emits a wrong attempt every turn, deterministically.
std::unique_ptr<StudentPolicy> make_always_wrong_student(const TaskInstance& task);
// Wrong attempts until turn k, then the correct answer.
std::unique_ptr<StudentPolicy> make_answer_after_turn_student(const TaskInstance& task, int k);
// Replays a fixed list of utterances; repeats the last one when exhausted.
std::unique_ptr<StudentPolicy> make_fixed_sequence_student(std::vector<std::string> lines);
// Emits the same reply regardless of observation.
std::unique_ptr<StudentPolicy> make_echo_student(std::string reply);
// Toy-domain bisection from observed higher/lower feedback only.
std::unique_ptr<StudentPolicy> make_bisect_student(int domain);

struct ScriptedStudentSpec {
    enum class Kind { Oracle, AlwaysWrong, AnswerAfterTurn, FixedSequence, Echo, Bisect };
    Kind kind = Kind::Oracle;
    int k = 1;                        // AnswerAfterTurn
    int domain = 64;                  // Bisect
    std::vector<std::string> lines;   // FixedSequence / Echo (first line)
};

class ScriptedStudentFactory : public StudentFactory {
public:
    explicit ScriptedStudentFactory(ScriptedStudentSpec spec) : spec_(std::move(spec)) {}
    std::unique_ptr<StudentPolicy> make(const TaskInstance& task) const override;

private:
    ScriptedStudentSpec spec_;
};

// ---- scripted teacher --------------------------------------------------------

// Template-based teacher over scripted_teacher_reply(); deterministic.
class ScriptedTeacher : public TeacherPolicy {
public:
    std::string kind() const override { return "scripted"; }
    std::string reply(const TaskInstance& task, const DialogueState& state,
                      Rng& rng) const override;
};

// Test fixture: throws RemoteError on selected turns to simulate infrastructure
// failures; otherwise defers to the scripted teacher.
class FailingTeacher : public TeacherPolicy {
public:
    explicit FailingTeacher(int fail_every = 1) : fail_every_(fail_every) {}
    std::string kind() const override { return "failing"; }
    std::string reply(const TaskInstance& task, const DialogueState& state,
                      Rng& rng) const override;

private:
    ScriptedTeacher inner_;
    int fail_every_;
};

}  // namespace tutorloop
