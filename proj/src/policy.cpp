#include "tutorloop/policy.hpp"

#include <algorithm>

#include "tutorloop/errors.hpp"

namespace tutorloop {

double StudentPolicy::score(const Observation&, const std::string&) const {
    throw NotScoringCapable(kind());
}

namespace {

int observed_student_turns(const Observation& obs) {
    int n = 0;
    for (const auto& u : obs)
        if (u.role == Role::Student) ++n;
    return n;
}

std::string correct_reply_for(const TaskInstance& task) {
    if (const auto* toy = std::get_if<ToyGuess>(&task.checker))
        return "GUESS " + std::to_string(toy->secret);
    return "ANSWER: " + task.ground_truth_answer();
}

std::string wrong_reply_for(const TaskInstance& task) {
    if (const auto* toy = std::get_if<ToyGuess>(&task.checker)) {
        int wrong = (toy->secret + 1) % toy->domain;
        return "GUESS " + std::to_string(wrong);
    }
    return "ANSWER: " + task.ground_truth_answer() + "_but_wrong";
}

class OracleStudent : public StudentPolicy {
public:
    explicit OracleStudent(std::string reply) : reply_(std::move(reply)) {}
    std::string kind() const override { return "scripted"; }
    std::string act(const Observation&, double, Rng&) const override { return reply_; }

private:
    std::string reply_;
};

class AlwaysWrongStudent : public StudentPolicy {
public:
    explicit AlwaysWrongStudent(std::string reply) : reply_(std::move(reply)) {}
    std::string kind() const override { return "scripted"; }
    std::string act(const Observation&, double, Rng&) const override { return reply_; }

private:
    std::string reply_;
};

class AnswerAfterTurnStudent : public StudentPolicy {
public:
    AnswerAfterTurnStudent(std::string wrong, std::string correct, int k)
        : wrong_(std::move(wrong)), correct_(std::move(correct)), k_(k) {}
    std::string kind() const override { return "scripted"; }
    std::string act(const Observation& obs, double, Rng&) const override {
        int turn = observed_student_turns(obs) + 1;
        return turn >= k_ ? correct_ : wrong_;
    }

private:
    std::string wrong_;
    std::string correct_;
    int k_;
};

class FixedSequenceStudent : public StudentPolicy {
public:
    explicit FixedSequenceStudent(std::vector<std::string> lines) : lines_(std::move(lines)) {
        if (lines_.empty()) throw ConfigError("fixed_sequence student needs at least one line");
    }
    std::string kind() const override { return "scripted"; }
    std::string act(const Observation& obs, double, Rng&) const override {
        std::size_t turn = static_cast<std::size_t>(observed_student_turns(obs));
        return lines_[std::min(turn, lines_.size() - 1)];
    }

private:
    std::vector<std::string> lines_;
};

// Tracks the interval implied by GUESS/higher/lower exchanges and guesses its
// midpoint. Reads only the observation: a hygiene-clean optimal toy player.
class BisectStudent : public StudentPolicy {
public:
    explicit BisectStudent(int domain) : domain_(domain) {}
    std::string kind() const override { return "scripted"; }
    std::string act(const Observation& obs, double, Rng&) const override {
        int lo = 0;
        int hi = domain_ - 1;
        std::optional<int> pending;
        for (const auto& u : obs) {
            if (u.role == Role::Student) {
                pending = extract_guess(u.text);
            } else if (pending) {
                if (u.text == "higher") lo = std::max(lo, *pending + 1);
                if (u.text == "lower") hi = std::min(hi, *pending - 1);
                pending.reset();
            }
        }
        if (lo > hi) {  // contradictory feedback; start over
            lo = 0;
            hi = domain_ - 1;
        }
        return "GUESS " + std::to_string(lo + (hi - lo) / 2);
    }

private:
    int domain_;
};

}  // namespace

std::unique_ptr<StudentPolicy> make_oracle_student(const TaskInstance& task) {
    return std::make_unique<OracleStudent>(correct_reply_for(task));
}

std::unique_ptr<StudentPolicy> make_always_wrong_student(const TaskInstance& task) {
    return std::make_unique<AlwaysWrongStudent>(wrong_reply_for(task));
}

std::unique_ptr<StudentPolicy> make_answer_after_turn_student(const TaskInstance& task, int k) {
    return std::make_unique<AnswerAfterTurnStudent>(wrong_reply_for(task),
                                                    correct_reply_for(task), k);
}

std::unique_ptr<StudentPolicy> make_fixed_sequence_student(std::vector<std::string> lines) {
    return std::make_unique<FixedSequenceStudent>(std::move(lines));
}

std::unique_ptr<StudentPolicy> make_echo_student(std::string reply) {
    return std::make_unique<OracleStudent>(std::move(reply));
}

std::unique_ptr<StudentPolicy> make_bisect_student(int domain) {
    return std::make_unique<BisectStudent>(domain);
}

std::unique_ptr<StudentPolicy> ScriptedStudentFactory::make(const TaskInstance& task) const {
    switch (spec_.kind) {
        case ScriptedStudentSpec::Kind::Oracle:
            return make_oracle_student(task);
        case ScriptedStudentSpec::Kind::AlwaysWrong:
            return make_always_wrong_student(task);
        case ScriptedStudentSpec::Kind::AnswerAfterTurn:
            return make_answer_after_turn_student(task, spec_.k);
        case ScriptedStudentSpec::Kind::FixedSequence:
            return make_fixed_sequence_student(spec_.lines);
        case ScriptedStudentSpec::Kind::Echo:
            return make_echo_student(spec_.lines.empty() ? "..." : spec_.lines[0]);
        case ScriptedStudentSpec::Kind::Bisect: {
            int domain = spec_.domain;
            if (const auto* toy = std::get_if<ToyGuess>(&task.checker)) domain = toy->domain;
            return make_bisect_student(domain);
        }
    }
    throw ConfigError("unknown scripted student kind");
}

std::string ScriptedTeacher::reply(const TaskInstance& task, const DialogueState& state,
                                   Rng&) const {
    return scripted_teacher_reply(task, state.history, state.knowledge);
}

std::string FailingTeacher::reply(const TaskInstance& task, const DialogueState& state,
                                  Rng& rng) const {
    if (fail_every_ <= 1 || state.student_turns() % fail_every_ == 0)
        throw RemoteError(RemoteError::Kind::Timeout, "simulated teacher outage");
    return inner_.reply(task, state, rng);
}

}  // namespace tutorloop
