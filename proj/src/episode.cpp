#include "tutorloop/episode.hpp"

#include "tutorloop/errors.hpp"

namespace tutorloop {

DialogueState initial_state(const TaskInstance& task) {
    DialogueState state;
    Utterance opening;
    opening.role = Role::Teacher;
    opening.text = task.problem_text;
    opening.turn_index = 1;
    state.history.push_back(std::move(opening));
    state.knowledge = task.initial_knowledge();
    state.turn = 1;
    return state;
}

DialogueState step(DialogueState state, const std::string& student_utterance,
                   const TaskInstance& task, const TeacherPolicy& teacher, int max_turns,
                   Rng& rng) {
    if (state.terminated) throw StepOnTerminated();
    if (student_utterance.empty()) throw Error("step: empty student utterance");

    CheckResult result = check(task, student_utterance);

    Utterance attempt;
    attempt.role = Role::Student;
    attempt.text = student_utterance;
    attempt.turn_index = static_cast<int>(state.history.size()) + 1;
    attempt.meta["verdict"] = verdict_name(result.verdict);
    attempt.meta["report"] = result.report;
    state.history.push_back(std::move(attempt));

    if (state.knowledge.kind == KnowledgeKind::VerifierLog)
        state.knowledge.reports.push_back(result.report);

    if (result.verdict == Verdict::Correct) {
        state.terminated = true;
        state.success = true;
        return state;
    }
    if (state.turn >= max_turns) {
        state.terminated = true;
        state.success = false;
        return state;
    }

    std::string reply = teacher.reply(task, state, rng);
    Utterance feedback;
    feedback.role = Role::Teacher;
    feedback.text = std::move(reply);
    feedback.turn_index = static_cast<int>(state.history.size()) + 1;
    state.history.push_back(std::move(feedback));

    // one reveal per teacher turn in shard mode
    if (state.knowledge.kind == KnowledgeKind::ShardQueue &&
        !state.knowledge.unrevealed.empty()) {
        state.knowledge.unrevealed.erase(state.knowledge.unrevealed.begin());
    }

    state.turn += 1;
    return state;
}

Trajectory run_episode(const TaskInstance& task, const StudentPolicy& student,
                       const TeacherPolicy& teacher, int max_turns, std::uint64_t seed,
                       double temperature) {
    if (max_turns < 1) throw ConfigError("max_turns must be >= 1");
    int effective = task.effective_max_turns(max_turns);

    Trajectory traj;
    traj.task_id = task.task_id;
    traj.seed = seed;

    Rng rng(seed);
    DialogueState state = initial_state(task);
    try {
        while (!state.terminated) {
            Observation obs = observe(state);
            std::string utterance = student.act(obs, temperature, rng);
            if (utterance.empty()) utterance = "(empty reply)";
            state = step(std::move(state), utterance, task, teacher, effective, rng);
        }
    } catch (const RemoteError& e) {
        traj.dialogue = std::move(state);
        traj.aborted = true;
        traj.abort_reason = e.what();
        return traj;
    }

    if (state.success) traj.success_turn = state.turn;
    traj.dialogue = std::move(state);
    traj.raw_reward = traj.success_turn ? 1 : 0;
    traj.discounted_reward = traj.raw_reward;  // gamma applied by the caller
    return traj;
}

}  // namespace tutorloop
