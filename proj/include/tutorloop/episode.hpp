#pragma once

#include <cstdint>

#include "tutorloop/policy.hpp"
#include "tutorloop/rewards.hpp"

namespace tutorloop {

// Opening state: the problem statement as the teacher's first utterance plus
// the task's initial private knowledge.
DialogueState initial_state(const TaskInstance& task);

// One environment transition: append the student utterance, check it, then
// either terminate (success, or turn limit hit) or append the teacher's reply.
// The checker runs on every student utterance; in verifier mode its report is
// appended to the private log, in shard mode the spoken shard is popped.
// The teacher does not reply after the final failed turn.
// Throws StepOnTerminated if the dialogue is over; teacher RemoteErrors
// propagate to the episode driver.
DialogueState step(DialogueState state, const std::string& student_utterance,
                   const TaskInstance& task, const TeacherPolicy& teacher, int max_turns,
                   Rng& rng);

// Full episode. Deterministic given (task, policies, seed). Remote failures
// return an aborted trajectory rather than throwing. Raw reward is set;
// discounting is applied by the caller (see rewards.hpp).
Trajectory run_episode(const TaskInstance& task, const StudentPolicy& student,
                       const TeacherPolicy& teacher, int max_turns, std::uint64_t seed,
                       double temperature = 1.0);

}  // namespace tutorloop
