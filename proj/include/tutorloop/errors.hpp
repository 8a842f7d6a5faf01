#pragma once

#include <stdexcept>
#include <string>

namespace tutorloop {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller bug: step() on a terminated dialogue.
struct StepOnTerminated : Error {
    StepOnTerminated() : Error("step() called on a terminated dialogue") {}
};

struct NotScoringCapable : Error {
    explicit NotScoringCapable(const std::string& kind)
        : Error("policy kind '" + kind + "' cannot score text") {}
};

struct MalformedChecker : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Remote endpoint failures. Caught at episode boundaries and turned into
// aborted trajectories; everywhere else they propagate.
struct RemoteError : Error {
    enum class Kind { Connect, Timeout, Http, Malformed };
    RemoteError(Kind k, const std::string& what) : Error(what), kind(k) {}
    Kind kind;
};

struct GroupTooSmall : Error {
    GroupTooSmall() : Error("advantage group needs at least 2 rewards") {}
};

struct GroupAbort : Error {
    explicit GroupAbort(const std::string& task_id)
        : Error("too many aborted episodes while rolling out task '" + task_id + "'") {}
};

struct NonFiniteGradient : Error {
    using Error::Error;
};

struct AbortedTrajectory : Error {
    AbortedTrajectory() : Error("cannot assign a reward to an aborted trajectory") {}
};

}  // namespace tutorloop
