#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tutorloop {

enum class Role { Teacher, Student };

const char* role_name(Role role);
Role role_from_name(const std::string& name);

// One conversational turn. `meta` carries bookkeeping (checker verdict/report,
// injected-question flag, turn-type label) and is never part of what a student
// policy observes -- the observation projection strips it.
struct Utterance {
    Role role = Role::Teacher;
    std::string text;
    int turn_index = 1;  // 1-based ordinal within the dialogue, strictly increasing
    std::map<std::string, std::string> meta;
};

enum class KnowledgeKind { Empty, GroundTruth, VerifierLog, ShardQueue };

const char* knowledge_kind_name(KnowledgeKind kind);
KnowledgeKind knowledge_kind_from_name(const std::string& name);

// The teacher-only half of the state. Static (ground truth) or accumulated
// (verifier reports appended per checked turn, shard queue drained as shards
// are spoken).
struct PrivateKnowledge {
    KnowledgeKind kind = KnowledgeKind::Empty;
    std::string answer;                     // GroundTruth
    std::vector<std::string> reports;       // VerifierLog, one per checked student turn
    std::vector<std::string> unrevealed;    // ShardQueue, front = next shard to reveal

    static PrivateKnowledge empty() { return {}; }
    static PrivateKnowledge ground_truth(std::string a) {
        PrivateKnowledge k;
        k.kind = KnowledgeKind::GroundTruth;
        k.answer = std::move(a);
        return k;
    }
    static PrivateKnowledge verifier_log() {
        PrivateKnowledge k;
        k.kind = KnowledgeKind::VerifierLog;
        return k;
    }
    static PrivateKnowledge shard_queue(std::vector<std::string> shards) {
        PrivateKnowledge k;
        k.kind = KnowledgeKind::ShardQueue;
        k.unrevealed = std::move(shards);
        return k;
    }
};

// Full dialogue state: public history plus private knowledge.
// `turn` is the index of the student turn currently awaited (1-based); after
// termination it equals the turn of the last student utterance.
struct DialogueState {
    std::vector<Utterance> history;
    PrivateKnowledge knowledge;
    int turn = 1;
    bool terminated = false;
    bool success = false;

    int student_turns() const;
    int teacher_turns() const;
};

// What the student sees: role-tagged texts, nothing else.
struct ObservedUtterance {
    Role role;
    std::string text;
};
using Observation = std::vector<ObservedUtterance>;

// Projection o_t = c_t. Drops private knowledge and all utterance meta.
Observation observe(const DialogueState& state);

// Projection of a history prefix (first `count` utterances). Used by probes
// that score against teacher-turn prefixes.
Observation observe_prefix(const std::vector<Utterance>& history, std::size_t count);

std::string serialize_observation(const Observation& obs);

// One completed episode.
struct Trajectory {
    DialogueState dialogue;
    std::string task_id;
    int raw_reward = 0;
    double discounted_reward = 0.0;
    std::optional<int> success_turn;
    std::uint64_t seed = 0;
    bool aborted = false;
    std::string abort_reason;   // set only when aborted
    int policy_version = 0;     // student policy version at rollout time

    std::string id() const { return task_id + ":" + std::to_string(seed); }
};

}  // namespace tutorloop
