#include "tutorloop/dialogue.hpp"

#include <sstream>

#include "tutorloop/errors.hpp"

namespace tutorloop {

const char* role_name(Role role) {
    return role == Role::Teacher ? "teacher" : "student";
}

Role role_from_name(const std::string& name) {
    if (name == "teacher") return Role::Teacher;
    if (name == "student") return Role::Student;
    throw Error("unknown role '" + name + "'");
}

const char* knowledge_kind_name(KnowledgeKind kind) {
    switch (kind) {
        case KnowledgeKind::Empty: return "empty";
        case KnowledgeKind::GroundTruth: return "ground_truth";
        case KnowledgeKind::VerifierLog: return "verifier_log";
        case KnowledgeKind::ShardQueue: return "shard_queue";
    }
    return "empty";
}

KnowledgeKind knowledge_kind_from_name(const std::string& name) {
    if (name == "empty") return KnowledgeKind::Empty;
    if (name == "ground_truth") return KnowledgeKind::GroundTruth;
    if (name == "verifier_log") return KnowledgeKind::VerifierLog;
    if (name == "shard_queue") return KnowledgeKind::ShardQueue;
    throw Error("unknown knowledge kind '" + name + "'");
}

int DialogueState::student_turns() const {
    int n = 0;
    for (const auto& u : history)
        if (u.role == Role::Student) ++n;
    return n;
}

int DialogueState::teacher_turns() const {
    int n = 0;
    for (const auto& u : history)
        if (u.role == Role::Teacher) ++n;
    return n;
}

Observation observe(const DialogueState& state) {
    return observe_prefix(state.history, state.history.size());
}

Observation observe_prefix(const std::vector<Utterance>& history, std::size_t count) {
    Observation obs;
    obs.reserve(count);
    for (std::size_t i = 0; i < count && i < history.size(); ++i) {
        obs.push_back({history[i].role, history[i].text});
    }
    return obs;
}

std::string serialize_observation(const Observation& obs) {
    std::ostringstream out;
    for (const auto& u : obs) {
        out << role_name(u.role) << ": " << u.text << "\n";
    }
    return out.str();
}

}  // namespace tutorloop
