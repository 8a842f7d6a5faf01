#include "tutorloop/jsonio.hpp"

#include <cstring>
#include <fstream>

#include "tutorloop/errors.hpp"
#include "tutorloop/rng.hpp"

namespace tutorloop {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json utterance_to_json(const Utterance& u) {
    ordered_json j;
    j["role"] = role_name(u.role);
    j["text"] = u.text;
    j["turn_index"] = u.turn_index;
    j["meta"] = ordered_json::object();
    for (const auto& [k, v] : u.meta) j["meta"][k] = v;
    return j;
}

Utterance utterance_from_json(const json& j) {
    Utterance u;
    u.role = role_from_name(j.at("role").get<std::string>());
    u.text = j.at("text").get<std::string>();
    u.turn_index = j.at("turn_index").get<int>();
    if (j.contains("meta"))
        for (const auto& [k, v] : j.at("meta").items()) u.meta[k] = v.get<std::string>();
    return u;
}

ordered_json knowledge_to_json(const PrivateKnowledge& k) {
    ordered_json j;
    j["kind"] = knowledge_kind_name(k.kind);
    switch (k.kind) {
        case KnowledgeKind::GroundTruth: j["answer"] = k.answer; break;
        case KnowledgeKind::VerifierLog: j["reports"] = k.reports; break;
        case KnowledgeKind::ShardQueue: j["unrevealed"] = k.unrevealed; break;
        case KnowledgeKind::Empty: break;
    }
    return j;
}

PrivateKnowledge knowledge_from_json(const json& j) {
    PrivateKnowledge k;
    k.kind = knowledge_kind_from_name(j.at("kind").get<std::string>());
    switch (k.kind) {
        case KnowledgeKind::GroundTruth: k.answer = j.at("answer").get<std::string>(); break;
        case KnowledgeKind::VerifierLog:
            k.reports = j.at("reports").get<std::vector<std::string>>();
            break;
        case KnowledgeKind::ShardQueue:
            k.unrevealed = j.at("unrevealed").get<std::vector<std::string>>();
            break;
        case KnowledgeKind::Empty: break;
    }
    return k;
}

}  // namespace

ordered_json trajectory_to_json(const Trajectory& t) {
    ordered_json j;
    j["schema"] = kSchemaVersion;
    j["task_id"] = t.task_id;
    j["seed"] = t.seed;
    j["raw_reward"] = t.raw_reward;
    j["discounted_reward"] = t.discounted_reward;
    if (t.success_turn) j["success_turn"] = *t.success_turn;
    else j["success_turn"] = nullptr;
    j["aborted"] = t.aborted;
    if (t.aborted) j["abort_reason"] = t.abort_reason;
    j["policy_version"] = t.policy_version;
    ordered_json d;
    d["turn"] = t.dialogue.turn;
    d["terminated"] = t.dialogue.terminated;
    d["success"] = t.dialogue.success;
    d["knowledge"] = knowledge_to_json(t.dialogue.knowledge);
    auto arr = ordered_json::array();
    for (const auto& u : t.dialogue.history) arr.push_back(utterance_to_json(u));
    d["history"] = std::move(arr);
    j["dialogue"] = std::move(d);
    return j;
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory t;
    t.task_id = j.at("task_id").get<std::string>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.raw_reward = j.at("raw_reward").get<int>();
    t.discounted_reward = j.at("discounted_reward").get<double>();
    if (!j.at("success_turn").is_null()) t.success_turn = j.at("success_turn").get<int>();
    t.aborted = j.value("aborted", false);
    t.abort_reason = j.value("abort_reason", "");
    t.policy_version = j.value("policy_version", 0);
    const json& d = j.at("dialogue");
    t.dialogue.turn = d.at("turn").get<int>();
    t.dialogue.terminated = d.at("terminated").get<bool>();
    t.dialogue.success = d.at("success").get<bool>();
    t.dialogue.knowledge = knowledge_from_json(d.at("knowledge"));
    for (const auto& u : d.at("history")) t.dialogue.history.push_back(utterance_from_json(u));
    return t;
}

std::uint64_t dialogue_hash(const Trajectory& trajectory) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& u : trajectory.dialogue.history) {
        const char* rn = role_name(u.role);
        h = fnv1a64(rn, std::strlen(rn), h);
        h = fnv1a64(u.text.data(), u.text.size(), h);
        h = fnv1a64("\x1f", 1, h);
    }
    h = fnv1a64(trajectory.task_id.data(), trajectory.task_id.size(), h);
    return h;
}

TrainingRecord to_training_record(const Trajectory& trajectory, double advantage) {
    TrainingRecord r;
    r.task_id = trajectory.task_id;
    r.advantage = advantage;
    for (const auto& u : trajectory.dialogue.history)
        r.segments.push_back({u.role, u.text, u.role == Role::Student});
    r.reward_raw = trajectory.raw_reward;
    r.reward_discounted = trajectory.discounted_reward;
    r.success_turn = trajectory.success_turn;
    r.seed = trajectory.seed;
    r.policy_version = trajectory.policy_version;
    return r;
}

ordered_json record_to_json(const TrainingRecord& r) {
    ordered_json j;
    j["schema"] = kSchemaVersion;
    j["task_id"] = r.task_id;
    j["advantage"] = r.advantage;
    auto arr = ordered_json::array();
    for (const auto& s : r.segments) {
        ordered_json sj;
        sj["role"] = role_name(s.role);
        sj["text"] = s.text;
        sj["train"] = s.train;
        arr.push_back(std::move(sj));
    }
    j["segments"] = std::move(arr);
    j["reward_raw"] = r.reward_raw;
    j["reward_discounted"] = r.reward_discounted;
    if (r.success_turn) j["success_turn"] = *r.success_turn;
    else j["success_turn"] = nullptr;
    j["seed"] = r.seed;
    j["policy_version"] = r.policy_version;
    return j;
}

TrainingRecord record_from_json(const json& j) {
    TrainingRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.advantage = j.at("advantage").get<double>();
    for (const auto& s : j.at("segments")) {
        r.segments.push_back({role_from_name(s.at("role").get<std::string>()),
                              s.at("text").get<std::string>(), s.at("train").get<bool>()});
    }
    r.reward_raw = j.at("reward_raw").get<int>();
    r.reward_discounted = j.at("reward_discounted").get<double>();
    if (!j.at("success_turn").is_null()) r.success_turn = j.at("success_turn").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.policy_version = j.value("policy_version", 0);
    return r;
}

namespace {

template <typename T, typename ToJson>
void write_jsonl(const std::vector<T>& items, const std::string& path, ToJson to_json_fn) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    for (const auto& item : items) out << to_json_fn(item).dump() << "\n";
}

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::string& path, FromJson from_json_fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<T> items;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            items.push_back(from_json_fn(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return items;
}

}  // namespace

void write_trajectories_jsonl(const std::vector<Trajectory>& trajectories,
                              const std::string& path) {
    write_jsonl(trajectories, path, trajectory_to_json);
}

std::vector<Trajectory> read_trajectories_jsonl(const std::string& path) {
    return read_jsonl<Trajectory>(path, [](const json& j) { return trajectory_from_json(j); });
}

void write_records_jsonl(const std::vector<TrainingRecord>& records, const std::string& path) {
    write_jsonl(records, path, record_to_json);
}

std::vector<TrainingRecord> read_records_jsonl(const std::string& path) {
    return read_jsonl<TrainingRecord>(path, [](const json& j) { return record_from_json(j); });
}

}  // namespace tutorloop
