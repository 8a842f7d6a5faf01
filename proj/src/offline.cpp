#include "tutorloop/offline.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"
#include "tutorloop/jsonio.hpp"

namespace tutorloop {

namespace {

}  // namespace

GenerateResult generate_and_filter(const std::vector<TaskInstance>& tasks,
                                   const StudentFactory& student, const TeacherPolicy& teacher,
                                   const GenerateOptions& options) {
    if (options.samples_per_task < 1) throw ConfigError("samples_per_task must be >= 1");
    options.reward.validate();

    std::vector<EpisodeSpec> specs =
        make_episode_specs(tasks, options.samples_per_task, options.seed);
    BatchParams params{options.max_turns, options.temperature, options.reward};
    std::vector<Trajectory> trajectories =
        run_batch(specs, student, teacher, params, options.workers);

    GenerateResult result;
    result.dataset.provenance.run_id = options.run_id;
    result.dataset.provenance.seed = options.seed;

    std::unordered_set<std::uint64_t> seen;
    for (const auto& traj : trajectories) {
        if (traj.aborted) {
            ++result.dataset.provenance.aborted;
            continue;
        }
        ++result.dataset.provenance.generated;
        if (traj.raw_reward != 1) continue;
        if (options.deduplicate && !seen.insert(dialogue_hash(traj)).second) {
            ++result.dataset.provenance.deduplicated;
            continue;
        }
        ++result.dataset.provenance.kept;
        result.dataset.records.push_back(to_training_record(traj, 1.0));
    }
    if (result.dataset.provenance.generated > 0) {
        result.dataset.provenance.kept_rate =
            static_cast<double>(result.dataset.provenance.kept) /
            result.dataset.provenance.generated;
    }
    result.trajectories = std::move(trajectories);
    return result;
}

namespace {

void audit_record(const TrainingRecord& record, std::size_t index, MaskAuditReport& report) {
    Role expected = Role::Teacher;
    for (std::size_t s = 0; s < record.segments.size(); ++s) {
        const Segment& seg = record.segments[s];
        if (seg.role != expected) {
            report.violations.push_back(
                {index, "segment " + std::to_string(s) + " breaks role alternation"});
        }
        expected = (seg.role == Role::Teacher) ? Role::Student : Role::Teacher;
        if (seg.role == Role::Student && !seg.train) {
            report.violations.push_back(
                {index, "student segment " + std::to_string(s) + " has train=false"});
        }
        if (seg.role == Role::Teacher && seg.train) {
            report.violations.push_back(
                {index, "teacher segment " + std::to_string(s) + " has train=true"});
        }
    }
    if (record.segments.empty()) report.violations.push_back({index, "record has no segments"});
}

}  // namespace

MaskAuditReport mask_audit(const SftDataset& dataset) {
    MaskAuditReport report;
    report.records_checked = static_cast<int>(dataset.records.size());
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
        audit_record(dataset.records[i], i, report);
    return report;
}

MaskAuditReport mask_audit(const SftDataset& dataset, const std::vector<Trajectory>& sources) {
    MaskAuditReport report = mask_audit(dataset);
    std::unordered_map<std::string, const Trajectory*> by_id;
    for (const auto& t : sources) by_id[t.id()] = &t;

    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const TrainingRecord& record = dataset.records[i];
        auto it = by_id.find(record.task_id + ":" + std::to_string(record.seed));
        if (it == by_id.end()) {
            report.violations.push_back({i, "no source trajectory for record"});
            continue;
        }
        const auto& history = it->second->dialogue.history;
        if (history.size() != record.segments.size()) {
            report.violations.push_back({i, "segment count differs from source dialogue"});
            continue;
        }
        for (std::size_t s = 0; s < history.size(); ++s) {
            if (record.segments[s].text != history[s].text ||
                record.segments[s].role != history[s].role) {
                report.violations.push_back(
                    {i, "segment " + std::to_string(s) + " does not reproduce the dialogue"});
                break;
            }
        }
    }
    return report;
}

void write_provenance(const Provenance& provenance, const std::string& path) {
    nlohmann::ordered_json j;
    j["run_id"] = provenance.run_id;
    j["seed"] = provenance.seed;
    j["generated"] = provenance.generated;
    j["kept"] = provenance.kept;
    j["kept_rate"] = provenance.kept_rate;
    j["deduplicated"] = provenance.deduplicated;
    j["aborted"] = provenance.aborted;
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

Provenance read_provenance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    Provenance p;
    p.run_id = j.at("run_id").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.generated = j.at("generated").get<int>();
    p.kept = j.at("kept").get<int>();
    p.kept_rate = j.at("kept_rate").get<double>();
    p.deduplicated = j.value("deduplicated", 0);
    p.aborted = j.value("aborted", 0);
    return p;
}

}  // namespace tutorloop
