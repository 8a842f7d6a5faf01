#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorloop/dialogue.hpp"
#include "tutorloop/records.hpp"

namespace tutorloop {

// JSONL schema version stamped on trajectories and training records.
inline constexpr int kSchemaVersion = 1;

// Stable key order end to end: serialization uses ordered maps so that
// fixed-seed reruns produce byte-identical files.
nlohmann::ordered_json trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

nlohmann::ordered_json record_to_json(const TrainingRecord& record);
TrainingRecord record_from_json(const nlohmann::json& j);

void write_trajectories_jsonl(const std::vector<Trajectory>& trajectories,
                              const std::string& path);
std::vector<Trajectory> read_trajectories_jsonl(const std::string& path);

void write_records_jsonl(const std::vector<TrainingRecord>& records, const std::string& path);
std::vector<TrainingRecord> read_records_jsonl(const std::string& path);

}  // namespace tutorloop
