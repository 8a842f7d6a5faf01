#pragma once

#include <string>
#include <vector>

#include "tutorloop/records.hpp"
#include "tutorloop/runner.hpp"

namespace tutorloop {

struct Provenance {
    std::string run_id;
    std::uint64_t seed = 0;
    int generated = 0;
    int kept = 0;
    double kept_rate = 0.0;
    int deduplicated = 0;  // identical dialogues dropped
    int aborted = 0;       // excluded before filtering
};

// Successful dialogues flattened to masked training records (advantage 1).
struct SftDataset {
    std::vector<TrainingRecord> records;
    Provenance provenance;
};

struct GenerateOptions {
    int samples_per_task = 1;
    int max_turns = 4;
    std::uint64_t seed = 0;
    RewardConfig reward;
    double temperature = 1.0;
    bool deduplicate = true;
    int workers = 1;
    std::string run_id = "offline";
};

// Generate -> filter: run episodes, keep exactly the raw_reward == 1
// trajectories, mask student turns trainable. Single iteration. Also returns
// the generated trajectories so audits can recompute rewards from the stored
// dialogues. Zero successes is reported via provenance, not an error.
struct GenerateResult {
    SftDataset dataset;
    std::vector<Trajectory> trajectories;  // all generated, including failures
};

GenerateResult generate_and_filter(const std::vector<TaskInstance>& tasks,
                                   const StudentFactory& student, const TeacherPolicy& teacher,
                                   const GenerateOptions& options);

struct MaskAuditViolation {
    std::size_t record_index;
    std::string what;
};

struct MaskAuditReport {
    int records_checked = 0;
    std::vector<MaskAuditViolation> violations;
    bool clean() const { return violations.empty(); }
};

// Structural audit: student segments train, teacher segments do not, roles
// alternate starting with the teacher.
MaskAuditReport mask_audit(const SftDataset& dataset);
// Additionally verifies each record's segment concatenation reproduces its
// source dialogue verbatim (matched by task_id + seed).
MaskAuditReport mask_audit(const SftDataset& dataset,
                           const std::vector<Trajectory>& sources);

void write_provenance(const Provenance& provenance, const std::string& path);
Provenance read_provenance(const std::string& path);

}  // namespace tutorloop
