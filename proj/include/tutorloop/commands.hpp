#pragma once

#include <ostream>

#include "tutorloop/config.hpp"

namespace tutorloop {

// The CLI surface, callable directly from tests. Each command reads its
// sections from the config, writes outputs plus a manifest into
// run.output_dir, and prints a short summary. ConfigError maps to exit
// code 2 in main, other errors to 1.
void cmd_rollout(const RunConfig& config, std::ostream& out);
void cmd_train_grpo(const RunConfig& config, std::ostream& out);
void cmd_build_sft(const RunConfig& config, std::ostream& out);
void cmd_qprime(const RunConfig& config, std::ostream& out);
void cmd_eval(const RunConfig& config, std::ostream& out);
void cmd_classify(const RunConfig& config, std::ostream& out);

}  // namespace tutorloop
