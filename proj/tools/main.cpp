#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "tutorloop/commands.hpp"
#include "tutorloop/errors.hpp"

namespace {

using tutorloop::RunConfig;

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    // frequently tuned hyperparameters get first-class flags
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<int> workers;
    std::optional<double> gamma;
    std::optional<int> g;
    std::optional<double> beta;
    std::optional<double> learning_rate;
    std::optional<int> max_turns;
    std::optional<double> temperature;
    std::optional<int> steps;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("-c,--config", flags.config_path, "TOML-style config file");
    cmd->add_option("--set", flags.overrides, "override: section.key=value")->take_all();
    cmd->add_option("--seed", flags.seed, "run.seed");
    cmd->add_option("-o,--out", flags.output_dir, "run.output_dir");
    cmd->add_option("--workers", flags.workers, "run.workers (0 = all cores)");
    cmd->add_option("--gamma", flags.gamma, "reward.gamma");
    cmd->add_option("--g", flags.g, "grpo.g (group size)");
    cmd->add_option("--beta", flags.beta, "grpo.beta (KL coefficient)");
    cmd->add_option("--lr", flags.learning_rate, "grpo.learning_rate");
    cmd->add_option("-N,--max-turns", flags.max_turns, "max dialogue turns for this command");
    cmd->add_option("--temperature", flags.temperature, "sampling temperature for this command");
    cmd->add_option("--steps", flags.steps, "grpo.steps");
}

RunConfig build_config(const CommonFlags& flags, const std::string& turns_section) {
    RunConfig config = flags.config_path.empty() ? RunConfig::from_string("", "<flags>")
                                                 : RunConfig::from_file(flags.config_path);
    for (const auto& o : flags.overrides) config.set_override(o);
    if (flags.seed) config.set("run", "seed", std::to_string(*flags.seed));
    if (flags.output_dir) config.set("run", "output_dir", *flags.output_dir);
    if (flags.workers) config.set("run", "workers", std::to_string(*flags.workers));
    if (flags.gamma) config.set("reward", "gamma", std::to_string(*flags.gamma));
    if (flags.g) config.set("grpo", "g", std::to_string(*flags.g));
    if (flags.beta) config.set("grpo", "beta", std::to_string(*flags.beta));
    if (flags.learning_rate)
        config.set("grpo", "learning_rate", std::to_string(*flags.learning_rate));
    if (flags.max_turns) config.set(turns_section, "max_turns", std::to_string(*flags.max_turns));
    if (flags.temperature)
        config.set(turns_section, "temperature", std::to_string(*flags.temperature));
    if (flags.steps) config.set("grpo", "steps", std::to_string(*flags.steps));
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"teacher-student dialogue RL: rollouts, GRPO training, dataset pipelines,"
                 " evaluation probes"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        const char* turns_section;
        std::function<void(const RunConfig&, std::ostream&)> run;
    };
    const std::vector<Sub> subs = {
        {"rollout", "run dialogue episodes over a task file", "rollout", tutorloop::cmd_rollout},
        {"train-grpo", "train the built-in policy with group-normalised advantages", "grpo",
         tutorloop::cmd_train_grpo},
        {"build-sft", "generate episodes and keep successful dialogues as SFT records", "sft",
         tutorloop::cmd_build_sft},
        {"qprime", "inject privileged questions into recorded dialogues", "qprime",
         tutorloop::cmd_qprime},
        {"eval", "success-by-turn curves, answer-loss probe, turn classification", "eval",
         tutorloop::cmd_eval},
        {"classify", "label student turns in recorded dialogues", "classify",
         tutorloop::cmd_classify},
    };

    std::vector<CommonFlags> flags(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common_flags(cmd, flags[i]);
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!app.got_subcommand(subs[i].name)) continue;
        try {
            RunConfig config = build_config(flags[i], subs[i].turns_section);
            subs[i].run(config, std::cout);
            return 0;
        } catch (const tutorloop::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 2;
}
