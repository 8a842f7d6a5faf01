#include "tutorloop/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"
#include "tutorloop/grpo.hpp"
#include "tutorloop/jsonio.hpp"
#include "tutorloop/manifest.hpp"
#include "tutorloop/offline.hpp"
#include "tutorloop/probes.hpp"
#include "tutorloop/qprime.hpp"
#include "tutorloop/remote.hpp"
#include "tutorloop/stub_server.hpp"

namespace tutorloop {

namespace fs = std::filesystem;

namespace {

fs::path ensure_outdir(const RunConfig& config) {
    std::string dir = config.require_string("run", "output_dir");
    fs::create_directories(dir);
    return dir;
}

int workers_from(const RunConfig& config) {
    return static_cast<int>(config.get_int("run", "workers", 0));
}

std::vector<TaskInstance> load_tasks(const RunConfig& config, Manifest& manifest) {
    if (config.has("tasks", "path")) {
        std::string path = config.require_string("tasks", "path");
        manifest.input_hashes["tasks"] = file_hash_hex(path);
        std::vector<TaskInstance> tasks = load_tasks_jsonl(path);
        if (tasks.empty()) throw ConfigError("task file '" + path + "' is empty");
        return tasks;
    }
    if (config.get_bool("tasks", "builtin_toy", false)) {
        int count = static_cast<int>(config.get_int("tasks", "toy_count", 64));
        int domain = static_cast<int>(config.get_int("tasks", "toy_domain", 64));
        FeedbackStyle feedback = feedback_style_from_name(
            config.get_string("tasks", "toy_feedback", "higher_lower"));
        if (count < 1) throw ConfigError("tasks.toy_count must be >= 1");
        std::vector<TaskInstance> tasks;
        tasks.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            char id[32];
            std::snprintf(id, sizeof(id), "toy-%04d", i);
            tasks.push_back(make_toy_task(id, i % domain, domain, feedback));
        }
        return tasks;
    }
    throw ConfigError("set tasks.path to a JSONL file or tasks.builtin_toy = true");
}

RemoteConfig remote_config_from(const RunConfig& config) {
    RemoteConfig rc;
    rc.base_url = config.get_string("remote", "url", rc.base_url);
    rc.model = config.get_string("remote", "model", rc.model);
    rc.completions_path = config.get_string("remote", "path", rc.completions_path);
    rc.timeout_ms = static_cast<int>(config.get_int("remote", "timeout_ms", rc.timeout_ms));
    rc.max_inflight = static_cast<int>(config.get_int("remote", "max_inflight", rc.max_inflight));
    rc.max_output_tokens =
        static_cast<int>(config.get_int("remote", "max_output_tokens", rc.max_output_tokens));
    rc.scoring = config.get_bool("remote", "scoring", rc.scoring);
    rc.reveal_guard = config.get_bool("remote", "reveal_guard", rc.reveal_guard);
    rc.student_system_prompt =
        config.get_string("remote", "student_system_prompt", rc.student_system_prompt);
    return rc;
}

struct StudentBundle {
    std::string kind;
    std::unique_ptr<ToySoftmaxPolicy> toy;
    std::unique_ptr<ChatClient> client;
    std::unique_ptr<StudentFactory> factory;
};

StudentBundle make_student(const RunConfig& config, Manifest& manifest) {
    StudentBundle bundle;
    bundle.kind = config.get_string("student", "kind", "toy_softmax");
    if (bundle.kind == "toy_softmax") {
        if (config.has("student", "checkpoint")) {
            std::string path = config.require_string("student", "checkpoint");
            manifest.input_hashes["student_checkpoint"] = file_hash_hex(path);
            bundle.toy = std::make_unique<ToySoftmaxPolicy>(ToySoftmaxPolicy::load(path));
        } else {
            int domain = static_cast<int>(config.get_int("student", "domain", 64));
            bundle.toy = std::make_unique<ToySoftmaxPolicy>(domain);
        }
        bundle.factory = std::make_unique<ToyStudentFactory>(*bundle.toy);
        return bundle;
    }
    if (bundle.kind == "scripted") {
        ScriptedStudentSpec spec;
        std::string script = config.get_string("student", "script", "oracle");
        if (script == "oracle") spec.kind = ScriptedStudentSpec::Kind::Oracle;
        else if (script == "always_wrong") spec.kind = ScriptedStudentSpec::Kind::AlwaysWrong;
        else if (script == "answer_after_turn") spec.kind = ScriptedStudentSpec::Kind::AnswerAfterTurn;
        else if (script == "bisect") spec.kind = ScriptedStudentSpec::Kind::Bisect;
        else if (script == "echo") spec.kind = ScriptedStudentSpec::Kind::Echo;
        else throw ConfigError("unknown student.script '" + script + "'");
        spec.k = static_cast<int>(config.get_int("student", "script_k", 1));
        spec.domain = static_cast<int>(config.get_int("student", "domain", 64));
        if (config.has("student", "script_line"))
            spec.lines.push_back(config.require_string("student", "script_line"));
        bundle.factory = std::make_unique<ScriptedStudentFactory>(spec);
        return bundle;
    }
    if (bundle.kind == "remote") {
        bundle.client = std::make_unique<ChatClient>(remote_config_from(config));
        bundle.factory = std::make_unique<RemoteStudentFactory>(*bundle.client);
        return bundle;
    }
    throw ConfigError("unknown student.kind '" + bundle.kind + "'");
}

struct TeacherBundle {
    std::unique_ptr<ChatClient> client;
    std::unique_ptr<TeacherPolicy> teacher;
};

TeacherBundle make_teacher(const RunConfig& config) {
    TeacherBundle bundle;
    std::string kind = config.get_string("teacher", "kind", "scripted");
    if (kind == "scripted") {
        bundle.teacher = std::make_unique<ScriptedTeacher>();
        return bundle;
    }
    if (kind == "remote") {
        RemoteConfig rc = remote_config_from(config);
        if (config.has("teacher", "model")) rc.model = config.require_string("teacher", "model");
        bundle.client = std::make_unique<ChatClient>(rc);
        bundle.teacher = std::make_unique<RemoteTeacher>(*bundle.client);
        return bundle;
    }
    throw ConfigError("unknown teacher.kind '" + kind + "'");
}

RewardConfig reward_from(const RunConfig& config) {
    RewardConfig reward;
    reward.gamma = config.get_double("reward", "gamma", 0.7);
    reward.validate();
    return reward;
}

struct RolloutSummary {
    int episodes = 0;
    int aborted = 0;
    int successes = 0;
    double success_rate = 0.0;
    double mean_student_turns = 0.0;
    double mean_discounted_reward = 0.0;
};

RolloutSummary summarize(const std::vector<Trajectory>& trajectories) {
    RolloutSummary s;
    int turns = 0;
    double discounted = 0;
    for (const auto& t : trajectories) {
        if (t.aborted) {
            ++s.aborted;
            continue;
        }
        ++s.episodes;
        s.successes += t.raw_reward;
        turns += t.dialogue.student_turns();
        discounted += t.discounted_reward;
    }
    if (s.episodes > 0) {
        s.success_rate = static_cast<double>(s.successes) / s.episodes;
        s.mean_student_turns = static_cast<double>(turns) / s.episodes;
        s.mean_discounted_reward = discounted / s.episodes;
    }
    return s;
}

void write_summary(const RolloutSummary& s, const fs::path& path) {
    nlohmann::ordered_json j;
    j["episodes"] = s.episodes;
    j["aborted"] = s.aborted;
    j["successes"] = s.successes;
    j["success_rate"] = s.success_rate;
    j["mean_student_turns"] = s.mean_student_turns;
    j["mean_discounted_reward"] = s.mean_discounted_reward;
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

}  // namespace

void cmd_rollout(const RunConfig& config, std::ostream& out) {
    fs::path outdir = ensure_outdir(config);
    std::uint64_t seed = config.get_uint64("run", "seed", 0);
    Manifest manifest = make_manifest("rollout", config, seed);

    std::vector<TaskInstance> tasks = load_tasks(config, manifest);
    StudentBundle student = make_student(config, manifest);
    TeacherBundle teacher = make_teacher(config);

    BatchParams params;
    params.max_turns = static_cast<int>(config.get_int("rollout", "max_turns", 4));
    params.temperature = config.get_double("rollout", "temperature", 1.0);
    params.reward = reward_from(config);
    int episodes_per_task = static_cast<int>(config.get_int("rollout", "episodes_per_task", 1));

    std::vector<EpisodeSpec> specs = make_episode_specs(tasks, episodes_per_task, seed);
    std::vector<Trajectory> trajectories =
        run_batch(specs, *student.factory, *teacher.teacher, params, workers_from(config));

    write_trajectories_jsonl(trajectories, (outdir / "trajectories.jsonl").string());
    RolloutSummary summary = summarize(trajectories);
    write_summary(summary, outdir / "summary.json");
    write_manifest(manifest, outdir.string());

    out << "rollout: episodes=" << summary.episodes << " aborted=" << summary.aborted
        << " success_rate=" << summary.success_rate
        << " mean_turns=" << summary.mean_student_turns << "\n";
}

void cmd_train_grpo(const RunConfig& config, std::ostream& out) {
    fs::path outdir = ensure_outdir(config);
    std::uint64_t seed = config.get_uint64("run", "seed", 0);
    Manifest manifest = make_manifest("train-grpo", config, seed);

    std::vector<TaskInstance> tasks = load_tasks(config, manifest);
    StudentBundle student = make_student(config, manifest);
    if (student.kind != "toy_softmax")
        throw ConfigError("train-grpo trains the built-in policy; set student.kind = \"toy_softmax\""
                          " (large-model training is export-only, see build-sft and rl batches)");
    TeacherBundle teacher = make_teacher(config);

    GrpoConfig grpo;
    grpo.group_size = static_cast<int>(config.get_int("grpo", "g", 8));
    grpo.beta = config.get_double("grpo", "beta", 0.0);
    grpo.learning_rate = config.get_double("grpo", "learning_rate", 0.5);
    grpo.batch_groups = static_cast<int>(config.get_int("grpo", "batch_groups", 8));
    grpo.max_turns = static_cast<int>(config.get_int("grpo", "max_turns", 4));
    grpo.temperature = config.get_double("grpo", "temperature", 1.0);
    grpo.seed = seed;
    grpo.abort_retry_cap = static_cast<int>(config.get_int("grpo", "abort_retry_cap", 8));
    grpo.advantage_from_discounted =
        config.get_bool("reward", "advantage_from_discounted", true);
    grpo.reward = reward_from(config);
    grpo.validate();

    int steps = static_cast<int>(config.get_int("grpo", "steps", 250));
    int checkpoint_every = static_cast<int>(config.get_int("grpo", "checkpoint_every", 0));
    bool export_final = config.get_bool("grpo", "export_final_batch", true);

    std::ofstream metrics(outdir / "metrics.csv");
    if (!metrics) throw Error("cannot write metrics.csv");
    metrics << std::setprecision(12)
            << "step,groups,episodes,mean_reward_raw,mean_reward_discounted,"
               "mean_abs_advantage,kl_to_reference,grad_norm,skipped_actions\n";
    std::ofstream dropped(outdir / "dropped_groups.csv");
    dropped << "step,task_id\n";

    TrainCallbacks callbacks;
    ToySoftmaxPolicy& policy = *student.toy;
    callbacks.on_step = [&](const StepReport& r) {
        metrics << r.step << "," << r.groups << "," << r.episodes << "," << r.mean_reward_raw
                << "," << r.mean_reward_discounted << "," << r.mean_abs_advantage << ","
                << r.kl_to_reference << "," << r.grad_norm << "," << r.skipped_actions << "\n";
        if (checkpoint_every > 0 && r.step % checkpoint_every == 0) {
            char name[48];
            std::snprintf(name, sizeof(name), "policy_step_%06d.json", r.step);
            policy.save((outdir / name).string());
        }
    };
    callbacks.on_dropped_group = [&](const DroppedGroup& d) {
        dropped << d.step << "," << d.task_id << "\n";
    };
    callbacks.on_groups = [&](int step, std::span<const RolloutGroup> groups) {
        if (export_final && step == steps)
            export_rl_batch(groups, (outdir / "rl_batch.jsonl").string());
    };

    std::vector<StepReport> reports = train_grpo(policy, tasks, *teacher.teacher, grpo, steps,
                                                 workers_from(config), callbacks);
    policy.save((outdir / "policy.json").string());
    write_manifest(manifest, outdir.string());

    const StepReport& last = reports.back();
    out << "train-grpo: steps=" << steps << " final_mean_reward=" << last.mean_reward_raw
        << " final_kl=" << last.kl_to_reference << " policy_version=" << policy.version()
        << "\n";
}

void cmd_build_sft(const RunConfig& config, std::ostream& out) {
    fs::path outdir = ensure_outdir(config);
    std::uint64_t seed = config.get_uint64("run", "seed", 0);
    Manifest manifest = make_manifest("build-sft", config, seed);

    std::vector<TaskInstance> tasks = load_tasks(config, manifest);
    StudentBundle student = make_student(config, manifest);
    TeacherBundle teacher = make_teacher(config);

    GenerateOptions options;
    options.samples_per_task = static_cast<int>(config.get_int("sft", "samples_per_task", 1));
    options.max_turns = static_cast<int>(config.get_int("sft", "max_turns", 4));
    options.seed = seed;
    options.reward = reward_from(config);
    options.temperature = config.get_double("sft", "temperature", 1.0);
    options.deduplicate = config.get_bool("sft", "dedup", true);
    options.workers = workers_from(config);
    options.run_id = config.get_string("run", "run_id", "build-sft");

    GenerateResult result =
        generate_and_filter(tasks, *student.factory, *teacher.teacher, options);

    write_records_jsonl(result.dataset.records, (outdir / "records.jsonl").string());
    write_trajectories_jsonl(result.trajectories, (outdir / "trajectories.jsonl").string());
    write_provenance(result.dataset.provenance, (outdir / "provenance.json").string());
    write_manifest(manifest, outdir.string());

    MaskAuditReport audit = mask_audit(result.dataset, result.trajectories);
    const Provenance& p = result.dataset.provenance;
    out << "build-sft: generated=" << p.generated << " kept=" << p.kept
        << " kept_rate=" << p.kept_rate << " deduplicated=" << p.deduplicated
        << " aborted=" << p.aborted << " mask_violations=" << audit.violations.size() << "\n";
    if (p.kept == 0) out << "build-sft: empty dataset (no successful trajectories)\n";
}

void cmd_qprime(const RunConfig& config, std::ostream& out) {
    fs::path outdir = ensure_outdir(config);
    std::uint64_t seed = config.get_uint64("run", "seed", 0);
    Manifest manifest = make_manifest("qprime", config, seed);

    std::vector<TaskInstance> tasks = load_tasks(config, manifest);
    StudentBundle student = make_student(config, manifest);
    TeacherBundle teacher = make_teacher(config);

    std::string input = config.require_string("qprime", "input");
    manifest.input_hashes["qprime_input"] = file_hash_hex(input);
    std::vector<Trajectory> sources;
    for (auto& t : read_trajectories_jsonl(input)) {
        if (!t.aborted) sources.push_back(std::move(t));  // aborted never enter datasets
    }

    std::unique_ptr<QuestionGenerator> generator;
    std::unique_ptr<ChatClient> generator_client;
    std::string generator_kind = config.get_string("qprime", "generator", "template");
    if (generator_kind == "template") {
        generator = std::make_unique<TemplateQuestionGenerator>();
    } else if (generator_kind == "remote") {
        generator_client = std::make_unique<ChatClient>(remote_config_from(config));
        generator = std::make_unique<RemoteQuestionGenerator>(*generator_client);
    } else {
        throw ConfigError("unknown qprime.generator '" + generator_kind + "'");
    }

    QprimeOptions options;
    options.seed = seed;
    options.max_turns = static_cast<int>(config.get_int("qprime", "max_turns", 4));
    options.reward = reward_from(config);
    options.temperature = config.get_double("qprime", "temperature", 1.0);
    options.decay_base = config.get_double("qprime", "decay_base", 0.75);
    options.deduplicate = config.get_bool("qprime", "dedup", true);
    options.workers = workers_from(config);
    options.run_id = config.get_string("run", "run_id", "qprime");

    QprimeResult result = build_qprimed_dataset(sources, index_tasks(tasks), *student.factory,
                                                *teacher.teacher, *generator, options);

    write_records_jsonl(result.dataset.records, (outdir / "records.jsonl").string());
    write_injection_events_jsonl(result.events, (outdir / "injections.jsonl").string());
    write_trajectories_jsonl(result.trajectories, (outdir / "trajectories.jsonl").string());
    write_provenance(result.dataset.provenance, (outdir / "provenance.json").string());
    write_manifest(manifest, outdir.string());

    int fired = 0;
    for (const auto& e : result.events) fired += e.fired ? 1 : 0;
    const Provenance& p = result.dataset.provenance;
    out << "qprime: sources=" << sources.size() << " injected=" << fired
        << " kept=" << p.kept << " kept_rate=" << p.kept_rate << "\n";
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
    fs::path outdir = ensure_outdir(config);
    std::uint64_t seed = config.get_uint64("run", "seed", 0);
    Manifest manifest = make_manifest("eval", config, seed);

    std::vector<TaskInstance> tasks = load_tasks(config, manifest);
    StudentBundle student = make_student(config, manifest);
    TeacherBundle teacher = make_teacher(config);

    int episodes = static_cast<int>(config.get_int("eval", "episodes", 500));
    int n_eval = static_cast<int>(config.get_int("eval", "max_turns", 10));
    BatchParams params;
    params.max_turns = n_eval;
    params.temperature = config.get_double("eval", "temperature", 0.0);
    params.reward = reward_from(config);

    std::vector<EpisodeSpec> specs;
    specs.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
        specs.push_back({&tasks[static_cast<std::size_t>(e) % tasks.size()],
                         derive_seed(seed, 0xe7a1ULL, static_cast<std::uint64_t>(e))});
    }
    std::vector<Trajectory> trajectories =
        run_batch(specs, *student.factory, *teacher.teacher, params, workers_from(config));

    write_trajectories_jsonl(trajectories, (outdir / "trajectories.jsonl").string());
    std::vector<CurvePoint> curve = success_by_turn(trajectories, n_eval);
    write_curve_csv(curve, (outdir / "curve.csv").string());
    RolloutSummary summary = summarize(trajectories);
    write_summary(summary, outdir / "summary.json");

    std::unique_ptr<StudentPolicy> probe_policy = student.factory->make(tasks[0]);
    bool loss_probe = config.get_bool("eval", "loss_probe", probe_policy->scoring_capable());
    if (loss_probe) {
        std::vector<LossCurvePoint> losses = mean_loss_by_teacher_turn(
            *probe_policy, trajectories, index_tasks(tasks), workers_from(config));
        write_loss_csv(losses, (outdir / "loss.csv").string());
    }

    if (config.get_bool("eval", "classify", false)) {
        std::string judge_kind = config.get_string("eval", "judge", "rule");
        std::unique_ptr<ChatClient> judge_client;
        std::unique_ptr<Judge> judge;
        if (judge_kind == "rule") {
            judge = std::make_unique<RuleJudge>();
        } else if (judge_kind == "remote") {
            RemoteConfig rc = remote_config_from(config);
            if (config.has("eval", "judge_model"))
                rc.model = config.require_string("eval", "judge_model");
            judge_client = std::make_unique<ChatClient>(rc);
            judge = std::make_unique<RemoteJudge>(*judge_client);
        } else {
            throw ConfigError("unknown eval.judge '" + judge_kind + "'");
        }
        ClassifyResult labels = classify_turns(trajectories, *judge);
        write_labels_jsonl(labels.labels, (outdir / "labels.jsonl").string());
        write_frequencies_csv(labels.frequencies, (outdir / "turn_type_frequencies.csv").string());
    }

    write_manifest(manifest, outdir.string());
    double final_rate = curve.empty() ? 0.0 : curve.back().cumulative_success_rate;
    out << "eval: episodes=" << summary.episodes << " aborted=" << summary.aborted
        << " success_by_turn_" << n_eval << "=" << final_rate << "\n";
}

void cmd_classify(const RunConfig& config, std::ostream& out) {
    fs::path outdir = ensure_outdir(config);
    std::uint64_t seed = config.get_uint64("run", "seed", 0);
    Manifest manifest = make_manifest("classify", config, seed);

    std::string input = config.require_string("classify", "input");
    manifest.input_hashes["classify_input"] = file_hash_hex(input);
    std::vector<Trajectory> trajectories = read_trajectories_jsonl(input);

    std::string judge_kind = config.get_string("classify", "judge", "rule");
    std::unique_ptr<ChatClient> judge_client;
    std::unique_ptr<Judge> judge;
    if (judge_kind == "rule") {
        judge = std::make_unique<RuleJudge>();
    } else if (judge_kind == "remote") {
        RemoteConfig rc = remote_config_from(config);
        if (config.has("classify", "judge_model"))
            rc.model = config.require_string("classify", "judge_model");
        judge_client = std::make_unique<ChatClient>(rc);
        judge = std::make_unique<RemoteJudge>(*judge_client);
    } else {
        throw ConfigError("unknown classify.judge '" + judge_kind + "'");
    }

    ClassifyResult result = classify_turns(trajectories, *judge);
    write_labels_jsonl(result.labels, (outdir / "labels.jsonl").string());
    write_frequencies_csv(result.frequencies, (outdir / "turn_type_frequencies.csv").string());
    write_manifest(manifest, outdir.string());

    out << "classify: labels=" << result.labels.size()
        << " questions_per_conversation=" << result.frequencies.questions_per_conversation
        << "\n";
}

}  // namespace tutorloop
