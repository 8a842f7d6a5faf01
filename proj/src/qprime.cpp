#include "tutorloop/qprime.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tutorloop/episode.hpp"
#include "tutorloop/errors.hpp"
#include "tutorloop/jsonio.hpp"

namespace tutorloop {

double injection_probability(int t, bool turn_was_correct, double base) {
    if (t < 1) throw Error("injection_probability: t must be >= 1");
    if (!(base > 0.0 && base < 1.0)) throw ConfigError("decay base must be in (0, 1)");
    if (turn_was_correct) return 0.0;
    return std::pow(base, t);
}

std::string TemplateQuestionGenerator::generate(const std::string& student_attempt,
                                                const PrivateKnowledge& knowledge,
                                                Rng&) const {
    switch (knowledge.kind) {
        case KnowledgeKind::GroundTruth:
            if (extract_guess(student_attempt))
                return "Is the target above or below my last guess?";
            return "Could you point out the first step where my attempt goes wrong?";
        case KnowledgeKind::VerifierLog:
            return "Which test does my attempt fail, and what did it expect?";
        case KnowledgeKind::ShardQueue:
            return "Could you share the next piece of the problem statement?";
        case KnowledgeKind::Empty:
            throw Error("cannot generate a privileged question without private knowledge");
    }
    return "Could you give me another hint?";
}

QuestionValidation validate_question(const std::string& question,
                                     const PrivateKnowledge& knowledge) {
    if (!is_question(question)) return {false, "does not end with '?'"};
    if (knowledge.kind == KnowledgeKind::GroundTruth && !knowledge.answer.empty() &&
        question.find(knowledge.answer) != std::string::npos)
        return {false, "contains the ground-truth answer"};
    if (knowledge.kind == KnowledgeKind::ShardQueue) {
        for (const auto& shard : knowledge.unrevealed) {
            if (!shard.empty() && question.find(shard) != std::string::npos)
                return {false, "contains an unrevealed shard"};
        }
    }
    return {true, ""};
}

std::string generate_privileged_question(const std::string& student_attempt,
                                         const PrivateKnowledge& knowledge,
                                         const QuestionGenerator& generator, Rng& rng,
                                         std::string* generator_used) {
    if (knowledge.kind == KnowledgeKind::Empty)
        throw Error("cannot generate a privileged question without private knowledge");
    std::string used = generator.name();
    std::string q = generator.generate(student_attempt, knowledge, rng);
    if (!validate_question(q, knowledge).ok) {
        // leaked or malformed: one regeneration, then the template fallback
        q = generator.generate(student_attempt, knowledge, rng);
        if (!validate_question(q, knowledge).ok) {
            used = "template_fallback";
            q = TemplateQuestionGenerator().generate(student_attempt, knowledge, rng);
            if (!validate_question(q, knowledge).ok) {
                q = "Could you give me another hint?";
                if (!validate_question(q, knowledge).ok)
                    throw Error("could not produce a leak-free question");
            }
        }
    }
    if (generator_used) *generator_used = used;
    return q;
}

namespace {

struct ProcessedTrajectory {
    Trajectory trajectory;
    std::vector<InjectionEvent> events;
};

ProcessedTrajectory process_one(const Trajectory& source, const TaskInstance& task,
                                const StudentFactory& student, const TeacherPolicy& teacher,
                                const QuestionGenerator& generator,
                                const QprimeOptions& options) {
    ProcessedTrajectory out;
    const std::string source_id = source.id();
    const std::uint64_t id_hash = fnv1a64(source_id);
    const int effective = task.effective_max_turns(options.max_turns);

    std::vector<std::string> originals;
    for (const auto& u : source.dialogue.history)
        if (u.role == Role::Student) originals.push_back(u.text);

    std::unique_ptr<StudentPolicy> live = student.make(task);
    Rng episode_rng(derive_seed(options.seed ^ 0x7265726f6cULL, id_hash, 0));

    DialogueState state = initial_state(task);
    bool replaying = true;

    Trajectory traj;
    traj.task_id = task.task_id;
    traj.seed = source.seed;
    traj.policy_version = source.policy_version;

    try {
        while (!state.terminated) {
            const int t = state.turn;
            std::string utterance;
            if (replaying && t <= static_cast<int>(originals.size())) {
                utterance = originals[static_cast<std::size_t>(t - 1)];
            } else {
                replaying = false;
                utterance = live->act(observe(state), options.temperature, episode_rng);
                if (utterance.empty()) utterance = "(empty reply)";
            }

            const bool correct = check(task, utterance).verdict == Verdict::Correct;
            InjectionEvent event;
            event.trajectory_id = source_id;
            event.turn = t;
            event.p = injection_probability(t, correct, options.decay_base);
            event.generator = generator.name();

            if (event.p > 0.0) {
                Rng draw(derive_seed(options.seed, id_hash, static_cast<std::uint64_t>(t)));
                if (uniform01(draw) < event.p && state.knowledge.kind != KnowledgeKind::Empty) {
                    try {
                        Rng gen_rng(
                            derive_seed(options.seed ^ 0x71ULL, id_hash, static_cast<std::uint64_t>(t)));
                        event.question_text = generate_privileged_question(
                            utterance, state.knowledge, generator, gen_rng, &event.generator);
                        event.fired = true;
                        utterance = event.question_text;
                        replaying = false;  // the original continuation no longer applies
                    } catch (const RemoteError&) {
                        event.fired = false;  // failed events skip injection
                        event.question_text.clear();
                    }
                }
            }
            out.events.push_back(event);

            state = step(std::move(state), utterance, task, teacher, effective, episode_rng);
            if (event.fired) {
                // flag the injected turn on the stored dialogue
                for (auto it = state.history.rbegin(); it != state.history.rend(); ++it) {
                    if (it->role == Role::Student) {
                        it->meta["injected_question"] = "true";
                        break;
                    }
                }
            }
        }
    } catch (const RemoteError& e) {
        traj.dialogue = std::move(state);
        traj.aborted = true;
        traj.abort_reason = e.what();
        out.trajectory = std::move(traj);
        return out;
    }

    if (state.success) traj.success_turn = state.turn;
    traj.dialogue = std::move(state);
    traj.raw_reward = traj.success_turn ? 1 : 0;
    traj.discounted_reward = traj.raw_reward;
    apply_reward(traj, options.reward);
    out.trajectory = std::move(traj);
    return out;
}

}  // namespace

QprimeResult build_qprimed_dataset(const std::vector<Trajectory>& sources,
                                   const TaskIndex& tasks, const StudentFactory& student,
                                   const TeacherPolicy& teacher,
                                   const QuestionGenerator& generator,
                                   const QprimeOptions& options) {
    options.reward.validate();
    if (!(options.decay_base > 0.0 && options.decay_base < 1.0))
        throw ConfigError("decay base must be in (0, 1)");

    std::vector<ProcessedTrajectory> processed(sources.size());
    std::exception_ptr failure = nullptr;
    const auto n = static_cast<std::int64_t>(sources.size());
#pragma omp parallel for schedule(dynamic) num_threads(options.workers > 0 ? options.workers : 1) \
    if (options.workers != 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            const Trajectory& source = sources[static_cast<std::size_t>(i)];
            auto it = tasks.find(source.task_id);
            if (it == tasks.end())
                throw ConfigError("no task '" + source.task_id + "' for trajectory");
            processed[static_cast<std::size_t>(i)] =
                process_one(source, it->second, student, teacher, generator, options);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    QprimeResult result;
    result.dataset.provenance.run_id = options.run_id;
    result.dataset.provenance.seed = options.seed;
    std::unordered_set<std::uint64_t> seen;
    for (auto& p : processed) {
        for (auto& e : p.events) result.events.push_back(std::move(e));
        if (p.trajectory.aborted) {
            ++result.dataset.provenance.aborted;
            result.trajectories.push_back(std::move(p.trajectory));
            continue;
        }
        ++result.dataset.provenance.generated;
        if (p.trajectory.raw_reward == 1) {
            if (options.deduplicate && !seen.insert(dialogue_hash(p.trajectory)).second) {
                ++result.dataset.provenance.deduplicated;
            } else {
                ++result.dataset.provenance.kept;
                result.dataset.records.push_back(to_training_record(p.trajectory, 1.0));
            }
        }
        result.trajectories.push_back(std::move(p.trajectory));
    }
    if (result.dataset.provenance.generated > 0) {
        result.dataset.provenance.kept_rate =
            static_cast<double>(result.dataset.provenance.kept) /
            result.dataset.provenance.generated;
    }
    return result;
}

void write_injection_events_jsonl(const std::vector<InjectionEvent>& events,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    for (const auto& e : events) {
        nlohmann::ordered_json j;
        j["trajectory_id"] = e.trajectory_id;
        j["turn"] = e.turn;
        j["p"] = e.p;
        j["fired"] = e.fired;
        j["question_text"] = e.question_text;
        j["generator"] = e.generator;
        out << j.dump() << "\n";
    }
}

std::vector<InjectionEvent> read_injection_events_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<InjectionEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        InjectionEvent e;
        e.trajectory_id = j.at("trajectory_id").get<std::string>();
        e.turn = j.at("turn").get<int>();
        e.p = j.at("p").get<double>();
        e.fired = j.at("fired").get<bool>();
        e.question_text = j.at("question_text").get<std::string>();
        e.generator = j.at("generator").get<std::string>();
        events.push_back(std::move(e));
    }
    return events;
}

}  // namespace tutorloop
