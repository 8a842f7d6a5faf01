#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "tutorloop/dialogue.hpp"

namespace tutorloop {

enum class Verdict { Correct, Incorrect, NonAttempt };

const char* verdict_name(Verdict v);

struct CheckResult {
    Verdict verdict = Verdict::NonAttempt;
    std::string report;
};

enum class FeedbackStyle { HigherLower, Parity, None };

const char* feedback_style_name(FeedbackStyle s);
FeedbackStyle feedback_style_from_name(const std::string& name);

// ---- checker specs -------------------------------------------------------

struct ExactAnswer {
    std::string answer;
};

struct NumericAnswer {
    double answer = 0.0;
    double tolerance = 1e-6;
};

struct ExprTest {
    double input = 0.0;
    double expected = 0.0;
};

// Restricted arithmetic language: numbers, one variable, + - * / ^, parens.
struct ExpressionTests {
    std::string variable = "x";
    std::vector<ExprTest> tests;
};

struct ToyGuess {
    int secret = 0;
    int domain = 64;  // secrets live in [0, domain)
    FeedbackStyle feedback = FeedbackStyle::HigherLower;
};

using CheckerSpec = std::variant<ExactAnswer, NumericAnswer, ExpressionTests, ToyGuess>;

const char* checker_kind_name(const CheckerSpec& spec);

// ---- task instances ------------------------------------------------------

struct TaskInstance {
    std::string task_id;
    std::string problem_text;  // becomes the teacher's opening utterance
    CheckerSpec checker;
    KnowledgeKind private_kind = KnowledgeKind::GroundTruth;
    std::optional<std::string> ground_truth_override;  // explicit GroundTruth payload
    std::optional<std::vector<std::string>> shards;    // shard 1 == problem_text

    PrivateKnowledge initial_knowledge() const;
    // Shard tasks terminate on shard exhaustion; this overrides the caller's N.
    int effective_max_turns(int requested) const;
    std::string ground_truth_answer() const;
};

void validate_task(const TaskInstance& task);

// ---- operations ----------------------------------------------------------

// Pure. Extraction rule: last "ANSWER:"-prefixed line, else last number (the
// numeric checker also accepts the final \boxed{...}); toy tasks parse
// "GUESS v". No extractable answer => NonAttempt.
CheckResult check(const TaskInstance& task, const std::string& utterance);

std::optional<std::string> extract_answer_line(const std::string& utterance);
std::optional<std::string> extract_last_number(const std::string& text);
std::optional<int> extract_guess(const std::string& utterance);
bool is_question(const std::string& utterance);

// True if the generic extraction rules find anything that counts as an
// attempt (GUESS token, ANSWER: line, or a trailing number).
bool has_extractable_answer(const std::string& utterance);

// Evaluate the restricted arithmetic language at variable=value.
// Throws MalformedChecker on syntax errors.
double eval_expression(const std::string& expr, const std::string& variable, double value);
bool parses_as_expression(const std::string& expr, const std::string& variable);

// Template-based teacher reply. Dispatches on knowledge.kind:
//   GroundTruth  -> corrective feedback derived from the gap to the truth
//   VerifierLog  -> latest report verbatim
//   ShardQueue   -> next unrevealed shard verbatim ("lazy user")
// Precondition: history ends with a student utterance.
std::string scripted_teacher_reply(const TaskInstance& task,
                                   const std::vector<Utterance>& history,
                                   const PrivateKnowledge& knowledge);

// ---- built-in toy domain ---------------------------------------------------

TaskInstance make_toy_task(const std::string& task_id, int secret, int domain = 64,
                           FeedbackStyle feedback = FeedbackStyle::HigherLower);

// Wrap problem shards into a task: shards[0] is the opening utterance, the
// rest become the teacher's unrevealed queue; max turns == shards.size().
TaskInstance shard_wrap(TaskInstance task, std::vector<std::string> shards);

// ---- task files ------------------------------------------------------------

std::vector<TaskInstance> load_tasks_jsonl(const std::string& path);
void save_tasks_jsonl(const std::vector<TaskInstance>& tasks, const std::string& path);

using TaskIndex = std::unordered_map<std::string, TaskInstance>;
TaskIndex index_tasks(const std::vector<TaskInstance>& tasks);

}  // namespace tutorloop
