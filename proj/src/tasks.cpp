#include "tutorloop/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"

namespace tutorloop {

using nlohmann::ordered_json;

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Correct: return "correct";
        case Verdict::Incorrect: return "incorrect";
        case Verdict::NonAttempt: return "non_attempt";
    }
    return "non_attempt";
}

const char* feedback_style_name(FeedbackStyle s) {
    switch (s) {
        case FeedbackStyle::HigherLower: return "higher_lower";
        case FeedbackStyle::Parity: return "parity";
        case FeedbackStyle::None: return "none";
    }
    return "higher_lower";
}

FeedbackStyle feedback_style_from_name(const std::string& name) {
    if (name == "higher_lower") return FeedbackStyle::HigherLower;
    if (name == "parity") return FeedbackStyle::Parity;
    if (name == "none") return FeedbackStyle::None;
    throw ConfigError("unknown feedback style '" + name + "'");
}

const char* checker_kind_name(const CheckerSpec& spec) {
    if (std::holds_alternative<ExactAnswer>(spec)) return "exact_answer";
    if (std::holds_alternative<NumericAnswer>(spec)) return "numeric_answer";
    if (std::holds_alternative<ExpressionTests>(spec)) return "expression_tests";
    return "toy_guess";
}

// ---- text extraction -------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string normalize_answer(const std::string& s) {
    std::string out;
    bool in_space = true;
    for (char c : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Last \boxed{...} content, if any.
std::optional<std::string> extract_boxed(const std::string& text) {
    const std::string tag = "\\boxed{";
    std::size_t pos = text.rfind(tag);
    if (pos == std::string::npos) return std::nullopt;
    std::size_t start = pos + tag.size();
    int depth = 1;
    for (std::size_t i = start; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}' && --depth == 0) return text.substr(start, i - start);
    }
    return std::nullopt;
}

std::string fmt_num(double v) {
    double r = std::round(v);
    if (std::isfinite(v) && std::abs(v - r) < 1e-9 && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(r));
        return buf;
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::optional<std::string> extract_answer_line(const std::string& utterance) {
    std::optional<std::string> found;
    std::istringstream in(utterance);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.size() >= 7) {
            std::string head = t.substr(0, 7);
            std::transform(head.begin(), head.end(), head.begin(),
                           [](unsigned char c) { return std::toupper(c); });
            if (head == "ANSWER:") found = trim(t.substr(7));
        }
    }
    return found;
}

std::optional<std::string> extract_last_number(const std::string& text) {
    std::optional<std::string> found;
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_digit(text[i]) || (text[i] == '.' && i + 1 < text.size() && is_digit(text[i + 1]))) {
            std::size_t start = i;
            if (start > 0 && (text[start - 1] == '-' || text[start - 1] == '+')) --start;
            std::size_t j = i;
            bool seen_dot = false;
            while (j < text.size() &&
                   (is_digit(text[j]) || (text[j] == '.' && !seen_dot))) {
                if (text[j] == '.') seen_dot = true;
                ++j;
            }
            if (j > 0 && text[j - 1] == '.') --j;  // trailing period is punctuation
            // optional exponent
            if (j + 1 < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < text.size() && is_digit(text[k])) {
                    while (k < text.size() && is_digit(text[k])) ++k;
                    j = k;
                }
            }
            found = text.substr(start, j - start);
            i = j;
        } else {
            ++i;
        }
    }
    return found;
}

std::optional<int> extract_guess(const std::string& utterance) {
    std::optional<int> found;
    std::size_t pos = 0;
    while ((pos = utterance.find("GUESS", pos)) != std::string::npos) {
        std::size_t i = pos + 5;
        while (i < utterance.size() &&
               (utterance[i] == ' ' || utterance[i] == '\t' || utterance[i] == ':'))
            ++i;
        std::size_t start = i;
        if (i < utterance.size() && utterance[i] == '-') ++i;
        std::size_t digits_begin = i;
        while (i < utterance.size() && is_digit(utterance[i])) ++i;
        if (i > digits_begin) {
            try {
                found = std::stoi(utterance.substr(start, i - start));
            } catch (const std::out_of_range&) {
                // absurd guess, treat as no parse
            }
        }
        pos += 5;
    }
    return found;
}

bool is_question(const std::string& utterance) {
    for (auto it = utterance.rbegin(); it != utterance.rend(); ++it) {
        if (std::isspace(static_cast<unsigned char>(*it))) continue;
        return *it == '?';
    }
    return false;
}

bool has_extractable_answer(const std::string& utterance) {
    return extract_guess(utterance).has_value() ||
           extract_answer_line(utterance).has_value() ||
           extract_last_number(utterance).has_value();
}

// ---- expression language ---------------------------------------------------

namespace {

// expr   := term (('+'|'-') term)*
// term   := factor (('*'|'/') factor)*
// factor := unary ('^' factor)?
// unary  := '-' unary | primary
// primary:= number | variable | '(' expr ')'
class ExprParser {
public:
    ExprParser(const std::string& src, const std::string& variable, double value)
        : src_(src), variable_(variable), value_(value) {}

    double parse() {
        double v = expr();
        skip_ws();
        if (pos_ != src_.size()) fail("trailing characters at position " + std::to_string(pos_));
        return v;
    }

private:
    double expr() {
        double v = term();
        while (true) {
            skip_ws();
            if (accept('+')) v += term();
            else if (accept('-')) v -= term();
            else return v;
        }
    }

    double term() {
        double v = factor();
        while (true) {
            skip_ws();
            if (accept('*')) v *= factor();
            else if (accept('/')) v /= factor();
            else return v;
        }
    }

    double factor() {
        double base = unary();
        skip_ws();
        if (accept('^')) return std::pow(base, factor());
        return base;
    }

    double unary() {
        skip_ws();
        if (accept('-')) return -unary();
        return primary();
    }

    double primary() {
        skip_ws();
        if (accept('(')) {
            double v = expr();
            skip_ws();
            if (!accept(')')) fail("expected ')'");
            return v;
        }
        if (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '.')) {
            std::size_t end = 0;
            double v = std::stod(src_.substr(pos_), &end);
            pos_ += end;
            return v;
        }
        if (src_.compare(pos_, variable_.size(), variable_) == 0 &&
            (pos_ + variable_.size() == src_.size() ||
             !std::isalnum(static_cast<unsigned char>(src_[pos_ + variable_.size()])))) {
            pos_ += variable_.size();
            return value_;
        }
        fail("unexpected token at position " + std::to_string(pos_));
        return 0;
    }

    bool accept(char c) {
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void skip_ws() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    [[noreturn]] void fail(const std::string& why) {
        throw MalformedChecker("bad expression '" + src_ + "': " + why);
    }

    const std::string& src_;
    const std::string& variable_;
    double value_;
    std::size_t pos_ = 0;
};

}  // namespace

double eval_expression(const std::string& expr, const std::string& variable, double value) {
    if (trim(expr).empty()) throw MalformedChecker("empty expression");
    return ExprParser(expr, variable, value).parse();
}

bool parses_as_expression(const std::string& expr, const std::string& variable) {
    if (trim(expr).empty()) return false;
    try {
        eval_expression(expr, variable, 1.0);
        return true;
    } catch (const MalformedChecker&) {
        return false;
    }
}

// ---- checking --------------------------------------------------------------

namespace {

CheckResult check_exact(const ExactAnswer& spec, const std::string& utterance) {
    std::optional<std::string> candidate = extract_answer_line(utterance);
    if (!candidate) candidate = extract_last_number(utterance);
    if (!candidate) return {Verdict::NonAttempt, "no extractable answer"};
    if (normalize_answer(*candidate) == normalize_answer(spec.answer))
        return {Verdict::Correct, "correct"};
    return {Verdict::Incorrect, "attempt '" + *candidate + "' is wrong"};
}

CheckResult check_numeric(const NumericAnswer& spec, const std::string& utterance) {
    std::optional<std::string> scope = extract_answer_line(utterance);
    std::optional<std::string> number;
    if (scope) {
        number = extract_last_number(*scope);
    } else if (auto boxed = extract_boxed(utterance)) {
        number = extract_last_number(*boxed);
    } else {
        number = extract_last_number(utterance);
    }
    if (!number) return {Verdict::NonAttempt, "no extractable number"};
    double got = 0;
    try {
        got = std::stod(*number);
    } catch (const std::exception&) {
        return {Verdict::NonAttempt, "no parseable number"};
    }
    if (std::abs(got - spec.answer) <= spec.tolerance)
        return {Verdict::Correct, "correct"};
    return {Verdict::Incorrect, "attempt " + fmt_num(got) + " is wrong"};
}

CheckResult check_expression(const ExpressionTests& spec, const std::string& utterance) {
    std::optional<std::string> candidate = extract_answer_line(utterance);
    if (!candidate) {
        // fall back to the last line that parses in the restricted language
        std::istringstream in(utterance);
        std::string line;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (!t.empty() && parses_as_expression(t, spec.variable)) candidate = t;
        }
    }
    if (!candidate || !parses_as_expression(*candidate, spec.variable))
        return {Verdict::NonAttempt, "no expression found"};
    for (std::size_t i = 0; i < spec.tests.size(); ++i) {
        double got = eval_expression(*candidate, spec.variable, spec.tests[i].input);
        double want = spec.tests[i].expected;
        bool ok = std::isfinite(got) &&
                  std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want));
        if (!ok) {
            return {Verdict::Incorrect, "test " + std::to_string(i + 1) +
                                            " failed: expected " + fmt_num(want) + " got " +
                                            (std::isfinite(got) ? fmt_num(got) : "a non-finite value")};
        }
    }
    return {Verdict::Correct, "all " + std::to_string(spec.tests.size()) + " tests passed"};
}

CheckResult check_toy(const ToyGuess& spec, const std::string& utterance) {
    std::optional<int> guess = extract_guess(utterance);
    if (!guess) return {Verdict::NonAttempt, "no GUESS token"};
    if (*guess == spec.secret) return {Verdict::Correct, "correct"};
    switch (spec.feedback) {
        case FeedbackStyle::HigherLower:
            return {Verdict::Incorrect, spec.secret > *guess ? "higher" : "lower"};
        case FeedbackStyle::Parity:
            return {Verdict::Incorrect,
                    spec.secret % 2 == 0 ? "the target is even" : "the target is odd"};
        case FeedbackStyle::None:
            return {Verdict::Incorrect, "incorrect"};
    }
    return {Verdict::Incorrect, "incorrect"};
}

}  // namespace

CheckResult check(const TaskInstance& task, const std::string& utterance) {
    return std::visit(
        [&](const auto& spec) -> CheckResult {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, ExactAnswer>) return check_exact(spec, utterance);
            else if constexpr (std::is_same_v<T, NumericAnswer>) return check_numeric(spec, utterance);
            else if constexpr (std::is_same_v<T, ExpressionTests>) return check_expression(spec, utterance);
            else return check_toy(spec, utterance);
        },
        task.checker);
}

// ---- scripted teacher ------------------------------------------------------

namespace {

const Utterance& last_student_utterance(const std::vector<Utterance>& history) {
    if (history.empty() || history.back().role != Role::Student)
        throw Error("scripted_teacher_reply: history must end with a student utterance");
    return history.back();
}

std::optional<int> most_recent_guess(const std::vector<Utterance>& history) {
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->role != Role::Student) continue;
        if (auto g = extract_guess(it->text)) return g;
    }
    return std::nullopt;
}

std::string toy_ground_truth_reply(const ToyGuess& spec,
                                   const std::vector<Utterance>& history) {
    const Utterance& last = last_student_utterance(history);
    std::optional<int> guess = extract_guess(last.text);
    if (!guess) {
        // question or discussion: answer with what the knowledge implies
        if (auto prev = most_recent_guess(history)) {
            if (spec.feedback == FeedbackStyle::HigherLower)
                return spec.secret > *prev ? "higher" : "lower";
            if (spec.feedback == FeedbackStyle::Parity)
                return spec.secret % 2 == 0 ? "the target is even" : "the target is odd";
            return "keep trying";
        }
        return "no guesses yet; state GUESS <value> and I will respond";
    }
    CheckResult r = check_toy(spec, last.text);
    return r.report;
}

std::string generic_ground_truth_reply(const std::vector<Utterance>& history) {
    const Utterance& last = last_student_utterance(history);
    std::optional<std::string> attempt = extract_answer_line(last.text);
    if (!attempt) attempt = extract_last_number(last.text);
    if (attempt)
        return "incorrect, re-examine the step where you concluded " + *attempt;
    return "I cannot reveal the answer; work the problem and finish with an ANSWER: line";
}

}  // namespace

std::string scripted_teacher_reply(const TaskInstance& task,
                                   const std::vector<Utterance>& history,
                                   const PrivateKnowledge& knowledge) {
    last_student_utterance(history);  // precondition
    switch (knowledge.kind) {
        case KnowledgeKind::ShardQueue:
            if (knowledge.unrevealed.empty())
                throw Error("shard queue exhausted but a reply was requested");
            return knowledge.unrevealed.front();
        case KnowledgeKind::VerifierLog:
            if (knowledge.reports.empty())
                throw Error("verifier log empty but a reply was requested");
            return knowledge.reports.back();
        case KnowledgeKind::GroundTruth:
            if (const auto* toy = std::get_if<ToyGuess>(&task.checker))
                return toy_ground_truth_reply(*toy, history);
            return generic_ground_truth_reply(history);
        case KnowledgeKind::Empty:
            return "keep trying";
    }
    return "keep trying";
}

// ---- task instances --------------------------------------------------------

PrivateKnowledge TaskInstance::initial_knowledge() const {
    switch (private_kind) {
        case KnowledgeKind::GroundTruth:
            return PrivateKnowledge::ground_truth(ground_truth_answer());
        case KnowledgeKind::VerifierLog:
            return PrivateKnowledge::verifier_log();
        case KnowledgeKind::ShardQueue: {
            if (!shards) throw ConfigError("task '" + task_id + "': shard_queue without shards");
            std::vector<std::string> rest(shards->begin() + 1, shards->end());
            return PrivateKnowledge::shard_queue(std::move(rest));
        }
        case KnowledgeKind::Empty:
            return PrivateKnowledge::empty();
    }
    return PrivateKnowledge::empty();
}

int TaskInstance::effective_max_turns(int requested) const {
    if (shards) return static_cast<int>(shards->size());
    return requested;
}

std::string TaskInstance::ground_truth_answer() const {
    if (ground_truth_override) return *ground_truth_override;
    if (const auto* e = std::get_if<ExactAnswer>(&checker)) return e->answer;
    if (const auto* n = std::get_if<NumericAnswer>(&checker)) return fmt_num(n->answer);
    if (const auto* t = std::get_if<ToyGuess>(&checker)) return std::to_string(t->secret);
    return "";
}

void validate_task(const TaskInstance& task) {
    if (task.task_id.empty()) throw ConfigError("task with empty task_id");
    if (task.problem_text.empty())
        throw ConfigError("task '" + task.task_id + "': empty problem_text");
    if (const auto* toy = std::get_if<ToyGuess>(&task.checker)) {
        if (toy->domain < 2)
            throw MalformedChecker("task '" + task.task_id + "': toy domain must be >= 2");
        if (toy->secret < 0 || toy->secret >= toy->domain)
            throw MalformedChecker("task '" + task.task_id + "': secret outside [0, domain)");
    }
    if (const auto* num = std::get_if<NumericAnswer>(&task.checker)) {
        if (num->tolerance < 0)
            throw MalformedChecker("task '" + task.task_id + "': negative tolerance");
    }
    if (const auto* ex = std::get_if<ExpressionTests>(&task.checker)) {
        if (ex->tests.empty())
            throw MalformedChecker("task '" + task.task_id + "': expression_tests without tests");
        if (ex->variable.empty())
            throw MalformedChecker("task '" + task.task_id + "': empty variable name");
    }
    if (task.shards) {
        if (task.shards->size() < 2)
            throw ConfigError("task '" + task.task_id + "': sharded tasks need at least 2 shards");
        if (task.problem_text != (*task.shards)[0])
            throw ConfigError("task '" + task.task_id + "': problem_text must equal shard 1");
        if (task.private_kind != KnowledgeKind::ShardQueue)
            throw ConfigError("task '" + task.task_id + "': shards require shard_queue knowledge");
    }
    if (task.private_kind == KnowledgeKind::ShardQueue && !task.shards)
        throw ConfigError("task '" + task.task_id + "': shard_queue knowledge without shards");
    if (task.private_kind == KnowledgeKind::GroundTruth && task.ground_truth_answer().empty())
        throw ConfigError("task '" + task.task_id + "': ground_truth knowledge with no answer");
}

TaskInstance make_toy_task(const std::string& task_id, int secret, int domain,
                           FeedbackStyle feedback) {
    TaskInstance task;
    task.task_id = task_id;
    task.problem_text = "Guess the secret integer between 0 and " +
                        std::to_string(domain - 1) +
                        " inclusive. Answer in the form GUESS <value>. "
                        "You may instead ask a question about the target.";
    task.checker = ToyGuess{secret, domain, feedback};
    task.private_kind = KnowledgeKind::GroundTruth;
    validate_task(task);
    return task;
}

TaskInstance shard_wrap(TaskInstance task, std::vector<std::string> shards) {
    if (shards.size() < 2)
        throw ConfigError("task '" + task.task_id + "': sharded tasks need at least 2 shards");
    task.problem_text = shards[0];
    task.shards = std::move(shards);
    task.private_kind = KnowledgeKind::ShardQueue;
    validate_task(task);
    return task;
}

// ---- task files --------------------------------------------------------------

namespace {

CheckerSpec checker_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "exact_answer") return ExactAnswer{j.at("answer").get<std::string>()};
    if (kind == "numeric_answer")
        return NumericAnswer{j.at("answer").get<double>(), j.value("tolerance", 1e-6)};
    if (kind == "expression_tests") {
        ExpressionTests spec;
        spec.variable = j.value("variable", "x");
        for (const auto& t : j.at("tests"))
            spec.tests.push_back({t.at("input").get<double>(), t.at("expected").get<double>()});
        return spec;
    }
    if (kind == "toy_guess") {
        ToyGuess spec;
        spec.secret = j.at("secret").get<int>();
        spec.domain = j.value("domain", 64);
        spec.feedback = feedback_style_from_name(j.value("feedback", "higher_lower"));
        return spec;
    }
    throw ConfigError("unknown checker kind '" + kind + "'");
}

ordered_json checker_to_json(const CheckerSpec& spec) {
    ordered_json j;
    j["kind"] = checker_kind_name(spec);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ExactAnswer>) {
                j["answer"] = s.answer;
            } else if constexpr (std::is_same_v<T, NumericAnswer>) {
                j["answer"] = s.answer;
                j["tolerance"] = s.tolerance;
            } else if constexpr (std::is_same_v<T, ExpressionTests>) {
                j["variable"] = s.variable;
                auto arr = ordered_json::array();
                for (const auto& t : s.tests)
                    arr.push_back({{"input", t.input}, {"expected", t.expected}});
                j["tests"] = arr;
            } else {
                j["secret"] = s.secret;
                j["domain"] = s.domain;
                j["feedback"] = feedback_style_name(s.feedback);
            }
        },
        spec);
    return j;
}

}  // namespace

std::vector<TaskInstance> load_tasks_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open task file '" + path + "'");
    std::vector<TaskInstance> tasks;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            TaskInstance task;
            task.task_id = j.at("task_id").get<std::string>();
            task.checker = checker_from_json(j.at("checker"));
            task.private_kind = knowledge_kind_from_name(j.value("private", "ground_truth"));
            if (j.contains("ground_truth"))
                task.ground_truth_override = j.at("ground_truth").get<std::string>();
            if (j.contains("shards")) {
                auto shards = j.at("shards").get<std::vector<std::string>>();
                task.problem_text = j.value("problem_text", shards.empty() ? "" : shards[0]);
                task.shards = std::move(shards);
            } else {
                task.problem_text = j.at("problem_text").get<std::string>();
            }
            validate_task(task);
            tasks.push_back(std::move(task));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return tasks;
}

void save_tasks_jsonl(const std::vector<TaskInstance>& tasks, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write task file '" + path + "'");
    for (const auto& task : tasks) {
        ordered_json j;
        j["task_id"] = task.task_id;
        j["problem_text"] = task.problem_text;
        j["checker"] = checker_to_json(task.checker);
        j["private"] = knowledge_kind_name(task.private_kind);
        if (task.ground_truth_override) j["ground_truth"] = *task.ground_truth_override;
        if (task.shards) j["shards"] = *task.shards;
        out << j.dump() << "\n";
    }
}

TaskIndex index_tasks(const std::vector<TaskInstance>& tasks) {
    TaskIndex index;
    for (const auto& t : tasks) index[t.task_id] = t;
    return index;
}

}  // namespace tutorloop
