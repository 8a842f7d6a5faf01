#include "tutorloop/remote.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"

namespace tutorloop {

using nlohmann::json;

// Counting gate bounding concurrent in-flight requests.
struct ChatClient::Gate {
    explicit Gate(int slots) : available(slots) {}
    std::mutex mu;
    std::condition_variable cv;
    int available;

    struct Slot {
        Gate& gate;
        explicit Slot(Gate& g) : gate(g) {
            std::unique_lock<std::mutex> lk(gate.mu);
            gate.cv.wait(lk, [&] { return gate.available > 0; });
            --gate.available;
        }
        ~Slot() {
            {
                std::lock_guard<std::mutex> lk(gate.mu);
                ++gate.available;
            }
            gate.cv.notify_one();
        }
    };
};

ChatClient::ChatClient(RemoteConfig config) : config_(std::move(config)) {
    if (const char* url = std::getenv(kEndpointUrlEnv); url != nullptr && *url != '\0')
        config_.base_url = url;
    if (config_.max_inflight < 1) config_.max_inflight = 1;
    gate_ = std::make_unique<Gate>(config_.max_inflight);
}

ChatClient::~ChatClient() = default;

std::string ChatClient::post_once(const std::string& body) const {
    Gate::Slot slot(*gate_);
    httplib::Client http(config_.base_url);
    http.set_connection_timeout(0, config_.timeout_ms * 1000);
    http.set_read_timeout(0, config_.timeout_ms * 1000);
    http.set_write_timeout(0, config_.timeout_ms * 1000);
    if (const char* token = std::getenv(kApiTokenEnv); token != nullptr && *token != '\0')
        http.set_default_headers({{"Authorization", std::string("Bearer ") + token}});

    httplib::Result res = http.Post(config_.completions_path, body, "application/json");
    if (!res) {
        auto err = res.error();
        bool timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                       err == httplib::Error::Write;
        throw RemoteError(timeout ? RemoteError::Kind::Timeout : RemoteError::Kind::Connect,
                          "request to " + config_.base_url + " failed: " + httplib::to_string(err));
    }
    if (res->status != 200) {
        throw RemoteError(RemoteError::Kind::Http,
                          "endpoint returned HTTP " + std::to_string(res->status));
    }
    return res->body;
}

std::string ChatClient::post_with_retry(const std::string& body) const {
    try {
        return post_once(body);
    } catch (const RemoteError&) {
        return post_once(body);  // retry once, then surface the failure
    }
}

namespace {

json messages_to_json(const std::vector<ChatMessage>& messages) {
    json arr = json::array();
    for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
    return arr;
}

}  // namespace

std::string ChatClient::complete(const std::vector<ChatMessage>& messages,
                                 double temperature) const {
    json req;
    req["model"] = config_.model;
    req["messages"] = messages_to_json(messages);
    req["temperature"] = temperature;
    req["max_tokens"] = config_.max_output_tokens;
    std::string body = post_with_retry(req.dump());
    try {
        json res = json::parse(body);
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw RemoteError(RemoteError::Kind::Malformed,
                          std::string("malformed completion response: ") + e.what());
    }
}

double ChatClient::score(const std::vector<ChatMessage>& messages,
                         const std::string& target) const {
    if (!config_.scoring)
        throw NotScoringCapable("remote (no scoring endpoint configured)");
    json req;
    req["model"] = config_.model;
    req["messages"] = messages_to_json(messages);
    req["temperature"] = 0.0;
    req["max_tokens"] = 0;
    req["logprobs"] = true;
    req["score_target"] = target;
    std::string body = post_with_retry(req.dump());
    try {
        json res = json::parse(body);
        double total = 0;
        for (const auto& tok : res.at("choices").at(0).at("logprobs").at("content"))
            total += tok.at("logprob").get<double>();
        return total;
    } catch (const json::exception& e) {
        throw RemoteError(RemoteError::Kind::Malformed,
                          std::string("malformed scoring response: ") + e.what());
    }
}

std::vector<ChatMessage> student_request_messages(const Observation& obs,
                                                  const std::string& system_prompt) {
    std::vector<ChatMessage> messages;
    if (!system_prompt.empty()) messages.push_back({"system", system_prompt});
    for (const auto& u : obs)
        messages.push_back({u.role == Role::Teacher ? "user" : "assistant", u.text});
    return messages;
}

std::vector<ChatMessage> teacher_request_messages(const TaskInstance& task,
                                                  const DialogueState& state,
                                                  bool reveal_guard) {
    std::string preamble = "You are a teacher guiding a student through a problem.";
    const PrivateKnowledge& k = state.knowledge;
    switch (k.kind) {
        case KnowledgeKind::GroundTruth:
            preamble += " The ground-truth solution is: " + k.answer + ".";
            if (reveal_guard)
                preamble += " Guide the student with corrective feedback, but do not reveal the"
                            " solution verbatim.";
            break;
        case KnowledgeKind::VerifierLog: {
            preamble += " Verifier reports on the student's attempts so far:";
            if (k.reports.empty()) preamble += " (none yet).";
            for (const auto& r : k.reports) preamble += "\n- " + r;
            preamble += "\nRelay what the latest report implies about the attempt.";
            break;
        }
        case KnowledgeKind::ShardQueue:
            if (!k.unrevealed.empty()) {
                preamble += " You are a busy user describing a task bit by bit. Your next"
                            " message must state exactly this next piece of the problem and"
                            " nothing else: " + k.unrevealed.front();
            } else {
                preamble += " All details of the problem have already been given.";
            }
            break;
        case KnowledgeKind::Empty:
            preamble += " You hold no extra information about this problem.";
            break;
    }
    (void)task;
    std::vector<ChatMessage> messages;
    messages.push_back({"system", preamble});
    for (const auto& u : state.history)
        messages.push_back({u.role == Role::Student ? "user" : "assistant", u.text});
    return messages;
}

std::string RemoteStudent::act(const Observation& obs, double temperature, Rng&) const {
    return client_->complete(
        student_request_messages(obs, client_->config().student_system_prompt), temperature);
}

double RemoteStudent::score(const Observation& obs, const std::string& target) const {
    return client_->score(student_request_messages(obs, client_->config().student_system_prompt),
                          target);
}

std::string RemoteTeacher::reply(const TaskInstance& task, const DialogueState& state,
                                 Rng&) const {
    return client_->complete(
        teacher_request_messages(task, state, client_->config().reveal_guard), 1.0);
}

namespace {

std::string to_lower_trim(const std::string& s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    std::size_t b = out.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = out.find_last_not_of(" \t\r\n.");
    return out.substr(b, e - b + 1);
}

std::optional<TurnType> parse_label(const std::string& reply) {
    std::string r = to_lower_trim(reply);
    if (r == "answer_attempt") return TurnType::AnswerAttempt;
    if (r == "clarification_question") return TurnType::ClarificationQuestion;
    if (r == "discussion") return TurnType::Discussion;
    if (r == "other") return TurnType::Other;
    return std::nullopt;
}

}  // namespace

TurnType RemoteJudge::classify(const Observation& context,
                               const std::string& student_utterance) const {
    std::vector<ChatMessage> messages;
    messages.push_back(
        {"system",
         "Classify the student's latest turn in a tutoring dialogue. Reply with exactly one of:"
         " answer_attempt, clarification_question, discussion, other. No other words."});
    std::string transcript;
    for (const auto& u : context)
        transcript += std::string(role_name(u.role)) + ": " + u.text + "\n";
    transcript += "student (turn to classify): " + student_utterance + "\n";
    messages.push_back({"user", transcript});

    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            if (auto label = parse_label(client_->complete(messages, 0.0))) return *label;
        } catch (const RemoteError&) {
            // fall through to retry, then degrade to other
        }
    }
    return TurnType::Other;
}

std::string RemoteQuestionGenerator::generate(const std::string& student_attempt,
                                              const PrivateKnowledge& knowledge, Rng&) const {
    std::string payload;
    switch (knowledge.kind) {
        case KnowledgeKind::GroundTruth: payload = "ground-truth solution: " + knowledge.answer; break;
        case KnowledgeKind::VerifierLog:
            payload = "verifier reports:";
            for (const auto& r : knowledge.reports) payload += "\n- " + r;
            break;
        case KnowledgeKind::ShardQueue:
            payload = "unrevealed problem details:";
            for (const auto& s : knowledge.unrevealed) payload += "\n- " + s;
            break;
        case KnowledgeKind::Empty:
            throw Error("cannot generate a privileged question without private knowledge");
    }
    std::vector<ChatMessage> messages;
    messages.push_back(
        {"system",
         "You are rewriting a student's failed attempt as a question. You can see the teacher's"
         " private knowledge. Write one short information-seeking question the student should"
         " ask instead. Do not state the answer or quote the private knowledge verbatim. End"
         " with a question mark and output only the question."});
    messages.push_back({"user", "Private knowledge: " + payload +
                                    "\nThe student's attempt was:\n" + student_attempt});
    return client_->complete(messages, 1.0);
}

}  // namespace tutorloop
