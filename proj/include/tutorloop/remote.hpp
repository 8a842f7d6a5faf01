#pragma once

#include <string>
#include <vector>

#include "tutorloop/policy.hpp"
#include "tutorloop/probes.hpp"
#include "tutorloop/qprime.hpp"

namespace tutorloop {

// Environment overrides honoured by the client.
inline constexpr const char* kEndpointUrlEnv = "TUTORLOOP_ENDPOINT_URL";
inline constexpr const char* kApiTokenEnv = "TUTORLOOP_API_TOKEN";

struct RemoteConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string model = "default";
    std::string completions_path = "/v1/chat/completions";
    int timeout_ms = 30000;
    int max_inflight = 8;   // bounded concurrent requests
    int max_output_tokens = 512;
    bool scoring = false;   // endpoint supports log-probability scoring
    // teacher preamble instructs the model not to reveal the answer verbatim
    bool reveal_guard = true;
    std::string student_system_prompt;  // optional, never carries private data
};

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

// Minimal chat-completions client: one connection per request, a shared
// in-flight gate, per-request timeout and one retry.
class ChatClient {
public:
    explicit ChatClient(RemoteConfig config);
    ~ChatClient();

    const RemoteConfig& config() const { return config_; }

    // Throws RemoteError (Connect/Timeout/Http/Malformed) after the retry.
    std::string complete(const std::vector<ChatMessage>& messages, double temperature) const;
    // Sum of token log-probabilities of `target` given `messages`.
    double score(const std::vector<ChatMessage>& messages, const std::string& target) const;

private:
    struct Gate;
    std::string post_once(const std::string& body) const;
    std::string post_with_retry(const std::string& body) const;

    RemoteConfig config_;
    std::unique_ptr<Gate> gate_;
};

// Observation -> chat messages for the student side: teacher utterances map to
// "user", student utterances to "assistant". Contains nothing but the
// observation and the optional neutral system prompt.
std::vector<ChatMessage> student_request_messages(const Observation& obs,
                                                  const std::string& system_prompt);

// Full-state messages for the teacher side: a privileged system preamble built
// from the private knowledge, then the history with roles mirrored
// (student -> user, teacher -> assistant).
std::vector<ChatMessage> teacher_request_messages(const TaskInstance& task,
                                                  const DialogueState& state,
                                                  bool reveal_guard);

class RemoteStudent : public StudentPolicy {
public:
    explicit RemoteStudent(const ChatClient& client) : client_(&client) {}
    std::string kind() const override { return "remote"; }
    std::string act(const Observation& obs, double temperature, Rng& rng) const override;
    bool scoring_capable() const override { return client_->config().scoring; }
    double score(const Observation& obs, const std::string& target) const override;

private:
    const ChatClient* client_;
};

class RemoteStudentFactory : public StudentFactory {
public:
    explicit RemoteStudentFactory(const ChatClient& client) : client_(&client) {}
    std::unique_ptr<StudentPolicy> make(const TaskInstance&) const override {
        return std::make_unique<RemoteStudent>(*client_);
    }

private:
    const ChatClient* client_;
};

class RemoteTeacher : public TeacherPolicy {
public:
    explicit RemoteTeacher(const ChatClient& client) : client_(&client) {}
    std::string kind() const override { return "remote"; }
    std::string reply(const TaskInstance& task, const DialogueState& state,
                      Rng& rng) const override;

private:
    const ChatClient* client_;
};

// Forced-choice turn classifier; malformed replies are retried once, then
// labelled other. Remote failures also degrade to other.
class RemoteJudge : public Judge {
public:
    explicit RemoteJudge(const ChatClient& client) : client_(&client) {}
    std::string id() const override { return "remote:" + client_->config().model; }
    TurnType classify(const Observation& context,
                      const std::string& student_utterance) const override;

private:
    const ChatClient* client_;
};

// Question generator backed by the remote model, prompted with the attempt and
// the privileged payload.
class RemoteQuestionGenerator : public QuestionGenerator {
public:
    explicit RemoteQuestionGenerator(const ChatClient& client) : client_(&client) {}
    std::string name() const override { return "privileged_prompted"; }
    std::string generate(const std::string& student_attempt,
                         const PrivateKnowledge& knowledge, Rng& rng) const override;

private:
    const ChatClient* client_;
};

}  // namespace tutorloop
