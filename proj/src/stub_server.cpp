#include "tutorloop/stub_server.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"

namespace tutorloop {

using nlohmann::json;

namespace {

struct StubState {
    std::mutex mu;
    std::vector<std::string> bodies;
    std::atomic<int> requests{0};
};

std::string completion_body(const std::string& content) {
    json res;
    res["object"] = "chat.completion";
    res["choices"] = json::array(
        {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}});
    return res.dump();
}

std::string scoring_body(const std::string& target) {
    json tokens = json::array();
    std::istringstream in(target);
    std::string word;
    while (in >> word) tokens.push_back({{"token", word}, {"logprob", -0.25}});
    json res;
    res["object"] = "chat.completion";
    res["choices"] = json::array({{{"index", 0}, {"logprobs", {{"content", tokens}}}}});
    return res.dump();
}

// "Compute a+b." -> a+b; even sums answered correctly from the second attempt
// on, odd sums answered wrongly forever.
std::string math_reply(const json& req) {
    int a = 0;
    int b = 0;
    bool found = false;
    int assistant_turns = 0;
    for (const auto& m : req.at("messages")) {
        std::string role = m.at("role").get<std::string>();
        if (role == "assistant") ++assistant_turns;
        if (!found && role == "user") {
            std::string text = m.at("content").get<std::string>();
            if (std::sscanf(text.c_str(), "Compute %d+%d.", &a, &b) == 2) found = true;
        }
    }
    if (!found) return "I do not understand the problem.";
    int sum = a + b;
    bool answer_correctly = (sum % 2 == 0) && assistant_turns >= 1;
    return "ANSWER: " + std::to_string(answer_correctly ? sum : sum + 1);
}

std::string oracle_reply(const json& req) {
    int a = 0;
    int b = 0;
    for (const auto& m : req.at("messages")) {
        if (m.at("role").get<std::string>() != "user") continue;
        std::string text = m.at("content").get<std::string>();
        if (std::sscanf(text.c_str(), "Compute %d+%d.", &a, &b) == 2)
            return "ANSWER: " + std::to_string(a + b);
    }
    return "ANSWER: 0";
}

void handle(StubState& state, const httplib::Request& req, httplib::Response& res) {
    {
        std::lock_guard<std::mutex> lk(state.mu);
        state.bodies.push_back(req.body);
    }
    int request_number = ++state.requests;

    json body;
    try {
        body = json::parse(req.body);
    } catch (const json::exception&) {
        res.status = 400;
        res.set_content(R"({"error":"bad json"})", "application/json");
        return;
    }
    std::string model = body.value("model", "default");

    if (body.contains("score_target")) {
        res.set_content(scoring_body(body.at("score_target").get<std::string>()),
                        "application/json");
        return;
    }
    if (model == "stub-timeout") {
        std::this_thread::sleep_for(std::chrono::seconds(3));
        res.set_content(completion_body("too late"), "application/json");
        return;
    }
    if (model == "stub-malformed") {
        res.set_content("this is { not json", "application/json");
        return;
    }
    if (model == "stub-500") {
        res.status = 500;
        res.set_content(R"({"error":"boom"})", "application/json");
        return;
    }
    if (model == "stub-flaky" && request_number == 1) {
        res.status = 500;
        res.set_content(R"({"error":"transient"})", "application/json");
        return;
    }
    if (model == "stub-teacher") {
        res.set_content(completion_body("incorrect, check your arithmetic and try again"),
                        "application/json");
        return;
    }
    if (model == "stub-oracle") {
        res.set_content(completion_body(oracle_reply(body)), "application/json");
        return;
    }
    // stub-math and stub-flaky (after its first failure)
    res.set_content(completion_body(math_reply(body)), "application/json");
}

}  // namespace

struct StubChatServer::Impl {
    httplib::Server server;
    StubState state;
    std::thread thread;
    int port = 0;
};

StubChatServer::StubChatServer() : impl_(std::make_unique<Impl>()) {
    impl_->server.Post("/v1/chat/completions",
                       [this](const httplib::Request& req, httplib::Response& res) {
                           handle(impl_->state, req, res);
                       });
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw Error("stub server could not bind a port");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    while (!impl_->server.is_running())
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

StubChatServer::~StubChatServer() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int StubChatServer::port() const { return impl_->port; }

std::string StubChatServer::url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port);
}

std::vector<std::string> StubChatServer::request_bodies() const {
    std::lock_guard<std::mutex> lk(impl_->state.mu);
    return impl_->state.bodies;
}

void StubChatServer::clear_captures() {
    std::lock_guard<std::mutex> lk(impl_->state.mu);
    impl_->state.bodies.clear();
}

void run_stub_server_blocking(const std::string& host, int port) {
    httplib::Server server;
    StubState state;
    server.Post("/v1/chat/completions",
                [&state](const httplib::Request& req, httplib::Response& res) {
                    handle(state, req, res);
                });
    if (!server.listen(host, port))
        throw Error("stub server failed to listen on " + host + ":" + std::to_string(port));
}

}  // namespace tutorloop
