#pragma once

#include <memory>
#include <string>
#include <vector>

namespace tutorloop {

// Bundled chat-completions stub used for interoperability tests and as a
// standalone tool. Behaviour is selected by the request's model name:
//   stub-math      solves "Compute a+b." tasks: even sums succeed on the
//                  second attempt, odd sums never succeed
//   stub-oracle    echoes back "ANSWER: <sum>" immediately
//   stub-teacher   fixed corrective reply
//   stub-timeout   sleeps past any sane client timeout
//   stub-malformed responds 200 with a non-JSON body
//   stub-500       responds HTTP 500
//   stub-flaky     fails the first request with 500, then acts like stub-math
// Requests carrying "score_target" are answered with one logprob of -0.25 per
// whitespace token of the target.
class StubChatServer {
public:
    StubChatServer();
    ~StubChatServer();

    StubChatServer(const StubChatServer&) = delete;
    StubChatServer& operator=(const StubChatServer&) = delete;

    int port() const;
    std::string url() const;

    // Copies of every request body received, in arrival order.
    std::vector<std::string> request_bodies() const;
    void clear_captures();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Blocking variant for the standalone tool.
void run_stub_server_blocking(const std::string& host, int port);

}  // namespace tutorloop
