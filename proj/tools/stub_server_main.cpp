#include <iostream>

#include <CLI11.hpp>

#include "tutorloop/stub_server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"chat-completions stub server for interoperability testing"};
    std::string host = "127.0.0.1";
    int port = 8080;
    app.add_option("--host", host, "bind address");
    app.add_option("-p,--port", port, "listen port");
    CLI11_PARSE(app, argc, argv);

    std::cout << "serving chat-completions stub on http://" << host << ":" << port
              << " (select behaviour via the model name: stub-math, stub-oracle, stub-teacher,"
                 " stub-timeout, stub-malformed, stub-500, stub-flaky)"
              << std::endl;
    try {
        tutorloop::run_stub_server_blocking(host, port);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
