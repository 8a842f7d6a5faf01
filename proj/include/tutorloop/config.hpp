#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace tutorloop {

// TOML-style sectioned key/value configuration:
//   [section]
//   key = "string"      # or integer, float, true/false
// Values keep their source line so validation errors point at the file.
class RunConfig {
public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text, const std::string& name = "<string>");

    // "section.key=value" override, applied after parsing (CLI flags).
    void set_override(const std::string& dotted);
    void set(const std::string& section, const std::string& key, const std::string& value);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const;
    std::uint64_t get_uint64(const std::string& section, const std::string& key,
                             std::uint64_t fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    // Required variants: throw ConfigError naming the key when absent.
    std::string require_string(const std::string& section, const std::string& key) const;

    // Sorted "section.key=value" lines; the manifest hashes this.
    std::string canonical() const;

    const std::string& source_name() const { return name_; }

private:
    struct Entry {
        std::string raw;
        int line = 0;
    };
    const Entry* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void fail(const Entry& entry, const std::string& key,
                           const std::string& why) const;

    std::string name_ = "<empty>";
    std::map<std::string, Entry> values_;  // "section.key" -> entry
};

}  // namespace tutorloop
