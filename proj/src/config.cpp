#include "tutorloop/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "tutorloop/errors.hpp"

namespace tutorloop {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// strip an unquoted trailing comment
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

bool valid_key(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

RunConfig RunConfig::from_string(const std::string& text, const std::string& name) {
    RunConfig config;
    config.name_ = name;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(name + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!valid_key(section))
                throw ConfigError(name + ":" + std::to_string(lineno) + ": bad section name '" +
                                  section + "'");
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (!valid_key(key))
            throw ConfigError(name + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
        if (section.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) +
                              ": key '" + key + "' outside any [section]");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        config.values_[section + "." + key] = {value, lineno};
    }
    return config;
}

void RunConfig::set_override(const std::string& dotted) {
    std::size_t eq = dotted.find('=');
    std::size_t dot = dotted.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("override '" + dotted + "' must look like section.key=value");
    std::string section = dotted.substr(0, dot);
    std::string key = dotted.substr(dot + 1, eq - dot - 1);
    set(section, key, dotted.substr(eq + 1));
}

void RunConfig::set(const std::string& section, const std::string& key,
                    const std::string& value) {
    values_[section + "." + key] = {value, 0};
}

const RunConfig::Entry* RunConfig::find(const std::string& section,
                                        const std::string& key) const {
    auto it = values_.find(section + "." + key);
    return it == values_.end() ? nullptr : &it->second;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

void RunConfig::fail(const Entry& entry, const std::string& key, const std::string& why) const {
    throw ConfigError(name_ + ":" + std::to_string(entry.line) + ": " + key + " " + why +
                      " (got '" + entry.raw + "')");
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e == nullptr ? fallback : e->raw;
}

long long RunConfig::get_int(const std::string& section, const std::string& key,
                             long long fallback) const {
    const Entry* e = find(section, key);
    if (e == nullptr) return fallback;
    try {
        std::size_t pos = 0;
        long long v = std::stoll(e->raw, &pos);
        if (pos != e->raw.size()) fail(*e, section + "." + key, "must be an integer");
        return v;
    } catch (const std::exception&) {
        fail(*e, section + "." + key, "must be an integer");
    }
}

std::uint64_t RunConfig::get_uint64(const std::string& section, const std::string& key,
                                    std::uint64_t fallback) const {
    const Entry* e = find(section, key);
    if (e == nullptr) return fallback;
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(e->raw, &pos);
        if (pos != e->raw.size()) fail(*e, section + "." + key, "must be a non-negative integer");
        return v;
    } catch (const std::exception&) {
        fail(*e, section + "." + key, "must be a non-negative integer");
    }
}

double RunConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    const Entry* e = find(section, key);
    if (e == nullptr) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(e->raw, &pos);
        if (pos != e->raw.size()) fail(*e, section + "." + key, "must be a number");
        return v;
    } catch (const std::exception&) {
        fail(*e, section + "." + key, "must be a number");
    }
}

bool RunConfig::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
    const Entry* e = find(section, key);
    if (e == nullptr) return fallback;
    if (e->raw == "true") return true;
    if (e->raw == "false") return false;
    fail(*e, section + "." + key, "must be true or false");
}

std::string RunConfig::require_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (e == nullptr)
        throw ConfigError(name_ + ": missing required key " + section + "." + key);
    return e->raw;
}

std::string RunConfig::canonical() const {
    std::ostringstream out;
    for (const auto& [key, entry] : values_) out << key << "=" << entry.raw << "\n";
    return out.str();
}

}  // namespace tutorloop
