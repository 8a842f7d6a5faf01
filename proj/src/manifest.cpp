#include "tutorloop/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"
#include "tutorloop/rng.hpp"

namespace tutorloop {

std::string string_hash_hex(const std::string& text) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return buf;
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return string_hash_hex(buf.str());
}

Manifest make_manifest(const std::string& command, const RunConfig& config,
                       std::uint64_t seed) {
    Manifest m;
    m.command = command;
    m.seed = seed;
    m.config_hash = string_hash_hex(config.canonical());
    return m;
}

void write_manifest(const Manifest& manifest, const std::string& directory) {
    nlohmann::ordered_json j;
    j["command"] = manifest.command;
    j["code_version"] = manifest.code_version;
    j["seed"] = manifest.seed;
    j["config_hash"] = manifest.config_hash;
    j["input_hashes"] = nlohmann::ordered_json::object();
    for (const auto& [label, hash] : manifest.input_hashes) j["input_hashes"][label] = hash;
    std::ofstream out(directory + "/manifest.json");
    if (!out) throw Error("cannot write manifest in '" + directory + "'");
    out << j.dump(2) << "\n";
}

}  // namespace tutorloop
