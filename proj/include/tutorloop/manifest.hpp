#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "tutorloop/config.hpp"

namespace tutorloop {

inline constexpr const char* kCodeVersion = "tutorloop 0.1.0";

// Hex FNV-1a of a file's bytes, for input provenance in manifests.
std::string file_hash_hex(const std::string& path);
std::string string_hash_hex(const std::string& text);

// Reproducibility bookkeeping written into every run directory. Contains no
// timestamps, so a rerun with matching inputs produces an identical manifest.
struct Manifest {
    std::string command;
    std::string code_version = kCodeVersion;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;  // label -> hash
};

Manifest make_manifest(const std::string& command, const RunConfig& config,
                       std::uint64_t seed);

void write_manifest(const Manifest& manifest, const std::string& directory);

}  // namespace tutorloop
