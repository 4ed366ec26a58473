#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dpi {

// FNV-1a 64 over the file bytes.
uint64_t fnv1a_file(const std::string& path);
std::string fnv1a_hex(uint64_t h);

// Writes <out_dir>/run_manifest.json: command, tool version, seed, the
// resolved parameters, and an FNV-1a hash per input file (directories
// expand to their regular files, sorted). Deliberately timestamp-free so
// reruns are byte-identical.
void write_run_manifest(const std::string& out_dir, const std::string& command, uint64_t seed,
                        const nlohmann::json& parameters,
                        const std::vector<std::string>& inputs);

}
