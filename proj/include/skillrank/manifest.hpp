#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace skillrank {

// Provenance record written beside every artifact-producing command's
// output: enough to reproduce the artifact from the referenced inputs.
struct RunManifest {
    std::string command_line;
    std::string timestamp_utc;
    std::string config_json;  // full config snapshot
    std::optional<std::uint64_t> seed;
    std::vector<std::pair<std::string, std::string>> providers;  // role -> identity
    std::vector<std::string> input_files;   // digested at write time
    std::vector<std::string> output_files;
};

// Writes <primary_output>.manifest.json.
void write_manifest(const std::string& primary_output, const RunManifest& manifest);

}  // namespace skillrank
