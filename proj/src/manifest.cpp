#include "skillrank/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "skillrank/io.hpp"
#include "skillrank/types.hpp"

namespace skillrank {

namespace {
using nlohmann::json;

std::string now_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}
}  // namespace

void write_manifest(const std::string& primary_output, const RunManifest& manifest) {
    json root;
    root["command_line"] = manifest.command_line;
    root["timestamp_utc"] =
        manifest.timestamp_utc.empty() ? now_utc() : manifest.timestamp_utc;
    root["config"] = json::parse(manifest.config_json.empty() ? "{}" : manifest.config_json);
    if (manifest.seed) root["seed"] = *manifest.seed;

    json providers = json::object();
    for (const auto& [role, identity] : manifest.providers) providers[role] = identity;
    root["providers"] = std::move(providers);

    json inputs = json::array();
    for (const auto& path : manifest.input_files) {
        inputs.push_back({{"path", path}, {"fnv1a64", file_digest_hex(path)}});
    }
    root["inputs"] = std::move(inputs);
    root["outputs"] = manifest.output_files;

    const std::string path = primary_output + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path);
    out << root.dump(2) << '\n';
}

}  // namespace skillrank
