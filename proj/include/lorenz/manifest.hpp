#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace lorenz {

// Reproducibility sidecar written next to every output artifact. Re-running
// the recorded command (or `lorenz-forge replay <manifest>`) reproduces the
// outputs bit-identically; digests let the replay verify that.
struct RunManifest {
    std::string command;                // subcommand path, e.g. "henon scan"
    std::vector<std::string> argv;      // full resolved argument list
    std::string version;
    double wall_clock_seconds = 0.0;
    struct Output {
        std::string path;
        std::uint64_t bytes = 0;
        std::string fnv1a64; // hex digest of the file contents
    };
    std::vector<Output> outputs;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// Writes `text` to `path` and records it in the manifest.
void write_output(RunManifest& manifest, const std::string& path, const std::string& text);

// Writes `<base>.manifest.json` describing the run.
void write_manifest(const RunManifest& manifest, const std::string& base_output_path);

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_file(const std::string& path);

extern const char* kVersion;

} // namespace lorenz
