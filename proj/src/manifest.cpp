#include "lorenz/manifest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lorenz/errors.hpp"

namespace lorenz {

const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a64(bytes));
    return buf;
}

void write_output(RunManifest& manifest, const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open output file '" + path + "'");
    out << text;
    out.close();
    manifest.outputs.push_back({path, text.size(), fnv1a64_hex(text)});
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : m.outputs)
        outs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"fnv1a64", o.fnv1a64}});
    return nlohmann::json{{"schema_version", 1},
                          {"command", m.command},
                          {"argv", m.argv},
                          {"version", m.version},
                          {"wall_clock_seconds", m.wall_clock_seconds},
                          {"outputs", std::move(outs)}};
}

void write_manifest(const RunManifest& manifest, const std::string& base_output_path) {
    std::ofstream out(base_output_path + ".manifest.json");
    if (!out)
        throw validation_error("cannot open manifest file '" + base_output_path +
                               ".manifest.json'");
    out << manifest_to_json(manifest).dump(2) << "\n";
}

RunManifest manifest_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open manifest '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("manifest: " + path + ": " + e.what());
    }
    RunManifest m;
    m.command = doc.at("command").get<std::string>();
    m.argv = doc.at("argv").get<std::vector<std::string>>();
    m.version = doc.at("version").get<std::string>();
    for (const auto& o : doc.at("outputs"))
        m.outputs.push_back({o.at("path").get<std::string>(), o.at("bytes").get<std::uint64_t>(),
                             o.at("fnv1a64").get<std::string>()});
    return m;
}

} // namespace lorenz
