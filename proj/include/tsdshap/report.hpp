#pragma once

// JSON encoding of valuation results and run manifests. Keys are emitted in
// a fixed order and doubles use the shortest round-trip representation, so
// identical results serialize to identical bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsdshap/io.hpp"
#include "tsdshap/types.hpp"

namespace tsdshap {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

struct InputDigest {
  std::string name;    // role, e.g. "train_embeddings"
  std::string sha256;  // lowercase hex
};

inline ordered_json digests_json(const std::vector<InputDigest>& digests) {
  ordered_json out = ordered_json::object();
  for (const auto& d : digests) out[d.name] = d.sha256;
  return out;
}

inline ordered_json to_json(const ValuationResult& r, const std::vector<InputDigest>& digests = {}) {
  ordered_json j;
  j["method"] = to_string(r.method);
  j["values"] = r.values;
  j["seed"] = r.seed;
  j["config"] = ordered_json::parse(r.config_echo);
  j["input_digests"] = digests_json(digests);
  return j;
}

inline std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

inline ValuationResult valuation_from_json(const ordered_json& j) {
  try {
    ValuationResult r;
    r.method = method_from_string(j.at("method").get<std::string>());
    r.values = j.at("values").get<std::vector<double>>();
    r.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
    r.config_echo = j.contains("config") ? j.at("config").dump() : "{}";
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed valuation JSON: ") + e.what());
  }
}

inline ValuationResult load_valuation(const std::filesystem::path& path) {
  const std::string text = io::detail::read_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return valuation_from_json(j);
}

// Everything needed to reproduce a run given its input files.
struct RunManifest {
  std::string command;
  ordered_json parameters = ordered_json::object();
  std::vector<InputDigest> inputs;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
};

inline ordered_json to_json(const RunManifest& m) {
  ordered_json j;
  j["command"] = m.command;
  j["parameters"] = m.parameters;
  j["input_digests"] = digests_json(m.inputs);
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  return j;
}

}  // namespace tsdshap
