#pragma once

// JSON configuration document: sections `device`, `workload`, `weights`,
// `agent`, `experiment` and, for sweeps, `sweep`. Unknown keys are rejected.
// Schema: see README.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdpm/harness.hpp"

namespace qdpm {

/// Parses a configuration document. Throws ConfigError listing every problem.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads and parses a file; missing or unparsable files are ConfigErrors.
nlohmann::json read_config_document(const std::filesystem::path& path);

/// Fully resolved configuration, defaults filled in. parse_config(to_json(c))
/// reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);

struct SweepAxis {
  std::string path;  // dotted path into the document, e.g. "agent.exploration.value"
  std::vector<nlohmann::json> values;
};

/// `sweep.grid` as ordered axes (keys in lexicographic order). Throws
/// ConfigError when the grid is missing or empty.
std::vector<SweepAxis> parse_sweep_grid(const nlohmann::json& doc);

/// Cartesian product of the axes, last axis fastest.
std::vector<std::vector<nlohmann::json>> sweep_points(const std::vector<SweepAxis>& axes);

/// Copy of `doc` without `sweep`, with each axis path set to its value.
nlohmann::json apply_sweep_point(const nlohmann::json& doc, const std::vector<SweepAxis>& axes,
                                 const std::vector<nlohmann::json>& point);

/// Stable 64-bit digest of a JSON document's canonical text.
std::uint64_t config_hash(const nlohmann::json& doc);

}  // namespace qdpm
