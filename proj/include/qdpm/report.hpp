#pragma once

// CSV and manifest emission. Every file is UTF-8 with LF line endings and a
// fixed column order.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdpm/harness.hpp"

namespace qdpm {

inline constexpr const char* kArtifactVersion = "1.0.0";

/// slot,regime,state_index,action,arrivals,served,dropped,queue,energy,reward
void write_trajectory_csv(std::ostream& out, const RunResult& run);

/// slot,regime,ma_reward,frozen_avg_reward,oracle_avg_reward,agreement,
/// agreement_vacuous,energy_reduction_pct
void write_snapshots_csv(std::ostream& out, const RunResult& run);

/// key,value rows: the run summary followed by `extra`.
void write_summary_csv(std::ostream& out, const RunSummary& summary,
                       const std::vector<std::pair<std::string, std::string>>& extra = {});

/// switch_slot,regime_from,regime_to,recovery_slots,recovered
void write_switches_csv(std::ostream& out, const std::vector<SwitchRecord>& switches);

/// Writes `text` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& text);

/// Manifest common to every subcommand: resolved config, seed, hash, version
/// and the Q-table dimensions of the configured state space.
nlohmann::json base_manifest(const std::string& command, const ExperimentConfig& config);

}  // namespace qdpm
