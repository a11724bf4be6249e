#include "qdpm/report.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "qdpm/config.hpp"
#include "qdpm/csv.hpp"

namespace qdpm {

void write_trajectory_csv(std::ostream& out, const RunResult& run) {
  out << "slot,regime,state_index,action,arrivals,served,dropped,queue,energy,reward\n";
  for (const auto& r : run.slots) {
    out << r.slot << ',' << r.regime << ',' << r.state << ',' << r.action << ',' << r.arrivals << ','
        << r.served << ',' << r.dropped << ',' << r.queue << ',' << csv::number(r.energy) << ','
        << csv::number(r.reward) << '\n';
  }
}

void write_snapshots_csv(std::ostream& out, const RunResult& run) {
  out << "slot,regime,ma_reward,frozen_avg_reward,oracle_avg_reward,agreement,agreement_vacuous,"
         "energy_reduction_pct\n";
  for (const auto& s : run.snapshots) {
    out << s.slot << ',' << s.regime << ',' << csv::number(s.ma_reward) << ','
        << csv::number(s.frozen_avg_reward) << ',' << csv::number(s.oracle_avg_reward) << ','
        << csv::number(s.agreement) << ',' << (s.agreement_vacuous ? "true" : "false") << ','
        << csv::number(s.energy_reduction_pct) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const RunSummary& s,
                       const std::vector<std::pair<std::string, std::string>>& extra) {
  out << "key,value\n";
  out << "slots," << s.slots << '\n';
  out << "total_energy," << csv::number(s.total_energy) << '\n';
  out << "total_reward," << csv::number(s.total_reward) << '\n';
  out << "total_arrivals," << s.total_arrivals << '\n';
  out << "total_served," << s.total_served << '\n';
  out << "total_dropped," << s.total_dropped << '\n';
  out << "switches_initiated," << s.switches_initiated << '\n';
  out << "mean_reward," << csv::number(s.mean_reward) << '\n';
  out << "mean_energy," << csv::number(s.mean_energy) << '\n';
  out << "final_ma_reward," << csv::number(s.final_ma_reward) << '\n';
  for (const auto& [k, v] : extra) out << k << ',' << v << '\n';
}

void write_switches_csv(std::ostream& out, const std::vector<SwitchRecord>& switches) {
  out << "switch_slot,regime_from,regime_to,recovery_slots,recovered\n";
  for (const auto& s : switches) {
    out << s.switch_slot << ',' << s.regime_from << ',' << s.regime_to << ',';
    if (s.recovery_slots) out << *s.recovery_slots;
    out << ',' << (s.recovery_slots ? "true" : "false") << '\n';
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

nlohmann::json base_manifest(const std::string& command, const ExperimentConfig& config) {
  auto resolved = to_json(config);
  StateSpace space(config.device);
  std::size_t entries = 0;
  for (const auto& s : space.admissible_sets()) entries += s.size();
  return {{"command", command},
          {"artifact_version", kArtifactVersion},
          {"seed", config.seed},
          {"config_hash", fmt::format("{:016x}", config_hash(resolved))},
          {"config", resolved},
          {"table_dimensions",
           {{"states", space.size()}, {"max_actions", space.max_actions()}, {"stored_entries", entries}}}};
}

}  // namespace qdpm
