#pragma once

// Experiment orchestration: the agent/environment loop, the stationary
// convergence study, the regime-switching tracking study, and their metrics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdpm/baselines.hpp"
#include "qdpm/bridge.hpp"
#include "qdpm/device.hpp"
#include "qdpm/env.hpp"
#include "qdpm/mdp.hpp"
#include "qdpm/qlearn.hpp"
#include "qdpm/workload.hpp"

namespace qdpm {

enum class AgentKind { qlearn, always_on, timeout, oracle };

std::string to_string(AgentKind kind);

struct AgentSpec {
  AgentKind kind = AgentKind::qlearn;
  LearnerConfig learner;
  TimeoutConfig timeout;
  bool warm_start = false;  // start the Q-table at the solved Q*
};

/// Schedules used when the configuration leaves them out: visit-decayed rate
/// and decaying exploration for stationary workloads, constant rate and
/// exploration for regime schedules.
LearnerConfig default_learner(const WorkloadSpec& workload);

struct ExperimentConfig {
  DeviceModel device = standard_device();
  WorkloadSpec workload = Bernoulli{0.3};
  RewardWeights weights;
  AgentSpec agent{AgentKind::qlearn, default_learner(Bernoulli{0.3}), {}, false};
  std::size_t horizon = 200000;
  std::uint64_t seed = 1;
  std::size_t window = 1000;  // moving-average width in slots
  std::size_t snapshot_interval = 1000;
  std::size_t visit_floor = 100;  // v_min for agreement and Q-error metrics
  double recovery_band = 0.10;  // relative band around a regime oracle's average
  double recovery_floor = 0.05;  // absolute band when that average is near zero
  double convergence_gap = 0.05;  // relative gap reported as converged
  SolverOptions solver;

  double discount() const { return agent.learner.discount; }
  std::vector<std::string> validation_errors() const;
  void validate() const;
};

struct SlotRecord {
  std::size_t slot = 0;
  std::size_t regime = 0;
  StateIndex state = 0;  // observed state the action was taken in
  ActionIndex action = 0;
  std::size_t arrivals = 0;
  std::size_t served = 0;
  std::size_t dropped = 0;
  std::size_t queue = 0;  // after the slot
  double energy = 0.0;
  double reward = 0.0;
  bool initiated_switch = false;
};

/// Metrics after `slot` slots have elapsed. Fields that do not apply to the
/// experiment are NaN.
struct SnapshotRecord {
  std::size_t slot = 0;
  std::size_t regime = 0;
  double ma_reward = 0.0;
  double frozen_avg_reward = 0.0;
  double oracle_avg_reward = 0.0;
  double agreement = 0.0;
  bool agreement_vacuous = false;
  double energy_reduction_pct = 0.0;  // cumulative, against reference_power every slot
};

struct RunSummary {
  std::size_t slots = 0;
  double total_energy = 0.0;
  double total_reward = 0.0;
  std::size_t total_arrivals = 0;
  std::size_t total_served = 0;
  std::size_t total_dropped = 0;
  std::size_t switches_initiated = 0;
  double mean_reward = 0.0;
  double mean_energy = 0.0;
  double final_ma_reward = 0.0;

  bool operator==(const RunSummary&) const = default;
};

struct TableDimensions {
  std::size_t states = 0;
  std::size_t max_actions = 0;
  std::size_t stored_entries = 0;
};

struct RunResult {
  std::vector<SlotRecord> slots;
  std::vector<SnapshotRecord> snapshots;
  RunSummary summary;
  std::optional<QTable> table;  // final table for qlearn agents
  TableDimensions dimensions;
};

/// Exact model of one stationary regime with its value-iteration solution.
struct RegimeOracle {
  ExplicitMdp mdp;
  ModelLayout layout;
  ValueIterationResult solution;
  double average_reward = 0.0;  // long-run payoff per slot of the solved policy
};

/// Builds and solves the model of a stationary law. Throws
/// NonConvergenceError when value iteration stops at max_iter.
RegimeOracle solve_regime(const StateSpace& space, const StationaryWorkload& workload,
                          const ExperimentConfig& config);

/// One oracle per regime (a single one for stationary workloads).
std::vector<RegimeOracle> solve_regimes(const ExperimentConfig& config);

/// Runs `horizon` slots of observe -> select -> step -> learn. Arrivals come
/// from the "workload" substream of the seed and exploration from the
/// "exploration" substream, so the arrival sequence is the same for every
/// agent. Oracle agents need `oracles` (one per regime); MissingArtifactError
/// otherwise.
RunResult run_simulation(const ExperimentConfig& config,
                         const std::vector<RegimeOracle>* oracles = nullptr);

/// Totals recomputed from per-slot records.
RunSummary summarize(const std::vector<SlotRecord>& slots, std::size_t window);

struct ConvergenceResult {
  RunResult run;
  RegimeOracle oracle;
  double final_frozen_avg_reward = 0.0;
  double relative_gap = 0.0;  // |frozen - oracle| / |oracle|
  double final_agreement = 0.0;
  bool agreement_vacuous = false;
  double max_q_error = 0.0;  // over pairs visited >= visit_floor times
  std::size_t q_error_pairs = 0;
};

/// Q-learning on a stationary workload, scored at every snapshot by the
/// analytic average reward of the frozen greedy policy and by agreement with
/// the oracle policy. Rejects RegimeSchedule and non-learning agents.
ConvergenceResult convergence_experiment(const ExperimentConfig& config);

struct SwitchRecord {
  std::size_t switch_slot = 0;
  std::size_t regime_from = 0;
  std::size_t regime_to = 0;
  std::optional<std::size_t> recovery_slots;  // empty: not recovered within segment
};

struct TrackingResult {
  RunResult run;
  std::vector<RegimeOracle> oracles;
  std::vector<SwitchRecord> switches;
  std::vector<std::string> warnings;
};

/// Runs continuously across a regime schedule and measures, per switch, how
/// many slots the moving-average reward needs to come within the recovery
/// band of the new regime's oracle average. Zero means it already was.
TrackingResult tracking_experiment(const ExperimentConfig& config);

/// Trailing mean over min(window, t+1) values.
std::vector<double> moving_average(const std::vector<double>& series, std::size_t window);

struct Agreement {
  double fraction = 1.0;
  bool vacuous = true;
  std::size_t states = 0;
};

/// Fraction of states with at least `visit_floor` visits whose greedy action
/// matches the oracle. Vacuously 1.0 when no state qualifies.
Agreement policy_agreement(const QTable& q, const Policy& oracle, std::size_t visit_floor);

/// 100 * (E_ref - E_run) / E_ref over whole runs of the same horizon.
double energy_reduction_pct(const RunResult& run, const RunResult& reference);

/// Half-width of the recovery band around `oracle_average`.
double recovery_half_width(double oracle_average, double relative, double floor);

}  // namespace qdpm
