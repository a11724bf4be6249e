#include "qdpm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "qdpm/error.hpp"

namespace qdpm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Q* tolerance used for the Q-error metric.
constexpr double kQStarTolerance = 1e-10;

using SnapshotHook = std::function<void(SnapshotRecord&, const QTable*)>;

std::size_t modulating_for_slot(const WorkloadSpec& spec, const WorkloadState& ws, std::size_t slot) {
  return regime_at(spec, slot) == ws.segment ? ws.modulating : 0;
}

/// Prefix sums of rewards; long double keeps windowed means stable.
class RewardWindow {
 public:
  explicit RewardWindow(std::size_t window) : window_(window) { prefix_.push_back(0.0L); }

  void push(double reward) { prefix_.push_back(prefix_.back() + reward); }

  /// Mean of the last min(window, n) rewards; NaN before the first reward.
  double mean() const {
    const std::size_t n = prefix_.size() - 1;
    if (n == 0) return kNaN;
    const std::size_t m = std::min(window_, n);
    return static_cast<double>((prefix_[n] - prefix_[n - m]) / static_cast<long double>(m));
  }

 private:
  std::size_t window_;
  std::vector<long double> prefix_;
};

RunResult simulate(const ExperimentConfig& config, const std::vector<RegimeOracle>* oracles,
                   const SnapshotHook& hook) {
  config.validate();
  const StateSpace space(config.device);
  const auto& agent = config.agent;

  const bool needs_oracle = agent.kind == AgentKind::oracle || agent.warm_start;
  if (needs_oracle) {
    if (oracles == nullptr || oracles->size() != regime_count(config.workload)) {
      throw MissingArtifactError("this agent needs a solved oracle policy; run `solve` first");
    }
    for (const auto& o : *oracles) OraclePolicy(o.solution.policy, o.layout.mdp_states());
  }

  std::optional<QLearner> learner;
  if (agent.kind == AgentKind::qlearn) {
    auto admissible = space.admissible_sets();
    QTable table(admissible, space.max_actions(), agent.learner.q_init);
    if (agent.warm_start) {
      const auto& o = oracles->front();
      if (o.layout.augmented()) {
        throw ConfigError("agent: warm_start needs a workload whose model state is observable");
      }
      auto qstar = q_value_iteration(o.mdp, config.discount(), config.solver);
      table = qtable_from_qfunction(o.mdp, qstar.q);
    }
    learner.emplace(agent.learner, std::move(table));
  }

  Rng workload_rng(derive_seed(config.seed, "workload"));
  Rng explore_rng(derive_seed(config.seed, "exploration"));

  RunResult result;
  result.slots.reserve(config.horizon);
  RewardWindow window(config.window);
  SystemState state = space.initial_state();
  WorkloadState ws;
  std::size_t idle_streak = 0;
  double energy_so_far = 0.0;

  auto take_snapshot = [&](std::size_t elapsed) {
    SnapshotRecord rec;
    rec.slot = elapsed;
    rec.regime = elapsed == 0 ? 0 : regime_at(config.workload, elapsed - 1);
    rec.ma_reward = window.mean();
    rec.frozen_avg_reward = kNaN;
    rec.oracle_avg_reward = kNaN;
    rec.agreement = kNaN;
    const double reference = config.weights.reference_power * static_cast<double>(elapsed);
    rec.energy_reduction_pct = reference > 0.0 ? 100.0 * (reference - energy_so_far) / reference : kNaN;
    if (hook) hook(rec, learner ? &learner->table() : nullptr);
    result.snapshots.push_back(rec);
  };

  take_snapshot(0);
  for (std::size_t t = 0; t < config.horizon; ++t) {
    const StateIndex observed = space.index(state);
    ActionIndex action = 0;
    switch (agent.kind) {
      case AgentKind::qlearn:
        action = learner->act(observed, t, explore_rng);
        break;
      case AgentKind::always_on:
        action = always_on_policy(state, space);
        break;
      case AgentKind::timeout:
        action = timeout_policy(state, idle_streak, agent.timeout, space);
        break;
      case AgentKind::oracle: {
        const auto& o = (*oracles)[regime_at(config.workload, t)];
        action = o.solution.policy[o.layout.mdp_state(observed, modulating_for_slot(config.workload, ws, t))];
        break;
      }
    }

    auto step = env_step(space, state, action, config.workload, ws, t, config.weights, workload_rng);
    if (learner) learner->learn(TransitionSample{observed, action, step.outcome.reward, space.index(step.next)}, t);

    SlotRecord rec;
    rec.slot = t;
    rec.regime = step.regime;
    rec.state = observed;
    rec.action = action;
    rec.arrivals = step.outcome.arrivals;
    rec.served = step.outcome.served;
    rec.dropped = step.outcome.dropped;
    rec.queue = step.outcome.queue_after;
    rec.energy = step.outcome.energy;
    rec.reward = step.outcome.reward;
    rec.initiated_switch = step.outcome.initiated_switch;
    result.slots.push_back(rec);

    window.push(rec.reward);
    energy_so_far += rec.energy;
    idle_streak = next_idle_streak(idle_streak, step.next, space);
    state = step.next;
    ws = step.workload;

    const std::size_t elapsed = t + 1;
    if (elapsed % config.snapshot_interval == 0 || elapsed == config.horizon) take_snapshot(elapsed);
  }

  result.summary = summarize(result.slots, config.window);
  if (learner) {
    result.table = learner->table();
    result.dimensions = {result.table->n_states(), result.table->max_actions(),
                         result.table->stored_entries()};
  } else {
    auto sets = space.admissible_sets();
    std::size_t entries = 0;
    for (const auto& s : sets) entries += s.size();
    result.dimensions = {space.size(), space.max_actions(), entries};
  }
  return result;
}

double frozen_average(const RegimeOracle& oracle, const QTable& table) {
  return average_reward(oracle.mdp, lift_policy(greedy_policy_from_qtable(table), oracle.layout));
}

}  // namespace

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::qlearn:
      return "qlearn";
    case AgentKind::always_on:
      return "always_on";
    case AgentKind::timeout:
      return "timeout";
    case AgentKind::oracle:
      return "oracle";
  }
  return "unknown";
}

LearnerConfig default_learner(const WorkloadSpec& workload) {
  LearnerConfig c;
  if (is_stationary(workload)) {
    c.learning_rate = VisitDecayRate{20.0, 20.0};
    c.exploration = DecayingExploration{};
  } else {
    c.learning_rate = ConstantRate{0.1};
    c.exploration = ConstantExploration{0.05};
  }
  return c;
}

std::vector<std::string> ExperimentConfig::validation_errors() const {
  std::vector<std::string> problems = device.validation_errors();
  for (auto& p : qdpm::validation_errors(workload)) problems.push_back(std::move(p));
  for (auto& p : weights.validation_errors()) problems.push_back(std::move(p));
  for (auto& p : agent.learner.validation_errors()) problems.push_back(std::move(p));
  if (horizon < 1) problems.emplace_back("experiment: horizon must be at least 1");
  if (window < 1) problems.emplace_back("experiment: window must be at least 1");
  if (snapshot_interval < 1) problems.emplace_back("experiment: snapshot_interval must be at least 1");
  if (!(recovery_band > 0.0)) problems.emplace_back("experiment: recovery_band must be positive");
  if (!(recovery_floor >= 0.0)) problems.emplace_back("experiment: recovery_floor must be >= 0");
  if (!(convergence_gap > 0.0)) problems.emplace_back("experiment: convergence_gap must be positive");
  if (!(solver.tol > 0.0)) problems.emplace_back("experiment: solver tol must be positive");
  if (solver.max_iter < 1) problems.emplace_back("experiment: solver max_iter must be at least 1");
  if (agent.warm_start && agent.kind != AgentKind::qlearn) {
    problems.emplace_back("agent: warm_start applies to qlearn agents only");
  }
  return problems;
}

void ExperimentConfig::validate() const {
  auto problems = validation_errors();
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

RegimeOracle solve_regime(const StateSpace& space, const StationaryWorkload& workload,
                          const ExperimentConfig& config) {
  auto mdp = build_explicit_mdp(space, workload, config.weights);
  auto layout = model_layout(space, workload);
  auto solution = value_iteration(mdp, config.discount(), config.solver);
  if (!solution.converged) {
    throw NonConvergenceError(fmt::format(
        "value iteration stopped at {} sweeps with residual {} > tol {}", solution.iterations,
        solution.residual, config.solver.tol));
  }
  double avg = average_reward(mdp, solution.policy);
  return RegimeOracle{std::move(mdp), layout, std::move(solution), avg};
}

std::vector<RegimeOracle> solve_regimes(const ExperimentConfig& config) {
  config.validate();
  const StateSpace space(config.device);
  std::vector<RegimeOracle> oracles;
  if (const auto* schedule = std::get_if<RegimeSchedule>(&config.workload)) {
    for (const auto& seg : schedule->segments) oracles.push_back(solve_regime(space, seg.inner, config));
  } else {
    oracles.push_back(solve_regime(space, active_workload(config.workload, 0), config));
  }
  return oracles;
}

RunResult run_simulation(const ExperimentConfig& config, const std::vector<RegimeOracle>* oracles) {
  return simulate(config, oracles, {});
}

RunSummary summarize(const std::vector<SlotRecord>& slots, std::size_t window) {
  RunSummary s;
  s.slots = slots.size();
  std::vector<double> rewards;
  rewards.reserve(slots.size());
  for (const auto& r : slots) {
    s.total_energy += r.energy;
    s.total_reward += r.reward;
    s.total_arrivals += r.arrivals;
    s.total_served += r.served;
    s.total_dropped += r.dropped;
    s.switches_initiated += r.initiated_switch ? 1 : 0;
    rewards.push_back(r.reward);
  }
  if (!slots.empty()) {
    s.mean_reward = s.total_reward / static_cast<double>(s.slots);
    s.mean_energy = s.total_energy / static_cast<double>(s.slots);
    s.final_ma_reward = moving_average(rewards, std::max<std::size_t>(window, 1)).back();
  }
  return s;
}

ConvergenceResult convergence_experiment(const ExperimentConfig& config) {
  config.validate();
  if (!is_stationary(config.workload)) {
    throw ConfigError("compare needs a stationary workload; use track for regime schedules");
  }
  if (config.agent.kind != AgentKind::qlearn) {
    throw ConfigError("compare runs a qlearn agent; set agent.kind to \"qlearn\"");
  }
  auto oracles = solve_regimes(config);
  const RegimeOracle& oracle = oracles.front();
  const bool observable = !oracle.layout.augmented();

  auto hook = [&](SnapshotRecord& rec, const QTable* table) {
    rec.oracle_avg_reward = oracle.average_reward;
    rec.frozen_avg_reward = frozen_average(oracle, *table);
    if (observable) {
      auto agreement = policy_agreement(*table, oracle.solution.policy, config.visit_floor);
      rec.agreement = agreement.fraction;
      rec.agreement_vacuous = agreement.vacuous;
    }
  };

  ConvergenceResult out{simulate(config, &oracles, hook), oracle};
  const auto& last = out.run.snapshots.back();
  out.final_frozen_avg_reward = last.frozen_avg_reward;
  out.relative_gap = std::abs(last.frozen_avg_reward - oracle.average_reward) /
                     std::max(std::abs(oracle.average_reward), std::numeric_limits<double>::min());
  out.final_agreement = last.agreement;
  out.agreement_vacuous = last.agreement_vacuous;

  if (observable) {
    auto qstar = q_value_iteration(oracle.mdp, config.discount(),
                                   SolverOptions{kQStarTolerance, config.solver.max_iter});
    const QTable& table = *out.run.table;
    for (StateIndex s = 0; s < table.n_states(); ++s) {
      for (ActionIndex a : table.actions(s)) {
        if (table.visits(s, a) < config.visit_floor) continue;
        out.max_q_error = std::max(out.max_q_error, std::abs(table.value(s, a) - qstar.q.at(s, a)));
        ++out.q_error_pairs;
      }
    }
  } else {
    out.max_q_error = kNaN;
  }
  return out;
}

double recovery_half_width(double oracle_average, double relative, double floor) {
  if (std::abs(oracle_average) <= floor) return floor;
  return relative * std::abs(oracle_average);
}

TrackingResult tracking_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto* schedule = std::get_if<RegimeSchedule>(&config.workload);
  if (schedule == nullptr) throw ConfigError("track needs a regime_schedule workload");

  TrackingResult out;
  if (config.agent.kind == AgentKind::qlearn &&
      !std::holds_alternative<ConstantRate>(config.agent.learner.learning_rate)) {
    out.warnings.emplace_back("a decaying learning rate slows the response to regime switches; "
                              "a constant rate is recommended for tracking");
  }
  out.oracles = solve_regimes(config);

  auto hook = [&](SnapshotRecord& rec, const QTable* table) {
    const auto& oracle = out.oracles[rec.regime];
    rec.oracle_avg_reward = oracle.average_reward;
    if (table != nullptr) rec.frozen_avg_reward = frozen_average(oracle, *table);
  };
  out.run = simulate(config, &out.oracles, hook);

  std::vector<double> rewards;
  rewards.reserve(out.run.slots.size());
  for (const auto& r : out.run.slots) rewards.push_back(r.reward);
  const auto ma = moving_average(rewards, config.window);

  std::size_t segment_start = 0;
  for (std::size_t i = 0; i + 1 < schedule->segments.size(); ++i) {
    segment_start += schedule->segments[i].duration;
    if (segment_start >= config.horizon) break;
    SwitchRecord sw{segment_start, i, i + 1, std::nullopt};
    const double target = out.oracles[i + 1].average_reward;
    const double half = recovery_half_width(target, config.recovery_band, config.recovery_floor);
    const std::size_t end = std::min(segment_start + schedule->segments[i + 1].duration, config.horizon);
    // k new-regime slots have elapsed when ma[segment_start + k - 1] is read.
    for (std::size_t k = 0; segment_start + k <= end; ++k) {
      if (std::abs(ma[segment_start + k - 1] - target) <= half) {
        sw.recovery_slots = k;
        break;
      }
    }
    out.switches.push_back(sw);
  }
  return out;
}

std::vector<double> moving_average(const std::vector<double>& series, std::size_t window) {
  if (window < 1) throw std::invalid_argument("moving average window must be at least 1");
  RewardWindow w(window);
  std::vector<double> out;
  out.reserve(series.size());
  for (double v : series) {
    w.push(v);
    out.push_back(w.mean());
  }
  return out;
}

Agreement policy_agreement(const QTable& q, const Policy& oracle, std::size_t visit_floor) {
  if (oracle.size() != q.n_states()) {
    throw std::invalid_argument(fmt::format("oracle covers {} states, table has {}", oracle.size(),
                                            q.n_states()));
  }
  Agreement agreement;
  std::size_t matches = 0;
  for (StateIndex s = 0; s < q.n_states(); ++s) {
    std::size_t visits = 0;
    for (ActionIndex a : q.actions(s)) visits += q.visits(s, a);
    if (visits < visit_floor) continue;
    ++agreement.states;
    if (greedy_action(q, s) == oracle[s]) ++matches;
  }
  if (agreement.states > 0) {
    agreement.vacuous = false;
    agreement.fraction = static_cast<double>(matches) / static_cast<double>(agreement.states);
  }
  return agreement;
}

double energy_reduction_pct(const RunResult& run, const RunResult& reference) {
  if (run.summary.slots != reference.summary.slots) {
    throw std::invalid_argument("energy reduction compares runs of the same horizon");
  }
  if (reference.summary.total_energy == 0.0) {
    throw std::invalid_argument("reference run consumed no energy");
  }
  return 100.0 * (reference.summary.total_energy - run.summary.total_energy) /
         reference.summary.total_energy;
}

}  // namespace qdpm
