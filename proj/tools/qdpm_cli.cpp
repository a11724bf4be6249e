// qdpm: command-line front end.
//
//   qdpm solve   --config c.json --out dir    oracle policy and values
//   qdpm run     --config c.json --out dir    one simulation
//   qdpm compare --config c.json --out dir    learner vs oracle, stationary
//   qdpm track   --config c.json --out dir    learner across a regime schedule
//   qdpm sweep   --config c.json --out dir    one run per grid point
//
// Exit codes: 0 success, 2 configuration, 3 solver non-convergence,
// 4 missing artifact.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "qdpm/bridge.hpp"
#include "qdpm/config.hpp"
#include "qdpm/csv.hpp"
#include "qdpm/error.hpp"
#include "qdpm/harness.hpp"
#include "qdpm/mdp.hpp"
#include "qdpm/qlearn.hpp"
#include "qdpm/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qdpm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitMissingArtifact = 4;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool verbose = false;
};

class Log {
 public:
  explicit Log(const Options& o) : quiet_(o.quiet), verbose_(o.verbose) {}

  template <typename... Args>
  void info(fmt::format_string<Args...> f, Args&&... args) const {
    if (!quiet_) fmt::print("{}\n", fmt::format(f, std::forward<Args>(args)...));
  }
  template <typename... Args>
  void detail(fmt::format_string<Args...> f, Args&&... args) const {
    if (verbose_ && !quiet_) fmt::print("{}\n", fmt::format(f, std::forward<Args>(args)...));
  }
  template <typename... Args>
  void warn(fmt::format_string<Args...> f, Args&&... args) const {
    if (!quiet_) fmt::print(stderr, "warning: {}\n", fmt::format(f, std::forward<Args>(args)...));
  }

 private:
  bool quiet_;
  bool verbose_;
};

std::uint64_t parse_seed_text(const std::string& text, const std::string& source) {
  try {
    return static_cast<std::uint64_t>(csv::parse_unsigned(text, source));
  } catch (const ConfigError&) {
    throw ConfigError(fmt::format("{}: '{}' is not an unsigned 64-bit integer", source, text));
  }
}

/// --seed, then experiment.seed, then QDPM_SEED, then 1.
std::uint64_t resolve_seed(const Options& o, const json& doc) {
  if (o.seed) return *o.seed;
  if (doc.is_object() && doc.contains("experiment") && doc["experiment"].is_object() &&
      doc["experiment"].contains("seed")) {
    return doc["experiment"]["seed"].get<std::uint64_t>();
  }
  if (const char* env = std::getenv("QDPM_SEED"); env != nullptr && *env != '\0') {
    return parse_seed_text(env, "QDPM_SEED");
  }
  return 1;
}

struct Loaded {
  json doc;
  ExperimentConfig config;
};

Loaded load(const Options& o) {
  Loaded l;
  l.doc = read_config_document(o.config);
  l.config = parse_config(l.doc);
  l.config.seed = resolve_seed(o, l.doc);
  return l;
}

fs::path prepare_out(const Options& o) {
  fs::path out(o.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw ConfigError(fmt::format("cannot create output directory '{}'", out.string()));
  }
  return out;
}

template <typename Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

void write_manifest(const fs::path& dir, const json& manifest) {
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

json dimensions_json(const TableDimensions& d) {
  return {{"states", d.states}, {"max_actions", d.max_actions}, {"stored_entries", d.stored_entries}};
}

void write_values_csv(std::ostream& out, const ExplicitMdp& mdp, const QFunction& q) {
  out << "state_index,action_index,q_value\n";
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    for (ActionIndex a : mdp.available(s)) {
      out << s << ',' << a << ',' << csv::number(q.at(s, a)) << '\n';
    }
  }
}

/// policy.csv (J* and the greedy action) and values.csv (Q*) of a solved model.
QIterationResult write_solution(const fs::path& dir, const ExplicitMdp& mdp,
                                const ValueIterationResult& solution, const ExperimentConfig& c) {
  write_file(dir / "policy.csv",
             render([&](std::ostream& s) { write_policy_csv(s, solution.policy, solution.values); }));
  auto q = q_value_iteration(mdp, c.discount(), c.solver);
  write_file(dir / "values.csv", render([&](std::ostream& s) { write_values_csv(s, mdp, q.q); }));
  return q;
}

StationaryWorkload require_stationary(const ExperimentConfig& c, const std::string& command) {
  if (!is_stationary(c.workload)) {
    throw ConfigError(fmt::format("{} needs a stationary workload (bernoulli or markov_modulated)",
                                  command));
  }
  return active_workload(c.workload, 0);
}

bool needs_oracle(const ExperimentConfig& c) {
  return c.agent.kind == AgentKind::oracle || c.agent.warm_start;
}

/// Rebuilds the oracle from a policy.csv written by `solve` into `dir`.
std::vector<RegimeOracle> load_oracle(const fs::path& dir, const ExperimentConfig& c) {
  if (!is_stationary(c.workload)) {
    throw ConfigError("run: oracle and warm-start agents need a stationary workload; "
                      "use track for regime schedules");
  }
  const fs::path path = dir / "policy.csv";
  std::ifstream in(path);
  if (!in) {
    throw MissingArtifactError(fmt::format(
        "'{}' not found: this agent needs the oracle policy; run `solve` with the same config "
        "and --out first",
        path.string()));
  }
  Policy policy;
  ValueFunction values;
  try {
    read_policy_csv(in, policy, values);
  } catch (const ConfigError& e) {
    throw MissingArtifactError(
        fmt::format("'{}' is unreadable ({}); re-run `solve`", path.string(), e.what()));
  }
  const StateSpace space(c.device);
  const auto workload = active_workload(c.workload, 0);
  auto mdp = build_explicit_mdp(space, workload, c.weights);
  auto layout = model_layout(space, workload);
  try {
    check_policy(mdp, policy);
  } catch (const ConfigError& e) {
    throw MissingArtifactError(fmt::format(
        "'{}' does not fit this configuration ({}); re-run `solve`", path.string(), e.what()));
  }
  ValueIterationResult solution{values, policy, 0.0, 0, true};
  double avg = average_reward(mdp, policy);
  std::vector<RegimeOracle> oracles;
  oracles.push_back(RegimeOracle{std::move(mdp), layout, std::move(solution), avg});
  return oracles;
}

double final_energy_reduction(const RunResult& run) {
  return run.snapshots.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : run.snapshots.back().energy_reduction_pct;
}

using Extras = std::vector<std::pair<std::string, std::string>>;

void write_run_files(const fs::path& dir, const RunResult& run, const Extras& extra) {
  write_file(dir / "trajectory.csv", render([&](std::ostream& s) { write_trajectory_csv(s, run); }));
  write_file(dir / "snapshots.csv", render([&](std::ostream& s) { write_snapshots_csv(s, run); }));
  write_file(dir / "summary.csv",
             render([&](std::ostream& s) { write_summary_csv(s, run.summary, extra); }));
  if (run.table) {
    write_file(dir / "qtable.csv", render([&](std::ostream& s) { write_qtable_csv(s, *run.table); }));
  }
}

Extras run_extras(const ExperimentConfig& c, const RunResult& run) {
  return {{"agent", to_string(c.agent.kind)},
          {"seed", std::to_string(c.seed)},
          {"energy_reduction_pct", csv::number(final_energy_reduction(run))}};
}

int cmd_solve(const Options& o) {
  Log log(o);
  auto [doc, c] = load(o);
  const auto workload = require_stationary(c, "solve");
  const auto dir = prepare_out(o);
  const StateSpace space(c.device);
  auto mdp = build_explicit_mdp(space, workload, c.weights);
  auto layout = model_layout(space, workload);
  auto solution = value_iteration(mdp, c.discount(), c.solver);
  auto q = write_solution(dir, mdp, solution, c);

  auto manifest = base_manifest("solve", c);
  manifest["solver"] = {{"discount", c.discount()},
                        {"tol", c.solver.tol},
                        {"max_iter", c.solver.max_iter},
                        {"iterations", solution.iterations},
                        {"residual", solution.residual},
                        {"converged", solution.converged},
                        {"q_iterations", q.iterations},
                        {"q_residual", q.residual}};
  manifest["model"] = {{"mdp_states", mdp.n_states()},
                       {"observed_states", layout.observed_states},
                       {"modulation_states", layout.modulation_states}};
  if (solution.converged) manifest["average_reward"] = average_reward(mdp, solution.policy);
  write_manifest(dir, manifest);

  if (!solution.converged) {
    throw NonConvergenceError(fmt::format(
        "value iteration stopped at {} sweeps with residual {} > tol {}; partial results in '{}'",
        solution.iterations, solution.residual, c.solver.tol, dir.string()));
  }
  log.info("solve: {} states, {} sweeps, residual {:.3g}, average reward {:.6g}", mdp.n_states(),
           solution.iterations, solution.residual, manifest["average_reward"].get<double>());
  return kExitOk;
}

int cmd_run(const Options& o) {
  Log log(o);
  auto [doc, c] = load(o);
  const auto dir = prepare_out(o);
  std::vector<RegimeOracle> oracles;
  if (needs_oracle(c)) oracles = load_oracle(dir, c);
  auto run = run_simulation(c, needs_oracle(c) ? &oracles : nullptr);
  write_run_files(dir, run, run_extras(c, run));

  auto manifest = base_manifest("run", c);
  manifest["table_dimensions"] = dimensions_json(run.dimensions);
  write_manifest(dir, manifest);
  log.info("run: {} slots, mean reward {:.6g}, energy reduction {:.3f}%", run.summary.slots,
           run.summary.mean_reward, final_energy_reduction(run));
  return kExitOk;
}

int cmd_compare(const Options& o) {
  Log log(o);
  auto [doc, c] = load(o);
  require_stationary(c, "compare");
  const auto dir = prepare_out(o);
  auto result = convergence_experiment(c);
  const auto& oracle = result.oracle;
  write_solution(dir, oracle.mdp, oracle.solution, c);

  const bool converged = result.relative_gap <= c.convergence_gap;
  auto extra = run_extras(c, result.run);
  extra.insert(extra.end(), {{"oracle_avg_reward", csv::number(oracle.average_reward)},
                             {"final_frozen_avg_reward", csv::number(result.final_frozen_avg_reward)},
                             {"relative_gap", csv::number(result.relative_gap)},
                             {"convergence_gap", csv::number(c.convergence_gap)},
                             {"converged", converged ? "true" : "false"},
                             {"final_agreement", csv::number(result.final_agreement)},
                             {"agreement_vacuous", result.agreement_vacuous ? "true" : "false"},
                             {"visit_floor", std::to_string(c.visit_floor)},
                             {"max_q_error", csv::number(result.max_q_error)},
                             {"q_error_pairs", std::to_string(result.q_error_pairs)}});
  write_run_files(dir, result.run, extra);

  auto manifest = base_manifest("compare", c);
  manifest["table_dimensions"] = dimensions_json(result.run.dimensions);
  manifest["oracle"] = {{"average_reward", oracle.average_reward},
                        {"iterations", oracle.solution.iterations},
                        {"residual", oracle.solution.residual},
                        {"augmented_state", oracle.layout.augmented()}};
  manifest["convergence_gap"] = c.convergence_gap;
  write_manifest(dir, manifest);
  log.info("compare: frozen {:.6g} vs oracle {:.6g} (gap {:.2f}%), agreement {:.3f}",
           result.final_frozen_avg_reward, oracle.average_reward, 100.0 * result.relative_gap,
           result.final_agreement);
  log.detail("compare: max |Q - Q*| {:.4g} over {} pairs visited >= {} times", result.max_q_error,
             result.q_error_pairs, c.visit_floor);
  return kExitOk;
}

int cmd_track(const Options& o) {
  Log log(o);
  auto [doc, c] = load(o);
  if (is_stationary(c.workload)) throw ConfigError("track needs a regime_schedule workload");
  const auto dir = prepare_out(o);
  auto result = tracking_experiment(c);
  for (const auto& w : result.warnings) log.warn("{}", w);

  std::size_t recovered = 0;
  for (const auto& s : result.switches) recovered += s.recovery_slots ? 1 : 0;
  auto extra = run_extras(c, result.run);
  extra.emplace_back("switches", std::to_string(result.switches.size()));
  extra.emplace_back("recovered", std::to_string(recovered));
  for (std::size_t i = 0; i < result.oracles.size(); ++i) {
    extra.emplace_back(fmt::format("regime_{}_oracle_avg_reward", i),
                       csv::number(result.oracles[i].average_reward));
  }
  write_run_files(dir, result.run, extra);
  write_file(dir / "switches.csv",
             render([&](std::ostream& s) { write_switches_csv(s, result.switches); }));

  auto manifest = base_manifest("track", c);
  manifest["table_dimensions"] = dimensions_json(result.run.dimensions);
  json regimes = json::array();
  for (const auto& r : result.oracles) regimes.push_back({{"oracle_avg_reward", r.average_reward}});
  manifest["regimes"] = regimes;
  manifest["recovery_band"] = {{"relative", c.recovery_band}, {"floor", c.recovery_floor}};
  manifest["warnings"] = result.warnings;
  write_manifest(dir, manifest);

  log.info("track: {} switches, {} recovered", result.switches.size(), recovered);
  for (const auto& s : result.switches) {
    log.detail("  switch at {}: {} -> {}, recovery {}", s.switch_slot, s.regime_from, s.regime_to,
               s.recovery_slots ? std::to_string(*s.recovery_slots) : std::string("none"));
  }
  return kExitOk;
}

std::string axis_text(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

struct PointResult {
  RunSummary summary;
  double energy_reduction_pct = 0.0;
};

PointResult run_point(const ExperimentConfig& c, const fs::path& dir) {
  std::vector<RegimeOracle> oracles;
  if (needs_oracle(c)) oracles = solve_regimes(c);
  auto run = run_simulation(c, needs_oracle(c) ? &oracles : nullptr);
  write_run_files(dir, run, run_extras(c, run));
  auto manifest = base_manifest("sweep", c);
  manifest["table_dimensions"] = dimensions_json(run.dimensions);
  write_manifest(dir, manifest);
  return {run.summary, final_energy_reduction(run)};
}

int cmd_sweep(const Options& o) {
  Log log(o);
  const json doc = read_config_document(o.config);
  const auto axes = parse_sweep_grid(doc);
  const auto points = sweep_points(axes);
  const std::uint64_t master = resolve_seed(o, doc);

  std::vector<ExperimentConfig> configs;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      auto c = parse_config(apply_sweep_point(doc, axes, points[i]));
      c.seed = derive_seed(master, static_cast<std::uint64_t>(i));
      configs.push_back(std::move(c));
    } catch (const ConfigError& e) {
      for (const auto& p : e.problems()) problems.push_back(fmt::format("point {}: {}", i, p));
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));

  const auto dir = prepare_out(o);
  auto point_dir = [](std::size_t i) { return fmt::format("point_{:04}", i); };
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<PointResult> results(configs.size());
  for (std::size_t begin = 0; begin < configs.size(); begin += workers) {
    const std::size_t end = std::min(configs.size(), begin + workers);
    std::vector<std::future<PointResult>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, run_point, std::cref(configs[i]),
                                 dir / point_dir(i)));
    }
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = batch[i - begin].get();
      log.detail("sweep: point {} done, mean reward {:.6g}", i, results[i].summary.mean_reward);
    }
  }

  std::ostringstream index;
  index << "point,directory,seed";
  for (const auto& a : axes) index << ',' << a.path;
  index << ",mean_reward,mean_energy,total_dropped,energy_reduction_pct\n";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    index << i << ',' << point_dir(i) << ',' << configs[i].seed;
    for (const auto& v : points[i]) index << ',' << axis_text(v);
    index << ',' << csv::number(results[i].summary.mean_reward) << ','
          << csv::number(results[i].summary.mean_energy) << ',' << results[i].summary.total_dropped
          << ',' << csv::number(results[i].energy_reduction_pct) << '\n';
  }
  write_file(dir / "index.csv", index.str());

  json grid = json::object();
  for (const auto& a : axes) grid[a.path] = a.values;
  json manifest{{"command", "sweep"},
                {"artifact_version", kArtifactVersion},
                {"seed", master},
                {"config_hash", fmt::format("{:016x}", config_hash(doc))},
                {"config", doc},
                {"grid", grid},
                {"points", configs.size()},
                {"table_dimensions", base_manifest("sweep", configs.front())["table_dimensions"]}};
  write_manifest(dir, manifest);
  log.info("sweep: {} points written to '{}'", configs.size(), dir.string());
  return kExitOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON configuration document")->required();
  sub->add_option("--out", o.out, "output directory")->required();
  sub->add_option("--seed", o.seed, "master seed (overrides the config and QDPM_SEED)");
  auto* quiet = sub->add_flag("--quiet,-q", o.quiet, "print nothing on success");
  sub->add_flag("--verbose,-v", o.verbose, "print per-step details")->excludes(quiet);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-learning dynamic power management laboratory"};
  app.require_subcommand(1);
  Options o;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Command commands[] = {
      {"solve", "solve the model exactly and write policy.csv and values.csv", cmd_solve},
      {"run", "simulate one agent and write trajectory, snapshot and summary CSVs", cmd_run},
      {"compare", "learn on a stationary workload and score against the oracle", cmd_compare},
      {"track", "learn across a regime schedule and measure recovery after switches", cmd_track},
      {"sweep", "run every point of sweep.grid into its own directory", cmd_sweep},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o);
    subs.emplace_back(sub, c.fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (const auto& [sub, fn] : subs) {
      if (sub->parsed()) return fn(o);
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: invalid configuration\n");
    for (const auto& p : e.problems()) fmt::print(stderr, "  - {}\n", p);
    return kExitConfig;
  } catch (const NonConvergenceError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitNonConvergence;
  } catch (const MissingArtifactError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitMissingArtifact;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
