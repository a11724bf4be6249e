#include "qdpm/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "qdpm/error.hpp"
#include "qdpm/rng.hpp"

namespace qdpm {

using nlohmann::json;

namespace {

/// Reads keys of one JSON object, recording type errors and unknown keys.
class Section {
 public:
  Section(const json& node, std::string path, std::vector<std::string>& problems)
      : node_(node), path_(std::move(path)), problems_(problems) {
    if (!node_.is_object()) {
      problems_.push_back(fmt::format("{}: expected an object", path_));
      valid_ = false;
    }
  }

  bool valid() const { return valid_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return valid_ && node_.contains(key);
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &node_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    const json* v = child(key);
    if (v == nullptr) return fallback;
    return convert<T>(*v, where(key), fallback);
  }

  template <typename T>
  T require(const std::string& key, T fallback) {
    if (!has(key)) {
      if (valid_) problems_.push_back(fmt::format("{}: missing required key", where(key)));
      return fallback;
    }
    return get<T>(key, fallback);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  T convert(const json& v, const std::string& where, T fallback) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return bad<T>(where, "a boolean", fallback);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return bad<T>(where, "a string", fallback);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return bad<T>(where, "a number", fallback);
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) return bad<T>(where, "a non-negative integer", fallback);
    }
    return v.get<T>();
  }

  ~Section() {
    if (!valid_) return;
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) problems_.push_back(fmt::format("{}: unknown key", where(key)));
    }
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

 private:
  template <typename T>
  T bad(const std::string& where, const char* expected, T fallback) {
    problems_.push_back(fmt::format("{}: expected {}", where, expected));
    return fallback;
  }

  const json& node_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
  bool valid_ = true;
};

template <typename T>
std::vector<T> number_list(const json* node, const std::string& where, std::size_t expected,
                           std::vector<std::string>& problems) {
  std::vector<T> out;
  if (node == nullptr) return out;
  if (!node->is_array() || (expected > 0 && node->size() != expected)) {
    problems.push_back(fmt::format("{}: expected an array of {} numbers", where, expected));
    return out;
  }
  for (const auto& v : *node) {
    if (!v.is_number()) {
      problems.push_back(fmt::format("{}: expected numbers", where));
      return {};
    }
    out.push_back(v.get<T>());
  }
  return out;
}

DeviceModel parse_device(const json& node, std::vector<std::string>& problems) {
  if (node.is_string()) {
    if (node.get<std::string>() == "std3") return standard_device();
    problems.push_back(fmt::format("device: unknown preset '{}'", node.get<std::string>()));
    return standard_device();
  }
  DeviceModel d;
  Section sec(node, "device", problems);
  if (!sec.valid()) return standard_device();
  if (const json* modes = sec.child("modes")) {
    if (!modes->is_array()) {
      problems.emplace_back("device.modes: expected an array");
    } else {
      for (std::size_t i = 0; i < modes->size(); ++i) {
        Section m((*modes)[i], fmt::format("device.modes[{}]", i), problems);
        if (!m.valid()) continue;
        PowerModeSpec spec;
        spec.name = m.require<std::string>("name", "");
        spec.power = m.require<double>("power", 0.0);
        spec.serves = m.get<bool>("serves", false);
        d.modes.push_back(spec);
      }
    }
  } else {
    problems.emplace_back("device.modes: missing required key");
  }
  if (const json* transitions = sec.child("transitions")) {
    if (!transitions->is_array()) {
      problems.emplace_back("device.transitions: expected an array");
    } else {
      for (std::size_t i = 0; i < transitions->size(); ++i) {
        Section t((*transitions)[i], fmt::format("device.transitions[{}]", i), problems);
        if (!t.valid()) continue;
        TransitionSpec spec;
        spec.from_mode = t.require<std::string>("from", "");
        spec.to_mode = t.require<std::string>("to", "");
        spec.latency = t.get<std::size_t>("latency", 0);
        spec.transit_power = t.get<double>("transit_power", 0.0);
        spec.switch_energy = t.get<double>("switch_energy", 0.0);
        d.transitions.push_back(spec);
      }
    }
  }
  d.initial_mode = sec.get<std::string>("initial_mode", d.modes.empty() ? "" : d.modes.front().name);
  d.queue_capacity = sec.get<std::size_t>("queue_capacity", 8);
  return d;
}

StationaryWorkload parse_stationary(const json& node, const std::string& path,
                                    std::vector<std::string>& problems, bool* is_schedule = nullptr) {
  Section sec(node, path, problems);
  if (!sec.valid()) return Bernoulli{0.0};
  auto kind = sec.require<std::string>("kind", "bernoulli");
  if (kind == "bernoulli") return Bernoulli{sec.require<double>("p", 0.0)};
  if (kind == "markov_modulated") {
    MarkovModulated m;
    auto p = number_list<double>(sec.child("p_arrive"), sec.where("p_arrive"), 2, problems);
    if (p.size() == 2) m.p_arrive = {p[0], p[1]};
    if (const json* sw = sec.child("switch")) {
      if (!sw->is_array() || sw->size() != 2) {
        problems.push_back(fmt::format("{}: expected a 2x2 matrix", sec.where("switch")));
      } else {
        for (std::size_t i = 0; i < 2; ++i) {
          auto row = number_list<double>(&(*sw)[i], fmt::format("{}[{}]", sec.where("switch"), i), 2, problems);
          if (row.size() == 2) m.switch_matrix[i] = {row[0], row[1]};
        }
      }
    } else {
      problems.push_back(fmt::format("{}: missing required key", sec.where("switch")));
    }
    if (!sec.has("p_arrive")) problems.push_back(fmt::format("{}: missing required key", sec.where("p_arrive")));
    return m;
  }
  if (kind == "regime_schedule" && is_schedule != nullptr) {
    *is_schedule = true;
    sec.has("segments");
    return Bernoulli{0.0};
  }
  problems.push_back(fmt::format("{}.kind: unknown workload kind '{}'", path, kind));
  return Bernoulli{0.0};
}

WorkloadSpec parse_workload(const json& node, std::vector<std::string>& problems) {
  bool schedule = false;
  auto stationary = parse_stationary(node, "workload", problems, &schedule);
  if (!schedule) {
    if (const auto* b = std::get_if<Bernoulli>(&stationary)) return *b;
    return std::get<MarkovModulated>(stationary);
  }
  RegimeSchedule rs;
  const json* segments = node.contains("segments") ? &node.at("segments") : nullptr;
  if (segments == nullptr || !segments->is_array()) {
    problems.emplace_back("workload.segments: expected an array");
    return rs;
  }
  for (std::size_t i = 0; i < segments->size(); ++i) {
    auto where = fmt::format("workload.segments[{}]", i);
    Section seg((*segments)[i], where, problems);
    if (!seg.valid()) continue;
    Segment s;
    s.duration = seg.require<std::size_t>("duration", 1);
    if (const json* inner = seg.child("workload")) {
      s.inner = parse_stationary(*inner, where + ".workload", problems);
    } else {
      problems.push_back(where + ".workload: missing required key");
    }
    rs.segments.push_back(s);
  }
  return rs;
}

RewardWeights parse_weights(const json& node, std::vector<std::string>& problems) {
  RewardWeights w;
  Section sec(node, "weights", problems);
  w.reference_power = sec.get<double>("reference_power", w.reference_power);
  w.w_queue = sec.get<double>("w_queue", w.w_queue);
  w.w_drop = sec.get<double>("w_drop", w.w_drop);
  return w;
}

AgentSpec parse_agent(const json& node, const WorkloadSpec& workload,
                      std::vector<std::string>& problems) {
  AgentSpec a;
  a.learner = default_learner(workload);
  Section sec(node, "agent", problems);
  if (!sec.valid()) return a;
  auto kind = sec.get<std::string>("kind", "qlearn");
  if (kind == "qlearn") {
    a.kind = AgentKind::qlearn;
  } else if (kind == "always_on") {
    a.kind = AgentKind::always_on;
  } else if (kind == "timeout") {
    a.kind = AgentKind::timeout;
  } else if (kind == "oracle") {
    a.kind = AgentKind::oracle;
  } else {
    problems.push_back(fmt::format("agent.kind: unknown agent '{}'", kind));
  }
  a.learner.discount = sec.get<double>("discount", a.learner.discount);
  a.learner.q_init = sec.get<double>("q_init", a.learner.q_init);
  a.warm_start = sec.get<bool>("warm_start", false);

  if (const json* lr = sec.child("learning_rate")) {
    Section r(*lr, "agent.learning_rate", problems);
    if (r.valid()) {
      auto k = r.require<std::string>("kind", "constant");
      if (k == "constant") {
        a.learner.learning_rate = ConstantRate{r.require<double>("value", 0.1)};
      } else if (k == "visit_decay") {
        a.learner.learning_rate = VisitDecayRate{r.get<double>("c0", 1.0), r.get<double>("c1", 1.0)};
      } else {
        problems.push_back(fmt::format("agent.learning_rate.kind: unknown schedule '{}'", k));
      }
    }
  }
  if (const json* ex = sec.child("exploration")) {
    Section e(*ex, "agent.exploration", problems);
    if (e.valid()) {
      auto k = e.require<std::string>("kind", "constant");
      if (k == "constant") {
        a.learner.exploration = ConstantExploration{e.require<double>("value", 0.05)};
      } else if (k == "decay") {
        DecayingExploration d;
        d.initial = e.get<double>("initial", d.initial);
        d.decay = e.get<double>("decay", d.decay);
        d.floor = e.get<double>("floor", d.floor);
        a.learner.exploration = d;
      } else {
        problems.push_back(fmt::format("agent.exploration.kind: unknown schedule '{}'", k));
      }
    }
  }
  if (const json* to = sec.child("timeout")) {
    Section t(*to, "agent.timeout", problems);
    if (t.valid()) {
      if (const json* v = t.child("timeout")) {
        if (v->is_string() && v->get<std::string>() == "inf") {
          a.timeout.timeout = std::nullopt;
        } else if (v->is_number_unsigned()) {
          a.timeout.timeout = v->get<std::size_t>();
        } else {
          problems.emplace_back("agent.timeout.timeout: expected a non-negative integer or \"inf\"");
        }
      }
      a.timeout.wake_on_arrival = t.get<bool>("wake_on_arrival", true);
    }
  }
  return a;
}

void parse_experiment(const json& node, ExperimentConfig& c, std::vector<std::string>& problems) {
  Section sec(node, "experiment", problems);
  c.horizon = sec.get<std::size_t>("horizon", c.horizon);
  c.seed = sec.get<std::uint64_t>("seed", c.seed);
  c.window = sec.get<std::size_t>("window", c.window);
  c.snapshot_interval = sec.get<std::size_t>("snapshot_interval", c.snapshot_interval);
  c.visit_floor = sec.get<std::size_t>("visit_floor", c.visit_floor);
  c.recovery_band = sec.get<double>("recovery_band", c.recovery_band);
  c.recovery_floor = sec.get<double>("recovery_floor", c.recovery_floor);
  c.convergence_gap = sec.get<double>("convergence_gap", c.convergence_gap);
  if (const json* solver = sec.child("solver")) {
    Section s(*solver, "experiment.solver", problems);
    c.solver.tol = s.get<double>("tol", c.solver.tol);
    c.solver.max_iter = s.get<std::size_t>("max_iter", c.solver.max_iter);
  }
}

json stationary_json(const StationaryWorkload& w) {
  if (const auto* b = std::get_if<Bernoulli>(&w)) return {{"kind", "bernoulli"}, {"p", b->p}};
  const auto& m = std::get<MarkovModulated>(w);
  return {{"kind", "markov_modulated"},
          {"p_arrive", {m.p_arrive[0], m.p_arrive[1]}},
          {"switch", {{m.switch_matrix[0][0], m.switch_matrix[0][1]},
                      {m.switch_matrix[1][0], m.switch_matrix[1][1]}}}};
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  std::vector<std::string> problems;
  ExperimentConfig c;
  {
    Section root(doc, "config", problems);
    if (!root.valid()) throw ConfigError(std::move(problems));
    if (const json* d = root.child("device")) c.device = parse_device(*d, problems);
    if (const json* w = root.child("workload")) c.workload = parse_workload(*w, problems);
    if (const json* w = root.child("weights")) c.weights = parse_weights(*w, problems);
    c.agent.learner = default_learner(c.workload);
    if (const json* a = root.child("agent")) c.agent = parse_agent(*a, c.workload, problems);
    if (const json* e = root.child("experiment")) parse_experiment(*e, c, problems);
    root.has("sweep");
  }
  if (problems.empty()) {
    problems = c.validation_errors();
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json to_json(const ExperimentConfig& c) {
  json device;
  device["modes"] = json::array();
  for (const auto& m : c.device.modes) {
    device["modes"].push_back({{"name", m.name}, {"power", m.power}, {"serves", m.serves}});
  }
  device["transitions"] = json::array();
  for (const auto& t : c.device.transitions) {
    device["transitions"].push_back({{"from", t.from_mode},
                                     {"to", t.to_mode},
                                     {"latency", t.latency},
                                     {"transit_power", t.transit_power},
                                     {"switch_energy", t.switch_energy}});
  }
  device["initial_mode"] = c.device.initial_mode;
  device["queue_capacity"] = c.device.queue_capacity;

  json workload;
  if (const auto* s = std::get_if<RegimeSchedule>(&c.workload)) {
    workload["kind"] = "regime_schedule";
    workload["segments"] = json::array();
    for (const auto& seg : s->segments) {
      workload["segments"].push_back({{"duration", seg.duration}, {"workload", stationary_json(seg.inner)}});
    }
  } else {
    workload = stationary_json(active_workload(c.workload, 0));
  }

  json agent;
  agent["kind"] = to_string(c.agent.kind);
  agent["discount"] = c.agent.learner.discount;
  agent["q_init"] = c.agent.learner.q_init;
  agent["warm_start"] = c.agent.warm_start;
  if (const auto* r = std::get_if<ConstantRate>(&c.agent.learner.learning_rate)) {
    agent["learning_rate"] = {{"kind", "constant"}, {"value", r->value}};
  } else {
    const auto& v = std::get<VisitDecayRate>(c.agent.learner.learning_rate);
    agent["learning_rate"] = {{"kind", "visit_decay"}, {"c0", v.c0}, {"c1", v.c1}};
  }
  if (const auto* e = std::get_if<ConstantExploration>(&c.agent.learner.exploration)) {
    agent["exploration"] = {{"kind", "constant"}, {"value", e->value}};
  } else {
    const auto& d = std::get<DecayingExploration>(c.agent.learner.exploration);
    agent["exploration"] = {{"kind", "decay"}, {"initial", d.initial}, {"decay", d.decay}, {"floor", d.floor}};
  }
  agent["timeout"] = {{"wake_on_arrival", c.agent.timeout.wake_on_arrival}};
  if (c.agent.timeout.timeout) {
    agent["timeout"]["timeout"] = *c.agent.timeout.timeout;
  } else {
    agent["timeout"]["timeout"] = "inf";
  }

  json experiment = {{"horizon", c.horizon},
                     {"seed", c.seed},
                     {"window", c.window},
                     {"snapshot_interval", c.snapshot_interval},
                     {"visit_floor", c.visit_floor},
                     {"recovery_band", c.recovery_band},
                     {"recovery_floor", c.recovery_floor},
                     {"convergence_gap", c.convergence_gap},
                     {"solver", {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}}}};

  return {{"device", device},
          {"workload", workload},
          {"weights",
           {{"reference_power", c.weights.reference_power},
            {"w_queue", c.weights.w_queue},
            {"w_drop", c.weights.w_drop}}},
          {"agent", agent},
          {"experiment", experiment}};
}

std::vector<SweepAxis> parse_sweep_grid(const json& doc) {
  if (!doc.is_object() || !doc.contains("sweep") || !doc["sweep"].is_object() ||
      !doc["sweep"].contains("grid") || !doc["sweep"]["grid"].is_object()) {
    throw ConfigError("sweep.grid: missing; expected an object of parameter paths to value lists");
  }
  std::vector<std::string> problems;
  for (const auto& [key, value] : doc["sweep"].items()) {
    if (key != "grid") problems.push_back(fmt::format("sweep.{}: unknown key", key));
  }
  std::vector<SweepAxis> axes;
  for (const auto& [path, values] : doc["sweep"]["grid"].items()) {
    if (!values.is_array() || values.empty()) {
      problems.push_back(fmt::format("sweep.grid.{}: expected a non-empty array", path));
      continue;
    }
    SweepAxis axis{path, {}};
    for (const auto& v : values) {
      if (!v.is_primitive() || v.is_null()) {
        problems.push_back(fmt::format("sweep.grid.{}: values must be scalars", path));
        break;
      }
      axis.values.push_back(v);
    }
    axes.push_back(std::move(axis));
  }
  if (axes.empty() && problems.empty()) problems.emplace_back("sweep.grid: empty grid");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return axes;
}

std::vector<std::vector<json>> sweep_points(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<json>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<json>> next;
    for (const auto& prefix : points) {
      for (const auto& v : axis.values) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

json apply_sweep_point(const json& doc, const std::vector<SweepAxis>& axes,
                       const std::vector<json>& point) {
  json out = doc;
  out.erase("sweep");
  for (std::size_t i = 0; i < axes.size(); ++i) {
    std::string pointer = "/" + axes[i].path;
    for (auto& ch : pointer) {
      if (ch == '.') ch = '/';
    }
    try {
      out[json::json_pointer(pointer)] = point[i];
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("sweep.grid.{}: {}", axes[i].path, e.what()));
    }
  }
  return out;
}

std::uint64_t config_hash(const json& doc) { return fnv1a(doc.dump()); }

}  // namespace qdpm
