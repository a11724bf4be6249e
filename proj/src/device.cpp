#include "qdpm/device.hpp"

#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "qdpm/error.hpp"

namespace qdpm {

std::optional<std::size_t> DeviceModel::find_mode(const std::string& name) const {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> DeviceModel::validation_errors() const {
  std::vector<std::string> problems;
  if (modes.empty()) problems.emplace_back("device: no power modes");
  std::set<std::string> names;
  for (const auto& m : modes) {
    if (!names.insert(m.name).second) problems.push_back(fmt::format("device: duplicate mode '{}'", m.name));
    if (!(m.power >= 0.0) || !std::isfinite(m.power)) {
      problems.push_back(fmt::format("device: mode '{}' has power {}", m.name, m.power));
    }
  }
  if (!find_mode(initial_mode)) {
    problems.push_back(fmt::format("device: initial_mode '{}' is not a mode", initial_mode));
  }
  if (queue_capacity < 1) problems.emplace_back("device: queue_capacity must be at least 1");

  std::set<std::pair<std::string, std::string>> pairs;
  bool endpoints_ok = true;
  for (const auto& t : transitions) {
    auto label = fmt::format("{}->{}", t.from_mode, t.to_mode);
    if (!find_mode(t.from_mode) || !find_mode(t.to_mode)) {
      problems.push_back(fmt::format("device: transition {} names an unknown mode", label));
      endpoints_ok = false;
    }
    if (t.from_mode == t.to_mode) problems.push_back(fmt::format("device: transition {} is a self-loop", label));
    if (!pairs.insert({t.from_mode, t.to_mode}).second) {
      problems.push_back(fmt::format("device: transition {} declared twice", label));
    }
    if (!(t.transit_power >= 0.0) || !std::isfinite(t.transit_power)) {
      problems.push_back(fmt::format("device: transition {} has transit_power {}", label, t.transit_power));
    }
    if (!(t.switch_energy >= 0.0) || !std::isfinite(t.switch_energy)) {
      problems.push_back(fmt::format("device: transition {} has switch_energy {}", label, t.switch_energy));
    }
  }

  if (endpoints_ok && !modes.empty() && names.size() == modes.size()) {
    // Backward reachability from the serving modes.
    std::vector<bool> reaches(modes.size(), false);
    std::deque<std::size_t> frontier;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (modes[i].serves) {
        reaches[i] = true;
        frontier.push_back(i);
      }
    }
    while (!frontier.empty()) {
      auto target = frontier.front();
      frontier.pop_front();
      for (const auto& t : transitions) {
        auto from = *find_mode(t.from_mode);
        if (*find_mode(t.to_mode) == target && !reaches[from]) {
          reaches[from] = true;
          frontier.push_back(from);
        }
      }
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (!reaches[i]) {
        problems.push_back(fmt::format("device: no serving mode is reachable from '{}'", modes[i].name));
      }
    }
  }
  return problems;
}

void DeviceModel::validate() const {
  auto problems = validation_errors();
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

DeviceModel standard_device() {
  DeviceModel d;
  d.modes = {{"ON", 2.0, true}, {"OFF", 0.1, false}};
  d.transitions = {{"ON", "OFF", 0, 0.0, 0.5}, {"OFF", "ON", 3, 3.0, 0.0}};
  d.initial_mode = "ON";
  d.queue_capacity = 8;
  return d;
}

std::vector<Action> available_actions(const SystemState& state, const DeviceModel& device) {
  if (const auto* t = std::get_if<InTransit>(&state.occupancy)) {
    if (t->transition >= device.transitions.size() || t->remaining < 1 ||
        t->remaining > device.transitions[t->transition].latency) {
      throw std::invalid_argument("invalid transit state");
    }
    return {Action{Action::Kind::proceed, 0}};
  }
  auto mode = std::get<Settled>(state.occupancy).mode;
  if (mode >= device.modes.size()) throw std::invalid_argument("invalid mode index");
  std::vector<Action> actions{Action{Action::Kind::stay, 0}};
  for (std::size_t i = 0; i < device.transitions.size(); ++i) {
    if (device.transitions[i].from_mode == device.modes[mode].name) {
      actions.push_back(Action{Action::Kind::switch_to, i});
    }
  }
  return actions;
}

StateSpace::StateSpace(DeviceModel device) : device_(std::move(device)) {
  device_.validate();
  occupancies_ = device_.modes.size();
  transit_offset_.resize(device_.transitions.size());
  for (std::size_t i = 0; i < device_.transitions.size(); ++i) {
    transit_offset_[i] = occupancies_;
    occupancies_ += device_.transitions[i].latency;
  }
  actions_.resize(occupancies_);
  for (std::size_t occ = 0; occ < occupancies_; ++occ) {
    actions_[occ] = available_actions(state(occ * (device_.queue_capacity + 1)), device_);
    max_actions_ = std::max(max_actions_, actions_[occ].size());
  }
}

std::size_t StateSpace::occupancy_of(const SystemState& state) const {
  if (const auto* s = std::get_if<Settled>(&state.occupancy)) return s->mode;
  const auto& t = std::get<InTransit>(state.occupancy);
  return transit_offset_[t.transition] + (device_.transitions[t.transition].latency - t.remaining);
}

void StateSpace::check(const SystemState& state) const {
  if (state.queue > device_.queue_capacity) {
    throw std::invalid_argument(fmt::format("queue {} exceeds capacity {}", state.queue,
                                            device_.queue_capacity));
  }
  if (const auto* s = std::get_if<Settled>(&state.occupancy)) {
    if (s->mode >= device_.modes.size()) throw std::invalid_argument("invalid mode index");
    return;
  }
  const auto& t = std::get<InTransit>(state.occupancy);
  if (t.transition >= device_.transitions.size() || t.remaining < 1 ||
      t.remaining > device_.transitions[t.transition].latency) {
    throw std::invalid_argument("invalid transit state");
  }
}

StateIndex StateSpace::index(const SystemState& state) const {
  check(state);
  return occupancy_of(state) * (device_.queue_capacity + 1) + state.queue;
}

SystemState StateSpace::state(StateIndex index) const {
  if (index >= size()) throw std::out_of_range(fmt::format("state index {} >= {}", index, size()));
  const auto stride = device_.queue_capacity + 1;
  auto occ = index / stride;
  SystemState st;
  st.queue = index % stride;
  if (occ < device_.modes.size()) {
    st.occupancy = Settled{occ};
    return st;
  }
  for (std::size_t i = 0; i < device_.transitions.size(); ++i) {
    auto latency = device_.transitions[i].latency;
    if (occ >= transit_offset_[i] && occ < transit_offset_[i] + latency) {
      st.occupancy = InTransit{i, latency - (occ - transit_offset_[i])};
      return st;
    }
  }
  throw std::logic_error("state layout is inconsistent");
}

const std::vector<Action>& StateSpace::actions(const SystemState& state) const {
  check(state);
  return actions_[occupancy_of(state)];
}

const std::vector<Action>& StateSpace::actions(StateIndex index) const {
  if (index >= size()) throw std::out_of_range(fmt::format("state index {} >= {}", index, size()));
  return actions_[index / (device_.queue_capacity + 1)];
}

std::vector<std::vector<ActionIndex>> StateSpace::admissible_sets() const {
  std::vector<std::vector<ActionIndex>> sets(size());
  for (StateIndex s = 0; s < size(); ++s) {
    auto n = actions(s).size();
    for (ActionIndex a = 0; a < n; ++a) sets[s].push_back(a);
  }
  return sets;
}

SystemState StateSpace::initial_state() const {
  return SystemState{Settled{*device_.find_mode(device_.initial_mode)}, 0};
}

std::optional<std::size_t> StateSpace::settled_mode(const SystemState& state) const {
  if (const auto* s = std::get_if<Settled>(&state.occupancy)) return s->mode;
  return std::nullopt;
}

std::string describe(const SystemState& state, const DeviceModel& device) {
  if (const auto* s = std::get_if<Settled>(&state.occupancy)) {
    return fmt::format("{} q={}", device.modes.at(s->mode).name, state.queue);
  }
  const auto& t = std::get<InTransit>(state.occupancy);
  return fmt::format("->{}({}) q={}", device.transitions.at(t.transition).to_mode, t.remaining,
                     state.queue);
}

}  // namespace qdpm
