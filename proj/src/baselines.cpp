#include "qdpm/baselines.hpp"

#include <deque>
#include <limits>

#include <fmt/format.h>

#include "qdpm/error.hpp"

namespace qdpm {

namespace {

ActionIndex find_switch(const std::vector<Action>& actions, std::size_t transition) {
  for (ActionIndex a = 0; a < actions.size(); ++a) {
    if (actions[a].kind == Action::Kind::switch_to && actions[a].transition == transition) return a;
  }
  return 0;
}

/// Outgoing transition starting a shortest path from `mode` to a serving mode.
std::optional<std::size_t> wake_transition(std::size_t mode, const DeviceModel& device) {
  const auto n = device.modes.size();
  constexpr auto kFar = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> hops(n, kFar);
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (device.modes[i].serves) {
      hops[i] = 0;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    auto target = frontier.front();
    frontier.pop_front();
    for (const auto& t : device.transitions) {
      auto from = *device.find_mode(t.from_mode);
      if (*device.find_mode(t.to_mode) == target && hops[from] == kFar) {
        hops[from] = hops[target] + 1;
        frontier.push_back(from);
      }
    }
  }
  std::optional<std::size_t> best;
  std::size_t best_hops = kFar;
  for (std::size_t i = 0; i < device.transitions.size(); ++i) {
    const auto& t = device.transitions[i];
    if (t.from_mode != device.modes[mode].name) continue;
    auto h = hops[*device.find_mode(t.to_mode)];
    if (h < best_hops) {
      best_hops = h;
      best = i;
    }
  }
  return best;
}

std::optional<std::size_t> sleep_transition(std::size_t mode, const DeviceModel& device) {
  std::optional<std::size_t> best;
  double best_power = device.modes[mode].power;
  for (std::size_t i = 0; i < device.transitions.size(); ++i) {
    const auto& t = device.transitions[i];
    if (t.from_mode != device.modes[mode].name) continue;
    double p = device.modes[*device.find_mode(t.to_mode)].power;
    if (p < best_power) {
      best_power = p;
      best = i;
    }
  }
  return best;
}

ActionIndex wake_or_stay(std::size_t mode, const StateSpace& space, const SystemState& state) {
  auto t = wake_transition(mode, space.device());
  return t ? find_switch(space.actions(state), *t) : 0;
}

}  // namespace

ActionIndex always_on_policy(const SystemState& state, const StateSpace& space) {
  auto mode = space.settled_mode(state);
  if (!mode) return 0;  // proceed
  if (space.device().modes[*mode].serves) return 0;
  return wake_or_stay(*mode, space, state);
}

ActionIndex timeout_policy(const SystemState& state, std::size_t idle_streak,
                           const TimeoutConfig& config, const StateSpace& space) {
  if (!config.timeout) return always_on_policy(state, space);
  auto mode = space.settled_mode(state);
  if (!mode) return 0;
  const auto& device = space.device();
  if (device.modes[*mode].serves) {
    if (state.queue == 0 && idle_streak >= *config.timeout) {
      if (auto t = sleep_transition(*mode, device)) return find_switch(space.actions(state), *t);
    }
    return 0;
  }
  if (state.queue > 0 && config.wake_on_arrival) return wake_or_stay(*mode, space, state);
  return 0;
}

std::size_t next_idle_streak(std::size_t streak, const SystemState& after, const StateSpace& space) {
  auto mode = space.settled_mode(after);
  if (mode && space.device().modes[*mode].serves && after.queue == 0) return streak + 1;
  return 0;
}

OraclePolicy::OraclePolicy(Policy policy, std::size_t expected_states) : policy_(std::move(policy)) {
  if (policy_.size() != expected_states) {
    throw MissingArtifactError(fmt::format(
        "oracle policy covers {} states but the configuration has {}; re-run `solve`",
        policy_.size(), expected_states));
  }
}

}  // namespace qdpm
