#include "qdpm/env.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qdpm {

std::vector<std::string> RewardWeights::validation_errors() const {
  std::vector<std::string> problems;
  auto check = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) problems.push_back(fmt::format("weights: {} = {} must be >= 0", name, v));
  };
  check(reference_power, "reference_power");
  check(w_queue, "w_queue");
  check(w_drop, "w_drop");
  return problems;
}

double slot_reward(double energy, std::size_t queue_after, std::size_t dropped,
                   const RewardWeights& weights) {
  return (weights.reference_power - energy) - weights.w_queue * static_cast<double>(queue_after) -
         weights.w_drop * static_cast<double>(dropped);
}

double slot_reward(const StepOutcome& outcome, const RewardWeights& weights) {
  return slot_reward(outcome.energy, outcome.queue_after, outcome.dropped, weights);
}

SlotResolution resolve_slot(const StateSpace& space, const SystemState& state, ActionIndex action,
                            std::size_t arrivals, const RewardWeights& weights) {
  const auto& device = space.device();
  const auto& actions = space.actions(state);
  if (action >= actions.size()) {
    throw std::invalid_argument(fmt::format("action {} is not admissible in {}", action,
                                            describe(state, device)));
  }
  const Action& chosen = actions[action];

  SlotResolution r;
  r.next = state;
  double energy = 0.0;

  // 1. action effect
  switch (chosen.kind) {
    case Action::Kind::stay:
      break;
    case Action::Kind::switch_to: {
      const auto& t = device.transitions[chosen.transition];
      energy += t.switch_energy;
      r.outcome.initiated_switch = true;
      if (t.latency == 0) {
        r.next.occupancy = Settled{*device.find_mode(t.to_mode)};
      } else {
        r.next.occupancy = InTransit{chosen.transition, t.latency};
      }
      break;
    }
    case Action::Kind::proceed: {
      auto transit = std::get<InTransit>(state.occupancy);
      if (transit.remaining == 1) {
        r.next.occupancy = Settled{*device.find_mode(device.transitions[transit.transition].to_mode)};
      } else {
        r.next.occupancy = InTransit{transit.transition, transit.remaining - 1};
      }
      break;
    }
  }

  // 2. arrivals
  std::size_t queue = state.queue + arrivals;
  if (queue > device.queue_capacity) {
    r.outcome.dropped = queue - device.queue_capacity;
    queue = device.queue_capacity;
  }
  r.outcome.arrivals = arrivals;

  // 3. service, 4. power
  if (const auto* settled = std::get_if<Settled>(&r.next.occupancy)) {
    const auto& mode = device.modes[settled->mode];
    if (mode.serves && queue > 0) {
      --queue;
      r.outcome.served = 1;
    }
    energy += mode.power;
  } else {
    energy += device.transitions[std::get<InTransit>(r.next.occupancy).transition].transit_power;
  }

  // 5. reward
  r.next.queue = queue;
  r.outcome.queue_after = queue;
  r.outcome.energy = energy;
  r.outcome.reward = slot_reward(r.outcome, weights);
  return r;
}

StepResult env_step(const StateSpace& space, const SystemState& state, ActionIndex action,
                    const WorkloadSpec& workload, const WorkloadState& workload_state,
                    std::size_t slot, const RewardWeights& weights, Rng& rng) {
  if (action >= space.actions(state).size()) {
    throw std::invalid_argument(fmt::format("action {} is not admissible in {}", action,
                                            describe(state, space.device())));
  }
  auto draw = workload_advance(workload, workload_state, slot, rng);
  auto resolved = resolve_slot(space, state, action, draw.arrivals, weights);
  return StepResult{resolved.next, resolved.outcome, draw.next, draw.regime};
}

}  // namespace qdpm
