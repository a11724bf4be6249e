#pragma once

// One slot of the power-managed system. The order inside a slot is fixed:
//   1. action effect (start a transition and charge its switch energy,
//      advance a transit countdown, or stay)
//   2. arrivals are enqueued; overflow beyond capacity is dropped
//   3. one request is served if the slot is spent in a serving mode
//   4. the slot's mode or transit power is charged
//   5. the reward is computed from the finished outcome
// The explicit-MDP bridge in bridge.hpp encodes the same order.

#include <cstddef>

#include "qdpm/device.hpp"
#include "qdpm/rng.hpp"
#include "qdpm/workload.hpp"

namespace qdpm {

struct RewardWeights {
  double reference_power = 2.0;  // always-on power the savings are measured against
  double w_queue = 0.2;  // per queued request per slot
  double w_drop = 5.0;  // per dropped request

  std::vector<std::string> validation_errors() const;
};

struct StepOutcome {
  double energy = 0.0;
  std::size_t arrivals = 0;
  std::size_t served = 0;
  std::size_t dropped = 0;
  std::size_t queue_after = 0;
  double reward = 0.0;
  bool initiated_switch = false;

  bool operator==(const StepOutcome&) const = default;
};

/// (reference_power - energy) - w_queue * queue_after - w_drop * dropped.
double slot_reward(double energy, std::size_t queue_after, std::size_t dropped,
                   const RewardWeights& weights);
double slot_reward(const StepOutcome& outcome, const RewardWeights& weights);

struct SlotResolution {
  SystemState next;
  StepOutcome outcome;
};

/// Deterministic part of a slot given the number of arrivals.
/// Throws std::invalid_argument when `action` is not admissible in `state`.
SlotResolution resolve_slot(const StateSpace& space, const SystemState& state, ActionIndex action,
                            std::size_t arrivals, const RewardWeights& weights);

struct StepResult {
  SystemState next;
  StepOutcome outcome;
  WorkloadState workload;
  std::size_t regime = 0;
};

/// Full slot: samples arrivals from the workload then resolves the slot.
StepResult env_step(const StateSpace& space, const SystemState& state, ActionIndex action,
                    const WorkloadSpec& workload, const WorkloadState& workload_state,
                    std::size_t slot, const RewardWeights& weights, Rng& rng);

}  // namespace qdpm
