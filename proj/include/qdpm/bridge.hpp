#pragma once

// Compiles a stationary device/workload/reward configuration into the exact
// ExplicitMdp the model-based baseline solves.

#include <cstddef>

#include "qdpm/device.hpp"
#include "qdpm/env.hpp"
#include "qdpm/mdp.hpp"
#include "qdpm/workload.hpp"

namespace qdpm {

/// Maps between the observed (mode, queue) index and MDP state indices. For
/// MarkovModulated workloads the modulating state is appended to the MDP
/// state: mdp = observed * 2 + modulating.
struct ModelLayout {
  std::size_t observed_states = 0;
  std::size_t modulation_states = 1;

  std::size_t mdp_states() const { return observed_states * modulation_states; }
  bool augmented() const { return modulation_states > 1; }
  StateIndex mdp_state(StateIndex observed, std::size_t modulating) const {
    return observed * modulation_states + modulating;
  }
  StateIndex observed_state(StateIndex mdp) const { return mdp / modulation_states; }
};

ModelLayout model_layout(const StateSpace& space, const StationaryWorkload& workload);

/// Transition probabilities and expected rewards in closed form. Action
/// indices are the local indices of available_actions.
ExplicitMdp build_explicit_mdp(const StateSpace& space, const StationaryWorkload& workload,
                               const RewardWeights& weights);

/// Rejects RegimeSchedule with ConfigError.
ExplicitMdp build_explicit_mdp(const DeviceModel& device, const WorkloadSpec& workload,
                               const RewardWeights& weights);

/// Extends a policy over observed states to the augmented MDP state space by
/// ignoring the modulating state.
Policy lift_policy(const Policy& observed_policy, const ModelLayout& layout);

}  // namespace qdpm
