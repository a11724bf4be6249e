#pragma once

// Reference power managers: always-on, fixed timeout, and the solved oracle.

#include <cstddef>
#include <optional>

#include "qdpm/device.hpp"
#include "qdpm/mdp.hpp"

namespace qdpm {

struct TimeoutConfig {
  std::optional<std::size_t> timeout = 2;  // nullopt: never sleep
  bool wake_on_arrival = true;
};

/// Keeps the device in a serving mode: stays when settled in one, otherwise
/// takes the first hop of a shortest transition path toward a serving mode.
ActionIndex always_on_policy(const SystemState& state, const StateSpace& space);

/// Sleeps once a serving mode has been idle (queue empty) for `timeout`
/// consecutive slots, wakes on a non-empty queue when wake_on_arrival is set.
/// The sleep target is the lowest-power mode reachable by one outgoing
/// transition. `idle_streak` is maintained by the caller.
ActionIndex timeout_policy(const SystemState& state, std::size_t idle_streak,
                           const TimeoutConfig& config, const StateSpace& space);

/// Idle-streak bookkeeping for timeout_policy: slots that end settled in a
/// serving mode with an empty queue extend the streak, any other slot resets it.
std::size_t next_idle_streak(std::size_t streak, const SystemState& after, const StateSpace& space);

/// Table lookup into a solved policy. Construction fails with
/// MissingArtifactError when the policy does not cover `expected_states`.
class OraclePolicy {
 public:
  OraclePolicy(Policy policy, std::size_t expected_states);

  ActionIndex action(StateIndex mdp_state) const { return policy_.at(mdp_state); }
  const Policy& policy() const { return policy_; }

 private:
  Policy policy_;
};

}  // namespace qdpm
