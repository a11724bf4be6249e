#pragma once

// Power-managed device: modes, mode transitions with latency, a bounded
// request queue, and the dense state indexing the learner's table uses.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qdpm/mdp.hpp"

namespace qdpm {

struct PowerModeSpec {
  std::string name;
  double power = 0.0;  // energy per slot while settled here
  bool serves = false;  // completes one queued request per slot
};

struct TransitionSpec {
  std::string from_mode;
  std::string to_mode;
  std::size_t latency = 0;  // slots spent in transit
  double transit_power = 0.0;
  double switch_energy = 0.0;  // charged once, in the initiating slot
};

struct DeviceModel {
  std::vector<PowerModeSpec> modes;
  std::vector<TransitionSpec> transitions;
  std::string initial_mode;
  std::size_t queue_capacity = 1;

  std::optional<std::size_t> find_mode(const std::string& name) const;

  /// Every violated invariant, empty when the model is valid.
  std::vector<std::string> validation_errors() const;
  void validate() const;
};

/// Two-mode reference device: ON (2.0/slot, serves), OFF (0.1/slot),
/// ON->OFF immediate with 0.5 switch energy, OFF->ON three slots at 3.0/slot,
/// queue capacity 8.
DeviceModel standard_device();

struct Settled {
  std::size_t mode;
  bool operator==(const Settled&) const = default;
};

/// In transit along `transition`; `remaining` counts this slot and the ones
/// still to come, so it runs latency, ..., 1 before the device settles.
struct InTransit {
  std::size_t transition;
  std::size_t remaining;
  bool operator==(const InTransit&) const = default;
};

struct SystemState {
  std::variant<Settled, InTransit> occupancy;
  std::size_t queue = 0;

  bool settled() const { return std::holds_alternative<Settled>(occupancy); }
  bool operator==(const SystemState&) const = default;
};

struct Action {
  enum class Kind { stay, proceed, switch_to };
  Kind kind = Kind::stay;
  std::size_t transition = 0;  // meaningful for switch_to only

  bool operator==(const Action&) const = default;
};

/// A(s): `proceed` alone while in transit; otherwise `stay` followed by one
/// `switch_to` per outgoing transition in declaration order.
std::vector<Action> available_actions(const SystemState& state, const DeviceModel& device);

/// Dense bijection between valid states and [0, size()).
///
/// Layout: occupancy-major, queue-minor. Occupancies are the settled modes in
/// declaration order followed, for each transition with latency L > 0, by its
/// transit stages with remaining = L, L-1, ..., 1.
class StateSpace {
 public:
  explicit StateSpace(DeviceModel device);

  const DeviceModel& device() const { return device_; }
  std::size_t size() const { return occupancies_ * (device_.queue_capacity + 1); }
  std::size_t occupancy_count() const { return occupancies_; }
  std::size_t max_actions() const { return max_actions_; }

  StateIndex index(const SystemState& state) const;
  SystemState state(StateIndex index) const;

  /// Same as the free available_actions, cached per occupancy.
  const std::vector<Action>& actions(const SystemState& state) const;
  const std::vector<Action>& actions(StateIndex index) const;

  /// Per-state admissible local action indices {0, ..., |A(s)|-1}.
  std::vector<std::vector<ActionIndex>> admissible_sets() const;

  SystemState initial_state() const;

  /// Mode the device occupies during a slot spent in `occupancy`: the settled
  /// mode, or nothing while in transit.
  std::optional<std::size_t> settled_mode(const SystemState& state) const;

  /// Throws std::invalid_argument if the state does not belong to the device.
  void check(const SystemState& state) const;

 private:
  std::size_t occupancy_of(const SystemState& state) const;

  DeviceModel device_;
  std::size_t occupancies_ = 0;
  std::size_t max_actions_ = 1;
  std::vector<std::size_t> transit_offset_;  // per transition, first transit occupancy
  std::vector<std::vector<Action>> actions_;  // per occupancy
};

std::string describe(const SystemState& state, const DeviceModel& device);

}  // namespace qdpm
