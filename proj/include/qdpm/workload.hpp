#pragma once

// Synthetic request arrival processes. At most one request arrives per slot.

#include <array>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "qdpm/rng.hpp"

namespace qdpm {

struct Bernoulli {
  double p = 0.0;
};

/// Arrivals are Bernoulli(p_arrive[m]) where m is a two-state Markov chain
/// with row-stochastic matrix `switch_matrix`. The chain starts in state 0.
/// Within a slot the arrival is drawn under the current m, then m moves.
struct MarkovModulated {
  std::array<double, 2> p_arrive{0.0, 0.0};
  std::array<std::array<double, 2>, 2> switch_matrix{{{1.0, 0.0}, {0.0, 1.0}}};
};

using StationaryWorkload = std::variant<Bernoulli, MarkovModulated>;

struct Segment {
  std::size_t duration = 1;
  StationaryWorkload inner;
};

/// Piecewise-stationary arrivals. The last segment persists past the end of
/// the schedule.
struct RegimeSchedule {
  std::vector<Segment> segments;
};

using WorkloadSpec = std::variant<Bernoulli, MarkovModulated, RegimeSchedule>;

/// Generator state carried between slots.
struct WorkloadState {
  std::size_t modulating = 0;  // MarkovModulated chain state
  std::size_t segment = 0;  // RegimeSchedule segment the state belongs to

  bool operator==(const WorkloadState&) const = default;
};

struct WorkloadDraw {
  std::size_t arrivals = 0;
  WorkloadState next;
  std::size_t regime = 0;
};

std::vector<std::string> validation_errors(const WorkloadSpec& spec);
void validate(const WorkloadSpec& spec);

bool is_stationary(const WorkloadSpec& spec);

/// Regime (segment) index active in `slot`; 0 for stationary specs.
std::size_t regime_at(const WorkloadSpec& spec, std::size_t slot);

/// Slots at which a new segment starts, excluding slot 0.
std::vector<std::size_t> switch_slots(const RegimeSchedule& schedule);

/// Stationary law active in `slot`.
StationaryWorkload active_workload(const WorkloadSpec& spec, std::size_t slot);

/// Number of regimes (1 for stationary specs).
std::size_t regime_count(const WorkloadSpec& spec);

/// Samples this slot's arrivals. Bernoulli consumes one uniform per slot;
/// MarkovModulated consumes two (arrival, then modulation move). Entering a
/// new schedule segment restarts the modulating chain in state 0.
/// Throws std::invalid_argument on a corrupt generator state.
WorkloadDraw workload_advance(const WorkloadSpec& spec, const WorkloadState& state,
                              std::size_t slot, Rng& rng);

}  // namespace qdpm
