#include "qdpm/workload.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "qdpm/error.hpp"

namespace qdpm {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_stationary(const StationaryWorkload& w, const std::string& where,
                      std::vector<std::string>& problems) {
  if (const auto* b = std::get_if<Bernoulli>(&w)) {
    if (!is_probability(b->p)) problems.push_back(fmt::format("{}: p = {} is not a probability", where, b->p));
    return;
  }
  const auto& m = std::get<MarkovModulated>(w);
  for (std::size_t i = 0; i < 2; ++i) {
    if (!is_probability(m.p_arrive[i])) {
      problems.push_back(fmt::format("{}: p_arrive[{}] = {} is not a probability", where, i, m.p_arrive[i]));
    }
    double row = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      if (!is_probability(m.switch_matrix[i][j])) {
        problems.push_back(fmt::format("{}: switch[{}][{}] = {} is not a probability", where, i, j,
                                       m.switch_matrix[i][j]));
      }
      row += m.switch_matrix[i][j];
    }
    if (std::abs(row - 1.0) > 1e-9) problems.push_back(fmt::format("{}: switch row {} sums to {}", where, i, row));
  }
}

std::size_t segment_at(const RegimeSchedule& schedule, std::size_t slot) {
  std::size_t end = 0;
  for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
    end += schedule.segments[i].duration;
    if (slot < end) return i;
  }
  return schedule.segments.size() - 1;
}

WorkloadDraw draw_stationary(const StationaryWorkload& w, WorkloadState state, Rng& rng) {
  WorkloadDraw draw;
  if (const auto* b = std::get_if<Bernoulli>(&w)) {
    draw.arrivals = rng.uniform() < b->p ? 1 : 0;
    draw.next = state;
    return draw;
  }
  const auto& m = std::get<MarkovModulated>(w);
  if (state.modulating > 1) throw std::invalid_argument("corrupt workload state: modulating state > 1");
  draw.arrivals = rng.uniform() < m.p_arrive[state.modulating] ? 1 : 0;
  // Move to state 1 with probability switch[m][1].
  double u = rng.uniform();
  state.modulating = u < m.switch_matrix[state.modulating][1] ? 1 : 0;
  draw.next = state;
  return draw;
}

}  // namespace

std::vector<std::string> validation_errors(const WorkloadSpec& spec) {
  std::vector<std::string> problems;
  if (const auto* s = std::get_if<RegimeSchedule>(&spec)) {
    if (s->segments.empty()) problems.emplace_back("workload: schedule has no segments");
    for (std::size_t i = 0; i < s->segments.size(); ++i) {
      if (s->segments[i].duration < 1) problems.push_back(fmt::format("workload: segment {} has zero duration", i));
      check_stationary(s->segments[i].inner, fmt::format("workload segment {}", i), problems);
    }
  } else if (const auto* b = std::get_if<Bernoulli>(&spec)) {
    check_stationary(*b, "workload", problems);
  } else {
    check_stationary(std::get<MarkovModulated>(spec), "workload", problems);
  }
  return problems;
}

void validate(const WorkloadSpec& spec) {
  auto problems = validation_errors(spec);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

bool is_stationary(const WorkloadSpec& spec) { return !std::holds_alternative<RegimeSchedule>(spec); }

std::size_t regime_at(const WorkloadSpec& spec, std::size_t slot) {
  if (const auto* s = std::get_if<RegimeSchedule>(&spec)) return segment_at(*s, slot);
  return 0;
}

std::vector<std::size_t> switch_slots(const RegimeSchedule& schedule) {
  std::vector<std::size_t> slots;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < schedule.segments.size(); ++i) {
    start += schedule.segments[i].duration;
    slots.push_back(start);
  }
  return slots;
}

StationaryWorkload active_workload(const WorkloadSpec& spec, std::size_t slot) {
  if (const auto* s = std::get_if<RegimeSchedule>(&spec)) return s->segments[segment_at(*s, slot)].inner;
  if (const auto* b = std::get_if<Bernoulli>(&spec)) return *b;
  return std::get<MarkovModulated>(spec);
}

std::size_t regime_count(const WorkloadSpec& spec) {
  if (const auto* s = std::get_if<RegimeSchedule>(&spec)) return s->segments.size();
  return 1;
}

WorkloadDraw workload_advance(const WorkloadSpec& spec, const WorkloadState& state, std::size_t slot,
                              Rng& rng) {
  if (const auto* s = std::get_if<RegimeSchedule>(&spec)) {
    auto seg = segment_at(*s, slot);
    if (state.segment >= s->segments.size() || state.segment > seg) {
      throw std::invalid_argument("corrupt workload state: segment out of range");
    }
    WorkloadState current = state;
    if (current.segment != seg) current = WorkloadState{0, seg};
    auto draw = draw_stationary(s->segments[seg].inner, current, rng);
    draw.regime = seg;
    return draw;
  }
  if (state.segment != 0) throw std::invalid_argument("corrupt workload state: stationary spec with segment");
  if (const auto* b = std::get_if<Bernoulli>(&spec)) return draw_stationary(*b, state, rng);
  return draw_stationary(std::get<MarkovModulated>(spec), state, rng);
}

}  // namespace qdpm
