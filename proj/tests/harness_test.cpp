#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "qdpm/error.hpp"
#include "qdpm/harness.hpp"
#include "qdpm/report.hpp"

using namespace qdpm;

namespace {

ExperimentConfig small(AgentKind kind, std::size_t horizon) {
  ExperimentConfig c;
  c.agent.kind = kind;
  c.horizon = horizon;
  return c;
}

std::string trajectory_text(const RunResult& run) {
  std::ostringstream s;
  write_trajectory_csv(s, run);
  write_snapshots_csv(s, run);
  write_summary_csv(s, run.summary);
  return s.str();
}

std::vector<std::size_t> arrivals(const RunResult& run) {
  std::vector<std::size_t> out;
  for (const auto& r : run.slots) out.push_back(r.arrivals);
  return out;
}

}  // namespace

TEST(RunSimulation, HorizonBounds) {
  EXPECT_THROW(run_simulation(small(AgentKind::qlearn, 0)), ConfigError);
  auto one = run_simulation(small(AgentKind::qlearn, 1));
  EXPECT_EQ(one.slots.size(), 1u);
  ASSERT_EQ(one.snapshots.size(), 2u);
  EXPECT_EQ(one.snapshots.back().slot, 1u);
}

TEST(RunSimulation, SnapshotSchedule) {
  auto c = small(AgentKind::always_on, 2500);
  c.snapshot_interval = 1000;
  auto run = run_simulation(c);
  std::vector<std::size_t> slots;
  for (const auto& s : run.snapshots) slots.push_back(s.slot);
  EXPECT_EQ(slots, (std::vector<std::size_t>{0, 1000, 2000, 2500}));
  EXPECT_TRUE(std::isnan(run.snapshots.front().ma_reward));
}

TEST(RunSimulation, ByteIdenticalForSameSeed) {
  auto c = small(AgentKind::qlearn, 20000);
  c.seed = 42;
  EXPECT_EQ(trajectory_text(run_simulation(c)), trajectory_text(run_simulation(c)));
  auto d = c;
  d.seed = 43;
  EXPECT_NE(trajectory_text(run_simulation(c)), trajectory_text(run_simulation(d)));
}

TEST(RunSimulation, WorkloadStreamIsIsolated) {
  auto greedy = small(AgentKind::qlearn, 20000);
  greedy.agent.learner.exploration = ConstantExploration{0.0};
  auto explorer = greedy;
  explorer.agent.learner.exploration = ConstantExploration{0.5};
  auto timeout = small(AgentKind::timeout, 20000);
  const auto reference = arrivals(run_simulation(greedy));
  EXPECT_EQ(arrivals(run_simulation(explorer)), reference);
  EXPECT_EQ(arrivals(run_simulation(timeout)), reference);
}

TEST(RunSimulation, SummaryRecomputesExactly) {
  auto run = run_simulation(small(AgentKind::qlearn, 30000));
  EXPECT_EQ(summarize(run.slots, 1000), run.summary);
  double energy = 0.0;
  for (const auto& r : run.slots) energy += r.energy;
  EXPECT_EQ(energy, run.summary.total_energy);
}

TEST(RunSimulation, AlwaysOnEnergyAccounting) {
  auto c = small(AgentKind::always_on, 100000);
  auto run = run_simulation(c);
  StateSpace space(c.device);
  std::size_t on_slots = 0;
  double transient = 0.0;
  for (const auto& r : run.slots) {
    const auto s = space.state(r.state);
    if (s.settled() && std::get<Settled>(s.occupancy).mode == 0) {
      ++on_slots;
    } else {
      transient += r.energy;
    }
  }
  EXPECT_EQ(on_slots, 100000u);
  EXPECT_DOUBLE_EQ(run.summary.total_energy, 2.0 * on_slots + transient);
}

TEST(MovingAverage, Examples) {
  EXPECT_EQ(moving_average({0, 2, 4}, 2), (std::vector<double>{0, 1, 3}));
  EXPECT_EQ(moving_average({1.5, -2, 7}, 1), (std::vector<double>{1.5, -2, 7}));
  EXPECT_EQ(moving_average({3, 3, 3, 3}, 3), (std::vector<double>{3, 3, 3, 3}));
  EXPECT_THROW(moving_average({1}, 0), std::invalid_argument);
}

TEST(PolicyAgreement, Cases) {
  QTable zero({{0, 1}, {0, 1}, {0}}, 2, 0.0);
  for (StateIndex s = 0; s < 3; ++s) zero.record_visit(s, 0);
  auto all = policy_agreement(zero, {0, 0, 0}, 1);
  EXPECT_EQ(all.fraction, 1.0);
  EXPECT_FALSE(all.vacuous);
  EXPECT_EQ(all.states, 3u);

  auto half = policy_agreement(zero, {1, 0, 0}, 1);
  EXPECT_NEAR(half.fraction, 2.0 / 3.0, 1e-15);

  auto none = policy_agreement(zero, {1, 1, 0}, std::numeric_limits<std::size_t>::max());
  EXPECT_TRUE(none.vacuous);
  EXPECT_EQ(none.fraction, 1.0);
  EXPECT_THROW(policy_agreement(zero, {0, 0}, 1), std::invalid_argument);
}

TEST(EnergyReduction, Cases) {
  auto reference = run_simulation(small(AgentKind::always_on, 1000));
  EXPECT_EQ(energy_reduction_pct(reference, reference), 0.0);
  RunResult half = reference;
  half.summary.total_energy = 0.5 * reference.summary.total_energy;
  EXPECT_DOUBLE_EQ(energy_reduction_pct(half, reference), 50.0);
  RunResult empty = reference;
  empty.summary.total_energy = 0.0;
  EXPECT_THROW(energy_reduction_pct(reference, empty), std::invalid_argument);
}

TEST(Convergence, WarmStartAgreesFromTheStart) {
  auto c = small(AgentKind::qlearn, 5000);
  c.agent.warm_start = true;
  c.agent.learner.exploration = ConstantExploration{0.0};
  c.visit_floor = 0;
  auto r = convergence_experiment(c);
  ASSERT_FALSE(r.run.snapshots.empty());
  EXPECT_EQ(r.run.snapshots.front().agreement, 1.0);
  EXPECT_FALSE(r.run.snapshots.front().agreement_vacuous);
  for (const auto& s : r.run.snapshots) {
    EXPECT_EQ(s.oracle_avg_reward, r.oracle.average_reward);
  }
}

TEST(Convergence, DefaultConfigWithinGap) {
  auto r = convergence_experiment(ExperimentConfig{});
  EXPECT_LE(r.relative_gap, 0.05);
  EXPECT_GE(r.final_agreement, 0.9);
}

TEST(Convergence, QLearnerSavesEnergy) {
  auto learner = run_simulation(ExperimentConfig{});
  auto c = ExperimentConfig{};
  c.agent.kind = AgentKind::always_on;
  EXPECT_GT(energy_reduction_pct(learner, run_simulation(c)), 0.0);
}

TEST(Convergence, RejectsUnsupportedSetups) {
  auto schedule = small(AgentKind::qlearn, 100);
  schedule.workload = RegimeSchedule{{{50, Bernoulli{0.1}}, {50, Bernoulli{0.5}}}};
  EXPECT_THROW(convergence_experiment(schedule), ConfigError);
  EXPECT_THROW(convergence_experiment(small(AgentKind::timeout, 100)), ConfigError);
}

TEST(Tracking, SingleSegmentHasNoSwitches) {
  auto c = small(AgentKind::qlearn, 3000);
  c.workload = RegimeSchedule{{{3000, Bernoulli{0.3}}}};
  auto r = tracking_experiment(c);
  EXPECT_TRUE(r.switches.empty());
  EXPECT_EQ(r.oracles.size(), 1u);
}

TEST(Tracking, IdenticalSegmentsRecoverImmediately) {
  auto c = small(AgentKind::oracle, 400);
  c.workload = RegimeSchedule{{{200, Bernoulli{0.0}}, {200, Bernoulli{0.0}}}};
  c.window = 10;
  auto r = tracking_experiment(c);
  ASSERT_EQ(r.switches.size(), 1u);
  ASSERT_TRUE(r.switches[0].recovery_slots.has_value());
  EXPECT_EQ(*r.switches[0].recovery_slots, 0u);
}

TEST(Tracking, EverySwitchIsReported) {
  auto c = small(AgentKind::always_on, 3000);
  c.workload = RegimeSchedule{{{1000, Bernoulli{0.05}}, {1000, Bernoulli{0.9}}, {1000, Bernoulli{0.05}}}};
  auto r = tracking_experiment(c);
  ASSERT_EQ(r.switches.size(), 2u);
  EXPECT_EQ(r.switches[0].switch_slot, 1000u);
  EXPECT_EQ(r.switches[1].switch_slot, 2000u);
  EXPECT_EQ(r.switches[1].regime_from, 1u);
  EXPECT_EQ(r.switches[1].regime_to, 2u);
}

TEST(Tracking, WarnsOnDecayingRate) {
  auto c = small(AgentKind::qlearn, 200);
  c.workload = RegimeSchedule{{{100, Bernoulli{0.1}}, {100, Bernoulli{0.5}}}};
  c.agent.learner.learning_rate = VisitDecayRate{1.0, 1.0};
  EXPECT_FALSE(tracking_experiment(c).warnings.empty());
  c.agent.learner.learning_rate = ConstantRate{0.1};
  EXPECT_TRUE(tracking_experiment(c).warnings.empty());
  EXPECT_THROW(tracking_experiment(small(AgentKind::qlearn, 100)), ConfigError);
}

TEST(Tracking, RecoveryBand) {
  EXPECT_DOUBLE_EQ(recovery_half_width(1.2, 0.1, 0.05), 0.12);
  EXPECT_DOUBLE_EQ(recovery_half_width(-0.03, 0.1, 0.05), 0.05);
}
