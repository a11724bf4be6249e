#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "qdpm/bridge.hpp"
#include "qdpm/device.hpp"
#include "qdpm/harness.hpp"
#include "qdpm/qlearn.hpp"
#include "support.hpp"

using namespace qdpm;
using namespace qdpm::testing;

namespace {

QTable two_action_table(double q0, double q1) {
  QTable q({{0, 1}, {0, 1}}, 2, 0.0);
  q.set_value(0, 0, q0);
  q.set_value(0, 1, q1);
  return q;
}

}  // namespace

TEST(QTable, InitialFill) {
  auto q = init_qtable(3, {{0, 1}, {0}, {0, 1, 2}}, 0.0);
  for (StateIndex s = 0; s < 3; ++s) {
    for (ActionIndex a : q.actions(s)) {
      EXPECT_EQ(q.value(s, a), 0.0);
      EXPECT_EQ(q.visits(s, a), 0u);
    }
    EXPECT_EQ(greedy_action(q, s), 0u);
  }
  EXPECT_EQ(q.stored_entries(), 6u);
  EXPECT_THROW(init_qtable(2, {{0}, {}}, 0.0), std::invalid_argument);
}

TEST(QTable, StandardDeviceFootprint) {
  StateSpace space(standard_device());
  auto q = init_qtable(space.size(), space.admissible_sets(), 0.0);
  // ON and OFF rows hold stay + one switch; the three wake stages hold proceed.
  const std::size_t expected = 9 * 2 + 9 * 2 + 3 * 9 * 1;
  EXPECT_EQ(q.stored_entries(), expected);
  EXPECT_LE(q.stored_entries(), 45u * 2u);
  EXPECT_EQ(q.n_states(), 45u);
  EXPECT_EQ(q.max_actions(), 2u);
}

TEST(SelectAction, Exploitation) {
  Rng rng(1);
  EXPECT_EQ(select_action(two_action_table(1.0, 3.0), 0, 0.0, rng), 1u);
  EXPECT_EQ(select_action(two_action_table(2.0, 2.0), 0, 0.0, rng), 0u);
}

TEST(SelectAction, UniformExploration) {
  Rng rng(2024);
  auto q = two_action_table(0.0, 10.0);
  std::size_t first = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) first += select_action(q, 0, 1.0, rng) == 0 ? 1 : 0;
  const double sigma = std::sqrt(n * 0.5 * 0.5);
  EXPECT_NEAR(static_cast<double>(first), n / 2.0, 3 * sigma);
}

TEST(SelectAction, ConsumptionContract) {
  auto q = two_action_table(0.0, 1.0);
  Rng a(3), b(3);
  select_action(q, 0, 0.0, a);
  b.next();
  EXPECT_EQ(a, b);
  Rng c(3), d(3);
  select_action(q, 0, 1.0, c);
  d.next();
  d.next();
  EXPECT_EQ(c, d);
}

TEST(QUpdate, WorkedExample) {
  QTable q({{0}, {0, 1}}, 2, 0.0);
  q.set_value(0, 0, 2.0);
  q.set_value(1, 0, 4.0);
  q.set_value(1, 1, -1.0);
  const double expected = (1 - 0.5) * 2.0 + 0.5 * (1.0 + 0.9 * 4.0);
  EXPECT_NEAR(q_update(q, {0, 0, 1.0, 1}, 0.5, 0.9), expected, 1e-12);
  EXPECT_NEAR(q.value(0, 0), 3.3, 1e-12);
  EXPECT_EQ(q.visits(0, 0), 1u);
  EXPECT_EQ(q.value(1, 0), 4.0);
  EXPECT_EQ(q.value(1, 1), -1.0);
}

TEST(QUpdate, FullOverwriteWhenMyopic) {
  auto q = two_action_table(7.0, 9.0);
  EXPECT_EQ(q_update(q, {0, 0, -2.5, 1}, 1.0, 0.0), -2.5);
  EXPECT_EQ(q.value(0, 0), -2.5);
}

TEST(QUpdate, GeometricDecayToZero) {
  auto q = two_action_table(5.0, 0.0);
  double expected = 5.0;
  for (int i = 0; i < 50; ++i) {
    expected *= 1.0 - 0.2;
    EXPECT_NEAR(q_update(q, {0, 0, 0.0, 0}, 0.2, 0.0), expected, 1e-12);
  }
  EXPECT_EQ(q.visits(0, 0), 50u);
}

TEST(QUpdate, RejectsBadArguments) {
  QTable q({{0}, {0, 1}}, 2, 0.0);
  EXPECT_THROW(q_update(q, {0, 1, 0.0, 0}, 0.5, 0.9), std::invalid_argument);
  EXPECT_THROW(q_update(q, {0, 0, 0.0, 0}, 0.0, 0.9), std::invalid_argument);
  EXPECT_THROW(q_update(q, {0, 0, 0.0, 0}, 1.5, 0.9), std::invalid_argument);
  EXPECT_THROW(q_update(q, {0, 0, 0.0, 0}, 0.5, 1.0), std::invalid_argument);
}

TEST(QUpdate, ZeroRateFreezesTable) {
  std::mt19937_64 gen(8);
  QTable q({{0, 1}, {0}, {0, 1}}, 2, 0.0);
  std::uniform_real_distribution<double> v(-3, 3);
  for (StateIndex s = 0; s < 3; ++s) {
    for (ActionIndex a : q.actions(s)) q.set_value(s, a, v(gen));
  }
  const QTable before = q;
  for (int i = 0; i < 1000; ++i) {
    const StateIndex s = gen() % 3;
    const ActionIndex a = q.actions(s)[gen() % q.actions(s).size()];
    detail::apply_update(q, {s, a, v(gen), static_cast<StateIndex>(gen() % 3)}, 0.0, 0.9);
  }
  for (StateIndex s = 0; s < 3; ++s) {
    for (ActionIndex a : q.actions(s)) EXPECT_EQ(q.value(s, a), before.value(s, a));
  }
}

TEST(QUpdate, IteratesStayBounded) {
  std::mt19937_64 gen(12);
  const double lambda = 0.9, c_min = -1.0, c_max = 2.0;
  const double lo = c_min / (1 - lambda), hi = c_max / (1 - lambda);
  std::uniform_real_distribution<double> reward(c_min, c_max), rate(0.01, 1.0);
  QTable q({{0, 1}, {0, 1}, {0}, {0, 1}}, 2, 0.5 * (lo + hi));
  for (int i = 0; i < 100000; ++i) {
    const StateIndex s = gen() % 4;
    const ActionIndex a = q.actions(s)[gen() % q.actions(s).size()];
    const double next = q_update(q, {s, a, reward(gen), static_cast<StateIndex>(gen() % 4)},
                                 rate(gen), lambda);
    ASSERT_GE(next, lo - 1e-9);
    ASSERT_LE(next, hi + 1e-9);
  }
}

TEST(QUpdate, OnlyVisitedEntryChanges) {
  QTable q({{0, 1}, {0, 1}}, 2, 1.0);
  q_update(q, {1, 1, 3.0, 0}, 0.5, 0.5);
  EXPECT_EQ(q.value(0, 0), 1.0);
  EXPECT_EQ(q.value(0, 1), 1.0);
  EXPECT_EQ(q.value(1, 0), 1.0);
  EXPECT_EQ(q.visits(0, 0) + q.visits(0, 1) + q.visits(1, 0), 0u);
  EXPECT_EQ(q.visits(1, 1), 1u);
}

TEST(Greedy, ValueAndShiftInvariance) {
  auto q = two_action_table(1.0, 3.0);
  EXPECT_EQ(greedy_value(q, 0), 3.0);
  QTable single({{0}}, 1, 0.0);
  single.set_value(0, 0, -4.0);
  EXPECT_EQ(greedy_value(single, 0), -4.0);

  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> v(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = two_action_table(v(gen), v(gen));
    Rng r1(1), r2(1);
    const auto before = select_action(t, 0, 0.0, r1);
    const double k = v(gen) * 100;
    t.set_value(0, 0, t.value(0, 0) + k);
    t.set_value(0, 1, t.value(0, 1) + k);
    EXPECT_EQ(select_action(t, 0, 0.0, r2), before);
  }
  EXPECT_EQ(greedy_policy_from_qtable(QTable({{0, 1}, {0}, {0, 1}}, 2, 0.0)), (Policy{0, 0, 0}));
}

TEST(Greedy, ImportedQStarReproducesSolution) {
  std::mt19937_64 gen(31);
  const double beta = 0.9, tol = 1e-9;
  for (int trial = 0; trial < 10; ++trial) {
    auto m = random_mdp(gen, 10, 3, 4);
    auto vi = value_iteration(m, beta, {tol, 1000000});
    auto qi = q_value_iteration(m, beta, {tol, 1000000});
    auto table = qtable_from_qfunction(m, qi.q);
    for (StateIndex s = 0; s < m.n_states(); ++s) {
      EXPECT_NEAR(greedy_value(table, s), vi.values[s], 2 * tol / (1 - beta));
    }
    EXPECT_EQ(greedy_policy_from_qtable(table), vi.policy);
  }
}

TEST(Schedules, Values) {
  LearnerConfig constant;
  constant.learning_rate = ConstantRate{0.1};
  constant.exploration = ConstantExploration{0.05};
  for (std::size_t t : {0u, 10u, 100000u}) {
    auto v = schedule_value(constant, t, t);
    EXPECT_EQ(v.gamma, 0.1);
    EXPECT_EQ(v.chi, 0.05);
  }

  LearnerConfig flat;
  flat.exploration = DecayingExploration{0.5, 1.0, 0.01};
  EXPECT_EQ(schedule_value(flat, 1000000, 0).chi, 0.5);

  LearnerConfig decaying;
  decaying.learning_rate = VisitDecayRate{1.0, 1.0};
  decaying.exploration = DecayingExploration{0.2, 0.99, 0.01};
  EXPECT_NEAR(schedule_value(decaying, 0, 9).gamma, 0.1, 1e-15);
  EXPECT_NEAR(schedule_value(decaying, 10, 0).chi, 0.2 * std::pow(0.99, 10), 1e-15);
  EXPECT_EQ(schedule_value(decaying, 100000, 0).chi, 0.01);
}

TEST(Schedules, Validation) {
  LearnerConfig c;
  EXPECT_TRUE(c.validation_errors().empty());
  c.discount = 1.0;
  c.learning_rate = ConstantRate{0.0};
  c.exploration = DecayingExploration{0.2, 1.5, 0.01};
  EXPECT_EQ(c.validation_errors().size(), 3u);
}

TEST(QTableCsv, Header) {
  QTable q({{0, 1}, {0}}, 2, 0.5);
  std::stringstream s;
  write_qtable_csv(s, q);
  EXPECT_EQ(s.str(), "state_index,action_index,q_value,visits\n0,0,0.5,0\n0,1,0.5,0\n1,0,0.5,0\n");
}

// Harmonic visit-decayed rate 1/(1 + visits) on the reference device at
// discount 0.95, exploration 0.2 decaying to 0.01, 200000 slots, seed 1.
TEST(QLearnConvergence, HarmonicRateReachesQStarWithinHalf) {
  ExperimentConfig c;
  c.agent.kind = AgentKind::qlearn;
  c.agent.learner.discount = 0.95;
  c.agent.learner.learning_rate = VisitDecayRate{1.0, 1.0};
  c.agent.learner.exploration = DecayingExploration{0.2, 0.999985, 0.01};
  c.horizon = 200000;
  c.seed = 1;
  auto r = convergence_experiment(c);
  EXPECT_GT(r.q_error_pairs, 0u);
  EXPECT_LE(r.max_q_error, 0.5) << "over " << r.q_error_pairs << " pairs";
}
