#include <gtest/gtest.h>

#include "qdpm/config.hpp"
#include "qdpm/error.hpp"

using namespace qdpm;
using nlohmann::json;

namespace {

std::vector<std::string> problems_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& text) {
  for (const auto& p : problems) {
    if (p.find(text) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Config, EmptyDocumentGivesStationaryDefaults) {
  auto c = parse_config(json::object());
  EXPECT_EQ(c.device.modes.size(), 2u);
  EXPECT_EQ(c.device.queue_capacity, 8u);
  ASSERT_TRUE(std::holds_alternative<Bernoulli>(c.workload));
  EXPECT_EQ(std::get<Bernoulli>(c.workload).p, 0.3);
  EXPECT_EQ(c.agent.kind, AgentKind::qlearn);
  EXPECT_EQ(c.discount(), 0.95);
  EXPECT_TRUE(std::holds_alternative<VisitDecayRate>(c.agent.learner.learning_rate));
  EXPECT_TRUE(std::holds_alternative<DecayingExploration>(c.agent.learner.exploration));
  EXPECT_EQ(c.horizon, 200000u);
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, ScheduleDefaultsToConstantRates) {
  auto c = parse_config(json::parse(R"({"workload": {"kind": "regime_schedule", "segments": [
      {"duration": 10, "workload": {"kind": "bernoulli", "p": 0.1}}]}})"));
  ASSERT_TRUE(std::holds_alternative<ConstantRate>(c.agent.learner.learning_rate));
  EXPECT_EQ(std::get<ConstantRate>(c.agent.learner.learning_rate).value, 0.1);
  ASSERT_TRUE(std::holds_alternative<ConstantExploration>(c.agent.learner.exploration));
  EXPECT_EQ(std::get<ConstantExploration>(c.agent.learner.exploration).value, 0.05);
}

TEST(Config, UnknownKeysRejectedEverywhere) {
  auto problems = problems_of(json::parse(R"({
    "extra": 1,
    "workload": {"kind": "bernoulli", "p": 0.2, "q": 3},
    "weights": {"w_typo": 1},
    "agent": {"kind": "qlearn", "learning_rate": {"kind": "constant", "value": 0.1, "x": 0}},
    "experiment": {"horizon": 10, "solver": {"tolerance": 1}}
  })"));
  EXPECT_EQ(problems.size(), 5u);
  EXPECT_TRUE(mentions(problems, "extra"));
  EXPECT_TRUE(mentions(problems, "workload.q"));
  EXPECT_TRUE(mentions(problems, "w_typo"));
  EXPECT_TRUE(mentions(problems, "learning_rate.x"));
  EXPECT_TRUE(mentions(problems, "tolerance"));
}

TEST(Config, ValidationListsEveryField) {
  auto problems = problems_of(json::parse(R"({
    "workload": {"kind": "bernoulli", "p": 1.5},
    "weights": {"w_queue": -1},
    "agent": {"discount": 1.0},
    "experiment": {"horizon": 0, "window": 0}
  })"));
  EXPECT_GE(problems.size(), 5u);
}

TEST(Config, TypeErrorsReported) {
  auto problems = problems_of(json::parse(R"({"experiment": {"horizon": "long"}})"));
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_TRUE(mentions(problems, "horizon"));
  EXPECT_FALSE(problems_of(json::array()).empty());
}

TEST(Config, CustomDevice) {
  auto c = parse_config(json::parse(R"({"device": {
    "modes": [{"name": "RUN", "power": 3, "serves": true},
              {"name": "IDLE", "power": 1, "serves": true},
              {"name": "SLEEP", "power": 0.05, "serves": false}],
    "transitions": [{"from": "RUN", "to": "IDLE"},
                    {"from": "IDLE", "to": "SLEEP", "switch_energy": 0.2},
                    {"from": "SLEEP", "to": "RUN", "latency": 2, "transit_power": 2.5}],
    "initial_mode": "RUN", "queue_capacity": 4}})"));
  EXPECT_EQ(c.device.modes.size(), 3u);
  EXPECT_EQ(c.device.transitions[2].latency, 2u);
  EXPECT_EQ(StateSpace(c.device).size(), (3u + 2u) * 5u);

  auto bad = problems_of(json::parse(R"({"device": {"modes": [{"name": "A", "power": 1}],
    "transitions": [{"from": "A", "to": "B"}], "initial_mode": "A", "queue_capacity": 2}})"));
  EXPECT_TRUE(mentions(bad, "B"));
}

TEST(Config, RoundTrip) {
  auto doc = json::parse(R"({
    "workload": {"kind": "markov_modulated", "p_arrive": [0.1, 0.6],
                 "switch": [[0.9, 0.1], [0.3, 0.7]]},
    "agent": {"kind": "timeout", "timeout": {"timeout": "inf", "wake_on_arrival": false}},
    "experiment": {"horizon": 77, "seed": 9}
  })");
  auto c = parse_config(doc);
  EXPECT_FALSE(c.agent.timeout.timeout.has_value());
  auto resolved = to_json(c);
  EXPECT_EQ(to_json(parse_config(resolved)), resolved);
  EXPECT_EQ(config_hash(resolved), config_hash(to_json(parse_config(resolved))));
}

TEST(Sweep, GridExpansion) {
  auto doc = json::parse(R"({"sweep": {"grid": {"workload.p": [0.1, 0.2], "agent.discount": [0.9, 0.95, 0.99]}}})");
  auto axes = parse_sweep_grid(doc);
  ASSERT_EQ(axes.size(), 2u);
  EXPECT_EQ(axes[0].path, "agent.discount");
  auto points = sweep_points(axes);
  ASSERT_EQ(points.size(), 6u);
  EXPECT_EQ(points[0], (std::vector<json>{0.9, 0.1}));
  EXPECT_EQ(points[1], (std::vector<json>{0.9, 0.2}));
  auto applied = apply_sweep_point(doc, axes, points[5]);
  EXPECT_FALSE(applied.contains("sweep"));
  EXPECT_EQ(applied["agent"]["discount"], 0.99);
  EXPECT_EQ(applied["workload"]["p"], 0.2);
}

TEST(Sweep, EmptyGridRejected) {
  EXPECT_THROW(parse_sweep_grid(json::parse(R"({"sweep": {"grid": {}}})")), ConfigError);
  EXPECT_THROW(parse_sweep_grid(json::parse(R"({"sweep": {"grid": {"x": []}}})")), ConfigError);
  EXPECT_THROW(parse_sweep_grid(json::object()), ConfigError);
}
