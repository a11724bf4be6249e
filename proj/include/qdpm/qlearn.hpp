#pragma once

// Model-free power manager: tabular Q-learning with chi-greedy exploration.
//
//   Q(s,a) <- (1 - gamma) Q(s,a) + gamma (c + discount * max_b Q(s',b))

#include <cstddef>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "qdpm/mdp.hpp"
#include "qdpm/rng.hpp"

namespace qdpm {

/// |S| x |A_max| table with an admissibility mask and per-pair visit counts.
class QTable {
 public:
  QTable(std::vector<std::vector<ActionIndex>> admissible, std::size_t max_actions, double q_init);

  std::size_t n_states() const { return admissible_.size(); }
  std::size_t max_actions() const { return max_actions_; }

  /// Number of admissible (s,a) entries actually in use.
  std::size_t stored_entries() const;

  std::span<const ActionIndex> actions(StateIndex s) const { return admissible_.at(s); }
  bool admissible(StateIndex s, ActionIndex a) const;

  double value(StateIndex s, ActionIndex a) const;
  void set_value(StateIndex s, ActionIndex a, double v);
  std::size_t visits(StateIndex s, ActionIndex a) const;

  /// Adds one to the visit count of (s,a).
  void record_visit(StateIndex s, ActionIndex a);

 private:
  std::size_t slot(StateIndex s, ActionIndex a) const;

  std::vector<std::vector<ActionIndex>> admissible_;
  std::size_t max_actions_;
  std::vector<unsigned char> mask_;
  std::vector<double> values_;
  std::vector<std::size_t> visits_;
};

/// All admissible entries set to q_init, visit counts zero. Throws
/// std::invalid_argument when a state has no admissible action.
QTable init_qtable(std::size_t n_states, const std::vector<std::vector<ActionIndex>>& admissible,
                   double q_init);

/// Table holding the given Q-function on the admissible pairs of `mdp`.
QTable qtable_from_qfunction(const ExplicitMdp& mdp, const QFunction& q);

struct TransitionSample {
  StateIndex s = 0;
  ActionIndex a = 0;
  double c = 0.0;  // observed payoff of the slot
  StateIndex s_next = 0;
};

/// With probability chi a uniform admissible action, otherwise the greedy one.
/// Draws one uniform for the branch and a second only when exploring.
ActionIndex select_action(const QTable& q, StateIndex s, double chi, Rng& rng);

ActionIndex greedy_action(const QTable& q, StateIndex s);
double greedy_value(const QTable& q, StateIndex s);
Policy greedy_policy_from_qtable(const QTable& q);

/// Applies one update and returns the new Q(s,a). Requires gamma in (0,1] and
/// discount in [0,1).
double q_update(QTable& q, const TransitionSample& t, double gamma, double discount);

namespace detail {
/// q_update without the range checks on gamma; tests use it for gamma = 0.
double apply_update(QTable& q, const TransitionSample& t, double gamma, double discount);
}  // namespace detail

struct ConstantRate {
  double value = 0.1;
};

/// gamma(s,a) = c0 / (c1 + visits(s,a)).
struct VisitDecayRate {
  double c0 = 1.0;
  double c1 = 1.0;
};

struct ConstantExploration {
  double value = 0.05;
};

/// chi_t = max(floor, initial * decay^t).
struct DecayingExploration {
  double initial = 0.2;
  double decay = 0.999985;
  double floor = 0.01;
};

struct LearnerConfig {
  std::variant<ConstantRate, VisitDecayRate> learning_rate = ConstantRate{};
  double discount = 0.95;
  std::variant<ConstantExploration, DecayingExploration> exploration = ConstantExploration{};
  double q_init = 0.0;

  std::vector<std::string> validation_errors() const;
};

struct ScheduleValue {
  double gamma;
  double chi;
};

ScheduleValue schedule_value(const LearnerConfig& config, std::size_t t, std::size_t visits);

/// CSV `state_index,action_index,q_value,visits`, admissible entries only.
void write_qtable_csv(std::ostream& out, const QTable& q);

/// Table plus schedules; owned by one simulation loop.
class QLearner {
 public:
  QLearner(LearnerConfig config, QTable table);

  ActionIndex act(StateIndex s, std::size_t t, Rng& rng) const;

  /// Updates the visited entry and returns its new value.
  double learn(const TransitionSample& sample, std::size_t t);

  const QTable& table() const { return table_; }
  const LearnerConfig& config() const { return config_; }

 private:
  LearnerConfig config_;
  QTable table_;
};

}  // namespace qdpm
