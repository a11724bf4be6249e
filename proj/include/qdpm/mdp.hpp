#pragma once

// Exact model-based machinery: enumerated discounted MDPs, value iteration,
// Q-factor iteration, policy evaluation and long-run average reward.
//
// All solvers maximize payoff. Every argmax breaks ties toward the lowest
// action index so results are reproducible bit for bit.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace qdpm {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

/// One value per state.
using ValueFunction = std::vector<double>;

/// One admissible action per state.
using Policy = std::vector<ActionIndex>;

struct Transition {
  StateIndex next;
  double probability;
};

/// Finite MDP with per-state admissible action sets, sparse transition rows and
/// expected immediate payoff c(s,a) = sum_s' P(s'|s,a) c(s,a,s').
class ExplicitMdp {
 public:
  ExplicitMdp(std::size_t n_states, std::size_t n_actions);

  /// Declares action a admissible in state s. Replaces any earlier definition.
  void set_action(StateIndex s, ActionIndex a, double expected_reward,
                  std::vector<Transition> row);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }

  /// Admissible actions of s in increasing order.
  std::span<const ActionIndex> available(StateIndex s) const { return available_.at(s); }
  bool admissible(StateIndex s, ActionIndex a) const;
  double expected_reward(StateIndex s, ActionIndex a) const;
  std::span<const Transition> transitions(StateIndex s, ActionIndex a) const;

  /// Largest |c(s,a)| over admissible pairs.
  double reward_bound() const;

  /// Throws ConfigError listing every broken invariant: empty action sets,
  /// probabilities outside [0,1], rows not summing to 1 within 1e-9, non-finite
  /// rewards, out-of-range successor states.
  void validate() const;

 private:
  std::size_t slot(StateIndex s, ActionIndex a) const { return s * n_actions_ + a; }

  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<std::vector<ActionIndex>> available_;
  std::vector<unsigned char> admissible_;
  std::vector<double> reward_;
  std::vector<std::vector<Transition>> rows_;
};

/// Q(s,a) stored densely as n_states x n_actions; entries of inadmissible
/// pairs are never read.
struct QFunction {
  std::size_t n_actions = 0;
  std::vector<double> values;

  double at(StateIndex s, ActionIndex a) const { return values[s * n_actions + a]; }
  double& at(StateIndex s, ActionIndex a) { return values[s * n_actions + a]; }
};

struct SolverOptions {
  double tol = 1e-9;
  std::size_t max_iter = 100000;
};

struct ValueIterationResult {
  ValueFunction values;
  Policy policy;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct QIterationResult {
  QFunction q;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct PolicyEvaluationResult {
  ValueFunction values;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// J'(s) = max_a [c(s,a) + beta * sum_s' P(s'|s,a) J(s')].
ValueFunction bellman_backup(const ExplicitMdp& mdp, const ValueFunction& j, double beta);

/// c(s,a) + beta * E[J(s')].
double action_value(const ExplicitMdp& mdp, const ValueFunction& j, double beta,
                    StateIndex s, ActionIndex a);

/// Greedy policy with respect to J.
Policy greedy_policy(const ExplicitMdp& mdp, const ValueFunction& j, double beta);

/// Iterates bellman_backup from J = 0 until the sup-norm change between sweeps
/// is <= tol. On hitting max_iter the partial result is returned with
/// converged = false.
ValueIterationResult value_iteration(const ExplicitMdp& mdp, double beta,
                                     const SolverOptions& options = {});

/// Fixed point of Q(s,a) = c(s,a) + beta * E[max_b Q(s',b)], from Q = 0.
QIterationResult q_value_iteration(const ExplicitMdp& mdp, double beta,
                                   const SolverOptions& options = {});

/// max_a Q(s,a) per state.
ValueFunction greedy_values(const ExplicitMdp& mdp, const QFunction& q);

/// Iterative evaluation of a fixed policy.
PolicyEvaluationResult policy_evaluation(const ExplicitMdp& mdp, const Policy& policy,
                                         double beta, const SolverOptions& options = {});

/// Long-run average payoff per step sum_s mu(s) c(s, pi(s)). mu is obtained by
/// power iteration from the uniform distribution on the lazy chain
/// (I + P_pi)/2, which has the same stationary law as P_pi but no periodicity.
/// Throws NonConvergenceError when the L1 change is still above tol after
/// max_iter sweeps.
double average_reward(const ExplicitMdp& mdp, const Policy& policy, double tol = 1e-12,
                      std::size_t max_iter = 2'000'000);

/// Stationary occupancy used by average_reward.
std::vector<double> stationary_distribution(const ExplicitMdp& mdp, const Policy& policy,
                                            double tol = 1e-12,
                                            std::size_t max_iter = 2'000'000);

/// Throws ConfigError unless policy has one admissible action per state.
void check_policy(const ExplicitMdp& mdp, const Policy& policy);

/// CSV `state_index,action_index,value`, one row per state.
void write_policy_csv(std::ostream& out, const Policy& policy, const ValueFunction& values);

/// Inverse of write_policy_csv. Throws ConfigError on malformed input.
void read_policy_csv(std::istream& in, Policy& policy, ValueFunction& values);

}  // namespace qdpm
