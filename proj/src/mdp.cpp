#include "qdpm/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "qdpm/csv.hpp"
#include "qdpm/error.hpp"

namespace qdpm {

namespace {

constexpr double kRowSumTolerance = 1e-9;

void check_discount(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument(fmt::format("discount must lie in [0,1), got {}", beta));
  }
}

void check_options(const SolverOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double expected_next(std::span<const Transition> row, const ValueFunction& j) {
  double sum = 0.0;
  for (const auto& t : row) sum += t.probability * j[t.next];
  return sum;
}

}  // namespace

ExplicitMdp::ExplicitMdp(std::size_t n_states, std::size_t n_actions)
    : n_states_(n_states),
      n_actions_(n_actions),
      available_(n_states),
      admissible_(n_states * n_actions, 0),
      reward_(n_states * n_actions, 0.0),
      rows_(n_states * n_actions) {
  if (n_states == 0 || n_actions == 0) {
    throw std::invalid_argument("an MDP needs at least one state and one action");
  }
}

void ExplicitMdp::set_action(StateIndex s, ActionIndex a, double expected_reward,
                             std::vector<Transition> row) {
  if (s >= n_states_ || a >= n_actions_) {
    throw std::out_of_range(fmt::format("({}, {}) outside a {}x{} MDP", s, a, n_states_, n_actions_));
  }
  auto k = slot(s, a);
  if (!admissible_[k]) {
    auto& acts = available_[s];
    acts.insert(std::upper_bound(acts.begin(), acts.end(), a), a);
    admissible_[k] = 1;
  }
  reward_[k] = expected_reward;
  rows_[k] = std::move(row);
}

bool ExplicitMdp::admissible(StateIndex s, ActionIndex a) const {
  return s < n_states_ && a < n_actions_ && admissible_[slot(s, a)] != 0;
}

double ExplicitMdp::expected_reward(StateIndex s, ActionIndex a) const {
  if (!admissible(s, a)) throw std::out_of_range(fmt::format("({}, {}) is not admissible", s, a));
  return reward_[slot(s, a)];
}

std::span<const Transition> ExplicitMdp::transitions(StateIndex s, ActionIndex a) const {
  if (!admissible(s, a)) throw std::out_of_range(fmt::format("({}, {}) is not admissible", s, a));
  return rows_[slot(s, a)];
}

double ExplicitMdp::reward_bound() const {
  double bound = 0.0;
  for (std::size_t k = 0; k < reward_.size(); ++k) {
    if (admissible_[k]) bound = std::max(bound, std::abs(reward_[k]));
  }
  return bound;
}

void ExplicitMdp::validate() const {
  std::vector<std::string> problems;
  for (StateIndex s = 0; s < n_states_; ++s) {
    if (available_[s].empty()) {
      problems.push_back(fmt::format("state {} has no admissible action", s));
      continue;
    }
    for (ActionIndex a : available_[s]) {
      auto k = slot(s, a);
      if (!std::isfinite(reward_[k])) {
        problems.push_back(fmt::format("c({}, {}) is not finite", s, a));
      }
      double total = 0.0;
      for (const auto& t : rows_[k]) {
        if (t.next >= n_states_) {
          problems.push_back(fmt::format("({}, {}) leads to unknown state {}", s, a, t.next));
        }
        if (!(t.probability >= 0.0 && t.probability <= 1.0)) {
          problems.push_back(fmt::format("P(.|{}, {}) has entry {}", s, a, t.probability));
        }
        total += t.probability;
      }
      if (std::abs(total - 1.0) > kRowSumTolerance) {
        problems.push_back(fmt::format("P(.|{}, {}) sums to {}", s, a, total));
      }
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double action_value(const ExplicitMdp& mdp, const ValueFunction& j, double beta, StateIndex s,
                    ActionIndex a) {
  return mdp.expected_reward(s, a) + beta * expected_next(mdp.transitions(s, a), j);
}

ValueFunction bellman_backup(const ExplicitMdp& mdp, const ValueFunction& j, double beta) {
  check_discount(beta);
  if (j.size() != mdp.n_states()) {
    throw std::invalid_argument(
        fmt::format("value function has {} entries for {} states", j.size(), mdp.n_states()));
  }
  ValueFunction out(mdp.n_states());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a : mdp.available(s)) best = std::max(best, action_value(mdp, j, beta, s, a));
    out[s] = best;
  }
  return out;
}

Policy greedy_policy(const ExplicitMdp& mdp, const ValueFunction& j, double beta) {
  Policy policy(mdp.n_states());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a : mdp.available(s)) {
      double v = action_value(mdp, j, beta, s, a);
      // strict comparison keeps the lowest index on ties
      if (v > best) {
        best = v;
        policy[s] = a;
      }
    }
  }
  return policy;
}

ValueIterationResult value_iteration(const ExplicitMdp& mdp, double beta,
                                     const SolverOptions& options) {
  check_discount(beta);
  check_options(options);
  ValueIterationResult result;
  result.values.assign(mdp.n_states(), 0.0);
  result.residual = std::numeric_limits<double>::infinity();
  while (result.iterations < options.max_iter) {
    ValueFunction next = bellman_backup(mdp, result.values, beta);
    result.residual = sup_distance(next, result.values);
    result.values = std::move(next);
    ++result.iterations;
    if (result.residual <= options.tol) {
      result.converged = true;
      break;
    }
  }
  result.policy = greedy_policy(mdp, result.values, beta);
  return result;
}

ValueFunction greedy_values(const ExplicitMdp& mdp, const QFunction& q) {
  ValueFunction j(mdp.n_states());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a : mdp.available(s)) best = std::max(best, q.at(s, a));
    j[s] = best;
  }
  return j;
}

QIterationResult q_value_iteration(const ExplicitMdp& mdp, double beta,
                                   const SolverOptions& options) {
  check_discount(beta);
  check_options(options);
  QIterationResult result;
  result.q.n_actions = mdp.n_actions();
  result.q.values.assign(mdp.n_states() * mdp.n_actions(), 0.0);
  result.residual = std::numeric_limits<double>::infinity();
  while (result.iterations < options.max_iter) {
    ValueFunction j = greedy_values(mdp, result.q);
    double change = 0.0;
    QFunction next = result.q;
    for (StateIndex s = 0; s < mdp.n_states(); ++s) {
      for (ActionIndex a : mdp.available(s)) {
        double v = action_value(mdp, j, beta, s, a);
        change = std::max(change, std::abs(v - result.q.at(s, a)));
        next.at(s, a) = v;
      }
    }
    result.q = std::move(next);
    result.residual = change;
    ++result.iterations;
    if (change <= options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

void check_policy(const ExplicitMdp& mdp, const Policy& policy) {
  if (policy.size() != mdp.n_states()) {
    throw ConfigError(fmt::format("policy covers {} states, MDP has {}", policy.size(),
                                  mdp.n_states()));
  }
  std::vector<std::string> problems;
  for (StateIndex s = 0; s < policy.size(); ++s) {
    if (!mdp.admissible(s, policy[s])) {
      problems.push_back(fmt::format("policy action {} is not admissible in state {}", policy[s], s));
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

PolicyEvaluationResult policy_evaluation(const ExplicitMdp& mdp, const Policy& policy,
                                         double beta, const SolverOptions& options) {
  check_discount(beta);
  check_options(options);
  check_policy(mdp, policy);
  PolicyEvaluationResult result;
  result.values.assign(mdp.n_states(), 0.0);
  result.residual = std::numeric_limits<double>::infinity();
  ValueFunction next(mdp.n_states());
  while (result.iterations < options.max_iter) {
    for (StateIndex s = 0; s < mdp.n_states(); ++s) {
      next[s] = action_value(mdp, result.values, beta, s, policy[s]);
    }
    result.residual = sup_distance(next, result.values);
    std::swap(next, result.values);
    ++result.iterations;
    if (result.residual <= options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::vector<double> stationary_distribution(const ExplicitMdp& mdp, const Policy& policy,
                                            double tol, std::size_t max_iter) {
  check_policy(mdp, policy);
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const std::size_t n = mdp.n_states();
  std::vector<double> mu(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    for (std::size_t s = 0; s < n; ++s) next[s] = 0.5 * mu[s];
    for (StateIndex s = 0; s < n; ++s) {
      double half = 0.5 * mu[s];
      if (half == 0.0) continue;
      for (const auto& t : mdp.transitions(s, policy[s])) next[t.next] += half * t.probability;
    }
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) change += std::abs(next[s] - mu[s]);
    std::swap(mu, next);
    if (change <= tol) return mu;
  }
  throw NonConvergenceError(
      fmt::format("stationary distribution not within {} after {} sweeps", tol, max_iter));
}

double average_reward(const ExplicitMdp& mdp, const Policy& policy, double tol,
                      std::size_t max_iter) {
  auto mu = stationary_distribution(mdp, policy, tol, max_iter);
  double total = 0.0;
  for (StateIndex s = 0; s < mdp.n_states(); ++s) total += mu[s] * mdp.expected_reward(s, policy[s]);
  return total;
}

void write_policy_csv(std::ostream& out, const Policy& policy, const ValueFunction& values) {
  if (policy.size() != values.size()) {
    throw std::invalid_argument("policy and value function differ in length");
  }
  out << "state_index,action_index,value\n";
  for (std::size_t s = 0; s < policy.size(); ++s) {
    out << s << ',' << policy[s] << ',' << csv::number(values[s]) << '\n';
  }
}

void read_policy_csv(std::istream& in, Policy& policy, ValueFunction& values) {
  std::string line;
  if (!std::getline(in, line) || line != "state_index,action_index,value") {
    throw ConfigError("policy CSV: missing header state_index,action_index,value");
  }
  policy.clear();
  values.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = csv::split(line);
    if (fields.size() != 3) throw ConfigError(fmt::format("policy CSV: bad row '{}'", line));
    auto s = csv::parse_unsigned(fields[0], "policy CSV state_index");
    if (s != policy.size()) throw ConfigError("policy CSV: rows must be in state order");
    policy.push_back(csv::parse_unsigned(fields[1], "policy CSV action_index"));
    values.push_back(csv::parse_double(fields[2], "policy CSV value"));
  }
}

}  // namespace qdpm
