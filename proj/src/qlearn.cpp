#include "qdpm/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "qdpm/csv.hpp"

namespace qdpm {

QTable::QTable(std::vector<std::vector<ActionIndex>> admissible, std::size_t max_actions,
               double q_init)
    : admissible_(std::move(admissible)), max_actions_(max_actions) {
  if (admissible_.empty()) throw std::invalid_argument("Q-table needs at least one state");
  if (!std::isfinite(q_init)) throw std::invalid_argument("q_init must be finite");
  mask_.assign(admissible_.size() * max_actions_, 0);
  values_.assign(admissible_.size() * max_actions_, 0.0);
  visits_.assign(admissible_.size() * max_actions_, 0);
  for (StateIndex s = 0; s < admissible_.size(); ++s) {
    auto& acts = admissible_[s];
    if (acts.empty()) throw std::invalid_argument(fmt::format("state {} has no admissible action", s));
    std::sort(acts.begin(), acts.end());
    acts.erase(std::unique(acts.begin(), acts.end()), acts.end());
    for (ActionIndex a : acts) {
      if (a >= max_actions_) throw std::invalid_argument(fmt::format("action {} exceeds table width", a));
      mask_[s * max_actions_ + a] = 1;
      values_[s * max_actions_ + a] = q_init;
    }
  }
}

std::size_t QTable::stored_entries() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

bool QTable::admissible(StateIndex s, ActionIndex a) const {
  return s < n_states() && a < max_actions_ && mask_[s * max_actions_ + a] != 0;
}

std::size_t QTable::slot(StateIndex s, ActionIndex a) const {
  if (!admissible(s, a)) throw std::invalid_argument(fmt::format("({}, {}) is not admissible", s, a));
  return s * max_actions_ + a;
}

double QTable::value(StateIndex s, ActionIndex a) const { return values_[slot(s, a)]; }

void QTable::set_value(StateIndex s, ActionIndex a, double v) { values_[slot(s, a)] = v; }

std::size_t QTable::visits(StateIndex s, ActionIndex a) const { return visits_[slot(s, a)]; }

void QTable::record_visit(StateIndex s, ActionIndex a) { ++visits_[slot(s, a)]; }

QTable init_qtable(std::size_t n_states, const std::vector<std::vector<ActionIndex>>& admissible,
                   double q_init) {
  if (n_states < 1 || admissible.size() != n_states) {
    throw std::invalid_argument("admissible sets must cover every state");
  }
  std::size_t width = 1;
  for (const auto& acts : admissible) {
    for (ActionIndex a : acts) width = std::max(width, a + 1);
  }
  return QTable(admissible, width, q_init);
}

QTable qtable_from_qfunction(const ExplicitMdp& mdp, const QFunction& q) {
  std::vector<std::vector<ActionIndex>> admissible(mdp.n_states());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    admissible[s].assign(mdp.available(s).begin(), mdp.available(s).end());
  }
  QTable table(std::move(admissible), mdp.n_actions(), 0.0);
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    for (ActionIndex a : mdp.available(s)) table.set_value(s, a, q.at(s, a));
  }
  return table;
}

ActionIndex greedy_action(const QTable& q, StateIndex s) {
  auto acts = q.actions(s);
  ActionIndex best = acts.front();
  double best_value = q.value(s, best);
  for (ActionIndex a : acts.subspan(1)) {
    double v = q.value(s, a);
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  }
  return best;
}

double greedy_value(const QTable& q, StateIndex s) { return q.value(s, greedy_action(q, s)); }

Policy greedy_policy_from_qtable(const QTable& q) {
  Policy policy(q.n_states());
  for (StateIndex s = 0; s < q.n_states(); ++s) policy[s] = greedy_action(q, s);
  return policy;
}

ActionIndex select_action(const QTable& q, StateIndex s, double chi, Rng& rng) {
  if (s >= q.n_states()) throw std::out_of_range(fmt::format("state {} outside the table", s));
  if (rng.uniform() < chi) {
    auto acts = q.actions(s);
    return acts[rng.uniform_index(acts.size())];
  }
  return greedy_action(q, s);
}

namespace detail {

double apply_update(QTable& q, const TransitionSample& t, double gamma, double discount) {
  double target = t.c + discount * greedy_value(q, t.s_next);
  double updated = (1.0 - gamma) * q.value(t.s, t.a) + gamma * target;
  q.set_value(t.s, t.a, updated);
  q.record_visit(t.s, t.a);
  return updated;
}

}  // namespace detail

double q_update(QTable& q, const TransitionSample& t, double gamma, double discount) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument(fmt::format("learning rate must lie in (0,1], got {}", gamma));
  }
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw std::invalid_argument(fmt::format("discount must lie in [0,1), got {}", discount));
  }
  if (!q.admissible(t.s, t.a)) {
    throw std::invalid_argument(fmt::format("({}, {}) is not admissible", t.s, t.a));
  }
  if (t.s_next >= q.n_states()) throw std::out_of_range("next state outside the table");
  return detail::apply_update(q, t, gamma, discount);
}

std::vector<std::string> LearnerConfig::validation_errors() const {
  std::vector<std::string> problems;
  if (!(discount >= 0.0 && discount < 1.0)) {
    problems.push_back(fmt::format("agent: discount {} must lie in [0,1)", discount));
  }
  if (const auto* c = std::get_if<ConstantRate>(&learning_rate)) {
    if (!(c->value > 0.0 && c->value <= 1.0)) {
      problems.push_back(fmt::format("agent: learning rate {} must lie in (0,1]", c->value));
    }
  } else {
    const auto& v = std::get<VisitDecayRate>(learning_rate);
    // gamma must stay in (0,1] for every visit count, including zero.
    if (!(v.c0 > 0.0 && v.c1 > 0.0 && v.c0 <= v.c1)) {
      problems.push_back(fmt::format("agent: visit-decay rate needs 0 < c0 <= c1, got c0={} c1={}", v.c0, v.c1));
    }
  }
  if (const auto* c = std::get_if<ConstantExploration>(&exploration)) {
    if (!(c->value >= 0.0 && c->value <= 1.0)) {
      problems.push_back(fmt::format("agent: exploration {} must lie in [0,1]", c->value));
    }
  } else {
    const auto& d = std::get<DecayingExploration>(exploration);
    if (!(d.initial >= 0.0 && d.initial <= 1.0)) problems.push_back("agent: exploration initial must lie in [0,1]");
    if (!(d.floor >= 0.0 && d.floor <= 1.0)) problems.push_back("agent: exploration floor must lie in [0,1]");
    if (!(d.decay > 0.0 && d.decay <= 1.0)) problems.push_back("agent: exploration decay must lie in (0,1]");
  }
  if (!std::isfinite(q_init)) problems.emplace_back("agent: q_init must be finite");
  return problems;
}

ScheduleValue schedule_value(const LearnerConfig& config, std::size_t t, std::size_t visits) {
  ScheduleValue v{};
  if (const auto* c = std::get_if<ConstantRate>(&config.learning_rate)) {
    v.gamma = c->value;
  } else {
    const auto& d = std::get<VisitDecayRate>(config.learning_rate);
    v.gamma = d.c0 / (d.c1 + static_cast<double>(visits));
  }
  if (const auto* c = std::get_if<ConstantExploration>(&config.exploration)) {
    v.chi = c->value;
  } else {
    const auto& d = std::get<DecayingExploration>(config.exploration);
    v.chi = std::max(d.floor, d.initial * std::pow(d.decay, static_cast<double>(t)));
  }
  return v;
}

void write_qtable_csv(std::ostream& out, const QTable& q) {
  out << "state_index,action_index,q_value,visits\n";
  for (StateIndex s = 0; s < q.n_states(); ++s) {
    for (ActionIndex a : q.actions(s)) {
      out << s << ',' << a << ',' << csv::number(q.value(s, a)) << ',' << q.visits(s, a) << '\n';
    }
  }
}

QLearner::QLearner(LearnerConfig config, QTable table)
    : config_(std::move(config)), table_(std::move(table)) {}

ActionIndex QLearner::act(StateIndex s, std::size_t t, Rng& rng) const {
  return select_action(table_, s, schedule_value(config_, t, 0).chi, rng);
}

double QLearner::learn(const TransitionSample& sample, std::size_t t) {
  auto gamma = schedule_value(config_, t, table_.visits(sample.s, sample.a)).gamma;
  return q_update(table_, sample, gamma, config_.discount);
}

}  // namespace qdpm
