#include "qdpm/bridge.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "qdpm/error.hpp"

namespace qdpm {

namespace {

struct Branch {
  double probability;
  std::size_t arrivals;
};

}  // namespace

ModelLayout model_layout(const StateSpace& space, const StationaryWorkload& workload) {
  return ModelLayout{space.size(), std::holds_alternative<MarkovModulated>(workload) ? 2u : 1u};
}

ExplicitMdp build_explicit_mdp(const StateSpace& space, const StationaryWorkload& workload,
                               const RewardWeights& weights) {
  const auto& device = space.device();
  const auto layout = model_layout(space, workload);
  const auto cap = device.queue_capacity;
  ExplicitMdp mdp(layout.mdp_states(), space.max_actions());

  for (StateIndex observed = 0; observed < space.size(); ++observed) {
    const SystemState state = space.state(observed);
    const auto& actions = space.actions(observed);

    for (std::size_t m = 0; m < layout.modulation_states; ++m) {
      double p_arrival = 0.0;
      std::array<double, 2> p_mod{1.0, 0.0};
      if (const auto* b = std::get_if<Bernoulli>(&workload)) {
        p_arrival = b->p;
      } else {
        const auto& mm = std::get<MarkovModulated>(workload);
        p_arrival = mm.p_arrive[m];
        p_mod = mm.switch_matrix[m];
      }
      const std::array<Branch, 2> branches{Branch{1.0 - p_arrival, 0}, Branch{p_arrival, 1}};

      for (ActionIndex a = 0; a < actions.size(); ++a) {
        // Occupancy of the slot after the action takes effect.
        std::variant<Settled, InTransit> occupancy = state.occupancy;
        double fixed_energy = 0.0;
        const Action& act = actions[a];
        if (act.kind == Action::Kind::switch_to) {
          const auto& t = device.transitions[act.transition];
          fixed_energy += t.switch_energy;
          occupancy = t.latency == 0 ? std::variant<Settled, InTransit>{Settled{*device.find_mode(t.to_mode)}}
                                     : InTransit{act.transition, t.latency};
        } else if (act.kind == Action::Kind::proceed) {
          const auto& tr = std::get<InTransit>(state.occupancy);
          occupancy = tr.remaining > 1 ? std::variant<Settled, InTransit>{InTransit{tr.transition, tr.remaining - 1}}
                                       : Settled{*device.find_mode(device.transitions[tr.transition].to_mode)};
        }
        bool serving = false;
        if (const auto* s = std::get_if<Settled>(&occupancy)) {
          serving = device.modes[s->mode].serves;
          fixed_energy += device.modes[s->mode].power;
        } else {
          fixed_energy += device.transitions[std::get<InTransit>(occupancy).transition].transit_power;
        }

        std::map<StateIndex, double> row;
        double expected = 0.0;
        for (const auto& br : branches) {
          if (br.probability <= 0.0) continue;
          const std::size_t total = state.queue + br.arrivals;
          const std::size_t dropped = total > cap ? total - cap : 0;
          std::size_t queue = std::min(total, cap);
          if (serving && queue > 0) --queue;
          expected += br.probability * slot_reward(fixed_energy, queue, dropped, weights);
          const StateIndex next_observed = space.index(SystemState{occupancy, queue});
          for (std::size_t m_next = 0; m_next < layout.modulation_states; ++m_next) {
            double p = br.probability * p_mod[m_next];
            if (p > 0.0) row[layout.mdp_state(next_observed, m_next)] += p;
          }
        }
        std::vector<Transition> transitions;
        transitions.reserve(row.size());
        for (const auto& [next, p] : row) transitions.push_back(Transition{next, p});
        mdp.set_action(layout.mdp_state(observed, m), a, expected, std::move(transitions));
      }
    }
  }
  mdp.validate();
  return mdp;
}

ExplicitMdp build_explicit_mdp(const DeviceModel& device, const WorkloadSpec& workload,
                               const RewardWeights& weights) {
  if (!is_stationary(workload)) {
    throw ConfigError("the explicit model needs a stationary workload, not a regime schedule");
  }
  validate(workload);
  StateSpace space(device);
  return build_explicit_mdp(space, active_workload(workload, 0), weights);
}

Policy lift_policy(const Policy& observed_policy, const ModelLayout& layout) {
  if (observed_policy.size() != layout.observed_states) {
    throw ConfigError("policy does not match the observed state space");
  }
  Policy lifted(layout.mdp_states());
  for (StateIndex s = 0; s < lifted.size(); ++s) lifted[s] = observed_policy[layout.observed_state(s)];
  return lifted;
}

}  // namespace qdpm
