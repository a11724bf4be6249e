#pragma once

// Shared fixtures and reference computations for the test suites. The
// reference solvers here use dense linear algebra and share no code with the
// library's iterative solvers.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdpm/mdp.hpp"
#include "qdpm/rng.hpp"

namespace qdpm::testing {

/// One state, one action, payoff c, self-loop.
inline ExplicitMdp single_state(double c) {
  ExplicitMdp m(1, 1);
  m.set_action(0, 0, c, {{0, 1.0}});
  return m;
}

/// One state, one action per payoff, all self-loops.
inline ExplicitMdp single_state_choices(const std::vector<double>& payoffs) {
  ExplicitMdp m(1, payoffs.size());
  for (std::size_t a = 0; a < payoffs.size(); ++a) m.set_action(0, a, payoffs[a], {{0, 1.0}});
  return m;
}

/// A (c=0) moves to B; B (c=1) stays.
inline ExplicitMdp two_state_chain() {
  ExplicitMdp m(2, 1);
  m.set_action(0, 0, 0.0, {{1, 1.0}});
  m.set_action(1, 0, 1.0, {{1, 1.0}});
  return m;
}

/// Deterministic alternation between a c=0 and a c=2 state.
inline ExplicitMdp alternating_chain() {
  ExplicitMdp m(2, 1);
  m.set_action(0, 0, 0.0, {{1, 1.0}});
  m.set_action(1, 0, 2.0, {{0, 1.0}});
  return m;
}

/// Random MDP with rewards in [-1, 1], a random non-empty action subset per
/// state (action 0 always included) and rows supported on `support` states.
inline ExplicitMdp random_mdp(std::mt19937_64& gen, std::size_t n, std::size_t actions,
                              std::size_t support) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ExplicitMdp m(n, actions);
  for (StateIndex s = 0; s < n; ++s) {
    for (ActionIndex a = 0; a < actions; ++a) {
      if (a > 0 && unit(gen) < 0.3) continue;
      std::vector<double> weights(n, 0.0);
      for (std::size_t k = 0; k < support; ++k) weights[gen() % n] += 0.05 + unit(gen);
      double total = 0.0;
      for (double w : weights) total += w;
      std::vector<Transition> row;
      for (StateIndex t = 0; t < n; ++t) {
        if (weights[t] > 0.0) row.push_back({t, weights[t] / total});
      }
      m.set_action(s, a, 2.0 * unit(gen) - 1.0, std::move(row));
    }
  }
  return m;
}

/// Gaussian elimination with partial pivoting on a dense system A x = b.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-14) throw std::runtime_error("singular system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

inline std::vector<std::vector<double>> policy_matrix(const ExplicitMdp& m, const Policy& pi) {
  std::vector<std::vector<double>> p(m.n_states(), std::vector<double>(m.n_states(), 0.0));
  for (StateIndex s = 0; s < m.n_states(); ++s) {
    for (const auto& t : m.transitions(s, pi[s])) p[s][t.next] += t.probability;
  }
  return p;
}

/// J_pi = (I - beta P_pi)^-1 c_pi.
inline ValueFunction exact_policy_values(const ExplicitMdp& m, const Policy& pi, double beta) {
  const std::size_t n = m.n_states();
  auto p = policy_matrix(m, pi);
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - beta * p[i][j];
    c[i] = m.expected_reward(i, pi[i]);
  }
  return dense_solve(a, c);
}

/// Optimal values by exhaustive policy iteration with exact evaluation.
inline ValueFunction exact_optimal_values(const ExplicitMdp& m, double beta) {
  Policy pi(m.n_states());
  for (StateIndex s = 0; s < m.n_states(); ++s) pi[s] = m.available(s).front();
  for (int round = 0; round < 1000; ++round) {
    auto j = exact_policy_values(m, pi, beta);
    bool changed = false;
    for (StateIndex s = 0; s < m.n_states(); ++s) {
      auto q = [&](ActionIndex a) {
        double v = m.expected_reward(s, a);
        for (const auto& t : m.transitions(s, a)) v += beta * t.probability * j[t.next];
        return v;
      };
      ActionIndex best = pi[s];
      for (ActionIndex a : m.available(s)) {
        if (q(a) > q(best) + 1e-12) best = a;
      }
      if (best != pi[s]) {
        pi[s] = best;
        changed = true;
      }
    }
    if (!changed) return j;
  }
  throw std::runtime_error("policy iteration did not settle");
}

/// Stationary law of a unichain policy: mu (I - P) = 0 with sum(mu) = 1.
inline std::vector<double> exact_stationary(const ExplicitMdp& m, const Policy& pi) {
  const std::size_t n = m.n_states();
  auto p = policy_matrix(m, pi);
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - p[j][i];
  }
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  b[n - 1] = 1.0;
  return dense_solve(a, b);
}

inline double exact_average_reward(const ExplicitMdp& m, const Policy& pi) {
  auto mu = exact_stationary(m, pi);
  double g = 0.0;
  for (StateIndex s = 0; s < m.n_states(); ++s) g += mu[s] * m.expected_reward(s, pi[s]);
  return g;
}

inline double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Mean and batch-means standard error of a series.
struct BatchStats {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline BatchStats batch_means(const std::vector<double>& series, std::size_t batches) {
  const std::size_t size = series.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    long double sum = 0.0L;
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) sum += series[i];
    means[b] = static_cast<double>(sum / static_cast<long double>(size));
  }
  BatchStats out;
  for (double m : means) out.mean += m;
  out.mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - out.mean) * (m - out.mean);
  var /= static_cast<double>(batches - 1);
  out.standard_error = std::sqrt(var / static_cast<double>(batches));
  return out;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

/// Fresh, empty scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qdpm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace qdpm::testing
