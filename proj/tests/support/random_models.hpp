#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "smbsde/control.hpp"
#include "smbsde/instances.hpp"
#include "smbsde/lattice.hpp"
#include "smbsde/smc_core.hpp"

namespace testing_support {

using smbsde::SemiMarkovModel;

inline double unif(std::mt19937_64& rng) { return smbsde::uniform01(rng); }

inline int pick(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(unif(rng) * (hi - lo + 1)) % (hi - lo + 1);
}

/// Random probability vector of length n with some exact zeros.
inline std::vector<double> random_simplex(std::mt19937_64& rng, int n, double zero_rate = 0.25) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = unif(rng) < zero_rate ? 0.0 : -std::log(1.0 - unif(rng));
    total += x;
  }
  if (total == 0.0) {
    w[pick(rng, 0, n - 1)] = 1.0;
    return w;
  }
  for (auto& x : w) x /= total;
  return w;
}

/// Valid semi-Markov model with N in [1, max_n], T in [1, max_t]. Sojourn laws
/// mix geometric, deterministic and arbitrary shapes, sometimes with mass
/// beyond the horizon; jump laws have zero diagonal.
inline SemiMarkovModel random_model(std::mt19937_64& rng, int max_n, int max_t, int min_n = 1,
                                    int min_t = 1) {
  SemiMarkovModel m;
  m.n_states = pick(rng, min_n, max_n);
  m.horizon = pick(rng, min_t, max_t);
  const int n = m.n_states;
  const int d = m.durations();
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(d, 0.0);
    if (n > 1) {
      const double kind = unif(rng);
      if (kind < 0.3) {
        const double delta = 0.1 + 0.9 * unif(rng);
        for (int k = 0; k < d; ++k) row[k] = delta * std::pow(1.0 - delta, k);
      } else if (kind < 0.45) {
        const int len = pick(rng, 1, d + 1);
        if (len <= d) row[len - 1] = 1.0;
      } else {
        const double keep = unif(rng) < 0.3 ? 0.5 + 0.5 * unif(rng) : 1.0;
        row = random_simplex(rng, d, 0.3);
        for (auto& x : row) x *= keep;
      }
    }
    m.pi.push_back(row);
    std::vector<std::vector<double>> block;
    for (int k = 0; k < d; ++k) {
      std::vector<double> jump(n, 0.0);
      if (n > 1) {
        const auto off = random_simplex(rng, n - 1, 0.3);
        for (int j = 0, o = 0; j < n; ++j) {
          if (j != i) jump[j] = off[o++];
        }
      }
      block.push_back(jump);
    }
    m.jump.push_back(block);
  }
  if (unif(rng) < 0.5) {
    m.x0.assign(n, 0.0);
    m.x0[pick(rng, 0, n - 1)] = 1.0;
  } else {
    m.x0 = random_simplex(rng, n, 0.2);
  }
  return m;
}

inline SemiMarkovModel geometric_model(int n, int horizon, double delta, int x0 = 0) {
  SemiMarkovModel m;
  m.n_states = n;
  m.horizon = horizon;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(horizon + 1);
    for (int k = 0; k <= horizon; ++k) row[k] = delta * std::pow(1.0 - delta, k);
    m.pi.push_back(row);
    std::vector<double> jump(n, n > 1 ? 1.0 / (n - 1) : 0.0);
    jump[i] = 0.0;
    m.jump.push_back(std::vector<std::vector<double>>(horizon + 1, jump));
  }
  m.x0.assign(n, 0.0);
  m.x0[x0] = 1.0;
  return m;
}

/// Two states, every sojourn lasts exactly `len` steps, cyclic jumps.
inline SemiMarkovModel deterministic_model(int horizon, int len = 2) {
  SemiMarkovModel m;
  m.n_states = 2;
  m.horizon = horizon;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> row(horizon + 1, 0.0);
    if (len <= horizon + 1) row[len - 1] = 1.0;
    m.pi.push_back(row);
    std::vector<double> jump(2, 0.0);
    jump[1 - i] = 1.0;
    m.jump.push_back(std::vector<std::vector<double>>(horizon + 1, jump));
  }
  m.x0 = {1.0, 0.0};
  return m;
}

/// Random control problem with coefficient bounds p and l on the reachable
/// set; beta rows have norm at most l.
inline smbsde::ControlProblem random_problem(const smbsde::LatticeSystem& sys,
                                             std::mt19937_64& rng, int n_controls, double p,
                                             double l) {
  smbsde::ControlProblem prob;
  const int t = sys.horizon();
  const int d = sys.dim();
  for (int u = 0; u < n_controls; ++u) prob.controls.push_back({static_cast<double>(u)});
  prob.alpha.assign(t, smbsde::Matrix::Zero(d, n_controls));
  prob.g.assign(t, smbsde::Matrix::Zero(d, n_controls));
  prob.beta.assign(t, std::vector<smbsde::Matrix>(n_controls, smbsde::Matrix::Zero(d, d)));
  for (int k = 0; k < t; ++k) {
    for (int r : sys.reachable_at(k)) {
      for (int u = 0; u < n_controls; ++u) {
        prob.alpha[k](r, u) = p * (2.0 * unif(rng) - 1.0);
        prob.g[k](r, u) = 2.0 * unif(rng) - 1.0;
        prob.beta[k][u].row(r) = smbsde::random_row(d, l * unif(rng), rng);
      }
    }
  }
  prob.terminal = smbsde::Vector::Zero(d);
  for (int s : sys.reachable_at(t)) prob.terminal(s) = 2.0 * unif(rng) - 1.0;
  prob.p_bound = p;
  prob.l_bound = l;
  return prob;
}

}  // namespace testing_support
