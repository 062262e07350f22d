#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "smbsde/numkit.hpp"

namespace smbsde {

/// Finite-state, discrete-time, time-homogeneous semi-Markov chain on a
/// finite horizon.
///
/// Chain states are 0-based (state `i` is the unit vector e_{i+1}). Sojourn
/// durations are 1-based: `pi[i][m - 1]` is the probability that a sojourn
/// started in state i lasts exactly m steps, for m = 1..horizon+1. Mass
/// missing from `pi[i]` means the sojourn outlasts the horizon.
struct SemiMarkovModel {
  int n_states = 0;
  int horizon = 0;
  /// pi[i][m-1] = P(sojourn = m | entered state i)
  std::vector<std::vector<double>> pi;
  /// jump[i][m-1][j] = P(next state = j | sojourn = m, current state = i)
  std::vector<std::vector<std::vector<double>>> jump;
  /// Law of the initial state.
  std::vector<double> x0;

  int durations() const { return horizon + 1; }
  double sojourn_prob(int i, int m) const { return pi[i][m - 1]; }
  double jump_prob(int i, int m, int j) const { return jump[i][m - 1][j]; }
};

inline constexpr double kProbabilityTol = 1e-9;

struct Violation {
  std::string field;
  std::vector<int> indices;
  std::string message;
};

/// Checks every structural invariant of the model. Returns an empty list when
/// the model is well formed; never throws.
std::vector<Violation> validate_model(const SemiMarkovModel& model);

/// Throws InputError listing the violations when the model is invalid.
void require_valid(const SemiMarkovModel& model);

/// Cumulative sojourn law, survival function and jump hazard, all indexed
/// [state][m - 1] for m = 1..horizon+1.
struct SojournQuantities {
  std::vector<std::vector<double>> cdf;       // G_i(m)
  std::vector<std::vector<double>> survival;  // F_i(m)
  std::vector<std::vector<double>> hazard;    // Delta^i(m); NaN when unreachable
  std::vector<std::vector<bool>> reachable;   // F_i(m - 1) > 0

  double hazard_at(int i, int m) const { return hazard[i][m - 1]; }
  bool reachable_at(int i, int m) const { return reachable[i][m - 1]; }
  /// F_i(m) with F_i(0) = 1.
  double survival_at(int i, int m) const {
    return m == 0 ? 1.0 : survival[i][m - 1];
  }
};

SojournQuantities sojourn_quantities(const SemiMarkovModel& model);

/// Transition matrix A(m): column i is the law of X_{k+1} given X_k = e_i and
/// h_k = m. Columns of unreachable (i, m) are zero.
Matrix build_A(const SemiMarkovModel& model, int m);
Matrix build_A(const SemiMarkovModel& model, const SojournQuantities& sq, int m);

/// Realised trajectory X_0..X_T with sojourn clock h_k and jump times.
struct ChainPath {
  std::vector<int> states;
  std::vector<int> sojourns;
  std::vector<int> jump_times;
};

/// Draws a uniform double in [0, 1) from 53 bits of the engine. Bit-stable
/// across standard libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng);

ChainPath simulate(const SemiMarkovModel& model, int horizon, std::uint64_t seed);
ChainPath simulate(const SemiMarkovModel& model, const SojournQuantities& sq,
                   int horizon, std::mt19937_64& rng);

/// M_{k+1} = X_{k+1} - A(h_k) X_k.
Vector martingale_increment(const SemiMarkovModel& model, int x_k, int h_k,
                            int x_next);

}  // namespace smbsde
