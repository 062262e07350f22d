#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smbsde/bsde.hpp"
#include "smbsde/conditions.hpp"
#include "smbsde/duality.hpp"
#include "smbsde/lattice.hpp"

namespace smbsde {

/// Finite-grid control problem: maximise J(u) = Y^u_0 where Y^u solves the
/// linear BSDE with driver alpha(k,u) y + beta(k,u) Psi^+ Psi z' + g(k,u).
/// Coefficients depend on the lattice state, which carries all randomness.
struct ControlProblem {
  std::vector<std::vector<double>> controls;  // grid points in R^q
  std::vector<Matrix> alpha;                  // alpha[k](flat, u)
  std::vector<Matrix> g;                      // g[k](flat, u)
  std::vector<std::vector<Matrix>> beta;      // beta[k][u].row(flat)
  Vector terminal;                            // per flat state
  double p_bound = 0.0;                       // declared bound on |alpha|
  double l_bound = 0.0;                       // declared bound on |beta|

  int n_controls() const { return static_cast<int>(controls.size()); }
};

/// Throws InputError on empty grids, shape mismatches, non-finite entries or
/// declared bounds that fail to dominate the tables on the reachable set.
void validate_problem(const LatticeSystem& sys, const ControlProblem& prob);

/// Feedback rule (time, lattice state) -> control index; -1 off the
/// reachable set.
struct PolicyTable {
  std::vector<std::vector<int>> choice;  // choice[k][flat], k = 0..T-1

  int at(int k, int flat) const { return choice[k][flat]; }
  friend bool operator==(const PolicyTable&, const PolicyTable&) = default;
};

/// f^u(k, y, z) at one lattice state.
double hamiltonian(const ControlProblem& prob, const LatticeSystem& sys, int k, int flat,
                   double y, const RowVector& z, int u);

struct MaxDriver {
  double value = 0.0;
  int argmax = 0;         // lowest index attaining the max
  std::vector<int> ties;  // every index within kTieTol of the max
};

inline constexpr double kTieTol = 1e-12;

MaxDriver max_driver(const ControlProblem& prob, const LatticeSystem& sys, int k, int flat,
                     double y, const RowVector& z);

/// Linear driver obtained by freezing the controls of `policy`.
LinearDriver policy_driver(const ControlProblem& prob, const LatticeSystem& sys,
                           const PolicyTable& policy);

struct HypothesisReport {
  double l = 0.0;
  double lambda = 0.0;
  ConditionReport positivity;  // with l
  ConditionReport comparison;  // with omega2 = l * lambda
  bool ok() const { return positivity.all_pass && comparison.all_pass; }
};

HypothesisReport check_control_hypotheses(const ControlProblem& prob, const LatticeSystem& sys);

struct ControlOptions {
  bool override_hypotheses = false;
  RootSolveOptions root;
};

struct ControlSolution {
  BsdeSolution solution;
  PolicyTable policy;
  HypothesisReport hypotheses;
  std::vector<std::string> warnings;
};

/// Backward recursion with the max driver. Throws HypothesisError when a
/// hypothesis inequality fails and the override is off.
ControlSolution solve_control(const ControlProblem& prob, const LatticeSystem& sys,
                              const ControlOptions& opts = {});

/// J(u) for every state and time: the linear BSDE of the frozen policy.
BsdeSolution evaluate_policy(const ControlProblem& prob, const LatticeSystem& sys,
                             const PolicyTable& policy);

inline constexpr double kPolicyGuard = 1e6;

struct BruteForceResult {
  std::vector<Vector> max_y;  // pointwise max over all policies, per time
  double policies = 0.0;      // number enumerated
};

/// Number of feedback policies on the reachable set, |U|^(sum_k |R_k|).
double policy_count(const ControlProblem& prob, const LatticeSystem& sys);

/// Pointwise maximum of Y^u over every feedback policy. Throws SolveError
/// when the count exceeds kPolicyGuard.
BruteForceResult brute_force_value(const ControlProblem& prob, const LatticeSystem& sys);

struct EpsilonReport {
  PolicyTable policy;
  double epsilon = 0.0;
  double measured = 0.0;  // E[max_i |Y^eps_i - Y_i|^2] from the initial law
  double c_tilde = 0.0;   // worst E[max V^2] over start times and states
  double bound = 0.0;     // T^2 eps^2 c_tilde
  bool positivity_condition = false;
  bool holds() const { return measured <= bound * (1.0 + 1e-12) + 1e-300; }
};

/// Lowest-index control within epsilon of the max driver at every solved
/// (k, state), with the measured suboptimality and its bound.
EpsilonReport epsilon_optimal_policy(const ControlProblem& prob, const LatticeSystem& sys,
                                     const ControlSolution& solved, double epsilon);

}  // namespace smbsde
