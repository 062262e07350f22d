#pragma once

#include <vector>

#include "smbsde/lattice.hpp"

namespace smbsde {

/// Per-time evaluation of a smallness inequality "lhs_k <= 1" (or "< 1").
struct ConditionReport {
  std::vector<double> lhs;     // left-hand side, maximised over reachable states
  std::vector<double> margin;  // 1 - lhs
  std::vector<bool> pass;
  bool all_pass = true;
  int binding_time = 0;        // time with the smallest margin
  double min_margin = 1.0;
};

/// sqrt(2) l |Psi_k| |Psi_k^+|^2 <= 1 at every time k = 0..T-1 (Frobenius
/// norms). Guarantees the dual density stays nonnegative.
ConditionReport check_positivity_condition(const LatticeSystem& sys, double l);

/// 6 w^2 Tr(C'C)^{1/2} Tr((Psi_k^+)' Psi_k^+) < 1 at every time k = 0..T-1.
/// solve_control calls this with w = l * lambda.
ConditionReport check_comparison_condition(const LatticeSystem& sys, double omega2);

/// Largest l for which the positivity inequality holds (infinity when Psi
/// vanishes everywhere).
double positivity_threshold(const LatticeSystem& sys);

/// Supremum of omega2 values passing the comparison inequality.
double comparison_threshold(const LatticeSystem& sys);

}  // namespace smbsde
