#pragma once

#include <random>

#include "smbsde/bsde.hpp"
#include "smbsde/lattice.hpp"

namespace smbsde {

/// Ranges for randomized linear BSDE instances.
struct InstanceBounds {
  double alpha_bound = 0.5;     // |alpha| <= alpha_bound
  double l_fraction = 0.9;      // |beta| <= l_fraction * admissible l
  bool respect_comparison = false;  // also keep l * lambda under the comparison threshold
  double g_bound = 1.0;
  double terminal_bound = 1.0;
  bool zero_alpha = false;
  bool zero_beta = false;
  bool zero_g = false;
};

struct LinearInstance {
  LinearDriver driver;
  Vector terminal;
  double l = 0.0;  // bound on |beta| rows actually used
};

/// Largest |beta| keeping the positivity inequality (and, optionally, the
/// comparison inequality with omega2 = l lambda) satisfied; 1 when Psi
/// vanishes everywhere.
double admissible_beta_bound(const LatticeSystem& sys, bool respect_comparison);

LinearInstance random_linear_instance(const LatticeSystem& sys, std::mt19937_64& rng,
                                      const InstanceBounds& bounds = {});

/// Random row with Euclidean norm exactly `norm`.
RowVector random_row(int dim, double norm, std::mt19937_64& rng);

}  // namespace smbsde
