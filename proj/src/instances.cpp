#include "smbsde/instances.hpp"

#include <cmath>
#include <limits>

#include "smbsde/conditions.hpp"
#include "smbsde/smc_core.hpp"

namespace smbsde {

double admissible_beta_bound(const LatticeSystem& sys, bool respect_comparison) {
  double l = positivity_threshold(sys);
  if (respect_comparison) {
    const double lambda = lambda_constants(sys).global;
    if (lambda > 0.0) l = std::min(l, comparison_threshold(sys) / lambda);
  }
  if (!std::isfinite(l)) l = 1.0;
  return l;
}

RowVector random_row(int dim, double norm, std::mt19937_64& rng) {
  RowVector row(dim);
  for (int i = 0; i < dim; ++i) row(i) = 2.0 * uniform01(rng) - 1.0;
  const double n = row.norm();
  if (n == 0.0) return RowVector::Zero(dim);
  return row * (norm / n);
}

LinearInstance random_linear_instance(const LatticeSystem& sys, std::mt19937_64& rng,
                                      const InstanceBounds& bounds) {
  const int t = sys.horizon();
  const int d = sys.dim();
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };

  LinearInstance inst;
  inst.driver = LinearDriver::zero(sys);
  inst.l = bounds.zero_beta ? 0.0
                            : bounds.l_fraction * admissible_beta_bound(sys, bounds.respect_comparison);
  for (int k = 0; k < t; ++k) {
    for (int r : sys.reachable_at(k)) {
      if (!bounds.zero_alpha) inst.driver.alpha[k](r) = uniform(-bounds.alpha_bound, bounds.alpha_bound);
      if (!bounds.zero_g) inst.driver.g[k](r) = uniform(-bounds.g_bound, bounds.g_bound);
      if (!bounds.zero_beta) {
        inst.driver.beta[k].row(r) = random_row(d, inst.l * uniform(0.5, 1.0), rng);
      }
    }
  }
  inst.terminal = Vector::Zero(d);
  for (int s : sys.reachable_at(t)) {
    inst.terminal(s) = uniform(-bounds.terminal_bound, bounds.terminal_bound);
  }
  return inst;
}

}  // namespace smbsde
