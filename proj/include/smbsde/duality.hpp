#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smbsde/bsde.hpp"
#include "smbsde/errors.hpp"
#include "smbsde/lattice.hpp"

namespace smbsde {

/// Readings of the linear dual SDE V_m = 1 + sum a_k V_k + sum V_k b_k M_k.
/// Coefficients of the step m-1 -> m are those of the BSDE at time m-1,
/// evaluated at X_{m-1}; b = beta Psi^+ Psi (Psi^+)'.
///
///   implicit:    V_m = V_{m-1} / (1 - a - b M_m),   costs g_k V_k
///   shifted:     V_m = V_{m-1} (1 + a + b M_m),     costs g_k V_k
///   predictable: V_m = V_{m-1} (1 + b M_m) / (1 - a), costs g_k V_{k+1}
///
/// The predictable reading keeps the drift term implicit in V_m and the
/// martingale term on the pre-step density.
enum class DualConvention { implicit = 0, shifted = 1, predictable = 2 };

inline constexpr std::array<DualConvention, 3> kAllConventions = {
    DualConvention::implicit, DualConvention::shifted, DualConvention::predictable};

/// Library default; the outcome of select_convention on the randomized suite.
inline constexpr DualConvention kDefaultConvention = DualConvention::predictable;

std::string_view to_string(DualConvention c);
std::optional<DualConvention> parse_convention(std::string_view s);

struct DualSde {
  std::vector<Vector> alpha;  // alpha[k](flat), k = 0..T-1
  std::vector<Matrix> beta;   // beta[k].row(flat)
  DualConvention convention = kDefaultConvention;
  int start_time = 0;

  static DualSde from(const LinearDriver& drv, DualConvention c, int start_time = 0) {
    return {drv.alpha, drv.beta, c, start_time};
  }
};

/// Pathwise density V_i..V_T along a realised lattice path (flat states at
/// times start_time..T). Throws InputError for unrealisable paths and
/// SolveError for a vanishing implicit denominator.
std::vector<double> evolve_V(const LatticeSystem& sys, const DualSde& sde,
                             std::span<const int> path);

struct DualValueOptions {
  bool monte_carlo = false;
  std::uint64_t seed = 0;
  int paths = 0;
};

struct DualValue {
  Vector value;      // per flat state at start_time; zero off the reachable set
  Vector std_error;  // zero when exact
  bool exact = true;
};

/// E[xi V_T + sum_k g_k V_. | X_i = e] for every reachable e at i = start_time,
/// by exhaustive path enumeration or Monte Carlo.
DualValue dual_value(const LatticeSystem& sys, const DualSde& sde, const std::vector<Vector>& g,
                     const Vector& terminal, const DualValueOptions& opts = {});

/// True when exhaustive enumeration from `start_time` is within the default
/// budget (T - start <= 8 and N <= 4).
bool enumeration_affordable(const LatticeSystem& sys, int start_time);

struct ConventionTrial {
  int instance = 0;
  std::array<double, 3> residual{};  // max |dual_value - solve_bsde| per convention
  bool informative = false;          // conventions differ by more than 1e-9
};

struct ConventionEvidence {
  std::vector<ConventionTrial> trials;
  std::array<int, 3> agreements{};      // trials with residual <= agree_tol
  std::array<double, 3> max_residual{};
  double agree_tol = 1e-6;
  std::vector<DualConvention> agreeing;  // agree on every trial
  std::optional<DualConvention> selected;
  DualConvention best = kDefaultConvention;  // smallest max residual
  bool informative = false;
  std::string diagnostic;
};

struct InstanceBounds;

/// Randomized linear instances on `sys`; fills trials only.
ConventionEvidence run_convention_trials(const LatticeSystem& sys, int trials,
                                         std::uint64_t seed, const InstanceBounds& bounds);
void merge_evidence(ConventionEvidence& into, const ConventionEvidence& from);
/// Fills agreements, selected, best and diagnostic from the trials.
void decide(ConventionEvidence& ev);

class ConventionSelectionError : public InvariantViolation {
 public:
  ConventionSelectionError(const std::string& what, ConventionEvidence ev)
      : InvariantViolation(what), evidence(std::move(ev)) {}
  ConventionEvidence evidence;
};

/// Runs the trials and returns the convention that agrees with solve_bsde on
/// every trial. Throws ConventionSelectionError when none does.
DualConvention select_convention(const LatticeSystem& sys, int trials, std::uint64_t seed,
                                 ConventionEvidence* evidence = nullptr);

struct VBoundsReport {
  double mean_max_v2 = 0.0;   // E[max_{m>=i} V_m^2] under the law of X_i
  double worst_max_v2 = 0.0;  // same, maximised over reachable start states
  double min_v = 0.0;         // over all enumerated (or sampled) paths
  double l = 0.0;             // max |beta| over the reachable tables
  bool positivity_condition = false;
  bool exact = true;
};

class PositivityViolation : public InvariantViolation {
 public:
  PositivityViolation(const std::string& what, VBoundsReport r)
      : InvariantViolation(what), report(r) {}
  VBoundsReport report;
};

/// Second-moment bound and positivity of V from sde.start_time. `samples` = 0
/// enumerates exhaustively; otherwise Monte Carlo with `seed`. Throws
/// PositivityViolation when V < -1e-10 on some path while the positivity
/// inequality holds.
VBoundsReport check_V_bounds(const LatticeSystem& sys, const DualSde& sde, int samples = 0,
                             std::uint64_t seed = 0);

}  // namespace smbsde
