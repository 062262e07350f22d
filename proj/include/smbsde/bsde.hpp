#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smbsde/conditions.hpp"
#include "smbsde/lattice.hpp"

namespace smbsde {

/// Driver f(k, y, z) = alpha_k y + beta_k Psi_k^+ Psi_k z' + g_k with
/// coefficients tabulated per (time, lattice state).
struct LinearDriver {
  std::vector<Vector> alpha;  // alpha[k](flat), k = 0..T-1
  std::vector<Matrix> beta;   // beta[k].row(flat)
  std::vector<Vector> g;      // g[k](flat)

  static LinearDriver zero(const LatticeSystem& sys);
};

using DriverFn = std::function<double(int k, int flat, double y, const RowVector& z)>;

/// Arbitrary driver. It is only ever evaluated on canonical integrands, so it
/// automatically depends on z through Z M alone.
struct GeneralDriver {
  DriverFn f;
};

struct LipschitzBounds {
  double omega1 = 0.0;  // in y
  double omega2 = 0.0;  // in z, w.r.t. ||.||_{X_k}
};

struct DriverSpec {
  std::variant<LinearDriver, GeneralDriver> kind;
  std::optional<LipschitzBounds> lipschitz;

  static DriverSpec linear(LinearDriver d) { return {std::move(d), std::nullopt}; }
  static DriverSpec general(DriverFn f, std::optional<LipschitzBounds> lip = std::nullopt) {
    return {GeneralDriver{std::move(f)}, lip};
  }
};

double evaluate_driver(const LatticeSystem& sys, const DriverSpec& driver, int k,
                       int flat, double y, const RowVector& z);

/// Lipschitz constants: the declared ones, or for linear drivers
/// (max |alpha|, max |beta| lambda) computed from the tables.
std::optional<LipschitzBounds> lipschitz_bounds(const LatticeSystem& sys,
                                                const DriverSpec& driver);

struct BsdeSolution {
  std::vector<Vector> y;  // y[k](flat), k = 0..T; zero off the reachable set
  std::vector<ZField> z;  // z[k].row(flat), k = 0..T-1, canonical rows
};

/// Decomposition Y_{k+1} = mean + Z M_{k+1} on the successors of one state.
struct MartingaleSplit {
  double mean = 0.0;
  RowVector z;  // canonical
};

MartingaleSplit split_next_values(const LatticeSystem& sys, int flat, const Vector& y_next);

struct RootSolveOptions {
  double tol = 1e-12;
  int monotonicity_samples = 32;
  double bracket_scale = 1e3;
};

/// Solves y - f(y) = target by bracketed bisection with a secant polish.
/// Throws SolveError when the map is not monotone with a sign change on
/// [target - R, target + R], R = (1 + |target|) * bracket_scale.
double solve_fixed_point(const std::function<double(double)>& f, double target,
                         const RootSolveOptions& opts = {});

/// Backward recursion over the reachable lattice. `terminal` is indexed by
/// flat state; only entries reachable at T are read.
BsdeSolution solve_bsde(const LatticeSystem& sys, const DriverSpec& driver,
                        const Vector& terminal, const RootSolveOptions& opts = {});

struct ComparisonReport {
  bool terminal_ordered = false;  // (I)
  bool driver_ordered = false;    // (II) along the second solution
  bool lipschitz_ok = false;      // (III) for both drivers
  std::optional<ConditionReport> condition1;
  std::optional<ConditionReport> condition2;
  int violations = 0;             // reachable (k, state) with Y1 > Y2 + tol
  double max_excess = 0.0;        // max of Y1 - Y2
  bool invariant_violated = false;
  std::vector<std::string> notes;
  BsdeSolution first;
  BsdeSolution second;

  bool hypotheses_hold() const { return terminal_ordered && driver_ordered && lipschitz_ok; }
};

ComparisonReport check_comparison(const LatticeSystem& sys, const DriverSpec& driver1,
                                  const DriverSpec& driver2, const Vector& terminal1,
                                  const Vector& terminal2, double tol = 1e-10);

}  // namespace smbsde
