#include "smbsde/bsde.hpp"

#include <cmath>
#include <sstream>

#include "smbsde/errors.hpp"
#include "smbsde/log.hpp"

namespace smbsde {

LinearDriver LinearDriver::zero(const LatticeSystem& sys) {
  const int t = sys.horizon();
  const int d = sys.dim();
  LinearDriver out;
  out.alpha.assign(t, Vector::Zero(d));
  out.beta.assign(t, Matrix::Zero(d, d));
  out.g.assign(t, Vector::Zero(d));
  return out;
}

namespace {

void check_shape(const LatticeSystem& sys, const LinearDriver& drv) {
  const auto t = static_cast<std::size_t>(sys.horizon());
  const int d = sys.dim();
  if (drv.alpha.size() != t || drv.beta.size() != t || drv.g.size() != t) {
    throw InputError("linear driver: expected one coefficient table per time 0..T-1");
  }
  for (std::size_t k = 0; k < t; ++k) {
    if (drv.alpha[k].size() != d || drv.g[k].size() != d || drv.beta[k].rows() != d ||
        drv.beta[k].cols() != d) {
      throw InputError("linear driver: coefficient table has wrong dimension");
    }
  }
}

double linear_value(const LatticeSystem& sys, const LinearDriver& drv, int k, int flat,
                    double y, const RowVector& z) {
  const double proj = drv.beta[k].row(flat).dot(sys.projector(flat) * z.transpose());
  return drv.alpha[k](flat) * y + proj + drv.g[k](flat);
}

}  // namespace

double evaluate_driver(const LatticeSystem& sys, const DriverSpec& driver, int k,
                       int flat, double y, const RowVector& z) {
  if (const auto* lin = std::get_if<LinearDriver>(&driver.kind)) {
    return linear_value(sys, *lin, k, flat, y, z);
  }
  return std::get<GeneralDriver>(driver.kind).f(k, flat, y, z);
}

std::optional<LipschitzBounds> lipschitz_bounds(const LatticeSystem& sys,
                                                const DriverSpec& driver) {
  if (driver.lipschitz) return driver.lipschitz;
  const auto* lin = std::get_if<LinearDriver>(&driver.kind);
  if (!lin) return std::nullopt;
  LipschitzBounds b;
  for (int k = 0; k < sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      b.omega1 = std::max(b.omega1, std::abs(lin->alpha[k](r)));
      b.omega2 = std::max(b.omega2, lin->beta[k].row(r).norm() * lambda_at(sys, r));
    }
  }
  return b;
}

MartingaleSplit split_next_values(const LatticeSystem& sys, int flat, const Vector& y_next) {
  const auto& succ = sys.successors(flat);
  MartingaleSplit out;
  for (int s : succ) out.mean += sys.transition()(s, flat) * y_next(s);
  out.z = RowVector::Zero(sys.dim());
  for (int s : succ) out.z(s) = y_next(s) - out.mean;
  return out;
}

double solve_fixed_point(const std::function<double(double)>& f, double target,
                         const RootSolveOptions& opts) {
  auto h = [&](double y) { return y - f(y) - target; };
  const double radius = (1.0 + std::abs(target)) * opts.bracket_scale;
  double lo = target - radius;
  double hi = target + radius;
  double h_lo = h(lo);
  double h_hi = h(hi);
  if (!(h_lo <= 0.0 && h_hi >= 0.0)) {
    throw SolveError("driver root solve: no sign change on the search bracket");
  }
  const int samples = std::max(opts.monotonicity_samples, 2);
  double prev = h_lo;
  for (int i = 1; i < samples; ++i) {
    const double y = lo + (hi - lo) * i / (samples - 1);
    const double v = h(y);
    if (v < prev - 1e-12 * (1.0 + std::abs(prev))) {
      throw SolveError("driver root solve: y - f(y) is not monotone (bijection fails)");
    }
    prev = v;
  }

  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= opts.tol * (1.0 + std::abs(mid))) break;
    const double v = h(mid);
    if (v == 0.0) return mid;
    if (v < 0.0) {
      lo = mid;
      h_lo = v;
    } else {
      hi = mid;
      h_hi = v;
    }
  }
  if (h_hi > h_lo) {
    const double secant = lo - h_lo * (hi - lo) / (h_hi - h_lo);
    if (secant >= lo && secant <= hi) return secant;
  }
  return 0.5 * (lo + hi);
}

BsdeSolution solve_bsde(const LatticeSystem& sys, const DriverSpec& driver,
                        const Vector& terminal, const RootSolveOptions& opts) {
  const int t = sys.horizon();
  const int d = sys.dim();
  if (terminal.size() != d) throw InputError("solve_bsde: terminal has wrong dimension");
  const auto* lin = std::get_if<LinearDriver>(&driver.kind);
  if (lin) check_shape(sys, *lin);

  BsdeSolution sol;
  sol.y.assign(t + 1, Vector::Zero(d));
  sol.z.assign(t, ZField::Zero(d, d));
  for (int s : sys.reachable_at(t)) {
    if (!std::isfinite(terminal(s))) throw InputError("solve_bsde: non-finite terminal value");
    sol.y[t](s) = terminal(s);
  }

  for (int k = t - 1; k >= 0; --k) {
    for (int r : sys.reachable_at(k)) {
      const MartingaleSplit split = split_next_values(sys, r, sol.y[k + 1]);
      sol.z[k].row(r) = split.z;
      if (lin) {
        const double denom = 1.0 - lin->alpha[k](r);
        if (std::abs(denom) < 1e-12) {
          std::ostringstream os;
          os << "solve_bsde: alpha = 1 at time " << k << ", state " << r
             << " makes the affine solve degenerate";
          throw SolveError(os.str());
        }
        const double proj = lin->beta[k].row(r).dot(sys.projector(r) * split.z.transpose());
        sol.y[k](r) = (split.mean + proj + lin->g[k](r)) / denom;
      } else {
        const auto& f = std::get<GeneralDriver>(driver.kind).f;
        sol.y[k](r) = solve_fixed_point(
            [&](double y) { return f(k, r, y, split.z); }, split.mean, opts);
      }
    }
  }
  return sol;
}

ComparisonReport check_comparison(const LatticeSystem& sys, const DriverSpec& driver1,
                                  const DriverSpec& driver2, const Vector& terminal1,
                                  const Vector& terminal2, double tol) {
  ComparisonReport rep;
  const int t = sys.horizon();

  rep.terminal_ordered = true;
  for (int s : sys.reachable_at(t)) {
    if (terminal1(s) > terminal2(s)) rep.terminal_ordered = false;
  }
  if (!rep.terminal_ordered) rep.notes.push_back("(I) terminal1 <= terminal2 fails");

  rep.first = solve_bsde(sys, driver1, terminal1);
  rep.second = solve_bsde(sys, driver2, terminal2);

  rep.driver_ordered = true;
  for (int k = 0; k < t && rep.driver_ordered; ++k) {
    for (int r : sys.reachable_at(k)) {
      const double y = rep.second.y[k](r);
      const RowVector z = rep.second.z[k].row(r);
      const double f1 = evaluate_driver(sys, driver1, k, r, y, z);
      const double f2 = evaluate_driver(sys, driver2, k, r, y, z);
      if (f1 > f2 + 1e-12 * (1.0 + std::abs(f2))) {
        rep.driver_ordered = false;
        break;
      }
    }
  }
  if (!rep.driver_ordered) rep.notes.push_back("(II) f1 <= f2 along the second solution fails");

  const auto lip1 = lipschitz_bounds(sys, driver1);
  const auto lip2 = lipschitz_bounds(sys, driver2);
  if (lip1) rep.condition1 = check_comparison_condition(sys, lip1->omega2);
  if (lip2) rep.condition2 = check_comparison_condition(sys, lip2->omega2);
  rep.lipschitz_ok = rep.condition1 && rep.condition2 && rep.condition1->all_pass &&
                     rep.condition2->all_pass;
  if (!lip1 || !lip2) rep.notes.push_back("(III) no Lipschitz constants declared");
  else if (!rep.lipschitz_ok) rep.notes.push_back("(III) omega2 smallness inequality fails");

  for (int k = 0; k <= t; ++k) {
    for (int r : sys.reachable_at(k)) {
      const double excess = rep.first.y[k](r) - rep.second.y[k](r);
      rep.max_excess = (k == 0 && r == sys.reachable_at(0).front())
                           ? excess
                           : std::max(rep.max_excess, excess);
      if (excess > tol) ++rep.violations;
    }
  }
  if (rep.violations > 0 && rep.hypotheses_hold()) {
    rep.invariant_violated = true;
    log::warn("check_comparison: Y1 > Y2 although every hypothesis holds; solver bug");
  }
  return rep;
}

}  // namespace smbsde
