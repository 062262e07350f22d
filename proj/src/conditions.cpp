#include "smbsde/conditions.hpp"

#include <cmath>
#include <limits>

#include "smbsde/errors.hpp"

namespace smbsde {
namespace {

// max over reachable states at each time of |Psi| |Psi^+|^2 and |Psi^+|^2.
struct NormProfile {
  std::vector<double> psi_times_pinv_sq;
  std::vector<double> pinv_sq;
};

NormProfile norm_profile(const LatticeSystem& sys) {
  NormProfile p;
  p.psi_times_pinv_sq.assign(sys.horizon(), 0.0);
  p.pinv_sq.assign(sys.horizon(), 0.0);
  for (int k = 0; k < sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      const double psi = numkit::frobenius(sys.psi(r));
      const double pinv = numkit::frobenius(sys.psi_pinv(r));
      p.psi_times_pinv_sq[k] = std::max(p.psi_times_pinv_sq[k], psi * pinv * pinv);
      p.pinv_sq[k] = std::max(p.pinv_sq[k], pinv * pinv);
    }
  }
  return p;
}

ConditionReport finish(std::vector<double> lhs, bool strict) {
  ConditionReport r;
  r.lhs = std::move(lhs);
  r.margin.resize(r.lhs.size());
  r.pass.resize(r.lhs.size());
  r.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < r.lhs.size(); ++k) {
    r.margin[k] = 1.0 - r.lhs[k];
    r.pass[k] = strict ? r.lhs[k] < 1.0 : r.lhs[k] <= 1.0;
    r.all_pass = r.all_pass && r.pass[k];
    if (r.margin[k] < r.min_margin) {
      r.min_margin = r.margin[k];
      r.binding_time = static_cast<int>(k);
    }
  }
  return r;
}

}  // namespace

ConditionReport check_positivity_condition(const LatticeSystem& sys, double l) {
  if (!(l >= 0.0)) throw InputError("check_positivity_condition: l must be >= 0");
  const auto prof = norm_profile(sys);
  std::vector<double> lhs(prof.psi_times_pinv_sq.size());
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    lhs[k] = std::sqrt(2.0) * l * prof.psi_times_pinv_sq[k];
  }
  return finish(std::move(lhs), false);
}

ConditionReport check_comparison_condition(const LatticeSystem& sys, double omega2) {
  if (!(omega2 >= 0.0)) throw InputError("check_comparison_condition: omega2 must be >= 0");
  const auto prof = norm_profile(sys);
  const double c_norm = numkit::frobenius(sys.transition());
  std::vector<double> lhs(prof.pinv_sq.size());
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    lhs[k] = 6.0 * omega2 * omega2 * c_norm * prof.pinv_sq[k];
  }
  return finish(std::move(lhs), true);
}

double positivity_threshold(const LatticeSystem& sys) {
  const auto prof = norm_profile(sys);
  double worst = 0.0;
  for (double v : prof.psi_times_pinv_sq) worst = std::max(worst, v);
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (std::sqrt(2.0) * worst);
}

double comparison_threshold(const LatticeSystem& sys) {
  const auto prof = norm_profile(sys);
  double worst = 0.0;
  for (double v : prof.pinv_sq) worst = std::max(worst, v);
  const double c_norm = numkit::frobenius(sys.transition());
  if (worst == 0.0 || c_norm == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(1.0 / (6.0 * c_norm * worst));
}

}  // namespace smbsde
