#include "smbsde/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "smbsde/errors.hpp"
#include "smbsde/log.hpp"

namespace smbsde {

namespace {

std::string at_text(int k, int flat, int u) {
  std::ostringstream os;
  os << " (time " << k << ", state " << flat << ", control " << u << ")";
  return os.str();
}

// beta(k,u) Psi^+ Psi z' + g(k,u): the part of f^u that does not scale with y.
double offset(const ControlProblem& prob, const LatticeSystem& sys, int k, int flat,
              const RowVector& z, int u) {
  return prob.beta[k][u].row(flat).dot(sys.projector(flat) * z.transpose()) + prob.g[k](flat, u);
}

}  // namespace

void validate_problem(const LatticeSystem& sys, const ControlProblem& prob) {
  const int t = sys.horizon();
  const int d = sys.dim();
  const int nu = prob.n_controls();
  if (nu == 0) throw InputError("control problem: empty control grid");
  const auto q = prob.controls.front().size();
  for (const auto& c : prob.controls) {
    if (c.size() != q) throw InputError("control problem: grid points differ in dimension");
  }
  if (static_cast<int>(prob.alpha.size()) != t || static_cast<int>(prob.g.size()) != t ||
      static_cast<int>(prob.beta.size()) != t) {
    throw InputError("control problem: expected coefficient tables for times 0..T-1");
  }
  if (prob.terminal.size() != d) throw InputError("control problem: terminal has wrong dimension");
  if (!(prob.p_bound >= 0.0) || !(prob.l_bound >= 0.0)) {
    throw InputError("control problem: bounds p and l must be nonnegative");
  }
  constexpr double slack = 1e-12;
  for (int k = 0; k < t; ++k) {
    if (prob.alpha[k].rows() != d || prob.alpha[k].cols() != nu || prob.g[k].rows() != d ||
        prob.g[k].cols() != nu || static_cast<int>(prob.beta[k].size()) != nu) {
      throw InputError("control problem: coefficient table has wrong shape at time " +
                       std::to_string(k));
    }
    for (int u = 0; u < nu; ++u) {
      if (prob.beta[k][u].rows() != d || prob.beta[k][u].cols() != d) {
        throw InputError("control problem: beta table has wrong shape" + at_text(k, 0, u));
      }
      for (int r : sys.reachable_at(k)) {
        const double a = prob.alpha[k](r, u);
        const double b = prob.beta[k][u].row(r).norm();
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(prob.g[k](r, u))) {
          throw InputError("control problem: non-finite coefficient" + at_text(k, r, u));
        }
        if (std::abs(a) > prob.p_bound + slack) {
          throw InputError("control problem: |alpha| exceeds declared p" + at_text(k, r, u));
        }
        if (b > prob.l_bound + slack) {
          throw InputError("control problem: |beta| exceeds declared l" + at_text(k, r, u));
        }
      }
    }
  }
  for (int s : sys.reachable_at(t)) {
    if (!std::isfinite(prob.terminal(s))) throw InputError("control problem: non-finite terminal");
  }
}

double hamiltonian(const ControlProblem& prob, const LatticeSystem& sys, int k, int flat,
                   double y, const RowVector& z, int u) {
  return prob.alpha[k](flat, u) * y + offset(prob, sys, k, flat, z, u);
}

MaxDriver max_driver(const ControlProblem& prob, const LatticeSystem& sys, int k, int flat,
                     double y, const RowVector& z) {
  const int nu = prob.n_controls();
  std::vector<double> values(nu);
  MaxDriver out;
  out.value = -std::numeric_limits<double>::infinity();
  for (int u = 0; u < nu; ++u) {
    values[u] = hamiltonian(prob, sys, k, flat, y, z, u);
    if (values[u] > out.value) out.value = values[u];
  }
  const double cut = out.value - kTieTol * (1.0 + std::abs(out.value));
  for (int u = 0; u < nu; ++u) {
    if (values[u] >= cut) out.ties.push_back(u);
  }
  out.argmax = out.ties.front();
  return out;
}

LinearDriver policy_driver(const ControlProblem& prob, const LatticeSystem& sys,
                           const PolicyTable& policy) {
  const int t = sys.horizon();
  if (static_cast<int>(policy.choice.size()) != t) {
    throw InputError("policy: expected one row per time 0..T-1");
  }
  LinearDriver drv = LinearDriver::zero(sys);
  for (int k = 0; k < t; ++k) {
    if (static_cast<int>(policy.choice[k].size()) != sys.dim()) {
      throw InputError("policy: row has wrong dimension at time " + std::to_string(k));
    }
    for (int r : sys.reachable_at(k)) {
      const int u = policy.at(k, r);
      if (u < 0 || u >= prob.n_controls()) {
        throw InputError("policy: undefined or out-of-grid control" + at_text(k, r, u));
      }
      drv.alpha[k](r) = prob.alpha[k](r, u);
      drv.beta[k].row(r) = prob.beta[k][u].row(r);
      drv.g[k](r) = prob.g[k](r, u);
    }
  }
  return drv;
}

HypothesisReport check_control_hypotheses(const ControlProblem& prob, const LatticeSystem& sys) {
  HypothesisReport rep;
  rep.l = prob.l_bound;
  rep.lambda = lambda_constants(sys).global;
  rep.positivity = check_positivity_condition(sys, rep.l);
  rep.comparison = check_comparison_condition(sys, rep.l * rep.lambda);
  return rep;
}

ControlSolution solve_control(const ControlProblem& prob, const LatticeSystem& sys,
                              const ControlOptions& opts) {
  validate_problem(sys, prob);
  ControlSolution out;
  out.hypotheses = check_control_hypotheses(prob, sys);
  auto complain = [&](const std::string& msg) {
    if (!opts.override_hypotheses) throw HypothesisError(msg);
    log::warn(msg + " (overridden)");
    out.warnings.push_back(msg);
  };
  if (!out.hypotheses.positivity.all_pass) {
    std::ostringstream os;
    os << "positivity inequality fails for l = " << out.hypotheses.l << " at time "
       << out.hypotheses.positivity.binding_time
       << " (margin " << out.hypotheses.positivity.min_margin << ")";
    complain(os.str());
  }
  if (!out.hypotheses.comparison.all_pass) {
    std::ostringstream os;
    os << "l-lambda inequality fails for l = " << out.hypotheses.l << ", lambda = "
       << out.hypotheses.lambda << " at time " << out.hypotheses.comparison.binding_time
       << " (margin " << out.hypotheses.comparison.min_margin << ")";
    complain(os.str());
  }

  const int t = sys.horizon();
  const int d = sys.dim();
  const int nu = prob.n_controls();
  auto& sol = out.solution;
  sol.y.assign(t + 1, Vector::Zero(d));
  sol.z.assign(t, ZField::Zero(d, d));
  out.policy.choice.assign(t, std::vector<int>(d, -1));
  for (int s : sys.reachable_at(t)) sol.y[t](s) = prob.terminal(s);

  for (int k = t - 1; k >= 0; --k) {
    for (int r : sys.reachable_at(k)) {
      const MartingaleSplit split = split_next_values(sys, r, sol.y[k + 1]);
      sol.z[k].row(r) = split.z;

      // y - max_u (a_u y + c_u) = mean is the min of increasing lines when
      // every a_u < 1, so the root is the largest per-control root.
      bool affine = true;
      double y = -std::numeric_limits<double>::infinity();
      for (int u = 0; u < nu; ++u) {
        const double slope = 1.0 - prob.alpha[k](r, u);
        if (slope < 1e-12) {
          affine = false;
          break;
        }
        y = std::max(y, (split.mean + offset(prob, sys, k, r, split.z, u)) / slope);
      }
      if (!affine) {
        y = solve_fixed_point(
            [&](double v) { return max_driver(prob, sys, k, r, v, split.z).value; }, split.mean,
            opts.root);
      }
      sol.y[k](r) = y;
      out.policy.choice[k][r] = max_driver(prob, sys, k, r, y, split.z).argmax;
    }
  }
  return out;
}

BsdeSolution evaluate_policy(const ControlProblem& prob, const LatticeSystem& sys,
                             const PolicyTable& policy) {
  return solve_bsde(sys, DriverSpec::linear(policy_driver(prob, sys, policy)), prob.terminal);
}

double policy_count(const ControlProblem& prob, const LatticeSystem& sys) {
  double entries = 0.0;
  for (int k = 0; k < sys.horizon(); ++k) entries += static_cast<double>(sys.reachable_at(k).size());
  return std::pow(static_cast<double>(prob.n_controls()), entries);
}

BruteForceResult brute_force_value(const ControlProblem& prob, const LatticeSystem& sys) {
  validate_problem(sys, prob);
  const double count = policy_count(prob, sys);
  if (count > kPolicyGuard) {
    std::ostringstream os;
    os << "brute_force_value: " << count << " feedback policies exceed the guard of "
       << kPolicyGuard;
    throw SolveError(os.str());
  }

  const int t = sys.horizon();
  const int d = sys.dim();
  const int nu = prob.n_controls();
  BruteForceResult out;
  out.max_y.assign(t + 1, Vector::Zero(d));
  for (int k = 0; k < t; ++k) {
    for (int r : sys.reachable_at(k)) out.max_y[k](r) = -std::numeric_limits<double>::infinity();
  }
  for (int s : sys.reachable_at(t)) out.max_y[t](s) = prob.terminal(s);

  // Policies are enumerated depth first from the last time backwards; every
  // leaf is one complete feedback policy. Values of a time layer depend only on
  // the choices at later times, so shared suffixes are evaluated once.
  std::vector<Vector> y(t + 1, Vector::Zero(d));
  y[t] = out.max_y[t];
  auto layer = [&](auto&& self, int k, std::size_t pos) -> void {
    if (k < 0) {
      out.policies += 1.0;
      return;
    }
    const auto& states = sys.reachable_at(k);
    if (pos == states.size()) {
      for (int r : states) out.max_y[k](r) = std::max(out.max_y[k](r), y[k](r));
      self(self, k - 1, 0);
      return;
    }
    const int r = states[pos];
    const MartingaleSplit split = split_next_values(sys, r, y[k + 1]);
    for (int u = 0; u < nu; ++u) {
      const double denom = 1.0 - prob.alpha[k](r, u);
      if (std::abs(denom) < 1e-12) throw SolveError("brute_force_value: alpha = 1" + at_text(k, r, u));
      y[k](r) = (split.mean + offset(prob, sys, k, r, split.z, u)) / denom;
      self(self, k, pos + 1);
    }
  };
  layer(layer, t - 1, 0);
  return out;
}

EpsilonReport epsilon_optimal_policy(const ControlProblem& prob, const LatticeSystem& sys,
                                     const ControlSolution& solved, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("epsilon_optimal_policy: epsilon must be positive");
  const int t = sys.horizon();
  const int d = sys.dim();
  const auto& sol = solved.solution;

  EpsilonReport rep;
  rep.epsilon = epsilon;
  rep.policy.choice.assign(t, std::vector<int>(d, -1));
  for (int k = 0; k < t; ++k) {
    for (int r : sys.reachable_at(k)) {
      const RowVector z = sol.z[k].row(r);
      const double best = max_driver(prob, sys, k, r, sol.y[k](r), z).value;
      for (int u = 0; u < prob.n_controls(); ++u) {
        if (hamiltonian(prob, sys, k, r, sol.y[k](r), z, u) >= best - epsilon) {
          rep.policy.choice[k][r] = u;
          break;
        }
      }
    }
  }

  const BsdeSolution eps = evaluate_policy(prob, sys, rep.policy);
  auto path_max = [&](const std::vector<int>& path) {
    double top = 0.0;
    for (int i = 0; i <= t; ++i) {
      const double gap = eps.y[i](path[i]) - sol.y[i](path[i]);
      top = std::max(top, gap * gap);
    }
    return top;
  };
  if (enumeration_affordable(sys, 0)) {
    for (int r : sys.reachable_at(0)) {
      const double w = sys.distribution_at(0)(r);
      for_each_path(sys, 0, r, [&](const std::vector<int>& path, double prob_path) {
        rep.measured += w * prob_path * path_max(path);
      });
    }
  } else {
    constexpr int kPaths = 20000;
    std::mt19937_64 rng(0);
    const Vector& law = sys.distribution_at(0);
    std::vector<int> path(t + 1);
    for (int p = 0; p < kPaths; ++p) {
      double u = uniform01(rng);
      const auto& start = sys.reachable_at(0);
      path[0] = start.back();
      for (int r : start) {
        if (u < law(r)) {
          path[0] = r;
          break;
        }
        u -= law(r);
      }
      for (int k = 0; k < t; ++k) {
        double v = uniform01(rng);
        const auto& succ = sys.successors(path[k]);
        path[k + 1] = succ.back();
        for (int s : succ) {
          const double ps = sys.transition()(s, path[k]);
          if (v < ps) {
            path[k + 1] = s;
            break;
          }
          v -= ps;
        }
      }
      rep.measured += path_max(path) / kPaths;
    }
  }

  const LinearDriver drv = policy_driver(prob, sys, rep.policy);
  for (int i = 0; i < t; ++i) {
    const DualSde sde = DualSde::from(drv, DualConvention::predictable, i);
    const int samples = enumeration_affordable(sys, i) ? 0 : 20000;
    const VBoundsReport vb = check_V_bounds(sys, sde, samples, static_cast<std::uint64_t>(i));
    rep.c_tilde = std::max(rep.c_tilde, vb.worst_max_v2);
    if (i == 0) rep.positivity_condition = vb.positivity_condition;
  }
  rep.bound = static_cast<double>(t) * t * epsilon * epsilon * rep.c_tilde;
  return rep;
}

}  // namespace smbsde
