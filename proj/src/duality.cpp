#include "smbsde/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "smbsde/conditions.hpp"
#include "smbsde/instances.hpp"
#include "smbsde/log.hpp"

namespace smbsde {

std::string_view to_string(DualConvention c) {
  switch (c) {
    case DualConvention::implicit: return "implicit";
    case DualConvention::shifted: return "shifted";
    case DualConvention::predictable: return "predictable";
  }
  return "?";
}

std::optional<DualConvention> parse_convention(std::string_view s) {
  for (auto c : kAllConventions) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

namespace {

// Per-time noise loadings b_k(r) = beta_k(r) Psi_r^+ Psi_r (Psi_r^+)' and the
// one-step density update of the chosen reading.
class Density {
 public:
  Density(const LatticeSystem& sys, const DualSde& sde) : sys_(sys), sde_(sde) {
    const int t = sys.horizon();
    if (static_cast<int>(sde.alpha.size()) != t || static_cast<int>(sde.beta.size()) != t) {
      throw InputError("dual SDE: expected coefficient tables for times 0..T-1");
    }
    if (sde.start_time < 0 || sde.start_time > t) {
      throw InputError("dual SDE: start time outside 0..T");
    }
    loading_.assign(t, Matrix());
    for (int k = sde.start_time; k < t; ++k) {
      loading_[k] = Matrix::Zero(sys.dim(), sys.dim());
      for (int r : sys.reachable_at(k)) {
        loading_[k].row(r) = sde.beta[k].row(r) * sys.projector(r) *
                             sys.psi_pinv(r).transpose();
      }
    }
  }

  // V after the step k -> k+1 from `from` to `to`.
  double step(int k, int from, int to, double v_prev) const {
    const double a = sde_.alpha[k](from);
    const RowVector b = loading_[k].row(from);
    const double bm = b(to) - b.dot(sys_.transition().col(from));
    switch (sde_.convention) {
      case DualConvention::implicit: {
        const double denom = 1.0 - a - bm;
        if (std::abs(denom) < 1e-10) throw SolveError("evolve_V: implicit denominator vanishes");
        return v_prev / denom;
      }
      case DualConvention::shifted:
        return v_prev * (1.0 + a + bm);
      case DualConvention::predictable: {
        const double denom = 1.0 - a;
        if (std::abs(denom) < 1e-12) throw SolveError("evolve_V: alpha = 1 makes the density degenerate");
        return v_prev * (1.0 + bm) / denom;
      }
    }
    return v_prev;
  }

  // xi V_T + running costs for one path with its densities.
  double payoff(std::span<const int> path, const std::vector<double>& v,
                const std::vector<Vector>& g, const Vector& terminal) const {
    const int start = sde_.start_time;
    const int steps = static_cast<int>(path.size()) - 1;
    const bool post_step = sde_.convention == DualConvention::predictable;
    double total = terminal(path[steps]) * v[steps];
    for (int j = 0; j < steps; ++j) {
      total += g[start + j](path[j]) * (post_step ? v[j + 1] : v[j]);
    }
    return total;
  }

  std::vector<double> densities(std::span<const int> path) const {
    std::vector<double> v(path.size());
    v[0] = 1.0;
    for (std::size_t j = 1; j < path.size(); ++j) {
      v[j] = step(sde_.start_time + static_cast<int>(j) - 1, path[j - 1], path[j], v[j - 1]);
    }
    return v;
  }

 private:
  const LatticeSystem& sys_;
  const DualSde& sde_;
  std::vector<Matrix> loading_;
};

void check_path(const LatticeSystem& sys, const DualSde& sde, std::span<const int> path) {
  const int start = sde.start_time;
  if (static_cast<int>(path.size()) != sys.horizon() - start + 1) {
    throw InputError("evolve_V: path must cover times start..T");
  }
  if (path[0] < 0 || path[0] >= sys.dim() || !sys.is_reachable(start, path[0])) {
    throw InputError("evolve_V: path does not start at a reachable state");
  }
  for (std::size_t j = 1; j < path.size(); ++j) {
    if (path[j] < 0 || path[j] >= sys.dim() || !(sys.transition()(path[j], path[j - 1]) > 0.0)) {
      throw InputError("evolve_V: path contains an impossible transition");
    }
  }
}

int sample_successor(const LatticeSystem& sys, int from, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  const auto& succ = sys.successors(from);
  for (int s : succ) {
    cumulative += sys.transition()(s, from);
    if (u < cumulative) return s;
  }
  return succ.back();
}

}  // namespace

std::vector<double> evolve_V(const LatticeSystem& sys, const DualSde& sde,
                             std::span<const int> path) {
  check_path(sys, sde, path);
  return Density(sys, sde).densities(path);
}

bool enumeration_affordable(const LatticeSystem& sys, int start_time) {
  return sys.horizon() - start_time <= 8 && sys.n_states() <= 4;
}

DualValue dual_value(const LatticeSystem& sys, const DualSde& sde, const std::vector<Vector>& g,
                     const Vector& terminal, const DualValueOptions& opts) {
  const Density density(sys, sde);
  const int start = sde.start_time;
  const int d = sys.dim();
  if (static_cast<int>(g.size()) != sys.horizon() || terminal.size() != d) {
    throw InputError("dual_value: cost or terminal table has wrong shape");
  }

  DualValue out;
  out.value = Vector::Zero(d);
  out.std_error = Vector::Zero(d);
  out.exact = !opts.monte_carlo;

  if (!opts.monte_carlo) {
    if (!enumeration_affordable(sys, start)) {
      throw SolveError("dual_value: exhaustive enumeration too large; use Monte Carlo");
    }
    for (int r : sys.reachable_at(start)) {
      double acc = 0.0;
      for_each_path(sys, start, r, [&](const std::vector<int>& path, double prob) {
        acc += prob * density.payoff(path, density.densities(path), g, terminal);
      });
      out.value(r) = acc;
    }
    return out;
  }

  if (opts.paths < 2) throw InputError("dual_value: Monte Carlo needs at least 2 paths");
  std::vector<int> path(sys.horizon() - start + 1);
  for (int r : sys.reachable_at(start)) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int p = 0; p < opts.paths; ++p) {
      path[0] = r;
      for (std::size_t j = 1; j < path.size(); ++j) path[j] = sample_successor(sys, path[j - 1], rng);
      const double x = density.payoff(path, density.densities(path), g, terminal);
      sum += x;
      sum_sq += x * x;
    }
    const double n = opts.paths;
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    out.value(r) = mean;
    out.std_error(r) = std::sqrt(var / n);
  }
  return out;
}

ConventionEvidence run_convention_trials(const LatticeSystem& sys, int trials,
                                         std::uint64_t seed, const InstanceBounds& bounds) {
  ConventionEvidence ev;
  const int t = sys.horizon();
  for (int trial = 0; trial < trials; ++trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    const LinearInstance inst = random_linear_instance(sys, rng, bounds);
    const BsdeSolution sol = solve_bsde(sys, DriverSpec::linear(inst.driver), inst.terminal);

    ConventionTrial row;
    row.instance = trial;
    std::array<std::vector<Vector>, 3> values;
    for (auto c : kAllConventions) {
      const auto ci = static_cast<std::size_t>(c);
      for (int i = 0; i < t; ++i) {
        const DualValue dv = dual_value(sys, DualSde::from(inst.driver, c, i), inst.driver.g, inst.terminal);
        for (int r : sys.reachable_at(i)) {
          row.residual[ci] = std::max(row.residual[ci], std::abs(dv.value(r) - sol.y[i](r)));
        }
        values[ci].push_back(dv.value);
      }
    }
    for (int i = 0; i < t; ++i) {
      for (int r : sys.reachable_at(i)) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& v : values) {
          lo = std::min(lo, v[i](r));
          hi = std::max(hi, v[i](r));
        }
        if (hi - lo > 1e-9) row.informative = true;
      }
    }
    ev.trials.push_back(row);
  }
  return ev;
}

void merge_evidence(ConventionEvidence& into, const ConventionEvidence& from) {
  const int offset = static_cast<int>(into.trials.size());
  for (auto row : from.trials) {
    row.instance += offset;
    into.trials.push_back(row);
  }
}

void decide(ConventionEvidence& ev) {
  ev.agreements.fill(0);
  ev.max_residual.fill(0.0);
  ev.informative = false;
  ev.agreeing.clear();
  ev.selected.reset();
  for (const auto& row : ev.trials) {
    ev.informative = ev.informative || row.informative;
    for (std::size_t c = 0; c < 3; ++c) {
      if (row.residual[c] <= ev.agree_tol) ++ev.agreements[c];
      ev.max_residual[c] = std::max(ev.max_residual[c], row.residual[c]);
    }
  }
  ev.best = kAllConventions[0];
  for (auto c : kAllConventions) {
    if (ev.max_residual[static_cast<std::size_t>(c)] <
        ev.max_residual[static_cast<std::size_t>(ev.best)]) {
      ev.best = c;
    }
  }
  for (auto c : kAllConventions) {
    if (ev.agreements[static_cast<std::size_t>(c)] == static_cast<int>(ev.trials.size())) {
      ev.agreeing.push_back(c);
    }
  }

  std::ostringstream os;
  os << "max residual:";
  for (auto c : kAllConventions) {
    os << ' ' << to_string(c) << '=' << ev.max_residual[static_cast<std::size_t>(c)];
  }
  if (ev.trials.empty() || ev.agreeing.empty()) {
    os << "; no convention agrees within " << ev.agree_tol << " on every trial";
  } else if (!ev.informative) {
    ev.selected = kDefaultConvention;
    os << "; trials cannot discriminate, default kept";
  } else {
    DualConvention pick = ev.agreeing.front();
    for (auto c : ev.agreeing) {
      if (ev.max_residual[static_cast<std::size_t>(c)] <
          ev.max_residual[static_cast<std::size_t>(pick)]) {
        pick = c;
      }
    }
    ev.selected = pick;
    os << "; selected " << to_string(pick)
       << (ev.agreeing.size() == 1 ? " (unique)" : " (not unique)");
  }
  ev.diagnostic = os.str();
}

DualConvention select_convention(const LatticeSystem& sys, int trials, std::uint64_t seed,
                                 ConventionEvidence* evidence) {
  ConventionEvidence ev = run_convention_trials(sys, trials, seed, InstanceBounds{});
  decide(ev);
  if (evidence) *evidence = ev;
  if (!ev.selected) {
    throw ConventionSelectionError("select_convention: " + ev.diagnostic, ev);
  }
  log::info("select_convention: " + ev.diagnostic);
  return *ev.selected;
}

VBoundsReport check_V_bounds(const LatticeSystem& sys, const DualSde& sde, int samples,
                             std::uint64_t seed) {
  const Density density(sys, sde);
  const int start = sde.start_time;
  VBoundsReport rep;
  rep.exact = samples == 0;
  rep.min_v = std::numeric_limits<double>::infinity();

  for (int k = start; k < sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) rep.l = std::max(rep.l, sde.beta[k].row(r).norm());
  }
  rep.positivity_condition = check_positivity_condition(sys, rep.l).all_pass;

  double total_mass = 0.0;
  auto account = [&](const std::vector<int>& path, double weight, double& acc) {
    const auto v = density.densities(path);
    double top = 0.0;
    for (double x : v) {
      top = std::max(top, x * x);
      rep.min_v = std::min(rep.min_v, x);
    }
    acc += weight * top;
  };

  for (int r : sys.reachable_at(start)) {
    double acc = 0.0;
    if (samples == 0) {
      if (!enumeration_affordable(sys, start)) {
        throw SolveError("check_V_bounds: exhaustive enumeration too large; pass samples");
      }
      for_each_path(sys, start, r, [&](const std::vector<int>& path, double prob) {
        account(path, prob, acc);
      });
    } else {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      std::vector<int> path(sys.horizon() - start + 1);
      for (int p = 0; p < samples; ++p) {
        path[0] = r;
        for (std::size_t j = 1; j < path.size(); ++j) path[j] = sample_successor(sys, path[j - 1], rng);
        account(path, 1.0 / samples, acc);
      }
    }
    const double w = sys.distribution_at(start)(r);
    rep.mean_max_v2 += w * acc;
    total_mass += w;
    rep.worst_max_v2 = std::max(rep.worst_max_v2, acc);
  }
  if (total_mass > 0.0) rep.mean_max_v2 /= total_mass;

  if (rep.positivity_condition && rep.min_v < -1e-10) {
    std::ostringstream os;
    os << "check_V_bounds: density reaches " << rep.min_v
       << " although the positivity inequality holds (convention "
       << to_string(sde.convention) << ")";
    log::warn(os.str());
    throw PositivityViolation(os.str(), rep);
  }
  return rep;
}

}  // namespace smbsde
