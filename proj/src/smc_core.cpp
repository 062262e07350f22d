#include "smbsde/smc_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "smbsde/errors.hpp"

namespace smbsde {
namespace {

// Survival mass below this is roundoff, not a reachable sojourn.
constexpr double kSurvivalFloor = 1e-12;

bool shape_ok(const SemiMarkovModel& m, std::vector<Violation>& out) {
  const std::size_t n = m.n_states > 0 ? static_cast<std::size_t>(m.n_states) : 0;
  const std::size_t d = m.horizon > 0 ? static_cast<std::size_t>(m.durations()) : 0;
  bool ok = true;
  if (m.n_states < 1) {
    out.push_back({"n_states", {}, "must be a positive integer"});
    ok = false;
  }
  if (m.horizon < 1) {
    out.push_back({"horizon", {}, "must be a positive integer"});
    ok = false;
  }
  if (!ok) return false;
  if (m.pi.size() != n) {
    out.push_back({"pi", {}, "expected one row per state"});
    ok = false;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (m.pi[i].size() != d) {
        out.push_back({"pi", {int(i)}, "expected horizon+1 durations"});
        ok = false;
      }
    }
  }
  if (m.jump.size() != n) {
    out.push_back({"jump", {}, "expected one block per state"});
    ok = false;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (m.jump[i].size() != d) {
        out.push_back({"jump", {int(i)}, "expected horizon+1 durations"});
        ok = false;
        continue;
      }
      for (std::size_t k = 0; k < d; ++k) {
        if (m.jump[i][k].size() != n) {
          out.push_back({"jump", {int(i), int(k + 1)}, "expected one entry per target state"});
          ok = false;
        }
      }
    }
  }
  if (m.x0.size() != n) {
    out.push_back({"x0", {}, "expected one entry per state"});
    ok = false;
  }
  return ok;
}

bool is_probability(double v) {
  return std::isfinite(v) && v >= -kProbabilityTol && v <= 1.0 + kProbabilityTol;
}

}  // namespace

std::vector<Violation> validate_model(const SemiMarkovModel& model) {
  std::vector<Violation> out;
  if (!shape_ok(model, out)) return out;

  const int n = model.n_states;
  const int d = model.durations();
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int m = 1; m <= d; ++m) {
      const double p = model.sojourn_prob(i, m);
      if (!is_probability(p)) {
        out.push_back({"pi", {i, m}, "sojourn probability outside [0,1]"});
      }
      total += p;
    }
    if (total > 1.0 + kProbabilityTol) {
      out.push_back({"pi", {i}, "sojourn probabilities sum above 1"});
    }
    for (int m = 1; m <= d; ++m) {
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        const double q = model.jump_prob(i, m, j);
        if (!is_probability(q)) {
          out.push_back({"jump", {i, m, j}, "jump probability outside [0,1]"});
        }
        row += q;
      }
      if (model.jump_prob(i, m, i) > kProbabilityTol) {
        out.push_back({"jump", {i, m, i}, "self-jump probability nonzero"});
      }
      if (model.sojourn_prob(i, m) > 0.0 && std::abs(row - 1.0) > kProbabilityTol) {
        out.push_back({"jump", {i, m}, "jump row not stochastic"});
      }
    }
  }

  double x0_total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!is_probability(model.x0[i])) {
      out.push_back({"x0", {i}, "initial probability outside [0,1]"});
    }
    x0_total += model.x0[i];
  }
  if (std::abs(x0_total - 1.0) > kProbabilityTol) {
    out.push_back({"x0", {}, "initial distribution does not sum to 1"});
  }
  return out;
}

void require_valid(const SemiMarkovModel& model) {
  const auto violations = validate_model(model);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid semi-Markov model:";
  for (const auto& v : violations) {
    os << "\n  " << v.field;
    for (int idx : v.indices) os << '[' << idx << ']';
    os << ": " << v.message;
  }
  throw InputError(os.str());
}

SojournQuantities sojourn_quantities(const SemiMarkovModel& model) {
  require_valid(model);
  const int n = model.n_states;
  const int d = model.durations();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  SojournQuantities sq;
  sq.cdf.assign(n, std::vector<double>(d, 0.0));
  sq.survival.assign(n, std::vector<double>(d, 0.0));
  sq.hazard.assign(n, std::vector<double>(d, nan));
  sq.reachable.assign(n, std::vector<bool>(d, false));

  for (int i = 0; i < n; ++i) {
    double cumulative = 0.0;
    for (int m = 1; m <= d; ++m) {
      const double prev_survival = sq.survival_at(i, m - 1);
      const double p = model.sojourn_prob(i, m);
      if (p > prev_survival + kProbabilityTol) {
        std::ostringstream os;
        os << "pi[" << i << "][" << m << "] = " << p
           << " exceeds remaining survival mass " << prev_survival;
        throw InputError(os.str());
      }
      cumulative += p;
      double survival = 1.0 - cumulative;
      if (survival < kSurvivalFloor) survival = 0.0;
      sq.cdf[i][m - 1] = std::min(cumulative, 1.0);
      sq.survival[i][m - 1] = survival;
      if (prev_survival > 0.0) {
        sq.reachable[i][m - 1] = true;
        // Exhausted survival means a certain jump; the ratio may round below 1.
        sq.hazard[i][m - 1] = survival == 0.0 ? 1.0 : std::clamp(p / prev_survival, 0.0, 1.0);
      }
    }
  }
  return sq;
}

Matrix build_A(const SemiMarkovModel& model, int m) {
  return build_A(model, sojourn_quantities(model), m);
}

Matrix build_A(const SemiMarkovModel& model, const SojournQuantities& sq, int m) {
  if (m < 1 || m > model.durations()) {
    throw InputError("build_A: duration outside 1..horizon+1");
  }
  const int n = model.n_states;
  Matrix a = Matrix::Zero(n, n);
  bool any = false;
  for (int i = 0; i < n; ++i) {
    if (!sq.reachable_at(i, m)) continue;
    any = true;
    const double hazard = sq.hazard_at(i, m);
    for (int j = 0; j < n; ++j) {
      a(j, i) = (j == i) ? 1.0 - hazard : model.jump_prob(i, m, j) * hazard;
    }
  }
  if (!any) {
    throw InputError("build_A: duration not reachable in any state");
  }
  return a;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

// Inverse-CDF pick over (outcome, weight) pairs in the given order; roundoff
// at the top of the CDF falls back to the last outcome with positive weight.
template <typename Outcomes>
int pick(const Outcomes& outcomes, double u) {
  double cumulative = 0.0;
  int last = -1;
  for (const auto& [outcome, weight] : outcomes) {
    if (weight <= 0.0) continue;
    cumulative += weight;
    last = outcome;
    if (u < cumulative) return outcome;
  }
  return last;
}

}  // namespace

ChainPath simulate(const SemiMarkovModel& model, int horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return simulate(model, sojourn_quantities(model), horizon, rng);
}

ChainPath simulate(const SemiMarkovModel& model, const SojournQuantities& sq,
                   int horizon, std::mt19937_64& rng) {
  if (horizon < 0 || horizon > model.horizon) {
    throw InputError("simulate: horizon must lie in 0..model horizon");
  }
  const int n = model.n_states;
  std::vector<std::pair<int, double>> outcomes;
  outcomes.reserve(n + 1);

  ChainPath path;
  path.states.reserve(horizon + 1);
  path.sojourns.reserve(horizon + 1);

  for (int i = 0; i < n; ++i) outcomes.emplace_back(i, model.x0[i]);
  int state = pick(outcomes, uniform01(rng));
  if (state < 0) throw SolveError("simulate: initial distribution is empty");
  int clock = 1;
  path.states.push_back(state);
  path.sojourns.push_back(clock);

  // Outcome n means "stay"; it is ordered after every jump target.
  for (int k = 0; k < horizon; ++k) {
    if (!sq.reachable_at(state, clock)) {
      throw SolveError("simulate: reached a (state, sojourn) pair with no continuation");
    }
    const double hazard = sq.hazard_at(state, clock);
    outcomes.clear();
    for (int j = 0; j < n; ++j) {
      if (j != state) outcomes.emplace_back(j, model.jump_prob(state, clock, j) * hazard);
    }
    outcomes.emplace_back(n, 1.0 - hazard);
    const int next = pick(outcomes, uniform01(rng));
    if (next < 0) {
      throw SolveError("simulate: all-zero transition column");
    }
    if (next == n) {
      ++clock;
    } else {
      state = next;
      clock = 1;
      path.jump_times.push_back(k + 1);
    }
    path.states.push_back(state);
    path.sojourns.push_back(clock);
  }
  return path;
}

Vector martingale_increment(const SemiMarkovModel& model, int x_k, int h_k,
                            int x_next) {
  const auto sq = sojourn_quantities(model);
  if (x_k < 0 || x_k >= model.n_states || x_next < 0 || x_next >= model.n_states) {
    throw InputError("martingale_increment: state index out of range");
  }
  if (h_k < 1 || h_k > model.durations() || !sq.reachable_at(x_k, h_k)) {
    throw InputError("martingale_increment: (state, sojourn) not reachable");
  }
  const Matrix a = build_A(model, sq, h_k);
  Vector m = -a.col(x_k);
  m(x_next) += 1.0;
  return m;
}

}  // namespace smbsde
