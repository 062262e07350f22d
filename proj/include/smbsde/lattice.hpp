#pragma once

#include <vector>

#include "smbsde/numkit.hpp"
#include "smbsde/smc_core.hpp"

namespace smbsde {

/// Which matrix plays the role of the noise geometry Psi_k in the driver
/// projection Psi^+ Psi, the dual SDE and the hypothesis inequalities.
///
/// `covariance` uses E[M M' | X_k] = diag(Ce) - (Ce)(Ce)'. `printed` uses
/// diag(Ce) - e(Ce)' - (Ce)e', the continuous-time shaped expression; it is
/// indefinite in general and kept for comparison only.
enum class PsiForm { covariance, printed };

struct LatticeOptions {
  PsiForm psi_form = PsiForm::covariance;
  double rank_tol = numkit::kDefaultRankTol;
};

/// Lattice coordinate (chain state, sojourn clock), state 0-based and
/// sojourn 1-based.
struct LatticeLabel {
  int state = 0;
  int sojourn = 1;
  friend bool operator==(const LatticeLabel&, const LatticeLabel&) = default;
};

/// The pair (X_k, h_k) as a Markov chain on D = (T+1)N unit vectors, with its
/// transition matrix C, reachable sets and per-state noise geometry.
///
/// A flat index is "live" when its C column is a full probability vector and
/// the state is reachable at some time 0..T. Noise geometry exists only for
/// live states.
class LatticeSystem {
 public:
  const SemiMarkovModel& model() const { return model_; }
  const SojournQuantities& sojourn() const { return sojourn_; }
  const LatticeOptions& options() const { return options_; }

  int n_states() const { return model_.n_states; }
  int horizon() const { return model_.horizon; }
  int dim() const { return dim_; }

  int index(int state, int sojourn) const { return (sojourn - 1) * n_states() + state; }
  LatticeLabel label(int flat) const {
    return {flat % n_states(), flat / n_states() + 1};
  }

  const Matrix& transition() const { return c_; }
  const Vector& distribution_at(int k) const { return distribution_[k]; }
  const std::vector<int>& reachable_at(int k) const { return reachable_[k]; }
  bool is_reachable(int k, int flat) const { return distribution_[k](flat) > 0.0; }
  bool is_live(int flat) const { return live_[flat]; }
  const std::vector<int>& successors(int flat) const { return successors_[flat]; }

  /// Ce for a live state.
  Vector column(int flat) const { return c_.col(flat); }

  const Matrix& psi(int flat) const { return psi_[flat]; }
  const Matrix& psi_pinv(int flat) const { return psi_pinv_[flat]; }
  /// Psi^+ Psi: orthogonal projector onto range(Psi) for symmetric Psi.
  const Matrix& projector(int flat) const { return projector_[flat]; }
  const Matrix& covariance(int flat) const { return cov_[flat]; }

 private:
  friend LatticeSystem build_lattice(const SemiMarkovModel&, LatticeOptions);

  SemiMarkovModel model_;
  SojournQuantities sojourn_;
  LatticeOptions options_;
  int dim_ = 0;
  Matrix c_;
  std::vector<Vector> distribution_;
  std::vector<std::vector<int>> reachable_;
  std::vector<bool> live_;
  std::vector<std::vector<int>> successors_;
  std::vector<Matrix> psi_;
  std::vector<Matrix> psi_pinv_;
  std::vector<Matrix> projector_;
  std::vector<Matrix> cov_;
};

LatticeSystem build_lattice(const SemiMarkovModel& model, LatticeOptions options = {});

/// Column Ce of a live state.
Vector step_distribution(const LatticeSystem& sys, int flat);

/// diag(Ce) - diag(e)C' - C diag(e), evaluated literally.
Matrix psi_matrix(const LatticeSystem& sys, int flat);

/// Conditional covariance diag(Ce) - (Ce)(Ce)' of the next increment.
Matrix cov_matrix(const LatticeSystem& sys, int flat);

/// Martingale increment e_next - Ce for the transition flat -> next.
Vector lattice_increment(const LatticeSystem& sys, int flat, int next);

/// Seminorm ||B||_{X_k} = sqrt(B' Psi B) at a live state.
double seminorm_X(const LatticeSystem& sys, int flat, const Vector& b);

/// Integrand field at one time: row r is Z evaluated at lattice state r.
/// Rows of states that are not reachable at that time are ignored.
using ZField = Matrix;

/// Squared seminorm sum_{u<=up_to} E[Z_u Cov_u Z_u'] over the reachable law.
double seminorm_M_squared(const LatticeSystem& sys, const std::vector<ZField>& z,
                          int up_to);
double seminorm_M(const LatticeSystem& sys, const std::vector<ZField>& z, int up_to);

/// Z1 M = Z2 M on every realisable transition out of `flat`.
bool z_equivalent(const LatticeSystem& sys, int flat, const RowVector& z1,
                  const RowVector& z2, double tol = 1e-12);
/// Same check for every reachable state at `time`.
bool z_equivalent_at(const LatticeSystem& sys, int time, const ZField& z1,
                     const ZField& z2, double tol = 1e-12);

/// Representative that is zero off the successor support and has zero
/// probability-weighted mean on it.
RowVector z_canonical(const LatticeSystem& sys, int flat, const RowVector& z);
ZField z_canonical_at(const LatticeSystem& sys, int time, const ZField& z);

struct LambdaConstants {
  std::vector<double> per_time;  // lambda_k, k = 0..T-1
  double global = 0.0;
  /// States whose Psi is indefinite; the covariance was used there instead.
  std::vector<int> indefinite_states;
};

/// Smallest lambda with |Psi^+ Psi B| <= lambda ||B||_{X_k}, per state,
/// maximised over the reachable states of each time.
double lambda_at(const LatticeSystem& sys, int flat, bool* indefinite = nullptr);
LambdaConstants lambda_constants(const LatticeSystem& sys);

/// Visits every realisable lattice path from (start_time, start) to the
/// horizon in ascending successor order. `visit(path, probability)` gets the
/// flat states at times start_time..T.
template <typename Visitor>
void for_each_path(const LatticeSystem& sys, int start_time, int start, Visitor&& visit) {
  const int steps = sys.horizon() - start_time;
  std::vector<int> path(steps + 1);
  path[0] = start;
  auto recurse = [&](auto&& self, int depth, double prob) -> void {
    if (depth == steps) {
      visit(static_cast<const std::vector<int>&>(path), prob);
      return;
    }
    const int from = path[depth];
    for (int to : sys.successors(from)) {
      path[depth + 1] = to;
      self(self, depth + 1, prob * sys.transition()(to, from));
    }
  };
  recurse(recurse, 0, 1.0);
}

}  // namespace smbsde
