#include "smbsde/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "smbsde/errors.hpp"

namespace smbsde {

LatticeSystem build_lattice(const SemiMarkovModel& model, LatticeOptions options) {
  LatticeSystem sys;
  sys.model_ = model;
  sys.sojourn_ = sojourn_quantities(model);  // validates
  sys.options_ = options;

  const int n = model.n_states;
  const int t = model.horizon;
  const int dim = (t + 1) * n;
  sys.dim_ = dim;

  // Block row 1 holds Pi(1..T+1); block (h+1, h) holds D(h). The stay entry of
  // the last block column falls outside the finite horizon.
  sys.c_ = Matrix::Zero(dim, dim);
  for (int h = 1; h <= t + 1; ++h) {
    for (int l = 0; l < n; ++l) {
      if (!sys.sojourn_.reachable_at(l, h)) continue;
      const int from = sys.index(l, h);
      const double hazard = sys.sojourn_.hazard_at(l, h);
      for (int j = 0; j < n; ++j) {
        if (j != l) sys.c_(sys.index(j, 1), from) = model.jump_prob(l, h, j) * hazard;
      }
      if (h <= t) sys.c_(sys.index(l, h + 1), from) = 1.0 - hazard;
    }
  }

  sys.distribution_.assign(t + 1, Vector::Zero(dim));
  for (int l = 0; l < n; ++l) sys.distribution_[0](sys.index(l, 1)) = model.x0[l];
  for (int k = 0; k < t; ++k) sys.distribution_[k + 1] = sys.c_ * sys.distribution_[k];

  sys.reachable_.assign(t + 1, {});
  sys.live_.assign(dim, false);
  for (int k = 0; k <= t; ++k) {
    for (int f = 0; f < dim; ++f) {
      if (sys.distribution_[k](f) > 0.0) {
        sys.reachable_[k].push_back(f);
        const LatticeLabel lab = sys.label(f);
        if (lab.sojourn <= t) sys.live_[f] = true;
      }
    }
    if (sys.reachable_[k].empty()) {
      throw InputError("build_lattice: empty reachable set at time " + std::to_string(k));
    }
  }

  sys.successors_.assign(dim, {});
  sys.psi_.assign(dim, Matrix());
  sys.psi_pinv_.assign(dim, Matrix());
  sys.projector_.assign(dim, Matrix());
  sys.cov_.assign(dim, Matrix());
  for (int f = 0; f < dim; ++f) {
    if (!sys.live_[f]) continue;
    for (int s = 0; s < dim; ++s) {
      if (sys.c_(s, f) > 0.0) sys.successors_[f].push_back(s);
    }
    sys.cov_[f] = cov_matrix(sys, f);
    sys.psi_[f] = options.psi_form == PsiForm::covariance ? sys.cov_[f] : psi_matrix(sys, f);
    sys.psi_pinv_[f] = numkit::pinv(sys.psi_[f], options.rank_tol);
    sys.projector_[f] = sys.psi_pinv_[f] * sys.psi_[f];
  }
  return sys;
}

namespace {

void require_live(const LatticeSystem& sys, int flat, const char* who) {
  if (flat < 0 || flat >= sys.dim() || !sys.is_live(flat)) {
    throw InputError(std::string(who) + ": lattice state is not reachable");
  }
}

}  // namespace

Vector step_distribution(const LatticeSystem& sys, int flat) {
  require_live(sys, flat, "step_distribution");
  return sys.column(flat);
}

Matrix psi_matrix(const LatticeSystem& sys, int flat) {
  require_live(sys, flat, "psi_matrix");
  const Matrix& c = sys.transition();
  Vector e = Vector::Zero(sys.dim());
  e(flat) = 1.0;
  const Vector ce = c * e;
  Matrix psi = Matrix(ce.asDiagonal()) - Matrix(e.asDiagonal()) * c.transpose() -
               c * Matrix(e.asDiagonal());
  return psi;
}

Matrix cov_matrix(const LatticeSystem& sys, int flat) {
  require_live(sys, flat, "cov_matrix");
  const Vector ce = sys.column(flat);
  return Matrix(ce.asDiagonal()) - ce * ce.transpose();
}

Vector lattice_increment(const LatticeSystem& sys, int flat, int next) {
  Vector m = -sys.column(flat);
  m(next) += 1.0;
  return m;
}

double seminorm_X(const LatticeSystem& sys, int flat, const Vector& b) {
  require_live(sys, flat, "seminorm_X");
  return std::sqrt(std::max(0.0, b.dot(sys.psi(flat) * b)));
}

double seminorm_M_squared(const LatticeSystem& sys, const std::vector<ZField>& z,
                          int up_to) {
  if (up_to < 0 || up_to >= sys.horizon() || static_cast<int>(z.size()) <= up_to) {
    throw InputError("seminorm_M: need one field per time 0..up_to < T");
  }
  double total = 0.0;
  for (int u = 0; u <= up_to; ++u) {
    if (z[u].rows() != sys.dim() || z[u].cols() != sys.dim()) {
      throw InputError("seminorm_M: field dimension mismatch");
    }
    for (int r : sys.reachable_at(u)) {
      const RowVector row = z[u].row(r);
      total += sys.distribution_at(u)(r) * row.dot(row * sys.covariance(r));
    }
  }
  return std::max(0.0, total);
}

double seminorm_M(const LatticeSystem& sys, const std::vector<ZField>& z, int up_to) {
  return std::sqrt(seminorm_M_squared(sys, z, up_to));
}

bool z_equivalent(const LatticeSystem& sys, int flat, const RowVector& z1,
                  const RowVector& z2, double tol) {
  require_live(sys, flat, "z_equivalent");
  const Vector ce = sys.column(flat);
  const double scale = 1.0 + z1.cwiseAbs().maxCoeff() + z2.cwiseAbs().maxCoeff();
  const RowVector d = z1 - z2;
  const double mean = d.dot(ce);
  for (int s : sys.successors(flat)) {
    if (std::abs(d(s) - mean) > tol * scale) return false;
  }
  return true;
}

bool z_equivalent_at(const LatticeSystem& sys, int time, const ZField& z1,
                     const ZField& z2, double tol) {
  for (int r : sys.reachable_at(time)) {
    if (!z_equivalent(sys, r, z1.row(r), z2.row(r), tol)) return false;
  }
  return true;
}

RowVector z_canonical(const LatticeSystem& sys, int flat, const RowVector& z) {
  require_live(sys, flat, "z_canonical");
  const Vector ce = sys.column(flat);
  const double mean = z.dot(ce);
  RowVector out = RowVector::Zero(sys.dim());
  for (int s : sys.successors(flat)) out(s) = z(s) - mean;
  return out;
}

ZField z_canonical_at(const LatticeSystem& sys, int time, const ZField& z) {
  ZField out = ZField::Zero(sys.dim(), sys.dim());
  for (int r : sys.reachable_at(time)) out.row(r) = z_canonical(sys, r, z.row(r));
  return out;
}

double lambda_at(const LatticeSystem& sys, int flat, bool* indefinite) {
  require_live(sys, flat, "lambda_at");
  const Matrix* psi = &sys.psi(flat);
  const Matrix* proj = &sys.projector(flat);

  Eigen::SelfAdjointEigenSolver<Matrix> es(*psi);
  const Vector& mu = es.eigenvalues();
  const double top = mu.cwiseAbs().maxCoeff();
  bool bad = mu.minCoeff() < -1e-10 * std::max(1.0, top);
  if (indefinite) *indefinite = bad;

  // An indefinite Psi does not induce a seminorm; measure with the covariance.
  Matrix cov_proj;
  if (bad) {
    psi = &sys.covariance(flat);
    cov_proj = numkit::pinv(*psi, sys.options().rank_tol) * (*psi);
    proj = &cov_proj;
    es.compute(*psi);
  }
  const Vector& ev = es.eigenvalues();
  const double cut = sys.options().rank_tol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  std::vector<Eigen::Index> range;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut && ev(i) > 0.0) range.push_back(i);
  }
  if (range.empty()) return 0.0;

  Matrix w(psi->rows(), static_cast<Eigen::Index>(range.size()));
  for (std::size_t c = 0; c < range.size(); ++c) {
    w.col(c) = es.eigenvectors().col(range[c]) / std::sqrt(ev(range[c]));
  }
  const Matrix gram = (*proj).transpose() * (*proj);
  const Matrix reduced = w.transpose() * gram * w;
  const double top_gen = numkit::symmetric_eigenvalues(reduced).maxCoeff();
  return std::sqrt(std::max(0.0, top_gen));
}

LambdaConstants lambda_constants(const LatticeSystem& sys) {
  LambdaConstants out;
  out.per_time.assign(sys.horizon(), 0.0);
  std::vector<double> cache(sys.dim(), -1.0);
  for (int k = 0; k < sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      if (cache[r] < 0.0) {
        bool indefinite = false;
        cache[r] = lambda_at(sys, r, &indefinite);
        if (indefinite) out.indefinite_states.push_back(r);
      }
      out.per_time[k] = std::max(out.per_time[k], cache[r]);
    }
    out.global = std::max(out.global, out.per_time[k]);
  }
  std::sort(out.indefinite_states.begin(), out.indefinite_states.end());
  return out;
}

}  // namespace smbsde
