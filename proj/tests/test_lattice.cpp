#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "smbsde/errors.hpp"
#include "smbsde/lattice.hpp"
#include "support/random_models.hpp"

using namespace smbsde;
using testing_support::deterministic_model;
using testing_support::geometric_model;
using testing_support::random_model;
using testing_support::unif;

TEST(BuildLattice, GeometricTwoStateCardinality) {
  const auto sys = build_lattice(geometric_model(2, 2, 0.5));
  EXPECT_EQ(sys.dim(), 6);
  for (int k = 0; k <= 2; ++k) {
    EXPECT_LE(static_cast<int>(sys.reachable_at(k).size()), (k + 1) * 2);
  }
  for (int k = 0; k < 2; ++k) {
    for (int r : sys.reachable_at(k)) EXPECT_NEAR(sys.transition().col(r).sum(), 1.0, 1e-12);
  }
}

TEST(BuildLattice, IndexRoundTrip) {
  const auto sys = build_lattice(geometric_model(3, 4, 0.3));
  for (int f = 0; f < sys.dim(); ++f) {
    const auto lab = sys.label(f);
    EXPECT_EQ(sys.index(lab.state, lab.sojourn), f);
    EXPECT_EQ(f, (lab.sojourn - 1) * 3 + lab.state);
  }
}

TEST(BuildLattice, DeterministicFlow) {
  const auto sys = build_lattice(deterministic_model(4, 2));
  const Matrix& c = sys.transition();
  for (int l = 0; l < 2; ++l) {
    EXPECT_EQ(c(sys.index(l, 2), sys.index(l, 1)), 1.0);
    EXPECT_EQ(c(sys.index(1 - l, 1), sys.index(l, 2)), 1.0);
  }
  for (int k = 0; k <= 4; ++k) EXPECT_EQ(sys.reachable_at(k).size(), 1u);
}

TEST(BuildLattice, StructureOnRandomModels) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_model(rng, 4, 7);
    const auto sys = build_lattice(m);
    const int n = m.n_states;
    const Matrix& c = sys.transition();
    for (int from = 0; from < sys.dim(); ++from) {
      for (int to = 0; to < sys.dim(); ++to) {
        if (c(to, from) == 0.0) continue;
        const auto a = sys.label(from);
        const auto b = sys.label(to);
        // A jump resets the clock; staying advances it by one.
        if (a.state != b.state) {
          EXPECT_EQ(b.sojourn, 1);
        } else {
          EXPECT_EQ(b.sojourn, a.sojourn + 1);
        }
      }
    }
    for (int k = 0; k <= m.horizon; ++k) {
      EXPECT_LE(static_cast<int>(sys.reachable_at(k).size()), (k + 1) * n);
      EXPECT_NEAR(sys.distribution_at(k).sum(), 1.0, 1e-12);
      if (k < m.horizon) {
        for (int r : sys.reachable_at(k)) {
          EXPECT_TRUE(sys.is_live(r));
          EXPECT_NEAR(c.col(r).sum(), 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(StepDistribution, GeometricHalf) {
  const auto sys = build_lattice(geometric_model(2, 3, 0.5));
  const Vector p = step_distribution(sys, sys.index(0, 1));
  EXPECT_NEAR(p(sys.index(0, 2)), 0.5, 1e-15);
  EXPECT_NEAR(p(sys.index(1, 1)), 0.5, 1e-15);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(StepDistribution, UnreachableRejected) {
  const auto sys = build_lattice(deterministic_model(3, 2));
  EXPECT_THROW(step_distribution(sys, sys.index(0, 3)), InputError);
  EXPECT_THROW(step_distribution(sys, -1), InputError);
}

TEST(StepDistribution, MatchesSimulatedFrequencies) {
  std::mt19937_64 rng(22);
  const auto m = random_model(rng, 3, 3, 3, 3);
  const auto sys = build_lattice(m);
  const auto sq = sojourn_quantities(m);
  const int paths = 40000;
  // Law of (X_2, h_2) given the realised (X_1, h_1), tallied per source state.
  Matrix counts = Matrix::Zero(sys.dim(), sys.dim());
  Vector visits = Vector::Zero(sys.dim());
  for (int p = 0; p < paths; ++p) {
    const auto path = simulate(m, sq, 2, rng);
    const int a = sys.index(path.states[1], path.sojourns[1]);
    const int b = sys.index(path.states[2], path.sojourns[2]);
    counts(b, a) += 1.0;
    visits(a) += 1.0;
  }
  for (int a : sys.reachable_at(1)) {
    if (visits(a) < 500) continue;
    const Vector p = step_distribution(sys, a);
    for (int b = 0; b < sys.dim(); ++b) {
      const double sigma = std::sqrt(p(b) * (1 - p(b)) / visits(a));
      EXPECT_NEAR(counts(b, a) / visits(a), p(b), 5 * sigma + 1e-12);
    }
  }
}

TEST(NoiseGeometry, DeterministicHasNoNoise) {
  const auto sys = build_lattice(deterministic_model(3, 2));
  for (int k = 0; k < 3; ++k) {
    for (int r : sys.reachable_at(k)) {
      EXPECT_EQ(cov_matrix(sys, r).norm(), 0.0);
      EXPECT_EQ(sys.psi_pinv(r).norm(), 0.0);
    }
  }
}

TEST(NoiseGeometry, CovarianceMatchesEnumeration) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sys = build_lattice(random_model(rng, 4, 5));
    for (int k = 0; k < sys.horizon(); ++k) {
      for (int r : sys.reachable_at(k)) {
        const Matrix cov = cov_matrix(sys, r);
        Matrix oracle = Matrix::Zero(sys.dim(), sys.dim());
        for (int s : sys.successors(r)) {
          const Vector inc = lattice_increment(sys, r, s);
          oracle += sys.transition()(s, r) * inc * inc.transpose();
        }
        EXPECT_LE((cov - oracle).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((cov * Vector::Ones(sys.dim())).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((cov - cov.transpose()).norm(), 0.0);
        EXPECT_GE(numkit::symmetric_eigenvalues(cov).minCoeff(), -1e-12);
        const Matrix psi = psi_matrix(sys, r);
        EXPECT_LE((psi - psi.transpose()).norm(), 1e-15);
      }
    }
  }
}

TEST(NoiseGeometry, PrintedFormDiffersFromCovariance) {
  const auto sys = build_lattice(geometric_model(2, 2, 0.5));
  const int r = sys.index(0, 1);
  const Matrix psi = psi_matrix(sys, r);
  // diag(Ce) - e(Ce)' - (Ce)e' has -2 (Ce)_e on the diagonal entry of e.
  EXPECT_NEAR(psi(r, r), 0.0, 1e-15);
  EXPECT_NEAR(psi(sys.index(0, 2), r), -0.5, 1e-15);
  EXPECT_GT((psi - cov_matrix(sys, r)).norm(), 0.1);
  EXPECT_LT(numkit::symmetric_eigenvalues(psi).minCoeff(), -1e-3);
}

TEST(NoiseGeometry, DeterministicPrintedFormIsNonzero) {
  const auto sys = build_lattice(deterministic_model(3, 2));
  const int r = sys.index(0, 1);
  EXPECT_GT(psi_matrix(sys, r).norm(), 0.5);
}

TEST(Seminorm, ConstantAndZeroRows) {
  const auto sys = build_lattice(geometric_model(3, 3, 0.4));
  std::vector<ZField> z(3, ZField::Zero(sys.dim(), sys.dim()));
  EXPECT_EQ(seminorm_M(sys, z, 2), 0.0);
  for (auto& f : z) f.setConstant(3.7);
  EXPECT_LE(seminorm_M(sys, z, 2), 1e-7);
  EXPECT_THROW(seminorm_M(sys, z, 3), InputError);
}

TEST(Seminorm, MatchesMonteCarlo) {
  std::mt19937_64 rng(24);
  const auto m = random_model(rng, 3, 4, 2, 4);
  const auto sys = build_lattice(m);
  const auto sq = sojourn_quantities(m);
  const int t = sys.horizon();
  std::vector<ZField> z(t, ZField::Zero(sys.dim(), sys.dim()));
  for (auto& f : z) {
    for (int i = 0; i < f.size(); ++i) f.data()[i] = 2.0 * unif(rng) - 1.0;
  }
  const double exact = seminorm_M_squared(sys, z, t - 1);
  const int paths = 40000;
  double sum = 0.0, sum2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    const auto path = simulate(m, sq, t, rng);
    double x = 0.0;
    for (int u = 0; u < t; ++u) {
      const int a = sys.index(path.states[u], path.sojourns[u]);
      const int b = sys.index(path.states[u + 1], path.sojourns[u + 1]);
      const double v = z[u].row(a).dot(lattice_increment(sys, a, b));
      x += v * v;
    }
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / paths;
  const double se = std::sqrt((sum2 / paths - mean * mean) / paths);
  EXPECT_NEAR(mean, exact, 4 * se + 1e-12);
}

TEST(ZEquivalence, ConstantShiftAndOffSupport) {
  const auto sys = build_lattice(geometric_model(2, 3, 0.5));
  const int r = sys.index(0, 1);
  RowVector z1(sys.dim());
  z1 << 0.3, -1.2, 0.8, 2.0, -0.1, 0.4;
  RowVector z2 = z1.array() + 5.0;
  EXPECT_TRUE(z_equivalent(sys, r, z1, z2));
  RowVector z3 = z1;
  z3(sys.index(1, 3)) += 7.0;  // not a successor of (1,1)
  EXPECT_TRUE(z_equivalent(sys, r, z1, z3));
  RowVector z4 = z1;
  z4(sys.index(0, 2)) += 1.0;
  EXPECT_FALSE(z_equivalent(sys, r, z1, z4));
}

TEST(ZEquivalence, CanonicalFormProperties) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sys = build_lattice(random_model(rng, 4, 5));
    for (int k = 0; k < sys.horizon(); ++k) {
      for (int r : sys.reachable_at(k)) {
        const RowVector z = random_row(sys.dim(), 3.0, rng);
        const RowVector c = z_canonical(sys, r, z);
        EXPECT_TRUE(z_equivalent(sys, r, z, c));
        EXPECT_LE((z_canonical(sys, r, c) - c).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_NEAR(c.dot(sys.column(r)), 0.0, 1e-14);
        for (int s = 0; s < sys.dim(); ++s) {
          if (!(sys.transition()(s, r) > 0.0)) EXPECT_EQ(c(s), 0.0);
        }
        // Pathwise products agree on every realisable transition.
        for (int s : sys.successors(r)) {
          const Vector inc = lattice_increment(sys, r, s);
          EXPECT_NEAR(z.dot(inc), c.dot(inc), 1e-13);
        }
      }
    }
  }
}

TEST(Lambda, DeterministicIsZero) {
  const auto lam = lambda_constants(build_lattice(deterministic_model(4, 2)));
  EXPECT_EQ(lam.global, 0.0);
  for (double x : lam.per_time) EXPECT_EQ(x, 0.0);
}

TEST(Lambda, BoundsProjectedVectors) {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = build_lattice(random_model(rng, 3, 4, 2));
    const auto lam = lambda_constants(sys);
    double top = 0.0;
    for (double x : lam.per_time) top = std::max(top, x);
    EXPECT_EQ(top, lam.global);
    for (int k = 0; k < sys.horizon(); ++k) {
      for (int r : sys.reachable_at(k)) {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
          Vector b(sys.dim());
          for (int j = 0; j < b.size(); ++j) b(j) = 2.0 * unif(rng) - 1.0;
          const double lhs = (sys.projector(r) * b).norm();
          const double rhs = lam.per_time[k] * seminorm_X(sys, r, b);
          EXPECT_LE(lhs, rhs + 1e-9);
          if (rhs > 0) worst = std::max(worst, lhs / rhs);
        }
        EXPECT_LE(worst, 1.0 + 1e-9);
      }
    }
  }
}

TEST(Lambda, AttainedOnTopEigenvector) {
  // For the covariance form lambda = 1 / sqrt(smallest positive eigenvalue).
  const auto sys = build_lattice(geometric_model(2, 2, 0.5));
  const int r = sys.index(0, 1);
  const Vector ev = numkit::symmetric_eigenvalues(sys.covariance(r));
  double smallest = 1e300;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) > 1e-12) smallest = std::min(smallest, ev(i));
  }
  EXPECT_NEAR(lambda_at(sys, r), 1.0 / std::sqrt(smallest), 1e-10);
}

TEST(Lambda, PrintedFormFlagsIndefinite) {
  LatticeOptions opts;
  opts.psi_form = PsiForm::printed;
  const auto sys = build_lattice(geometric_model(2, 2, 0.5), opts);
  const auto lam = lambda_constants(sys);
  EXPECT_FALSE(lam.indefinite_states.empty());
  EXPECT_GT(lam.global, 0.0);
}

TEST(ForEachPath, WeightsSumToOne) {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sys = build_lattice(random_model(rng, 3, 5));
    for (int k = 0; k <= sys.horizon(); ++k) {
      for (int r : sys.reachable_at(k)) {
        double total = 0.0;
        for_each_path(sys, k, r, [&](const std::vector<int>& path, double p) {
          EXPECT_EQ(static_cast<int>(path.size()), sys.horizon() - k + 1);
          total += p;
        });
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
}
