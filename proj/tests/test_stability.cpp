#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "spbc/fixtures.hpp"
#include "spbc/stability.hpp"
#include "support.hpp"

using namespace spbc;
using spbc::testing::max_abs;
using spbc::testing::random_state;

namespace {

constexpr double kPi = std::numbers::pi;

double wrapped(double x) { return std::remainder(x, 2 * kPi); }

ReducedVector reduced_gap(const ReducedVector& a, const ReducedVector& b) {
  ReducedVector d = a - b;
  d[3] = wrapped(d[3]);
  d[4] = wrapped(d[4]);
  return d;
}

Eigen::Matrix2d rot(double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

Eigen::Matrix<double, 10, 10> synthetic(const std::array<Eigen::Matrix2d, 5>& blocks) {
  Eigen::Matrix<double, 10, 10> X = Eigen::Matrix<double, 10, 10>::Zero();
  for (int k = 0; k < 5; ++k) X.block<2, 2>(2 * k, 2 * k) = blocks[k];
  return X;
}

Eigen::Matrix2d jordan() {
  Eigen::Matrix2d j;
  j << 1, 1, 0, 1;
  return j;
}

const RefinedSeed& seed1() {
  static const RefinedSeed s = refine_fixture(fixture("1"));
  return s;
}

}  // namespace

TEST(Jacobi, RoundTrip) {
  std::mt19937 rng(31);
  std::normal_distribution<double> n(0, 1);
  for (double mu : {0.5, 1.0, 2.7}) {
    const MassModel m = MassModel::from_ratio(mu);
    for (int k = 0; k < 20; ++k) {
      PhaseState s = random_state(rng, m);
      s.q.rowwise() += Eigen::RowVector2d(n(rng), n(rng));
      s.v.rowwise() += Eigen::RowVector2d(n(rng), n(rng));
      EXPECT_LT(max_abs(from_jacobi(to_jacobi(s, m), m).pack() - s.pack()), 1e-13);
    }
  }
}

TEST(Jacobi, FormulaOracle) {
  std::mt19937 rng(32);
  const MassModel m = MassModel::from_ratio(1.6);
  const PhaseState s = random_state(rng, m);
  const JacobiState j = to_jacobi(s, m);
  const double m1 = m.m(0), m2 = m.m(1), m3 = m.m(2);
  const Vec2 q1 = s.q.row(0), q2 = s.q.row(1), q3 = s.q.row(2), q4 = s.q.row(3);
  EXPECT_LT((j.u[0] - (q2 - q1)).norm(), 1e-15);
  EXPECT_LT((j.u[1] - (q3 - (m1 * q1 + m2 * q2) / (m1 + m2))).norm(), 1e-15);
  EXPECT_LT((j.u[2] - (q4 - (m1 * q1 + m2 * q2 + m3 * q3) / (m1 + m2 + m3))).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(j.mu_chain[3], m.total());
  EXPECT_NEAR(j.M[0], m1 * m2 / (m1 + m2), 1e-15);

  // kinetic energy and angular momentum split over the Jacobi pairs
  double k = 0.0, c = 0.0;
  for (int i = 0; i < 3; ++i) {
    k += j.v[i].squaredNorm() / (2 * j.M[i]);
    c += cross(j.u[i], j.v[i]);
  }
  EXPECT_NEAR(k, kinetic_energy(s, m), 1e-13);
  EXPECT_NEAR(c, angular_momentum(s, m), 1e-13);
}

TEST(Reduced, RoundTripAndInvariants) {
  std::mt19937 rng(33);
  const MassModel m = MassModel::from_ratio(0.8);
  for (int k = 0; k < 20; ++k) {
    const PhaseState s = random_state(rng, m);
    const ReducedState r = to_reduced(s, m);
    EXPECT_NEAR(r.c, angular_momentum(s, m), 1e-13);
    EXPECT_NEAR(reduced_hamiltonian(r.z, r.c, m), total_energy(s, m), 1e-12);
    EXPECT_LT(max_abs(from_reduced(r, m).pack() - s.pack()), 1e-12);

    PhaseState turned = s;
    turned.q = s.q * rotation_matrix(0.9);
    turned.v = s.v * rotation_matrix(0.9);
    EXPECT_LT(max_abs(reduced_gap(to_reduced(turned, m).z, r.z)), 1e-12);
  }
}

TEST(Reduced, DegenerateRadiusIsRaised) {
  PhaseState s;
  s.q << 0, 0, 0, 0, 1, 0, 0, 1;
  EXPECT_THROW(to_reduced(s, MassModel(1, 1)), DegenerateRadius);
}

TEST(Reduced, GradientMatchesDifferences) {
  std::mt19937 rng(34);
  const MassModel m = MassModel::from_ratio(1.3);
  const ReducedState r = to_reduced(random_state(rng, m), m);
  const ReducedVector g = reduced_gradient(r.z, r.c, m);
  const double h = 1e-7;
  for (int i = 0; i < 10; ++i) {
    ReducedVector zp = r.z, zm = r.z;
    zp[i] += h;
    zm[i] -= h;
    const double fd = (reduced_hamiltonian(zp, r.c, m) - reduced_hamiltonian(zm, r.c, m)) / (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << i;
  }
  const auto H = reduced_hessian(r.z, r.c, m);
  EXPECT_LT(max_abs(H - H.transpose()), 1e-14);
}

TEST(Reduced, FlowCommutesWithReduction) {
  const Fixture& f = fixture("1");
  const MassModel m = f.masses();
  const PhaseState s0 = seed1().state;
  const ReducedState r0 = to_reduced(s0, m);
  const DenseSolution flow = reduced_flow(r0, 2.0, m);
  const Trajectory tr = integrate(s0, 2.0, m, {}, [] {
    std::vector<double> t;
    for (int k = 0; k < 50; ++k) t.push_back(2.0 * k / 49);
    return t;
  }());
  for (const PhaseState& s : tr.samples) {
    const ReducedVector expect = to_reduced(s, m).z;
    const ReducedVector got = flow(s.t);
    EXPECT_LT(max_abs(reduced_gap(got, expect)), 1e-7) << s.t;
  }
}

TEST(Monodromy, ZeroPeriodIsIdentity) {
  const Fixture& f = fixture("1");
  const MonodromyResult r = monodromy(seed1().state, 0.0, f.masses());
  EXPECT_LT(max_abs(r.X - Eigen::Matrix<double, 10, 10>::Identity()), 1e-15);
}

TEST(Monodromy, FixtureOneProperties) {
  const Fixture& f = fixture("1");
  const MassModel m = f.masses();
  const MonodromyResult r = monodromy(seed1().state, f.period, m);
  EXPECT_LT(r.closure, 1e-7);
  EXPECT_LT(r.symplectic_defect, 1e-6);
  EXPECT_FALSE(r.conditioning_warning);
  const auto J = symplectic_J10();
  EXPECT_LT(max_abs(r.X.transpose() * J * r.X - J), 1e-6);

  // the flow direction is carried onto itself
  Eigen::VectorXd y = r.z0.z, dy(10);
  reduced_field(r.z0.c, m)(0.0, y, dy);
  const ReducedVector tangent = dy;
  EXPECT_LT(max_abs(r.X * tangent - tangent), 1e-5 * std::max(1.0, max_abs(tangent)));

  const MonodromyReport v = stability_verdict(r.X);
  EXPECT_EQ(v.verdict, StabilityVerdict::LinearlyStable) << v.note;
  EXPECT_LT(v.reciprocal_defect, 1e-6);
  // the trivial pair sits in a Jordan block and splits at the square root of the error
  for (const auto& l : v.reduced_multipliers)
    if (std::abs(l - 1.0) > 1e-2) {
      EXPECT_NEAR(std::abs(l), 1.0, 1e-5);
    }
}

TEST(Verdict, Synthetic) {
  const Eigen::Matrix<double, 10, 10> I = Eigen::Matrix<double, 10, 10>::Identity();
  EXPECT_EQ(stability_verdict(I).verdict, StabilityVerdict::Indeterminate);

  const auto stable = synthetic({jordan(), rot(0.4), rot(1.1), rot(1.9), rot(2.6)});
  const MonodromyReport s = stability_verdict(stable);
  EXPECT_EQ(s.verdict, StabilityVerdict::LinearlyStable) << s.note;
  EXPECT_EQ(s.w_spectrum.size(), 5u);
  for (const auto& [value, mult] : s.w_spectrum) EXPECT_EQ(mult, 2);
  EXPECT_NEAR(s.min_gap, std::cos(0.4) - std::cos(1.1), 1e-12);

  const auto degenerate = synthetic({jordan(), rot(0.4), rot(0.4), rot(1.9), rot(2.6)});
  EXPECT_EQ(stability_verdict(degenerate).verdict, StabilityVerdict::SpectrallyStable);

  Eigen::Matrix2d hyp;
  hyp << 2, 0, 0, 0.5;
  const auto unstable = synthetic({jordan(), rot(0.4), hyp, rot(1.9), rot(2.6)});
  const MonodromyReport u = stability_verdict(unstable);
  EXPECT_EQ(u.verdict, StabilityVerdict::Unstable);
  EXPECT_LT(u.reciprocal_defect, 1e-12);

  auto singular = stable;
  singular.block<2, 2>(4, 4).setZero();
  EXPECT_THROW(stability_verdict(singular), SingularMatrix);
}

TEST(Verdict, UnitCircleMultipliersReconstructFromW) {
  const auto X = synthetic({jordan(), rot(0.4), rot(1.1), rot(1.9), rot(2.6)});
  const MonodromyReport r = stability_verdict(X);
  for (const auto& [w, mult] : r.w_spectrum) {
    (void)mult;
    if (std::abs(w - 1.0) < 1e-9) continue;
    // lambda = w +- i sqrt(1 - w^2) lies on the unit circle
    const std::complex<double> l(w, std::sqrt(1 - w * w));
    bool found = false;
    for (const auto& x : r.reduced_multipliers) found = found || std::abs(x - l) < 1e-9 || std::abs(x - std::conj(l)) < 1e-9;
    EXPECT_TRUE(found) << w;
  }
}

TEST(StabilitySettings, Validation) {
  StabilitySettings s;
  EXPECT_NO_THROW(s.validate());
  s.tol = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(FullCheck, FixtureOneOnUnitCircle) {
  const Fixture& f = fixture("1");
  const FullMonodromy full = full_monodromy_check(seed1().state, f.period, f.masses());
  ASSERT_EQ(full.multipliers.size(), 16u);
  EXPECT_NEAR(full.max_modulus, 1.0, 1e-4);
  EXPECT_GE(full.near_one, 6);
}
