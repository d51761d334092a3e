#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "spbc/boundary.hpp"
#include "spbc/fixtures.hpp"
#include "spbc/integrator.hpp"
#include "spbc/reference.hpp"
#include "support.hpp"

using namespace spbc;
using spbc::testing::max_abs;
using spbc::testing::random_state;

namespace {

constexpr double kPi = std::numbers::pi;

Configuration square() {
  Configuration q;
  q << 1, 0, 0, 1, -1, 0, 0, -1;
  return q;
}

double brute_potential(const Configuration& q, const MassModel& m) {
  double u = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i < j) u += m.m(i) * m.m(j) / std::hypot(q(i, 0) - q(j, 0), q(i, 1) - q(j, 1));
  return u;
}

}  // namespace

TEST(MassModel, SymmetricMassesAndRatio) {
  const MassModel m = MassModel::from_ratio(0.5);
  EXPECT_EQ(m.m(0), m.m(2));
  EXPECT_EQ(m.m(1), m.m(3));
  EXPECT_DOUBLE_EQ(m.mu(), 0.5);
  EXPECT_DOUBLE_EQ(m.total(), 3.0);
  EXPECT_THROW(MassModel(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(MassModel(1.0, -2.0), std::invalid_argument);
}

TEST(Potential, UnitSquare) {
  EXPECT_NEAR(potential_energy(square(), MassModel(1, 1)), 2.0 * std::sqrt(2.0) + 1.0, 1e-14);
}

TEST(Potential, HomogeneityOfDegreeMinusOne) {
  std::mt19937 rng(11);
  const MassModel m = MassModel::from_ratio(1.7);
  for (int k = 0; k < 20; ++k) {
    const Configuration q = random_state(rng, m).q;
    const double u = potential_energy(q, m);
    for (double s : {0.5, 2.0, 10.0}) EXPECT_NEAR(potential_energy(s * q, m) * s / u, 1.0, 1e-12);
  }
}

TEST(Potential, StartConfigurationMatchesPairSum) {
  const MassModel m(1, 1);
  const Configuration q = build_qstart(reference_test_params()[0].a, 4 * kPi / 5, m);
  EXPECT_NEAR(potential_energy(q, m), brute_potential(q, m), 1e-13);
}

TEST(Potential, CollisionFloor) {
  Configuration q = square();
  q.row(1) = q.row(0);
  EXPECT_THROW(potential_energy(q, MassModel(1, 1)), CollisionError);
  EXPECT_THROW(accelerations(q, MassModel(1, 1)), CollisionError);
}

TEST(Kinetic, SimpleValues) {
  PhaseState s;
  s.q = square();
  EXPECT_EQ(kinetic_energy(s, MassModel(1, 1)), 0.0);
  s.v.col(0).setOnes();
  EXPECT_DOUBLE_EQ(kinetic_energy(s, MassModel(1, 1)), 2.0);
  EXPECT_NEAR(total_energy(s, MassModel(1, 1)), 2.0 - potential_energy(s.q, MassModel(1, 1)), 1e-15);
}

TEST(Kinetic, FixtureDirectSum) {
  const Fixture& f = fixture("1");
  double k = 0.0;
  for (int i = 0; i < 4; ++i) k += 0.5 * f.masses().m(i) * f.state.v.row(i).squaredNorm();
  EXPECT_NEAR(kinetic_energy(f.state, f.masses()), k, 1e-15);
}

TEST(AngularMomentum, ZeroAndRadial) {
  PhaseState s;
  s.q = square();
  EXPECT_EQ(angular_momentum(s, MassModel(1, 2)), 0.0);
  s.v = 0.3 * s.q;
  EXPECT_NEAR(angular_momentum(s, MassModel(1, 2)), 0.0, 1e-15);
}

TEST(Accelerations, RhombusCentralForce) {
  const Configuration a = accelerations(square(), MassModel(1, 1));
  const double lambda = 1.0 / std::sqrt(2.0) + 0.25;
  EXPECT_NEAR(a(0, 0), -lambda, 1e-14);
  EXPECT_NEAR(a(0, 1), 0.0, 1e-14);
}

TEST(Accelerations, ThirdLawAndEquivariance) {
  std::mt19937 rng(3);
  const MassModel m = MassModel::from_ratio(2.3);
  for (int k = 0; k < 50; ++k) {
    const Configuration q = random_state(rng, m).q;
    const Configuration a = accelerations(q, m);
    Vec2 f = Vec2::Zero();
    for (int i = 0; i < 4; ++i) f += m.m(i) * a.row(i).transpose();
    EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-12);

    const double phi = 0.37 * k;
    const Eigen::Matrix2d R = rotation_matrix(phi);
    EXPECT_LT(max_abs(accelerations(q * R, m) - a * R), 1e-12);

    Eigen::Matrix2d B;
    B << -1, 0, 0, 1;
    EXPECT_LT(max_abs(accelerations(q * B, m) - a * B), 1e-12);
  }
}

TEST(Accelerations, GradientOfPotential) {
  std::mt19937 rng(5);
  const MassModel m = MassModel::from_ratio(0.7);
  const Configuration q = random_state(rng, m).q;
  const Configuration a = accelerations(q, m);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i)
    for (int c = 0; c < 2; ++c) {
      Configuration qp = q, qm = q;
      qp(i, c) += h;
      qm(i, c) -= h;
      const double dU = (potential_energy(qp, m) - potential_energy(qm, m)) / (2 * h);
      EXPECT_NEAR(m.m(i) * a(i, c), dU, 1e-7);
    }
}

TEST(Integrator, ZeroLengthKeepsInitialState) {
  const Fixture& f = fixture("1");
  const Trajectory tr = integrate(f.state, 0.0, f.masses());
  ASSERT_EQ(tr.samples.size(), 1u);
  EXPECT_EQ(tr.samples[0].pack(), f.state.pack());
}

TEST(Integrator, SettingsValidation) {
  IntegratorSettings s;
  s.abs_tol = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.min_step = 1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Integrator, RelativeEquilibriumReturns) {
  for (double mu : {0.5, 1.0, 2.0}) {
    const MassModel m = MassModel::from_ratio(mu);
    const HomographicFamily h = homographic_family(4 * kPi / 5, m);
    const PhaseState s0 = h.state(0.0);
    const PhaseState s1 = propagate(s0, h.min_period, m);
    EXPECT_LT(max_abs(s1.pack() - s0.pack()), 1e-8) << "mu " << mu;
  }
}

TEST(Integrator, ConservationOverFixturePeriods) {
  for (const Fixture& f : fixtures()) {
    const MassModel m = f.masses();
    const PhaseState end = propagate(f.state, f.period, m);
    EXPECT_LT(std::abs(total_energy(end, m) - total_energy(f.state, m)), 1e-8) << f.name;
    EXPECT_LT(std::abs(angular_momentum(end, m) - angular_momentum(f.state, m)), 1e-8) << f.name;
  }
}

TEST(Integrator, EnergyAtTimeTen) {
  const Fixture& f = fixture("1");
  const PhaseState end = propagate(f.state, 10.0, f.masses());
  EXPECT_NEAR(total_energy(end, f.masses()), total_energy(f.state, f.masses()), 1e-9);
}

TEST(Integrator, DenseSamplesMatchPropagation) {
  const Fixture& f = fixture("2");
  const Trajectory tr = integrate(f.state, 2.0, f.masses(), {}, std::vector<double>{0.0, 0.5, 1.25, 2.0});
  ASSERT_EQ(tr.samples.size(), 4u);
  for (const PhaseState& s : tr.samples) {
    const PhaseState direct = propagate(f.state, s.t, f.masses());
    EXPECT_LT(max_abs(s.pack() - direct.pack()), 1e-9) << s.t;
  }
}

TEST(Integrator, StateTransitionMatchesDifferences) {
  const Fixture& f = fixture("1");
  const FlowWithSensitivity fw = propagate_with_stm(f.state, 1.0, f.masses());
  const double h = 1e-6;
  for (int k : {0, 5, 9, 14}) {
    Eigen::VectorXd yp = f.state.pack(), ym = yp;
    yp[k] += h;
    ym[k] -= h;
    const Eigen::VectorXd col = (propagate(PhaseState::unpack(yp), 1.0, f.masses()).pack() -
                                 propagate(PhaseState::unpack(ym), 1.0, f.masses()).pack()) /
                                (2 * h);
    EXPECT_LT(max_abs(col - fw.stm.col(k)), 1e-5) << k;
  }
}

TEST(Integrator, CsvHeader) {
  const Fixture& f = fixture("1");
  std::ostringstream out;
  write_trajectory_csv(out, integrate(f.state, 0.1, f.masses()));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "t,q1x,q1y,q2x,q2y,q3x,q3y,q4x,q4y,v1x,v1y,v2x,v2y,v3x,v3y,v4x,v4y");
}
