#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "spbc/action.hpp"
#include "spbc/boundary.hpp"
#include "spbc/reference.hpp"
#include "support.hpp"

using namespace spbc;
using spbc::testing::max_abs;

namespace {

constexpr double kPi = std::numbers::pi;

const BoundaryParams& a_test() { return reference_test_params()[0].a; }

// r2/r1 by bisection on the ratio form of the two equilibrium conditions.
std::pair<double, double> rhombus_by_bisection(double omega, double m1, double m2) {
  auto lhs1 = [&](double x) { return m1 / 4.0 + 2.0 * m2 / std::pow(1.0 + x * x, 1.5); };
  auto g = [&](double x) { return lhs1(x) * x - m2 / (4.0 * x * x) - 2.0 * m1 * x / std::pow(1.0 + x * x, 1.5); };
  double lo = 1e-3, hi = 1e3;
  for (int k = 0; k < 200; ++k) {
    const double mid = std::sqrt(lo * hi);
    (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
  }
  const double x = std::sqrt(lo * hi);
  const double r1 = std::cbrt(lhs1(x) / (omega * omega));
  return {r1, x * r1};
}

}  // namespace

TEST(Omega, FromTheta) {
  EXPECT_NEAR(omega_from_theta(4 * kPi / 5), 3 * kPi / 10, 1e-15);
  EXPECT_EQ(omega_from_theta(kPi / 2), 0.0);
  EXPECT_NEAR(omega_from_theta(1.5 * kPi), 0.0, 1e-15);
  EXPECT_NEAR(omega_from_theta(1.2 * kPi, 2.0), 0.15 * kPi, 1e-15);
}

TEST(Rhombus, EqualMassClosedForm) {
  const double w = 3 * kPi / 10;
  const RhombusRadii r = solve_rhombus_radii(w, 1, 1);
  const double expect = std::cbrt((2 * std::sqrt(2.0) + 1) / (4 * w * w));
  EXPECT_NEAR(r.r1, expect, 1e-13);
  EXPECT_NEAR(r.r2, expect, 1e-13);
  EXPECT_LT(rhombus_residuals(w, 1, 1, r.r1, r.r2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rhombus, KeplerScaling) {
  const RhombusRadii a = solve_rhombus_radii(0.7, 1, 1.8);
  const RhombusRadii b = solve_rhombus_radii(5.6, 1, 1.8);
  EXPECT_NEAR(b.r1, a.r1 / 4, 1e-13);
  EXPECT_NEAR(b.r2, a.r2 / 4, 1e-13);
}

TEST(Rhombus, BisectionOracle) {
  for (double m2 : {0.1, 0.5, 2.0, 10.0}) {
    const RhombusRadii r = solve_rhombus_radii(3 * kPi / 10, 1, m2);
    const auto [r1, r2] = rhombus_by_bisection(3 * kPi / 10, 1, m2);
    EXPECT_NEAR(r.r1, r1, 1e-10) << m2;
    EXPECT_NEAR(r.r2, r2, 1e-10) << m2;
  }
}

TEST(Rhombus, ZeroOmegaIsRejected) {
  EXPECT_THROW(homographic_family(kPi / 2, MassModel(1, 1)), DegenerateOmega);
  EXPECT_THROW(homographic_action(1.5 * kPi, 1.0), DegenerateOmega);
}

TEST(HomographicAction, ReferenceValues) {
  EXPECT_NEAR(homographic_action(0.78 * kPi, 1), 5.3497, 5e-4);
  EXPECT_NEAR(homographic_action(0.77 * kPi, 1), 5.2216, 1e-3);
  EXPECT_NEAR(homographic_action(1.11 * kPi, 1), 6.6722, 1e-3);
  EXPECT_NEAR(homographic_action(1.12 * kPi, 1), 6.5576, 1e-3);
  EXPECT_NEAR(homographic_action(0.8 * kPi, 2), 10.52, 1e-2);
}

TEST(HomographicAction, EqualMassClosedForm) {
  for (double th : {0.6, 0.78, 0.8, 0.9, 1.11}) {
    const double w = omega_from_theta(th * kPi);
    const double closed = 3.0 * std::cbrt(w * w) * std::cbrt(std::pow((2 * std::sqrt(2.0) + 1) / 4, 2)) * 2;
    EXPECT_NEAR(homographic_action(th * kPi, 1), closed, 1e-12) << th;
  }
}

TEST(HomographicAction, AlternativeBranch) {
  EXPECT_NEAR(homographic_action_for_omega(0.7 * kPi, 2), 18.51, 1e-1);
}

TEST(HomographicAction, ScalingLaw) {
  EXPECT_EQ(homographic_action_scaled(0.78 * kPi, 1.0, 1.0), homographic_action(0.78 * kPi, 1.0));
  EXPECT_NEAR(homographic_action_scaled(0.78 * kPi, 0.9 / 0.78, 1.0), homographic_action(0.9 * kPi, 1.0), 1e-10);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> th(0.55, 0.95), k(0.7, 1.3), mu(0.3, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double t = th(rng) * kPi, kk = k(rng), m = mu(rng);
    if (kk * t >= kPi) continue;
    EXPECT_NEAR(homographic_action_scaled(t, kk, m), homographic_action(kk * t, m), 1e-10);
  }
}

TEST(TestPath, ReferenceValues) {
  EXPECT_NEAR(test_path_action(0.78 * kPi, 1, a_test()), 5.3444, 1e-3);
  EXPECT_NEAR(test_path_action(0.77 * kPi, 1, a_test()), 5.4085, 1e-3);
  EXPECT_NEAR(test_path_action(1.11 * kPi, 1, a_test()), 6.5124, 1e-3);
  EXPECT_NEAR(test_path_action(1.12 * kPi, 1, a_test()), 6.6465, 1e-3);
}

TEST(TestPath, DiscreteLimit) {
  const MassModel m(1, 1);
  const DiscretePath p = DiscretePath::linear(a_test(), 0.78 * kPi, m, 1.0, 4096);
  EXPECT_NEAR(discretized_action(p, m), test_path_action(0.78 * kPi, 1, a_test()), 1e-5);
}

TEST(Segment, ClosedFormAgainstQuadrature) {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(-2, 2);
  int checked = 0;
  while (checked < 40) {
    const Vec2 d0(u(rng), u(rng)), delta(u(rng), u(rng));
    // keep clear of the segment passing near the origin
    const double s = std::clamp(-d0.dot(delta) / delta.squaredNorm(), 0.0, 1.0);
    if ((d0 + s * delta).norm() < 0.05) continue;
    const double T = 0.5 + 0.05 * checked;
    EXPECT_NEAR(segment_inverse_distance_integral(d0, delta, T),
                segment_inverse_distance_quadrature(d0, delta, T), 1e-10);
    ++checked;
  }
  EXPECT_NEAR(segment_inverse_distance_integral(Vec2(2, 0), Vec2::Zero(), 3.0), 1.5, 1e-15);
}

TEST(Segment, CollisionIsRaised) {
  EXPECT_THROW(segment_inverse_distance_integral(Vec2(-1, 0), Vec2(2, 0)), SegmentCollision);
}

TEST(DiscreteAction, StationaryPathIsPotentialTimesT) {
  const MassModel m = MassModel::from_ratio(1.3);
  DiscretePath p = DiscretePath::linear(a_test(), 0.8 * kPi, m, 2.0, 16);
  for (Configuration& q : p.nodes) q = p.nodes.front();
  EXPECT_NEAR(discretized_action(p, m), 2.0 * potential_energy(p.nodes.front(), m), 1e-12);
}

TEST(DiscreteAction, GradientMatchesDifferences) {
  const MassModel m = MassModel::from_ratio(0.8);
  DiscretePath p = DiscretePath::linear(a_test(), 0.8 * kPi, m, 1.0, 12);
  std::mt19937 rng(2);
  std::normal_distribution<double> n(0, 0.05);
  for (int k = 1; k < p.N; ++k)
    for (int i = 0; i < 8; ++i) p.nodes[k](i / 2, i % 2) += n(rng);
  const ActionGradient g = action_gradient(p, m);
  const double h = 1e-6;
  for (int k : {3, 7}) {
    for (int c = 0; c < 8; ++c) {
      DiscretePath pp = p, pm = p;
      pp.nodes[k](c / 2, c % 2) += h;
      pm.nodes[k](c / 2, c % 2) -= h;
      const double fd = (discretized_action(pp, m) - discretized_action(pm, m)) / (2 * h);
      EXPECT_NEAR(g.nodes[k](c / 2, c % 2), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
  for (int j = 0; j < 6; ++j) {
    BoundaryParams ap = p.params, am = p.params;
    ap.a[j] += h;
    am.a[j] -= h;
    DiscretePath pp = p, pm = p;
    pp.set_params(ap, m);
    pm.set_params(am, m);
    const double fd = (discretized_action(pp, m) - discretized_action(pm, m)) / (2 * h);
    EXPECT_NEAR(g.params[j], fd, 1e-6 * std::max(1.0, std::abs(fd))) << j;
  }
  ActionGradient g2;
  EXPECT_DOUBLE_EQ(action_and_gradient(p, m, g2), discretized_action(p, m));
  EXPECT_LT((g2.params - g.params).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DiscreteAction, RejectsMalformedPaths) {
  DiscretePath p = DiscretePath::linear(a_test(), 0.8 * kPi, MassModel(1, 1), 1.0, 8);
  p.nodes.pop_back();
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(HomographicTrajectory, SolvesNewtonAndHitsBoundaries) {
  for (double mu : {0.5, 1.0, 2.0}) {
    const MassModel m = MassModel::from_ratio(mu);
    const double th = 4 * kPi / 5;
    const HomographicFamily h = homographic_family(th, m);
    for (double t : {0.0, 0.3, 1.0}) {
      const PhaseState s = h.state(t);
      const Configuration acc = accelerations(s.q, m);
      // centripetal acceleration of uniform rotation
      EXPECT_LT(max_abs(acc + h.omega * h.omega * s.q), 1e-10) << mu;
    }
    EXPECT_TRUE(membership_A(h.state(0).q, th, m, 1e-10).member);
    EXPECT_TRUE(membership_B(h.state(1).q, m, 1e-10).member);

    const Trajectory tr = build_homographic_trajectory(th, mu, 1.0, 2049);
    DiscretePath p = DiscretePath::linear(homographic_boundary_params(th, m), th, m, 1.0, 2048);
    for (int k = 0; k <= 2048; ++k) p.nodes[k] = tr.samples[k].q;
    EXPECT_NEAR(discretized_action(p, m), homographic_action(th, mu), 1e-3) << mu;
  }
}

TEST(RegionScan, KnownCellsAndThetaPiColumn) {
  const std::vector<BoundaryParams> a{a_test()};
  const std::vector<double> th{0.77 * kPi, 0.78 * kPi, kPi, 1.11 * kPi, 1.12 * kPi};
  const OmegaRegionScan s = scan_region(th, {1.0}, a);
  EXPECT_FALSE(s.at(0, 0));
  EXPECT_TRUE(s.at(0, 1));
  EXPECT_FALSE(s.at(0, 2));
  EXPECT_TRUE(s.at(0, 3));
  EXPECT_FALSE(s.at(0, 4));
}

TEST(RegionScan, UnionIsMonotoneInTestSet) {
  std::vector<BoundaryParams> all;
  for (const auto& e : reference_test_params()) all.push_back(e.a);
  const auto th = uniform_grid(0.6 * kPi, 1.4 * kPi, 0.02 * kPi);
  const auto mu = uniform_grid(0.2, 3.0, 0.2);
  const OmegaRegionScan one = scan_region(th, mu, {all[0]});
  const OmegaRegionScan four = scan_region(th, mu, all);
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < th.size(); ++j)
      if (one.at(i, j)) {
        EXPECT_TRUE(four.at(i, j));
      }
}

TEST(RegionScan, TransitionsInsideKnownBrackets) {
  const auto th = uniform_grid(0.6 * kPi, 1.4 * kPi, 0.005 * kPi);
  const OmegaRegionScan s = scan_region(th, {1.0}, {a_test()});
  std::vector<double> roots;
  for (const RegionTransition& t : s.transitions) roots.push_back(t.theta_root / kPi);
  ASSERT_GE(roots.size(), 2u);
  EXPECT_NEAR(roots.front(), 0.7797, 1e-3);
  EXPECT_TRUE(std::any_of(roots.begin(), roots.end(), [](double r) { return std::abs(r - 1.1165) < 1e-3; }));
}

TEST(RegionScan, EmptyInputsAreRejected) {
  EXPECT_THROW(scan_region({}, {1.0}, {a_test()}), std::invalid_argument);
  EXPECT_THROW(scan_region({1.0}, {1.0}, {}), std::invalid_argument);
  EXPECT_EQ(uniform_grid(0.0, 1.0, 0.25).size(), 5u);
}

TEST(RegionScan, CsvShape) {
  const OmegaRegionScan s = scan_region({0.78 * kPi, 0.8 * kPi}, {1.0, 2.0}, {a_test()});
  std::ostringstream out;
  write_region_csv(out, s);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
