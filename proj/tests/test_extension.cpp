#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <sstream>

#include "spbc/extension.hpp"
#include "spbc/fixtures.hpp"
#include "spbc/minimizer.hpp"
#include "spbc/shooting.hpp"
#include "support.hpp"

using namespace spbc;
using spbc::testing::max_abs;

namespace {

constexpr double kPi = std::numbers::pi;

const RefinedSeed& refined(const std::string& name) {
  static std::map<std::string, RefinedSeed> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, refine_fixture(fixture(name))).first;
  return it->second;
}

const BoundaryParams kSym(0.7, 1.2, 0.4, 0.7, 1.2, 0.4);
const BoundaryParams kAsym(0.7, 1.2, 0.4, 0.5, 1.3, 0.2);

struct Expected {
  OrbitKind kind;
  std::string label;
  double period;
  int sides;
};

// Transcribed decision tree, written independently of the library.
Expected expected_for(long P, long Q, bool unit_mu, bool same_shape) {
  if (Q % 2 == 0) return {OrbitKind::NonChoreographic, "even", 2.0 * Q, int(Q / 2)};
  if (!unit_mu) return {OrbitKind::DoubleChoreographic, "1", 4.0 * Q, int(Q)};
  if (P % 2 == 1) return {OrbitKind::DoubleChoreographic, "2", 4.0 * Q, int(Q)};
  if (!same_shape) return {OrbitKind::DoubleChoreographic, "4", 4.0 * Q, int(Q)};
  return {OrbitKind::SimpleChoreographic, ((Q - 1) / 2) % 2 == 1 ? "3A" : "3B", 4.0 * Q, int(Q)};
}

}  // namespace

TEST(Rationalize, Examples) {
  EXPECT_EQ(rationalize_theta(4 * kPi / 5, 100, 1e-12), std::make_pair(4L, 5L));
  EXPECT_FALSE(rationalize_theta(2.43, 50, 1e-9).has_value());
  EXPECT_EQ(rationalize_theta(7 * kPi / 9 + 1e-13, 20, 1e-9), std::make_pair(7L, 9L));
  EXPECT_EQ(rationalize_theta(12 * kPi / 11, 20, 1e-12), std::make_pair(12L, 11L));
}

TEST(Classify, ExhaustiveTruthTable) {
  int checked = 0;
  for (long Q = 1; Q <= 25; ++Q)
    for (long P = 1; P <= 24; ++P) {
      if (std::gcd(P, Q) != 1 || P >= 2 * Q) continue;
      const RotationAngle a = RotationAngle::rational(P, Q);
      if (P == Q) {
        EXPECT_THROW(classify(a, 1.0, kSym), ExcludedAngle);
        continue;
      }
      for (double mu : {1.0, 0.5, 2.0})
        for (bool same : {true, false}) {
          const OrbitClassification c = classify(a, mu, same ? kSym : kAsym);
          const Expected e = expected_for(P, Q, mu == 1.0, same);
          ASSERT_EQ(c.kind, e.kind) << P << "/" << Q << " mu " << mu;
          EXPECT_EQ(c.case_label, e.label) << P << "/" << Q;
          EXPECT_DOUBLE_EQ(c.period, e.period);
          EXPECT_EQ(c.sides, e.sides);
          EXPECT_EQ(c.theta_above_pi, P > Q);
          if (e.kind == OrbitKind::DoubleChoreographic) {
            EXPECT_EQ(c.curves, 2);
            for (const ChaseRelation& r : c.chase) EXPECT_DOUBLE_EQ(r.lag, 2.0 * Q);
          }
          if (e.kind == OrbitKind::SimpleChoreographic) {
            EXPECT_EQ(c.curves, 1);
            for (const ChaseRelation& r : c.chase) EXPECT_DOUBLE_EQ(r.lag, double(Q));
          }
          ++checked;
        }
    }
  EXPECT_GT(checked, 1000);
}

TEST(Classify, KnownAssignments) {
  const OrbitClassification c9 = classify(RotationAngle::rational(5, 6), 1.0, kSym);
  EXPECT_EQ(c9.kind, OrbitKind::NonChoreographic);
  EXPECT_DOUBLE_EQ(c9.period, 12.0);
  EXPECT_EQ(c9.sides, 3);

  const OrbitClassification c12 = classify(RotationAngle::rational(6, 7), 1.0, kSym);
  EXPECT_EQ(c12.kind, OrbitKind::SimpleChoreographic);
  EXPECT_EQ(c12.cyclic_order, (std::vector<int>{0, 1, 2, 3}));

  const OrbitClassification c13 = classify(RotationAngle::rational(8, 9), 1.0, kSym);
  EXPECT_EQ(c13.kind, OrbitKind::SimpleChoreographic);
  EXPECT_EQ(c13.cyclic_order, (std::vector<int>{0, 3, 2, 1}));

  EXPECT_EQ(classify(RotationAngle::rational(4, 5), 0.5, kSym).case_label, "1");
  EXPECT_EQ(classify(RotationAngle::rational(7, 9), 1.0, kSym).case_label, "2");
  EXPECT_EQ(classify(RotationAngle::rational(4, 5), 1.0, kAsym).case_label, "4");
}

TEST(Classify, IrrationalAndExcluded) {
  EXPECT_EQ(classify(RotationAngle::radians(2.43), 0.5, kSym).kind, OrbitKind::QuasiPeriodic);
  EXPECT_THROW(classify(RotationAngle::radians(kPi), 1.0, kSym), ExcludedAngle);
  EXPECT_EQ(classify(RotationAngle::radians(4 * kPi / 5), 1.0, kSym).case_label, "3B");
}

TEST(Extension, StartAndContinuity) {
  const Fixture& f = fixture("1");
  const RefinedSeed& s = refined("1");
  const ExtendedOrbit orbit(s.state, f.theta(), f.masses());
  EXPECT_EQ(orbit.state(0.0).pack(), s.state.pack());
  for (double knot : {1.0, 2.0, 3.0, 4.0}) {
    const PhaseState lo = orbit.state(knot - 1e-12), hi = orbit.state(knot + 1e-12);
    EXPECT_LT(max_abs(lo.pack() - hi.pack()), 1e-8) << knot;
  }
}

TEST(Extension, AgreesWithDirectIntegration) {
  const Fixture& f = fixture("1");
  const RefinedSeed& s = refined("1");
  const ExtendedOrbit orbit(s.state, f.theta(), f.masses());
  for (double t : {0.5, 1.7, 5.3, 20.0}) {
    const PhaseState direct = propagate(s.state, t, f.masses());
    EXPECT_LT(max_abs(orbit.state(t).pack() - direct.pack()), 1e-7) << t;
  }
  EXPECT_LT(max_abs(orbit.state(20.0).q - s.state.q), 1e-8);
}

TEST(Extension, SigmaSquaredCollapse) {
  const Fixture& f = fixture("4");
  const RefinedSeed& s = refined("4");
  const ExtendedOrbit orbit(s.state, f.theta(), f.masses());
  const Eigen::Matrix2d R = rotation_matrix(-4 * f.theta());
  for (double t : {0.0, 0.4, 1.0, 1.6, 2.0})
    EXPECT_LT(max_abs(orbit.state(t + 4.0).q - orbit.state(t).q * R), 1e-9) << t;
}

TEST(Extension, PeriodWrapAndNegativeTime) {
  const Fixture& f = fixture("2");
  const RefinedSeed& s = refined("2");
  const ExtendedOrbit open(s.state, f.theta(), f.masses());
  EXPECT_THROW(open.state(-0.5), NegativeTime);
  const ExtendedOrbit closed(s.state, f.theta(), f.masses(), 1.0, {}, f.period);
  EXPECT_LT(max_abs(closed.state(-0.5).q - closed.state(f.period - 0.5).q), 1e-12);
  EXPECT_LT(max_abs(extend_state(s.state, f.theta(), 3.3, f.masses()).q - open.state(3.3).q), 1e-12);
}

TEST(Extension, QuasiPeriodicHasNoClosure) {
  const MassModel m = MassModel::from_ratio(0.5);
  const auto found = find_minimizers(2.43, m, {});
  ASSERT_FALSE(found.empty());
  const RefinedSeed seed = refine_to_seed(found.front(), m);
  const ExtendedOrbit orbit(seed.state, 2.43, m);
  double floor = 1e9;
  for (int k = 0; k <= 4000; ++k) {
    const double t = 1.0 + 199.0 * k / 4000;
    floor = std::min(floor, max_abs(orbit.state(t).q - orbit.state(0).q));
  }
  EXPECT_GT(floor, 1e-3);
}

TEST(Matching, FixtureResidualsAndRefinement) {
  for (const Fixture& f : fixtures()) {
    const MatchingReport raw = matching_residuals(f.state, f.theta(), f.masses());
    EXPECT_LT(raw.max(), 1e-4) << f.name;
    const MatchingReport fine = matching_residuals(refined(f.name).state, f.theta(), f.masses());
    EXPECT_LT(fine.max(), 1e-9) << f.name;
  }
}

TEST(Matching, RandomStateIsFarOff) {
  std::mt19937 rng(99);
  const MassModel m(1, 1);
  EXPECT_GT(matching_residuals(spbc::testing::random_state(rng, m), 0.8 * kPi, m).max(), 1e-2);
}

TEST(Verify, FixtureRelations) {
  for (const char* name : {"1", "2", "6"}) {
    const Fixture& f = fixture(name);
    const RefinedSeed& s = refined(name);
    const OrbitClassification c = classify(f.angle(), f.mu, s.params);
    EXPECT_DOUBLE_EQ(c.period, f.period) << name;
    const ExtendedOrbit orbit(s.state, f.theta(), f.masses());
    const VerificationReport rep = verify_classification(orbit, c, 1e-6);
    EXPECT_LT(rep.closure, 1e-6);
    for (const auto& [what, gap] : rep.relations) EXPECT_LT(gap, 1e-6) << what;
  }
  EXPECT_EQ(classify(fixture("1").angle(), 1.0, refined("1").params).case_label, "3B");
}

TEST(Verify, WrongRelationIsReported) {
  const Fixture& f = fixture("2");
  const RefinedSeed& s = refined("2");
  OrbitClassification c = classify(f.angle(), f.mu, s.params);
  c.chase = {{0, 1, 2.0 * 5}};
  const ExtendedOrbit orbit(s.state, f.theta(), f.masses());
  EXPECT_THROW(verify_classification(orbit, c, 1e-6), VerificationFailure);
  c = classify(f.angle(), f.mu, s.params);
  c.period /= 2;
  EXPECT_THROW(verify_classification(orbit, c, 1e-6), VerificationFailure);
}

TEST(Curves, CsvHasOneRowPerBodyAndSample) {
  const Fixture& f = fixture("1");
  const RefinedSeed& s = refined("1");
  const ExtendedOrbit orbit(s.state, f.theta(), f.masses());
  std::ostringstream out;
  write_curves_csv(out, orbit, classify(f.angle(), f.mu, s.params), 20.0, 11);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,body,x,y,vx,vy,curve_id,side");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 4 * 11);
}
