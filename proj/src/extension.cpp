#include "spbc/extension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "spbc/shooting.hpp"

namespace spbc {

namespace {
constexpr double kPi = std::numbers::pi;
}

Eigen::Matrix2d reflection_B() {
  Eigen::Matrix2d b;
  b << -1.0, 0.0, 0.0, 1.0;
  return b;
}

ExtendedOrbit::ExtendedOrbit(const PhaseState& seed, double theta, const MassModel& masses, double T,
                             const IntegratorSettings& settings, std::optional<double> period)
    : seed_(seed), theta_(theta), masses_(masses), T_(T), period_(period) {
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  seed_.t = 0.0;
  IntegratorSettings s = settings;
  s.dense_output = true;
  s.max_step = std::min(s.max_step, T / 256.0);
  if (s.min_step >= s.max_step) s.min_step = s.max_step * 1e-6;
  cache_ = solve_ode(newton_field(masses_), 0.0, seed_.pack(), T, s);
}

PhaseState ExtendedOrbit::segment(double s) const {
  s = std::clamp(s, 0.0, T_);
  if (s == 0.0) return seed_;
  return PhaseState::unpack(cache_(s), s);
}

PhaseState ExtendedOrbit::state(double t) const {
  if (t < 0.0) {
    if (!period_) throw NegativeTime("negative time on an orbit without a known period");
    t = std::fmod(t, *period_) + *period_;
  }
  const double two_t = 2.0 * T_;
  long k = static_cast<long>(std::floor(t / two_t));
  double tp = t - k * two_t;
  if (tp < 0.0) tp = 0.0;
  // t lands on a multiple of 2T: evaluate as the start of block k
  if (tp >= two_t) {
    ++k;
    tp = 0.0;
  }
  PhaseState base;
  if (tp <= T_) {
    base = segment(tp);
  } else {
    const PhaseState r = segment(two_t - tp);
    const Eigen::Matrix2d B = reflection_B();
    constexpr std::array<int, 4> mirror{2, 1, 0, 3};
    for (int i = 0; i < 4; ++i) {
      base.q.row(i) = r.q.row(mirror[i]) * B;
      base.v.row(i) = -r.v.row(mirror[i]) * B;
    }
  }
  if (k == 0) {
    base.t = t;
    return base;
  }
  PhaseState out;
  const Eigen::Matrix2d R = rotation_matrix(-2.0 * k * theta_);
  for (int i = 0; i < 4; ++i) {
    const int j = (k % 2 == 1) ? kSigma[i] : i;
    out.q.row(i) = base.q.row(j) * R;
    out.v.row(i) = base.v.row(j) * R;
  }
  out.t = t;
  return out;
}

PhaseState extend_state(const PhaseState& seed, double theta, double t, const MassModel& masses,
                        double T, const IntegratorSettings& settings) {
  if (t < 0.0) throw NegativeTime("negative time");
  return ExtendedOrbit(seed, theta, masses, T, settings).state(t);
}

double MatchingReport::max() const {
  double m = std::max(end_conditions.cwiseAbs().maxCoeff(), start_conditions.cwiseAbs().maxCoeff());
  for (double d : doubling) m = std::max(m, d);
  return m;
}

MatchingReport matching_residuals(const PhaseState& seed, double theta, const MassModel& masses,
                                  double T, const IntegratorSettings& settings) {
  PhaseState s0 = seed;
  s0.t = 0.0;
  const PhaseState end = propagate(s0, T, masses, settings);
  MatchingReport rep;
  rep.end_conditions = end_velocity_conditions(end.v);

  const double c2 = std::cos(2 * theta), s2 = std::sin(2 * theta);
  constexpr std::array<int, 4> partner{0, 3, 2, 1};
  for (int k = 0; k < 4; ++k) {
    const double x = s0.v(partner[k], 0), y = s0.v(partner[k], 1);
    const double a1 = s0.v(k, 0) - x * c2 + y * s2;
    const double a2 = s0.v(k, 1) + x * s2 + y * c2;
    rep.doubling[k] = std::hypot(a1, a2);
  }
  const double s = std::sin(theta), c = std::cos(theta);
  const Velocities& v = s0.v;
  rep.start_conditions << v(2, 0) * s + v(2, 1) * c, v(0, 0) * s + v(0, 1) * c,
      (v(1, 0) * s + v(1, 1) * c) + (v(3, 0) * s + v(3, 1) * c);
  return rep;
}

std::optional<std::pair<long, long>> rationalize_theta(double theta, long Qmax, double tol) {
  if (Qmax < 1) throw std::invalid_argument("Qmax must be >= 1");
  const double x = theta / kPi;
  double r = x;
  long p0 = 1, q0 = 0;  // h_{-1}, k_{-1}
  long p1 = 0, q1 = 1;  // h_{-2}, k_{-2}
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e15) break;
    const long ai = static_cast<long>(a);
    const long p = ai * p0 + p1;
    const long q = ai * q0 + q1;
    if (q > Qmax) break;
    if (p > 0 && std::abs(theta - kPi * static_cast<double>(p) / static_cast<double>(q)) <= tol)
      return std::make_pair(p, q);
    p1 = p0;
    q1 = q0;
    p0 = p;
    q0 = q;
    const double frac = r - a;
    if (frac < 1e-16) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

std::string to_string(OrbitKind kind) {
  switch (kind) {
    case OrbitKind::QuasiPeriodic:
      return "QuasiPeriodic";
    case OrbitKind::NonChoreographic:
      return "NonChoreographic";
    case OrbitKind::DoubleChoreographic:
      return "DoubleChoreographic";
    case OrbitKind::SimpleChoreographic:
      return "SimpleChoreographic";
  }
  return "Unknown";
}

OrbitClassification classify(const RotationAngle& theta, double mu, const BoundaryParams& a_star,
                             double shape_tol, double T) {
  std::optional<std::pair<long, long>> pq;
  if (theta.is_rational()) {
    pq = std::make_pair(*theta.P, *theta.Q);
  } else {
    pq = rationalize_theta(theta.theta, 10000, 1e-12);
  }
  if (pq && pq->first == pq->second) throw ExcludedAngle("theta = pi is excluded");
  if (!pq && std::abs(theta.theta - kPi) < 1e-12) throw ExcludedAngle("theta = pi is excluded");

  OrbitClassification c;
  c.T = T;
  c.theta_above_pi = theta.theta > kPi;
  if (!pq) {
    c.kind = OrbitKind::QuasiPeriodic;
    c.case_label = "quasi";
    c.curves = 4;
    return c;
  }
  const long P = pq->first, Q = pq->second;
  c.P = P;
  c.Q = Q;
  auto double_chase = [&] {
    const double lag = 2.0 * Q * T;
    c.chase = {{0, 2, lag}, {2, 0, lag}, {3, 1, lag}, {1, 3, lag}};
  };
  if (Q % 2 == 0) {
    c.kind = OrbitKind::NonChoreographic;
    c.case_label = "even";
    c.period = 2.0 * Q * T;
    c.curves = 4;
    c.sides = static_cast<int>(Q / 2);
    return c;
  }
  c.period = 4.0 * Q * T;
  c.sides = static_cast<int>(Q);
  const bool unit_ratio = std::abs(mu - 1.0) < 1e-12;
  if (!unit_ratio || P % 2 == 1 || !a_star.symmetric(shape_tol)) {
    c.kind = OrbitKind::DoubleChoreographic;
    c.case_label = !unit_ratio ? "1" : (P % 2 == 1 ? "2" : "4");
    c.curves = 2;
    double_chase();
    return c;
  }
  c.kind = OrbitKind::SimpleChoreographic;
  c.curves = 1;
  const double lag = static_cast<double>(Q) * T;
  if (((Q - 1) / 2) % 2 == 1) {
    c.case_label = "3A";
    c.cyclic_order = {0, 1, 2, 3};
    c.chase = {{0, 1, lag}, {1, 2, lag}, {2, 3, lag}, {3, 0, lag}};
  } else {
    c.case_label = "3B";
    c.cyclic_order = {0, 3, 2, 1};
    c.chase = {{0, 3, lag}, {3, 2, lag}, {2, 1, lag}, {1, 0, lag}};
  }
  return c;
}

namespace {

double position_gap(const PhaseState& a, const PhaseState& b) { return (a.q - b.q).cwiseAbs().maxCoeff(); }

std::string fmt_time(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

VerificationReport verify_classification(const ExtendedOrbit& orbit, const OrbitClassification& c,
                                         double tol, int samples, double min_gap) {
  if (c.kind == OrbitKind::QuasiPeriodic || !(c.period > 0.0))
    throw VerificationFailure("quasi-periodic orbits have no period to verify");
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  VerificationReport rep;
  const PhaseState s0 = orbit.state(0.0);
  rep.closure = position_gap(orbit.state(c.period), s0);
  if (!(rep.closure <= tol)) {
    std::ostringstream msg;
    msg << "periodicity q(" << c.period << ") = q(0) violated by " << rep.closure;
    throw VerificationFailure(msg.str());
  }
  for (const ChaseRelation& r : c.chase) {
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
      const double t = c.period * k / (samples - 1);
      const Vec2 a = orbit.state(t + r.lag).q.row(r.from).transpose();
      const Vec2 b = orbit.state(t).q.row(r.to).transpose();
      worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    }
    const std::string name = "q" + std::to_string(r.from + 1) + "(t+" + fmt_time(r.lag) + ")=q" +
                             std::to_string(r.to + 1) + "(t)";
    rep.relations.emplace_back(name, worst);
    if (!(worst <= tol)) {
      std::ostringstream msg;
      msg << "relation " << name << " violated by " << worst;
      throw VerificationFailure(msg.str());
    }
  }
  long n = std::lround(c.period / orbit.T());
  for (long p = 2; n > 1 && p <= n; ++p) {
    if (n % p != 0) continue;
    while (n % p == 0) n /= p;
    const double cand = c.period / p;
    const double gap = position_gap(orbit.state(cand), s0);
    rep.subperiod_gaps.emplace_back(cand, gap);
    if (gap < min_gap) {
      std::ostringstream msg;
      msg << "period " << c.period << " is not minimal: orbit closes at " << cand;
      throw VerificationFailure(msg.str());
    }
  }
  return rep;
}

void write_curves_csv(std::ostream& out, const ExtendedOrbit& orbit, const OrbitClassification& c,
                      double t_max, int samples) {
  if (t_max < 0.0) throw NegativeTime("t_max must be nonnegative");
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  out << "t,body,x,y,vx,vy,curve_id,side\n";
  const int n = t_max == 0.0 ? 1 : samples;
  char buf[160];
  for (int k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.0 : t_max * k / (n - 1);
    const PhaseState s = orbit.state(t);
    const long side = static_cast<long>(std::floor(t / (4.0 * orbit.T())));
    for (int i = 0; i < 4; ++i) {
      int curve = i;
      if (c.kind == OrbitKind::DoubleChoreographic) curve = i % 2;
      if (c.kind == OrbitKind::SimpleChoreographic) curve = 0;
      std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%d,%ld\n", t, i + 1, s.q(i, 0),
                    s.q(i, 1), s.v(i, 0), s.v(i, 1), curve, side);
      out << buf;
    }
  }
}

}  // namespace spbc
