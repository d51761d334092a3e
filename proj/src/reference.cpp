#include "spbc/reference.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spbc {

namespace {
constexpr double kPi = std::numbers::pi;
}

double omega_from_theta(double theta, double T) {
  return theta < kPi ? std::abs(kPi / 2 - theta) / T : std::abs(3 * kPi / 2 - theta) / T;
}

double signed_omega(double theta, double T) {
  return theta < kPi ? (theta - kPi / 2) / T : (theta - 3 * kPi / 2) / T;
}

Eigen::Vector2d rhombus_residuals(double omega, double m1, double m2, double r1, double r2) {
  const double d3 = std::pow(r1 * r1 + r2 * r2, 1.5);
  return {-omega * omega + 2 * m2 / d3 + m1 / (4 * r1 * r1 * r1),
          -omega * omega + 2 * m1 / d3 + m2 / (4 * r2 * r2 * r2)};
}

RhombusRadii solve_rhombus_radii(double omega, double m1, double m2) {
  if (!(omega > 0.0)) throw DegenerateOmega("rhombus radii need a positive angular speed");
  if (!(m1 > 0.0 && m2 > 0.0)) throw std::invalid_argument("masses must be positive");
  const double w2 = omega * omega;
  const double r0 = std::cbrt(std::sqrt(m1 * m2) * (2 * std::sqrt(2.0) + 1) / (4 * w2));
  // Residuals scaled by 1/omega^2, unknowns x = log r.
  auto f = [&](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(rhombus_residuals(omega, m1, m2, std::exp(x[0]), std::exp(x[1])) / w2);
  };
  Eigen::Vector2d x(std::log(r0), std::log(r0));
  Eigen::Vector2d F = f(x);
  RhombusRadii out;
  for (int it = 0; it < 100; ++it) {
    if (F.cwiseAbs().maxCoeff() < 1e-15) {
      out.iterations = it;
      break;
    }
    const double r1 = std::exp(x[0]), r2 = std::exp(x[1]);
    const double s = r1 * r1 + r2 * r2;
    const double d5 = std::pow(s, 2.5);
    // d/dlog r_k of 1/s^{3/2} = -3 r_k^2 / s^{5/2}
    Eigen::Matrix2d J;
    J(0, 0) = (-6 * m2 * r1 * r1 / d5 - 3 * m1 / (4 * r1 * r1 * r1)) / w2;
    J(0, 1) = -6 * m2 * r2 * r2 / d5 / w2;
    J(1, 0) = -6 * m1 * r1 * r1 / d5 / w2;
    J(1, 1) = (-6 * m1 * r2 * r2 / d5 - 3 * m2 / (4 * r2 * r2 * r2)) / w2;
    Eigen::Vector2d step = J.partialPivLu().solve(-F);
    double lambda = 1.0;
    for (int k = 0; k < 40; ++k) {
      const Eigen::Vector2d trial = f(x + lambda * step);
      if (trial.norm() < F.norm() || k == 39) break;
      lambda *= 0.5;
    }
    x += lambda * step;
    F = f(x);
    out.iterations = it + 1;
  }
  out.r1 = std::exp(x[0]);
  out.r2 = std::exp(x[1]);
  out.residual = rhombus_residuals(omega, m1, m2, out.r1, out.r2).cwiseAbs().maxCoeff();
  if (!(out.residual <= 1e-12 * std::max(1.0, w2)))
    throw NoConvergence("rhombus radius iteration did not converge");
  return out;
}

PhaseState HomographicFamily::state(double t) const {
  PhaseState s;
  s.t = t;
  for (int k = 0; k < 4; ++k) {
    const double r = (k % 2 == 0) ? r1 : r2;
    const double phase = omega * t + rho[k];
    s.q(k, 0) = r * std::cos(phase);
    s.q(k, 1) = r * std::sin(phase);
    s.v(k, 0) = -omega * r * std::sin(phase);
    s.v(k, 1) = omega * r * std::cos(phase);
  }
  return s;
}

HomographicFamily homographic_family(double theta, const MassModel& masses, double T) {
  const double w = signed_omega(theta, T);
  if (std::abs(w) < 1e-14) throw DegenerateOmega("omega vanishes at theta = pi/2 or 3pi/2");
  const RhombusRadii rr = solve_rhombus_radii(std::abs(w), masses.m(0), masses.m(1));
  HomographicFamily h;
  h.omega = w;
  h.r1 = rr.r1;
  h.r2 = rr.r2;
  // body 1 starts on the rotated symmetry axis of the start template
  h.alpha0 = std::fmod(3 * kPi / 2 - theta + 4 * kPi, 2 * kPi);
  for (int k = 0; k < 4; ++k) h.rho[k] = k * kPi / 2 + h.alpha0;
  h.min_period = 2 * kPi / std::abs(w);
  return h;
}

double homographic_action_for_omega(double omega, double mu, double T) {
  const double w = std::abs(omega);
  if (w < 1e-14) throw DegenerateOmega("omega vanishes");
  const MassModel m = MassModel::from_ratio(mu);
  const RhombusRadii rr = solve_rhombus_radii(w, m.m(0), m.m(1));
  return 3 * w * w * (m.m(0) * rr.r1 * rr.r1 + m.m(1) * rr.r2 * rr.r2) * T;
}

double homographic_action(double theta, double mu, double T) {
  const double w = omega_from_theta(theta, T);
  if (w < 1e-14) throw DegenerateOmega("omega vanishes at theta = pi/2 or 3pi/2");
  return homographic_action_for_omega(w, mu, T);
}

double homographic_action_scaled(double theta, double k, double mu, double T) {
  const double w0 = omega_from_theta(theta, T);
  const double w1 = omega_from_theta(k * theta, T);
  if (w0 < 1e-14 || w1 < 1e-14) throw DegenerateOmega("omega vanishes");
  return std::pow(w1 / w0, 2.0 / 3.0) * homographic_action(theta, mu, T);
}

double segment_inverse_distance_quadrature(const Vec2& d0, const Vec2& delta, double T) {
  auto f = [&](double s) { return 1.0 / (d0 + s * delta).norm(); };
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 20, 1e-15, &err);
  return T * v;
}

double segment_inverse_distance_integral(const Vec2& d0, const Vec2& delta, double T,
                                         double collision_floor) {
  const double a = d0.squaredNorm();
  const double b = 2 * d0.dot(delta);
  const double c = delta.squaredNorm();
  if (c == 0.0) {
    const double r = std::sqrt(a);
    if (!(r >= collision_floor)) throw SegmentCollision("bodies coincide along the segment");
    return T / r;
  }
  const double s_star = std::clamp(-b / (2 * c), 0.0, 1.0);
  const double dmin = (d0 + s_star * delta).norm();
  if (!(dmin >= collision_floor)) {
    std::ostringstream msg;
    msg << "linear interpolants meet at s = " << s_star;
    throw SegmentCollision(msg.str());
  }
  const double D = 4 * a * c - b * b;
  if (std::abs(D) < 1e-12 * c) return segment_inverse_distance_quadrature(d0, delta, T);
  const double sq = std::sqrt(D);
  return T / std::sqrt(c) * (std::asinh((2 * c + b) / sq) - std::asinh(b / sq));
}

double test_path_action(double theta, double mu, const BoundaryParams& a_test, double T) {
  const MassModel m = MassModel::from_ratio(mu);
  const Configuration q0 = build_qstart(a_test, theta, m);
  const Configuration q1 = build_qend(a_test, m);
  const Configuration dq = q1 - q0;
  double kinetic = 0.0;
  for (int i = 0; i < 4; ++i) kinetic += m.m(i) * dq.row(i).squaredNorm();
  double potential = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const Vec2 d0 = (q0.row(j) - q0.row(i)).transpose();
      const Vec2 delta = (dq.row(j) - dq.row(i)).transpose();
      potential += m.m(i) * m.m(j) * segment_inverse_distance_integral(d0, delta, T);
    }
  }
  return kinetic / (2 * T) + potential;
}

const std::array<TestParamEntry, 4>& reference_test_params() {
  static const std::array<TestParamEntry, 4> table{{
      {4 * kPi / 5, 1.0,
       BoundaryParams(0.6676542303, 1.11499232, 0.5099504088, 0.6676542314, 1.11499232,
                      0.5099504078)},
      {4 * kPi / 5, 2.0,
       BoundaryParams(0.8347577868, 0.8492284757, 1.107411045, 0.6740939528, 1.7071110,
                      0.072136065)},
      {4 * kPi / 5, 0.8,
       BoundaryParams(0.6216336897, 1.197204657, 0.347804861, 0.6658203645, 0.9561601763,
                      0.6379731628)},
      {4 * kPi / 5, 0.5,
       BoundaryParams(0.5350313653, 1.354931439, 0.0572523078, 0.6625485, 0.674032487,
                      0.8789531194)},
  }};
  return table;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad grid specification");
  const long n = std::lround((hi - lo) / step);
  std::vector<double> g;
  g.reserve(n + 1);
  for (long k = 0; k <= n; ++k) g.push_back(lo + k * step);
  return g;
}

namespace {

bool is_pi(double theta) { return std::abs(theta - kPi) < 1e-12; }

// Positive inside the region: A_hom - min A_tpath. NaN when nothing evaluates.
double region_margin(double theta, double mu, const std::vector<BoundaryParams>& list, double T,
                     std::string* diag) {
  double hom;
  try {
    hom = homographic_action(theta, mu, T);
  } catch (const Error& e) {
    if (diag) *diag = e.what();
    return std::numeric_limits<double>::quiet_NaN();
  }
  double best = std::numeric_limits<double>::infinity();
  for (const BoundaryParams& a : list) {
    try {
      best = std::min(best, test_path_action(theta, mu, a, T));
    } catch (const Error& e) {
      if (diag) *diag = e.what();
    }
  }
  if (!std::isfinite(best)) return std::numeric_limits<double>::quiet_NaN();
  return hom - best;
}

}  // namespace

OmegaRegionScan scan_region(const std::vector<double>& theta_grid,
                            const std::vector<double>& mu_grid,
                            const std::vector<BoundaryParams>& a_test_list, double T) {
  if (theta_grid.empty() || mu_grid.empty() || a_test_list.empty())
    throw std::invalid_argument("scan_region needs nonempty grids and test parameter list");
  OmegaRegionScan scan;
  scan.theta_grid = theta_grid;
  scan.mu_grid = mu_grid;
  scan.a_test = a_test_list;
  scan.mask.assign(mu_grid.size(), std::vector<bool>(theta_grid.size(), false));

  for (std::size_t im = 0; im < mu_grid.size(); ++im) {
    const double mu = mu_grid[im];
    std::vector<double> margin(theta_grid.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t it = 0; it < theta_grid.size(); ++it) {
      const double th = theta_grid[it];
      if (is_pi(th)) continue;
      std::string diag;
      margin[it] = region_margin(th, mu, a_test_list, T, &diag);
      if (!diag.empty()) {
        std::ostringstream msg;
        msg << "theta/pi=" << th / kPi << " mu=" << mu << ": " << diag;
        scan.diagnostics.push_back(msg.str());
      }
      scan.mask[im][it] = margin[it] > 0.0;
    }
    // Sign changes between consecutive evaluated cells; the excluded column
    // at pi is skipped rather than treated as outside.
    std::size_t prev = theta_grid.size();
    for (std::size_t it = 0; it < theta_grid.size(); ++it) {
      if (std::isnan(margin[it])) continue;
      if (prev < theta_grid.size() && ((margin[prev] > 0.0) != (margin[it] > 0.0))) {
        RegionTransition tr;
        tr.mu = mu;
        tr.theta_lo = theta_grid[prev];
        tr.theta_hi = theta_grid[it];
        tr.entering = margin[it] > 0.0;
        double lo = tr.theta_lo, hi = tr.theta_hi, flo = margin[prev];
        bool ok = !(lo < kPi && hi > kPi);
        for (int k = 0; k < 60 && ok; ++k) {
          const double mid = 0.5 * (lo + hi);
          const double fm = region_margin(mid, mu, a_test_list, T, nullptr);
          if (std::isnan(fm)) {
            ok = false;
            break;
          }
          if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        tr.theta_root = 0.5 * (lo + hi);
        scan.transitions.push_back(tr);
      }
      prev = it;
    }
  }
  return scan;
}

void write_region_csv(std::ostream& out, const OmegaRegionScan& scan) {
  char buf[32];
  out << "mu";
  for (double th : scan.theta_grid) {
    std::snprintf(buf, sizeof buf, "%.6g", th / kPi);
    out << ',' << buf;
  }
  out << '\n';
  for (std::size_t im = 0; im < scan.mu_grid.size(); ++im) {
    std::snprintf(buf, sizeof buf, "%.6g", scan.mu_grid[im]);
    out << buf;
    for (std::size_t it = 0; it < scan.theta_grid.size(); ++it) out << ',' << (scan.at(im, it) ? 1 : 0);
    out << '\n';
  }
}

Trajectory build_homographic_trajectory(double theta, double mu, double T, int samples) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  const HomographicFamily h = homographic_family(theta, MassModel::from_ratio(mu), T);
  Trajectory tr;
  for (int k = 0; k < samples; ++k) {
    const double t = samples == 1 ? 0.0 : T * k / (samples - 1);
    tr.samples.push_back(h.state(t));
  }
  return tr;
}

BoundaryParams homographic_boundary_params(double theta, const MassModel& masses, double T) {
  const HomographicFamily h = homographic_family(theta, masses, T);
  const Membership a = membership_A(h.state(0.0).q, theta, masses, 1e-9);
  const Membership b = membership_B(h.state(T).q, masses, 1e-9);
  if (!a.member || !b.member)
    throw NoConvergence("homographic boundary configurations are not in the SPBC templates");
  Eigen::Matrix<double, 6, 1> p;
  p << a.params, b.params;
  return BoundaryParams(p);
}

}  // namespace spbc
