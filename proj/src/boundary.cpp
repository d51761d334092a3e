#include "spbc/boundary.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace spbc {

BoundaryParams::BoundaryParams(const Eigen::Matrix<double, 6, 1>& values) : a(values) {
  if (!a.allFinite()) throw std::invalid_argument("boundary parameters must be finite");
}

BoundaryParams::BoundaryParams(double a1, double a2, double a3, double a4, double a5, double a6) {
  a << a1, a2, a3, a4, a5, a6;
  if (!a.allFinite()) throw std::invalid_argument("boundary parameters must be finite");
}

bool BoundaryParams::symmetric(double rel_tol) const {
  const double scale = std::max({1.0, start().cwiseAbs().maxCoeff(), end().cwiseAbs().maxCoeff()});
  return (start() - end()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

RotationAngle RotationAngle::radians(double theta) {
  RotationAngle r;
  r.theta = theta;
  return r;
}

RotationAngle RotationAngle::rational(long P, long Q) {
  if (P <= 0 || Q <= 0) throw std::invalid_argument("P and Q must be positive");
  const long g = std::gcd(P, Q);
  RotationAngle r;
  r.P = P / g;
  r.Q = Q / g;
  r.theta = static_cast<double>(*r.P) * std::numbers::pi / static_cast<double>(*r.Q);
  return r;
}

bool RotationAngle::excluded_for_minimization() const {
  if (P && Q) return (*Q == 2 && (*P == 1 || *P == 3)) || (*Q == 1 && *P == 1);
  constexpr double pi = std::numbers::pi;
  for (double e : {pi / 2, pi, 3 * pi / 2})
    if (std::abs(theta - e) < 1e-12) return true;
  return false;
}

void require_admissible(double theta) {
  if (RotationAngle::radians(theta).excluded_for_minimization())
    throw ExcludedAngle("theta must not be pi/2, pi or 3pi/2");
}

Eigen::Matrix2d rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Eigen::Matrix<double, 8, 1> pack_config(const Configuration& q) {
  Eigen::Matrix<double, 8, 1> x;
  for (int i = 0; i < 4; ++i) {
    x[2 * i] = q(i, 0);
    x[2 * i + 1] = q(i, 1);
  }
  return x;
}

Configuration unpack_config(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Configuration q;
  for (int i = 0; i < 4; ++i) {
    q(i, 0) = x[2 * i];
    q(i, 1) = x[2 * i + 1];
  }
  return q;
}

Eigen::Matrix<double, 8, 3> start_template(double theta, const MassModel& m) {
  // Unrotated rows as linear functions of (a1, a2, a3).
  Eigen::Matrix<double, 8, 3> t = Eigen::Matrix<double, 8, 3>::Zero();
  t(1, 2) = -1.0;
  t(2, 0) = -1.0;
  t(3, 1) = 1.0;
  t(5, 1) = -(m.m(1) + m.m(3)) / m.m(2);
  t(5, 2) = m.m(0) / m.m(2);
  t(6, 0) = 1.0;
  t(7, 1) = 1.0;
  const Eigen::Matrix2d r = rotation_matrix(theta);
  Eigen::Matrix<double, 8, 3> out;
  for (int i = 0; i < 4; ++i) out.block<2, 3>(2 * i, 0) = r.transpose() * t.block<2, 3>(2 * i, 0);
  return out;
}

Eigen::Matrix<double, 8, 3> end_template(const MassModel& m) {
  Eigen::Matrix<double, 8, 3> t = Eigen::Matrix<double, 8, 3>::Zero();
  t(0, 0) = 1.0;
  t(1, 1) = 1.0;
  t(3, 2) = -1.0;
  t(4, 0) = -1.0;
  t(5, 1) = 1.0;
  t(7, 1) = -(m.m(0) + m.m(2)) / m.m(3);
  t(7, 2) = m.m(1) / m.m(3);
  return t;
}

Configuration build_qstart(double a1, double a2, double a3, double theta, const MassModel& masses) {
  Configuration q;
  q << 0.0, -a3, -a1, a2, 0.0, (-masses.m(1) * a2 - masses.m(3) * a2 + masses.m(0) * a3) / masses.m(2),
      a1, a2;
  return q * rotation_matrix(theta);
}

Configuration build_qend(double a4, double a5, double a6, const MassModel& masses) {
  Configuration q;
  q << a4, a5, 0.0, -a6, -a4, a5, 0.0,
      (-masses.m(0) * a5 - masses.m(2) * a5 + masses.m(1) * a6) / masses.m(3);
  return q;
}

Configuration build_qstart(const BoundaryParams& p, double theta, const MassModel& masses) {
  return build_qstart(p[0], p[1], p[2], theta, masses);
}

Configuration build_qend(const BoundaryParams& p, const MassModel& masses) {
  return build_qend(p[3], p[4], p[5], masses);
}

namespace {

Membership project(const Eigen::Matrix<double, 8, 3>& t, const Configuration& q, double tol) {
  const Eigen::Matrix<double, 8, 1> x = pack_config(q);
  Membership m;
  m.params = t.colPivHouseholderQr().solve(x);
  m.residual = (t * m.params - x).cwiseAbs().maxCoeff();
  m.member = m.residual <= tol;
  return m;
}

}  // namespace

Membership membership_A(const Configuration& q, double theta, const MassModel& masses, double tol) {
  return project(start_template(theta, masses), q, tol);
}

Membership membership_B(const Configuration& q, const MassModel& masses, double tol) {
  return project(end_template(masses), q, tol);
}

}  // namespace spbc
