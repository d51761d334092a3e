#include "spbc/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spbc {

MassModel::MassModel(double m13, double m24) {
  if (!(std::isfinite(m13) && std::isfinite(m24) && m13 > 0.0 && m24 > 0.0)) {
    throw std::invalid_argument("masses must be finite and strictly positive");
  }
  masses_ = {m13, m24, m13, m24};
  total_ = 2.0 * (m13 + m24);
}

Eigen::Matrix<double, 16, 1> PhaseState::pack() const {
  Eigen::Matrix<double, 16, 1> y;
  for (int i = 0; i < 4; ++i) {
    y[2 * i] = q(i, 0);
    y[2 * i + 1] = q(i, 1);
    y[8 + 2 * i] = v(i, 0);
    y[8 + 2 * i + 1] = v(i, 1);
  }
  return y;
}

PhaseState PhaseState::unpack(const Eigen::Ref<const Eigen::VectorXd>& y, double t) {
  PhaseState s;
  for (int i = 0; i < 4; ++i) {
    s.q(i, 0) = y[2 * i];
    s.q(i, 1) = y[2 * i + 1];
    s.v(i, 0) = y[8 + 2 * i];
    s.v(i, 1) = y[8 + 2 * i + 1];
  }
  s.t = t;
  return s;
}

Vec2 center_of_mass(const Configuration& q, const MassModel& masses) {
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < 4; ++i) c += masses.m(i) * q.row(i).transpose();
  return c / masses.total();
}

Vec2 linear_momentum(const PhaseState& s, const MassModel& masses) {
  Vec2 p = Vec2::Zero();
  for (int i = 0; i < 4; ++i) p += masses.m(i) * s.v.row(i).transpose();
  return p;
}

PhaseState recenter(const PhaseState& s, const MassModel& masses) {
  PhaseState out = s;
  const Vec2 c = center_of_mass(s.q, masses);
  const Vec2 w = linear_momentum(s, masses) / masses.total();
  for (int i = 0; i < 4; ++i) {
    out.q.row(i) -= c.transpose();
    out.v.row(i) -= w.transpose();
  }
  return out;
}

double min_pair_distance(const Configuration& q) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) d = std::min(d, (q.row(i) - q.row(j)).norm());
  return d;
}

namespace {

[[noreturn]] void throw_collision(int i, int j, double r) {
  std::ostringstream msg;
  msg << "collision between bodies " << i + 1 << " and " << j + 1 << " (distance " << r << ")";
  throw CollisionError(msg.str());
}

}  // namespace

double potential_energy(const Configuration& q, const MassModel& masses, double collision_floor) {
  double u = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double r = (q.row(i) - q.row(j)).norm();
      if (!(r >= collision_floor)) throw_collision(i, j, r);
      u += masses.m(i) * masses.m(j) / r;
    }
  }
  return u;
}

double kinetic_energy(const PhaseState& s, const MassModel& masses) {
  double k = 0.0;
  for (int i = 0; i < 4; ++i) k += masses.m(i) * s.v.row(i).squaredNorm();
  return 0.5 * k;
}

double total_energy(const PhaseState& s, const MassModel& masses, double collision_floor) {
  return kinetic_energy(s, masses) - potential_energy(s.q, masses, collision_floor);
}

double angular_momentum(const PhaseState& s, const MassModel& masses) {
  double c = 0.0;
  for (int i = 0; i < 4; ++i)
    c += masses.m(i) * cross(s.q.row(i).transpose(), s.v.row(i).transpose());
  return c;
}

Configuration accelerations(const Configuration& q, const MassModel& masses,
                            double collision_floor) {
  Configuration a = Configuration::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const Eigen::RowVector2d d = q.row(j) - q.row(i);
      const double r2 = d.squaredNorm();
      const double r = std::sqrt(r2);
      if (!(r >= collision_floor)) throw_collision(i, j, r);
      const Eigen::RowVector2d f = d / (r2 * r);
      a.row(i) += masses.m(j) * f;
      a.row(j) -= masses.m(i) * f;
    }
  }
  return a;
}

Eigen::Matrix<double, 8, 8> potential_hessian(const Configuration& q, const MassModel& masses,
                                              double collision_floor) {
  Eigen::Matrix<double, 8, 8> h = Eigen::Matrix<double, 8, 8>::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const Vec2 d = (q.row(j) - q.row(i)).transpose();
      const double r = d.norm();
      if (!(r >= collision_floor)) throw_collision(i, j, r);
      const double r3 = r * r * r;
      // d/dd of m_i m_j d / |d|^3
      const Eigen::Matrix2d b = masses.m(i) * masses.m(j) *
                                (Eigen::Matrix2d::Identity() / r3 - 3.0 * d * d.transpose() / (r3 * r * r));
      h.block<2, 2>(2 * i, 2 * j) += b;
      h.block<2, 2>(2 * j, 2 * i) += b;
      h.block<2, 2>(2 * i, 2 * i) -= b;
      h.block<2, 2>(2 * j, 2 * j) -= b;
    }
  }
  return h;
}

}  // namespace spbc
