#pragma once

#include <Eigen/Dense>
#include <array>

#include "spbc/errors.hpp"

namespace spbc {

// Body positions stored one body per row, so that a configuration can be
// right-multiplied by a 2x2 rotation exactly like the boundary templates.
using Configuration = Eigen::Matrix<double, 4, 2>;
using Velocities = Eigen::Matrix<double, 4, 2>;
using Vec2 = Eigen::Vector2d;

inline constexpr double kDefaultCollisionFloor = 1e-13;

// Four masses with m1 = m3 and m2 = m4; G = 1.
class MassModel {
 public:
  // m1 = m3 = m13, m2 = m4 = m24. Throws std::invalid_argument on
  // non-positive or non-finite input.
  MassModel(double m13, double m24);

  // m1 = 1, m2 = mu.
  static MassModel from_ratio(double mu) { return MassModel(1.0, mu); }

  // 0-based body index.
  double m(int body) const { return masses_[body]; }
  const std::array<double, 4>& masses() const { return masses_; }
  double mu() const { return masses_[1] / masses_[0]; }
  double total() const { return total_; }

  bool operator==(const MassModel& other) const { return masses_ == other.masses_; }

 private:
  std::array<double, 4> masses_;
  double total_;
};

struct PhaseState {
  Configuration q = Configuration::Zero();
  Velocities v = Velocities::Zero();
  double t = 0.0;

  // Packs as (q1x, q1y, ..., q4y, v1x, ..., v4y).
  Eigen::Matrix<double, 16, 1> pack() const;
  static PhaseState unpack(const Eigen::Ref<const Eigen::VectorXd>& y, double t = 0.0);
};

Vec2 center_of_mass(const Configuration& q, const MassModel& masses);
Vec2 linear_momentum(const PhaseState& s, const MassModel& masses);

// Shifts positions so the center of mass is at the origin and subtracts the
// center-of-mass velocity.
PhaseState recenter(const PhaseState& s, const MassModel& masses);

// Smallest pairwise distance.
double min_pair_distance(const Configuration& q);

double potential_energy(const Configuration& q, const MassModel& masses,
                        double collision_floor = kDefaultCollisionFloor);
double kinetic_energy(const PhaseState& s, const MassModel& masses);
double total_energy(const PhaseState& s, const MassModel& masses,
                    double collision_floor = kDefaultCollisionFloor);
double angular_momentum(const PhaseState& s, const MassModel& masses);

// Row i holds (1/m_i) dU/dq_i.
Configuration accelerations(const Configuration& q, const MassModel& masses,
                            double collision_floor = kDefaultCollisionFloor);

// d^2 U / dq^2 as an 8x8 matrix in packed coordinate order.
Eigen::Matrix<double, 8, 8> potential_hessian(const Configuration& q, const MassModel& masses,
                                              double collision_floor = kDefaultCollisionFloor);

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace spbc
