#pragma once

#include <Eigen/Dense>
#include <optional>

#include "spbc/dynamics.hpp"

namespace spbc {

// a = (a1, ..., a6); the first three shape the start boundary, the rest the end.
struct BoundaryParams {
  Eigen::Matrix<double, 6, 1> a = Eigen::Matrix<double, 6, 1>::Zero();

  BoundaryParams() = default;
  explicit BoundaryParams(const Eigen::Matrix<double, 6, 1>& values);
  BoundaryParams(double a1, double a2, double a3, double a4, double a5, double a6);

  Eigen::Vector3d start() const { return a.head<3>(); }
  Eigen::Vector3d end() const { return a.tail<3>(); }
  double operator[](int i) const { return a[i]; }

  // (a1,a2,a3) == (a4,a5,a6) to relative tolerance.
  bool symmetric(double rel_tol = 1e-6) const;
};

struct RotationAngle {
  double theta = 0.0;
  std::optional<long> P;
  std::optional<long> Q;

  static RotationAngle radians(double theta);
  // theta = P pi / Q with the fraction reduced. Throws std::invalid_argument
  // for non-positive P or Q.
  static RotationAngle rational(long P, long Q);

  bool is_rational() const { return P.has_value(); }
  // pi/2, pi, 3pi/2 (within 1e-12), where the minimization is not coercive.
  bool excluded_for_minimization() const;
};

// Throws ExcludedAngle when theta is one of the excluded angles.
void require_admissible(double theta);

Eigen::Matrix2d rotation_matrix(double theta);

// Linear maps from (a1,a2,a3) and (a4,a5,a6) to packed configurations.
Eigen::Matrix<double, 8, 3> start_template(double theta, const MassModel& masses);
Eigen::Matrix<double, 8, 3> end_template(const MassModel& masses);

Configuration build_qstart(double a1, double a2, double a3, double theta, const MassModel& masses);
Configuration build_qend(double a4, double a5, double a6, const MassModel& masses);
Configuration build_qstart(const BoundaryParams& p, double theta, const MassModel& masses);
Configuration build_qend(const BoundaryParams& p, const MassModel& masses);

Eigen::Matrix<double, 8, 1> pack_config(const Configuration& q);
Configuration unpack_config(const Eigen::Ref<const Eigen::VectorXd>& x);

struct Membership {
  bool member = false;
  Eigen::Vector3d params = Eigen::Vector3d::Zero();
  double residual = 0.0;  // max abs coordinate deviation from the template
};

inline constexpr double kDefaultMembershipTol = 1e-9;

Membership membership_A(const Configuration& q, double theta, const MassModel& masses,
                        double tol = kDefaultMembershipTol);
Membership membership_B(const Configuration& q, const MassModel& masses,
                        double tol = kDefaultMembershipTol);

}  // namespace spbc
