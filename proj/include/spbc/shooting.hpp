#pragma once

#include <Eigen/Dense>

#include "spbc/boundary.hpp"
#include "spbc/integrator.hpp"
#include "spbc/minimizer.hpp"

namespace spbc {

// Orthonormal basis (8x3) of initial velocities with zero total momentum that
// satisfy the three natural conditions at the start boundary.
Eigen::Matrix<double, 8, 3> natural_velocity_basis(double theta, const MassModel& masses);

// Rows of the five linear conditions on packed initial velocities: momentum
// x, momentum y, and the three natural conditions.
Eigen::Matrix<double, 5, 8> start_velocity_constraints(double theta, const MassModel& masses);

// (v11 - v31, v12 + v32, v22, v42) at the end boundary.
Eigen::Vector4d end_velocity_conditions(const Velocities& v);

struct ShootingSettings {
  IntegratorSettings integrator{1e-13, 1e-13, 1e-13, 0.05, 1e-3, false, 20'000'000};
  double tol = 1e-10;
  int max_iterations = 60;
  double initial_damping = 1e-6;
  double T = 1.0;
};

struct RefinedSeed {
  PhaseState state;
  BoundaryParams params;  // (a1,a2,a3) from the unknowns, (a4,a5,a6) recovered at T
  double residual_norm = 0.0;
  Eigen::VectorXd residuals;  // 8 end-template deviations then 4 velocity conditions
  int iterations = 0;
};

// Levenberg-Marquardt shooting with unknowns (a1,a2,a3) and the coordinates
// of the initial velocity in natural_velocity_basis. Throws ShootingDivergence.
RefinedSeed refine_initial_state(const PhaseState& guess, double theta, const MassModel& masses,
                                 const ShootingSettings& settings = {});

// Seeds velocities from the discrete minimizer by one-sided second-order
// differences and refines.
RefinedSeed refine_to_seed(const MinimizationResult& result, const MassModel& masses,
                           const ShootingSettings& settings = {});

// Residual vector for a candidate initial state (used for reporting).
Eigen::VectorXd shooting_residuals(const PhaseState& state0, double theta, const MassModel& masses,
                                   const ShootingSettings& settings = {});

}  // namespace spbc
