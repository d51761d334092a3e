#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "spbc/boundary.hpp"
#include "spbc/dynamics.hpp"
#include "spbc/integrator.hpp"

namespace spbc {

// |pi/2 - theta| / T below pi, |3pi/2 - theta| / T from pi on.
double omega_from_theta(double theta, double T = 1.0);

// Signed angular speed that carries the rhombus from the start boundary to
// the end boundary in time T.
double signed_omega(double theta, double T = 1.0);

struct RhombusRadii {
  double r1 = 0.0;  // bodies 1 and 3
  double r2 = 0.0;  // bodies 2 and 4
  int iterations = 0;
  double residual = 0.0;
};

// Residuals of the two circular relative-equilibrium conditions.
Eigen::Vector2d rhombus_residuals(double omega, double m1, double m2, double r1, double r2);

// Newton iteration in log-radii. Throws NoConvergence.
RhombusRadii solve_rhombus_radii(double omega, double m1, double m2);

struct HomographicFamily {
  double omega = 0.0;  // signed; positive is counter-clockwise
  double r1 = 0.0;
  double r2 = 0.0;
  double alpha0 = 0.0;
  std::array<double, 4> rho{};  // (k-1) pi/2 + alpha0
  double min_period = 0.0;      // 2 pi / |omega|

  PhaseState state(double t) const;
};

// Throws DegenerateOmega for theta in {pi/2, 3pi/2}.
HomographicFamily homographic_family(double theta, const MassModel& masses, double T = 1.0);

double homographic_action(double theta, double mu, double T = 1.0);
// Same, for an explicitly chosen angular speed (any branch).
double homographic_action_for_omega(double omega, double mu, double T = 1.0);
// rho^(2/3) A(theta, mu) with rho = omega(k theta) / omega(theta).
double homographic_action_scaled(double theta, double k, double mu, double T = 1.0);

// integral over [0, T] of 1 / |d0 + (t/T) delta| dt.
double segment_inverse_distance_integral(const Vec2& d0, const Vec2& delta, double T = 1.0,
                                         double collision_floor = kDefaultCollisionFloor);
// Same integral by adaptive Gauss-Kronrod quadrature.
double segment_inverse_distance_quadrature(const Vec2& d0, const Vec2& delta, double T = 1.0);

// Action of the constant-velocity path between the two boundaries.
double test_path_action(double theta, double mu, const BoundaryParams& a_test, double T = 1.0);

struct TestParamEntry {
  double theta;
  double mu;
  BoundaryParams a;
};

// Four minimizers at theta = 4pi/5 with mu = 1, 2, 0.8, 0.5, used as test paths.
const std::array<TestParamEntry, 4>& reference_test_params();

struct RegionTransition {
  double mu = 0.0;
  double theta_lo = 0.0;  // grid bracket
  double theta_hi = 0.0;
  double theta_root = 0.0;  // bisection refinement
  bool entering = false;    // mask switches false -> true with increasing theta
};

struct OmegaRegionScan {
  std::vector<double> theta_grid;
  std::vector<double> mu_grid;
  std::vector<BoundaryParams> a_test;
  std::vector<std::vector<bool>> mask;  // [mu index][theta index]
  std::vector<RegionTransition> transitions;
  std::vector<std::string> diagnostics;

  bool at(std::size_t mu_index, std::size_t theta_index) const {
    return mask[mu_index][theta_index];
  }
};

// Inclusive uniform grid lo, lo + step, ..., hi.
std::vector<double> uniform_grid(double lo, double hi, double step);

// Mask entry is true where some test path undercuts the homographic action
// and theta != pi. Throws std::invalid_argument on empty inputs.
OmegaRegionScan scan_region(const std::vector<double>& theta_grid,
                            const std::vector<double>& mu_grid,
                            const std::vector<BoundaryParams>& a_test_list, double T = 1.0);

// CSV with a theta/pi header row and one row per mu.
void write_region_csv(std::ostream& out, const OmegaRegionScan& scan);

// Samples the homographic solution at `samples` uniform times on [0, T].
Trajectory build_homographic_trajectory(double theta, double mu, double T, int samples);

// Boundary parameters of the homographic solution.
BoundaryParams homographic_boundary_params(double theta, const MassModel& masses, double T = 1.0);

}  // namespace spbc
