#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "spbc/dynamics.hpp"
#include "spbc/integrator.hpp"

namespace spbc {

struct JacobiState {
  Vec2 g4 = Vec2::Zero();  // center of mass
  Vec2 G4 = Vec2::Zero();  // total momentum
  std::array<Vec2, 3> u{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};  // u2, u3, u4
  std::array<Vec2, 3> v{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};  // v2, v3, v4
  std::array<double, 4> mu_chain{};                                  // mu_1 .. mu_4
  std::array<double, 3> M{};                                         // M_2 .. M_4
};

JacobiState to_jacobi(const PhaseState& s, const MassModel& masses);
PhaseState from_jacobi(const JacobiState& j, const MassModel& masses);

// Cartesian positions as combinations of (u2, u3, u4) when g4 = 0.
Eigen::Matrix<double, 4, 3> jacobi_position_matrix(const MassModel& masses);

using ReducedVector = Eigen::Matrix<double, 10, 1>;

// z = (r2, r3, r4, x3, x4, R2, R3, R4, X3, X4); c = X2 is the angular momentum
// and x2 the dropped reference angle.
struct ReducedState {
  ReducedVector z = ReducedVector::Zero();
  double c = 0.0;
  double x2 = 0.0;
};

inline constexpr double kRadiusFloor = 1e-10;

// Throws DegenerateRadius.
ReducedState to_reduced(const PhaseState& s, const MassModel& masses);
// Inverse with zero center of mass and momentum.
PhaseState from_reduced(const ReducedState& r, const MassModel& masses);

double reduced_hamiltonian(const ReducedVector& z, double c, const MassModel& masses);
ReducedVector reduced_gradient(const ReducedVector& z, double c, const MassModel& masses);
// Symmetrized central differences of the analytic gradient.
Eigen::Matrix<double, 10, 10> reduced_hessian(const ReducedVector& z, double c, const MassModel& masses,
                                              double step = 1e-6);

Eigen::Matrix<double, 10, 10> symplectic_J10();

VectorField reduced_field(double c, const MassModel& masses);
DenseSolution reduced_flow(const ReducedState& z0, double t_end, const MassModel& masses,
                           const IntegratorSettings& settings = {});

struct MonodromyResult {
  Eigen::Matrix<double, 10, 10> X = Eigen::Matrix<double, 10, 10>::Identity();
  ReducedState z0;
  ReducedVector z_end = ReducedVector::Zero();
  double closure = 0.0;            // |z(period) - z0| with angles wrapped
  double symplectic_defect = 0.0;  // |X^T J X - J|_inf
  bool conditioning_warning = false;
};

MonodromyResult monodromy(const PhaseState& seed, double period, const MassModel& masses,
                          const IntegratorSettings& settings = {}, double fd_step = 1e-6);

enum class StabilityVerdict { LinearlyStable, SpectrallyStable, Unstable, Indeterminate };
std::string to_string(StabilityVerdict v);

struct FullMonodromy {
  std::vector<std::complex<double>> multipliers;  // 16
  double max_modulus = 0.0;
  int near_one = 0;  // within 1e-3 of +1
};

struct MonodromyReport {
  std::vector<std::complex<double>> reduced_multipliers;  // 10
  std::vector<std::complex<double>> w_eigenvalues;        // 10, sorted by real part
  std::vector<std::pair<double, int>> w_spectrum;         // value, multiplicity
  double min_gap = 0.0;            // smallest separation among nontrivial W values
  double reciprocal_defect = 0.0;  // max_i min_j |lambda_i lambda_j - 1|
  double symplectic_defect = 0.0;
  double closure = 0.0;  // reduced orbit, when computed from a seed
  bool conditioning_warning = false;
  std::optional<FullMonodromy> full;
  StabilityVerdict verdict = StabilityVerdict::Indeterminate;
  std::string note;
};

// W = (X + X^-1)/2 analysis. Throws SingularMatrix.
MonodromyReport stability_verdict(const Eigen::Matrix<double, 10, 10>& X, double tol = 1e-4);

FullMonodromy full_monodromy_check(const PhaseState& seed, double period, const MassModel& masses,
                                   const IntegratorSettings& settings = {});

struct StabilitySettings {
  IntegratorSettings integrator;
  double tol = 1e-4;
  double fd_step = 1e-6;
  bool full = true;  // also run the 16-dimensional check

  void validate() const;
};

// Reduced monodromy over `period`, verdict, and optionally the full check.
MonodromyReport analyze_stability(const PhaseState& seed, double period, const MassModel& masses,
                                  const StabilitySettings& settings = {});

}  // namespace spbc
