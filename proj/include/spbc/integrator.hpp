#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spbc/dynamics.hpp"

namespace spbc {

struct IntegratorSettings {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double min_step = 1e-13;
  double max_step = 0.25;
  double initial_step = 1e-3;
  bool dense_output = true;
  long max_steps = 20'000'000;

  // Throws std::invalid_argument on non-positive tolerances or min >= max step.
  void validate() const;
};

struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
  double max_error_estimate = 0.0;  // largest accepted scaled error
};

using VectorField = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

// Accepted RKF steps with derivatives, interpolated by cubic Hermite
// polynomials between nodes.
class DenseSolution {
 public:
  DenseSolution() = default;

  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Eigen::VectorXd>& states() const { return states_; }
  const Eigen::VectorXd& final_state() const { return states_.back(); }
  const IntegratorStats& stats() const { return stats_; }

  // Throws std::out_of_range outside [t_begin, t_end].
  Eigen::VectorXd operator()(double t) const;

 private:
  friend DenseSolution solve_ode(const VectorField&, double, const Eigen::VectorXd&, double,
                                 const IntegratorSettings&);
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> states_;
  std::vector<Eigen::VectorXd> derivatives_;
  IntegratorStats stats_;
};

// Embedded Runge-Kutta-Fehlberg 4(5) with local extrapolation. When
// settings.dense_output is false only the endpoints are retained.
DenseSolution solve_ode(const VectorField& field, double t0, const Eigen::VectorXd& y0,
                        double t_end, const IntegratorSettings& settings);

struct Trajectory {
  std::vector<PhaseState> samples;
  IntegratorStats stats;
};

// Newtonian four-body flow.
VectorField newton_field(const MassModel& masses, double collision_floor = kDefaultCollisionFloor);

// Newtonian flow augmented by the 16x16 state transition matrix (column-major
// after the 16 state entries).
VectorField newton_variational_field(const MassModel& masses,
                                     double collision_floor = kDefaultCollisionFloor);

// Integrates from state0.t to t_end. With sample_times the trajectory holds
// exactly those instants (dense output); otherwise every accepted step.
Trajectory integrate(const PhaseState& state0, double t_end, const MassModel& masses,
                     const IntegratorSettings& settings = {},
                     const std::optional<std::vector<double>>& sample_times = std::nullopt);

// Final state only.
PhaseState propagate(const PhaseState& state0, double t_end, const MassModel& masses,
                     const IntegratorSettings& settings = {});

struct FlowWithSensitivity {
  PhaseState state;
  Eigen::Matrix<double, 16, 16> stm;  // d y(t_end) / d y(t0), packed order
};

FlowWithSensitivity propagate_with_stm(const PhaseState& state0, double t_end,
                                       const MassModel& masses,
                                       const IntegratorSettings& settings = {});

// Header t,q1x,q1y,...,q4x,q4y,v1x,...,v4y with 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace spbc
