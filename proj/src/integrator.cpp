#include "spbc/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spbc {

void IntegratorSettings::validate() const {
  if (!(abs_tol > 0.0 && rel_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (!(min_step > 0.0 && min_step < max_step))
    throw std::invalid_argument("require 0 < min_step < max_step");
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
}

Eigen::VectorXd DenseSolution::operator()(double t) const {
  if (times_.empty() || t < times_.front() || t > times_.back())
    throw std::out_of_range("dense output requested outside the integrated interval");
  if (times_.size() == 1) return states_.front();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t k = static_cast<std::size_t>(std::distance(times_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, times_.size() - 1) - 1;
  const double t0 = times_[k];
  const double h = times_[k + 1] - t0;
  if (h <= 0.0) return states_[k];
  const double s = (t - t0) / h;
  if (s == 0.0) return states_[k];
  if (s == 1.0) return states_[k + 1];
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * states_[k] + h10 * h * derivatives_[k] + h01 * states_[k + 1] +
         h11 * h * derivatives_[k + 1];
}

namespace {

// Fehlberg 4(5) tableau.
constexpr double c2 = 1.0 / 4, c3 = 3.0 / 8, c4 = 12.0 / 13, c5 = 1.0, c6 = 1.0 / 2;
constexpr double a21 = 1.0 / 4;
constexpr double a31 = 3.0 / 32, a32 = 9.0 / 32;
constexpr double a41 = 1932.0 / 2197, a42 = -7200.0 / 2197, a43 = 7296.0 / 2197;
constexpr double a51 = 439.0 / 216, a52 = -8.0, a53 = 3680.0 / 513, a54 = -845.0 / 4104;
constexpr double a61 = -8.0 / 27, a62 = 2.0, a63 = -3544.0 / 2565, a64 = 1859.0 / 4104,
                 a65 = -11.0 / 40;
constexpr double b1 = 16.0 / 135, b3 = 6656.0 / 12825, b4 = 28561.0 / 56430, b5 = -9.0 / 50,
                 b6 = 2.0 / 55;
// fifth order minus fourth order weights
constexpr double e1 = b1 - 25.0 / 216, e3 = b3 - 1408.0 / 2565, e4 = b4 - 2197.0 / 4104,
                 e5 = b5 + 1.0 / 5, e6 = b6;

constexpr double kSafety = 0.9;

}  // namespace

DenseSolution solve_ode(const VectorField& field, double t0, const Eigen::VectorXd& y0,
                        double t_end, const IntegratorSettings& settings) {
  settings.validate();
  if (!(t_end >= t0)) throw std::invalid_argument("t_end must not precede the start time");

  DenseSolution sol;
  const Eigen::Index n = y0.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n), y5(n), err(n);

  field(t0, y0, k1);
  ++sol.stats_.rhs_evaluations;
  sol.times_.push_back(t0);
  sol.states_.push_back(y0);
  sol.derivatives_.push_back(k1);
  if (t_end == t0) return sol;

  Eigen::VectorXd y = y0;
  double t = t0;
  double h = std::min({settings.initial_step, settings.max_step, t_end - t0});
  bool last_rejected = false;

  while (t < t_end) {
    if (sol.stats_.steps + sol.stats_.rejected >= settings.max_steps)
      throw StepFailure("integrator exceeded the maximum number of steps");
    bool final_step = false;
    if (t + h >= t_end || t + 1.01 * h >= t_end) {
      h = t_end - t;
      final_step = true;
    }

    tmp = y + h * a21 * k1;
    field(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    field(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    field(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    field(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    field(t + c6 * h, tmp, k6);
    sol.stats_.rhs_evaluations += 5;

    y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6);

    double e = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale =
          settings.abs_tol + settings.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      e = std::max(e, std::abs(err[i]) / scale);
    }
    if (!std::isfinite(e)) e = 1e10;

    if (e <= 1.0) {
      t = final_step ? t_end : t + h;
      y = y5;
      field(t, y, k1);
      ++sol.stats_.rhs_evaluations;
      ++sol.stats_.steps;
      sol.stats_.max_error_estimate = std::max(sol.stats_.max_error_estimate, e);
      if (settings.dense_output || t == t_end) {
        sol.times_.push_back(t);
        sol.states_.push_back(y);
        sol.derivatives_.push_back(k1);
      }
      double factor = e > 0.0 ? kSafety * std::pow(e, -0.2) : 5.0;
      factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * factor, settings.max_step);
      last_rejected = false;
    } else {
      ++sol.stats_.rejected;
      const double factor = std::clamp(kSafety * std::pow(e, -0.25), 0.1, 0.9);
      h *= factor;
      last_rejected = true;
      if (h < settings.min_step) {
        std::ostringstream msg;
        msg << "step size underflow at t = " << t;
        throw StepFailure(msg.str());
      }
    }
  }
  return sol;
}

VectorField newton_field(const MassModel& masses, double collision_floor) {
  return [masses, collision_floor](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    Configuration q;
    for (int i = 0; i < 4; ++i) {
      q(i, 0) = y[2 * i];
      q(i, 1) = y[2 * i + 1];
    }
    const Configuration a = accelerations(q, masses, collision_floor);
    dy.resize(16);
    dy.head<8>() = y.segment<8>(8);
    for (int i = 0; i < 4; ++i) {
      dy[8 + 2 * i] = a(i, 0);
      dy[8 + 2 * i + 1] = a(i, 1);
    }
  };
}

VectorField newton_variational_field(const MassModel& masses, double collision_floor) {
  return [masses, collision_floor](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    Configuration q;
    for (int i = 0; i < 4; ++i) {
      q(i, 0) = y[2 * i];
      q(i, 1) = y[2 * i + 1];
    }
    const Configuration a = accelerations(q, masses, collision_floor);
    Eigen::Matrix<double, 8, 8> h = potential_hessian(q, masses, collision_floor);
    for (int r = 0; r < 8; ++r) h.row(r) /= masses.m(r / 2);
    dy.resize(16 + 256);
    dy.head<8>() = y.segment<8>(8);
    for (int i = 0; i < 4; ++i) {
      dy[8 + 2 * i] = a(i, 0);
      dy[8 + 2 * i + 1] = a(i, 1);
    }
    Eigen::Map<const Eigen::Matrix<double, 16, 16>> phi(y.data() + 16);
    Eigen::Map<Eigen::Matrix<double, 16, 16>> dphi(dy.data() + 16);
    dphi.topRows<8>() = phi.bottomRows<8>();
    dphi.bottomRows<8>() = h * phi.topRows<8>();
  };
}

Trajectory integrate(const PhaseState& state0, double t_end, const MassModel& masses,
                     const IntegratorSettings& settings,
                     const std::optional<std::vector<double>>& sample_times) {
  IntegratorSettings s = settings;
  if (sample_times) s.dense_output = true;
  const Eigen::VectorXd y0 = state0.pack();
  const DenseSolution sol = solve_ode(newton_field(masses), state0.t, y0, t_end, s);
  Trajectory out;
  out.stats = sol.stats();
  if (sample_times) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double ts : *sample_times) {
      if (!(ts > prev)) throw std::invalid_argument("sample times must be strictly increasing");
      prev = ts;
      out.samples.push_back(PhaseState::unpack(sol(ts), ts));
    }
  } else {
    for (std::size_t k = 0; k < sol.times().size(); ++k)
      out.samples.push_back(PhaseState::unpack(sol.states()[k], sol.times()[k]));
  }
  return out;
}

PhaseState propagate(const PhaseState& state0, double t_end, const MassModel& masses,
                     const IntegratorSettings& settings) {
  IntegratorSettings s = settings;
  s.dense_output = false;
  const DenseSolution sol = solve_ode(newton_field(masses), state0.t, state0.pack(), t_end, s);
  return PhaseState::unpack(sol.final_state(), t_end);
}

FlowWithSensitivity propagate_with_stm(const PhaseState& state0, double t_end,
                                       const MassModel& masses,
                                       const IntegratorSettings& settings) {
  IntegratorSettings s = settings;
  s.dense_output = false;
  Eigen::VectorXd y0(16 + 256);
  y0.head<16>() = state0.pack();
  Eigen::Map<Eigen::Matrix<double, 16, 16>>(y0.data() + 16).setIdentity();
  const DenseSolution sol =
      solve_ode(newton_variational_field(masses), state0.t, y0, t_end, s);
  FlowWithSensitivity out;
  out.state = PhaseState::unpack(sol.final_state().head<16>(), t_end);
  out.stm = Eigen::Map<const Eigen::Matrix<double, 16, 16>>(sol.final_state().data() + 16);
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t";
  for (int i = 1; i <= 4; ++i) out << ",q" << i << "x,q" << i << "y";
  for (int i = 1; i <= 4; ++i) out << ",v" << i << "x,v" << i << "y";
  out << "\n";
  char buf[32];
  for (const PhaseState& s : trajectory.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    out << buf;
    const auto y = s.pack();
    for (int k = 0; k < 16; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", y[k]);
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace spbc
