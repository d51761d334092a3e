#include "spbc/shooting.hpp"

#include <cmath>
#include <sstream>

namespace spbc {

Eigen::Matrix<double, 5, 8> start_velocity_constraints(double theta, const MassModel& m) {
  const double s = std::sin(theta), c = std::cos(theta);
  Eigen::Matrix<double, 5, 8> A = Eigen::Matrix<double, 5, 8>::Zero();
  for (int i = 0; i < 4; ++i) {
    A(0, 2 * i) = m.m(i);
    A(1, 2 * i + 1) = m.m(i);
  }
  // -v21 c + v22 s + v41 c - v42 s
  A(2, 2) = -c;
  A(2, 3) = s;
  A(2, 6) = c;
  A(2, 7) = -s;
  // m2 (v21 s + v22 c) - (m2 + m4)(v31 s + v32 c) + m4 (v41 s + v42 c)
  A(3, 2) = m.m(1) * s;
  A(3, 3) = m.m(1) * c;
  A(3, 4) = -(m.m(1) + m.m(3)) * s;
  A(3, 5) = -(m.m(1) + m.m(3)) * c;
  A(3, 6) = m.m(3) * s;
  A(3, 7) = m.m(3) * c;
  // -(v11 s + v12 c) + (v31 s + v32 c)
  A(4, 0) = -s;
  A(4, 1) = -c;
  A(4, 4) = s;
  A(4, 5) = c;
  return A;
}

Eigen::Matrix<double, 8, 3> natural_velocity_basis(double theta, const MassModel& masses) {
  const Eigen::Matrix<double, 5, 8> A = start_velocity_constraints(theta, masses);
  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 8>> svd(A, Eigen::ComputeFullV);
  return svd.matrixV().rightCols<3>();
}

Eigen::Vector4d end_velocity_conditions(const Velocities& v) {
  return {v(0, 0) - v(2, 0), v(0, 1) + v(2, 1), v(1, 1), v(3, 1)};
}

namespace {

struct Shooter {
  double theta;
  MassModel masses;
  ShootingSettings settings;
  Eigen::Matrix<double, 8, 3> la, lb, nv;
  Eigen::Matrix<double, 8, 8> proj;  // I - lb lb^+

  Shooter(double th, const MassModel& m, const ShootingSettings& s)
      : theta(th), masses(m), settings(s) {
    la = start_template(theta, masses);
    lb = end_template(masses);
    nv = natural_velocity_basis(theta, masses);
    proj = Eigen::Matrix<double, 8, 8>::Identity() -
           lb * (lb.transpose() * lb).inverse() * lb.transpose();
  }

  PhaseState initial(const Eigen::Matrix<double, 6, 1>& x) const {
    PhaseState s;
    s.q = unpack_config(la * x.head<3>());
    s.v = unpack_config(nv * x.tail<3>());
    return s;
  }

  Eigen::Matrix<double, 12, 1> residual_of(const PhaseState& end) const {
    Eigen::Matrix<double, 12, 1> r;
    r.head<8>() = proj * pack_config(end.q);
    r.tail<4>() = end_velocity_conditions(end.v);
    return r;
  }

  void eval(const Eigen::Matrix<double, 6, 1>& x, Eigen::Matrix<double, 12, 1>& r,
            Eigen::Matrix<double, 12, 6>* J) const {
    const PhaseState s0 = initial(x);
    if (!J) {
      r = residual_of(propagate(s0, settings.T, masses, settings.integrator));
      return;
    }
    const FlowWithSensitivity f = propagate_with_stm(s0, settings.T, masses, settings.integrator);
    r = residual_of(f.state);
    Eigen::Matrix<double, 16, 6> dy0 = Eigen::Matrix<double, 16, 6>::Zero();
    dy0.topLeftCorner<8, 3>() = la;
    dy0.bottomRightCorner<8, 3>() = nv;
    const Eigen::Matrix<double, 16, 6> dyT = f.stm * dy0;
    Eigen::Matrix<double, 4, 16> dv = Eigen::Matrix<double, 4, 16>::Zero();
    dv(0, 8) = 1.0;
    dv(0, 12) = -1.0;
    dv(1, 9) = 1.0;
    dv(1, 13) = 1.0;
    dv(2, 11) = 1.0;
    dv(3, 15) = 1.0;
    J->topRows<8>() = proj * dyT.topRows<8>();
    J->bottomRows<4>() = dv * dyT;
  }
};

}  // namespace

RefinedSeed refine_initial_state(const PhaseState& guess, double theta, const MassModel& masses,
                                 const ShootingSettings& settings) {
  const Shooter sh(theta, masses, settings);
  const Membership ma = membership_A(guess.q, theta, masses, 1e-3);
  if (!ma.member) throw ShootingDivergence("initial guess is not close to the start boundary");
  Eigen::Matrix<double, 6, 1> x;
  x.head<3>() = ma.params;
  x.tail<3>() = sh.nv.transpose() * pack_config(guess.v);

  Eigen::Matrix<double, 12, 1> r, r_t;
  Eigen::Matrix<double, 12, 6> J;
  double lambda = settings.initial_damping;
  RefinedSeed out;
  sh.eval(x, r, &J);
  int it = 0;
  double best = r.cwiseAbs().maxCoeff();
  for (; it < settings.max_iterations && best >= settings.tol; ++it) {
    const Eigen::Matrix<double, 6, 6> A = J.transpose() * J;
    const Eigen::Matrix<double, 6, 1> g = J.transpose() * r;
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::Matrix<double, 6, 6> Ad = A;
      for (int i = 0; i < 6; ++i) Ad(i, i) += lambda * std::max(A(i, i), 1e-12);
      const Eigen::Matrix<double, 6, 1> dx = Ad.ldlt().solve(-g);
      const Eigen::Matrix<double, 6, 1> x_t = x + dx;
      try {
        sh.eval(x_t, r_t, nullptr);
      } catch (const Error&) {
        lambda *= 10.0;
        continue;
      }
      if (r_t.squaredNorm() < r.squaredNorm()) {
        x = x_t;
        lambda = std::max(lambda / 10.0, 1e-15);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
    sh.eval(x, r, &J);
    best = r.cwiseAbs().maxCoeff();
  }

  out.state = sh.initial(x);
  out.residuals = r;
  out.residual_norm = r.cwiseAbs().maxCoeff();
  out.iterations = it;
  if (!(out.residual_norm < settings.tol)) {
    std::ostringstream msg;
    msg << "shooting stalled with residual " << out.residual_norm << " after " << it << " iterations";
    throw ShootingDivergence(msg.str());
  }
  const PhaseState end = propagate(out.state, settings.T, masses, settings.integrator);
  const Membership mb = membership_B(end.q, masses, 1.0);
  Eigen::Matrix<double, 6, 1> p;
  p << x.head<3>(), mb.params;
  out.params = BoundaryParams(p);
  return out;
}

RefinedSeed refine_to_seed(const MinimizationResult& result, const MassModel& masses,
                           const ShootingSettings& settings) {
  const DiscretePath& path = result.path;
  path.validate();
  ShootingSettings s = settings;
  s.T = path.T;
  PhaseState guess;
  guess.q = path.nodes[0];
  guess.v = (-3.0 * path.nodes[0] + 4.0 * path.nodes[1] - path.nodes[2]) / (2.0 * path.dt());
  return refine_initial_state(guess, path.theta, masses, s);
}

Eigen::VectorXd shooting_residuals(const PhaseState& state0, double theta, const MassModel& masses,
                                   const ShootingSettings& settings) {
  const Shooter sh(theta, masses, settings);
  PhaseState s = state0;
  s.t = 0.0;
  return sh.residual_of(propagate(s, settings.T, masses, settings.integrator));
}

}  // namespace spbc
