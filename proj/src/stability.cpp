#include "spbc/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <stdexcept>

namespace spbc {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

JacobiState to_jacobi(const PhaseState& s, const MassModel& masses) {
  JacobiState j;
  const auto& m = masses.masses();
  j.mu_chain[0] = m[0];
  for (int i = 1; i < 4; ++i) j.mu_chain[i] = j.mu_chain[i - 1] + m[i];
  for (int i = 1; i < 4; ++i) j.M[i - 1] = m[i] * j.mu_chain[i - 1] / j.mu_chain[i];

  Vec2 c = m[0] * s.q.row(0).transpose();  // mass-weighted partial sum
  Vec2 p = m[0] * s.v.row(0).transpose();  // partial momentum
  for (int i = 1; i < 4; ++i) {
    const Vec2 qi = s.q.row(i).transpose();
    const Vec2 pi = m[i] * s.v.row(i).transpose();
    j.u[i - 1] = qi - c / j.mu_chain[i - 1];
    j.v[i - 1] = (j.mu_chain[i - 1] * pi - m[i] * p) / j.mu_chain[i];
    c += m[i] * qi;
    p += pi;
  }
  j.g4 = c / j.mu_chain[3];
  j.G4 = p;
  return j;
}

Eigen::Matrix<double, 4, 3> jacobi_position_matrix(const MassModel& masses) {
  const auto& m = masses.masses();
  const double mu2 = m[0] + m[1], mu3 = mu2 + m[2], mu4 = mu3 + m[3];
  Eigen::Matrix<double, 4, 3> L = Eigen::Matrix<double, 4, 3>::Zero();
  // columns: u2, u3, u4
  L(3, 2) = mu3 / mu4;
  const double c123_u4 = -m[3] / mu4;
  L(2, 1) = mu2 / mu3;
  L(2, 2) = c123_u4;
  const double c12_u3 = -m[2] / mu3;
  L(1, 0) = m[0] / mu2;
  L(1, 1) = c12_u3;
  L(1, 2) = c123_u4;
  L(0, 0) = -m[1] / mu2;
  L(0, 1) = c12_u3;
  L(0, 2) = c123_u4;
  return L;
}

PhaseState from_jacobi(const JacobiState& j, const MassModel& masses) {
  const Eigen::Matrix<double, 4, 3> L = jacobi_position_matrix(masses);
  const double total = masses.total();
  PhaseState s;
  for (int i = 0; i < 4; ++i) {
    Vec2 q = j.g4, qd = j.G4 / total;
    for (int k = 0; k < 3; ++k) {
      q += L(i, k) * j.u[k];
      qd += L(i, k) * j.v[k] / j.M[k];
    }
    s.q.row(i) = q.transpose();
    s.v.row(i) = qd.transpose();
  }
  return s;
}

ReducedState to_reduced(const PhaseState& s, const MassModel& masses) {
  const JacobiState j = to_jacobi(s, masses);
  std::array<double, 3> r{}, th{}, R{}, Th{};
  for (int k = 0; k < 3; ++k) {
    r[k] = j.u[k].norm();
    if (!(r[k] >= kRadiusFloor)) throw DegenerateRadius("a Jacobi radius vanishes");
    th[k] = std::atan2(j.u[k].y(), j.u[k].x());
    R[k] = j.v[k].dot(j.u[k]) / r[k];
    Th[k] = cross(j.u[k], j.v[k]);
  }
  ReducedState out;
  out.x2 = th[0];
  const double X4 = Th[2];
  const double X3 = Th[1] + X4;
  out.c = Th[0] + X3;
  out.z << r[0], r[1], r[2], wrap_angle(th[1] - th[0]), wrap_angle(th[2] - th[1]), R[0], R[1], R[2], X3, X4;
  return out;
}

namespace {

// Jacobi vectors for x2 = 0 (or a given x2).
std::array<Vec2, 3> polar_positions(const ReducedVector& z, double x2, std::array<double, 3>& angles) {
  angles = {x2, x2 + z[3], x2 + z[3] + z[4]};
  std::array<Vec2, 3> u;
  for (int k = 0; k < 3; ++k) u[k] = z[k] * Vec2(std::cos(angles[k]), std::sin(angles[k]));
  return u;
}

Configuration positions_from_jacobi(const std::array<Vec2, 3>& u, const Eigen::Matrix<double, 4, 3>& L) {
  Configuration q;
  for (int i = 0; i < 4; ++i) {
    Vec2 p = Vec2::Zero();
    for (int k = 0; k < 3; ++k) p += L(i, k) * u[k];
    q.row(i) = p.transpose();
  }
  return q;
}

void check_radii(const ReducedVector& z) {
  for (int k = 0; k < 3; ++k)
    if (!(z[k] >= kRadiusFloor)) throw DegenerateRadius("a Jacobi radius vanishes");
}

}  // namespace

PhaseState from_reduced(const ReducedState& r, const MassModel& masses) {
  check_radii(r.z);
  std::array<double, 3> ang{};
  polar_positions(r.z, r.x2, ang);
  const std::array<double, 3> Th{r.c - r.z[8], r.z[8] - r.z[9], r.z[9]};
  JacobiState j = to_jacobi(PhaseState{}, masses);
  for (int k = 0; k < 3; ++k) {
    const Vec2 e(std::cos(ang[k]), std::sin(ang[k]));
    const Vec2 n(-std::sin(ang[k]), std::cos(ang[k]));
    j.u[k] = r.z[k] * e;
    j.v[k] = r.z[5 + k] * e + (Th[k] / r.z[k]) * n;
  }
  j.g4 = Vec2::Zero();
  j.G4 = Vec2::Zero();
  return from_jacobi(j, masses);
}

double reduced_hamiltonian(const ReducedVector& z, double c, const MassModel& masses) {
  check_radii(z);
  const JacobiState j = to_jacobi(PhaseState{}, masses);
  const std::array<double, 3> Th{c - z[8], z[8] - z[9], z[9]};
  double h = 0.0;
  for (int k = 0; k < 3; ++k)
    h += (z[5 + k] * z[5 + k] * z[k] * z[k] + Th[k] * Th[k]) / (2.0 * j.M[k] * z[k] * z[k]);
  std::array<double, 3> ang{};
  const auto u = polar_positions(z, 0.0, ang);
  return h - potential_energy(positions_from_jacobi(u, jacobi_position_matrix(masses)), masses);
}

ReducedVector reduced_gradient(const ReducedVector& z, double c, const MassModel& masses) {
  check_radii(z);
  const JacobiState j = to_jacobi(PhaseState{}, masses);
  const Eigen::Matrix<double, 4, 3> L = jacobi_position_matrix(masses);
  std::array<double, 3> ang{};
  const auto u = polar_positions(z, 0.0, ang);
  const Configuration q = positions_from_jacobi(u, L);
  const Configuration a = accelerations(q, masses);
  std::array<Vec2, 3> dU{};  // dU/du_k
  for (int k = 0; k < 3; ++k) {
    dU[k] = Vec2::Zero();
    for (int i = 0; i < 4; ++i) dU[k] += L(i, k) * masses.m(i) * a.row(i).transpose();
  }
  std::array<double, 3> dUdr{}, dUdth{};
  for (int k = 0; k < 3; ++k) {
    const Vec2 e(std::cos(ang[k]), std::sin(ang[k]));
    const Vec2 n(-std::sin(ang[k]), std::cos(ang[k]));
    dUdr[k] = dU[k].dot(e);
    dUdth[k] = z[k] * dU[k].dot(n);
  }
  const std::array<double, 3> Th{c - z[8], z[8] - z[9], z[9]};
  ReducedVector g;
  for (int k = 0; k < 3; ++k) {
    const double r = z[k];
    g[k] = -Th[k] * Th[k] / (j.M[k] * r * r * r) - dUdr[k];
    g[5 + k] = z[5 + k] / j.M[k];
  }
  g[3] = -(dUdth[1] + dUdth[2]);
  g[4] = -dUdth[2];
  const double w2 = Th[0] / (j.M[0] * z[0] * z[0]);
  const double w3 = Th[1] / (j.M[1] * z[1] * z[1]);
  const double w4 = Th[2] / (j.M[2] * z[2] * z[2]);
  g[8] = -w2 + w3;
  g[9] = -w3 + w4;
  return g;
}

Eigen::Matrix<double, 10, 10> reduced_hessian(const ReducedVector& z, double c, const MassModel& masses,
                                              double step) {
  Eigen::Matrix<double, 10, 10> H;
  for (int k = 0; k < 10; ++k) {
    const double h = step * std::max(1.0, std::abs(z[k]));
    ReducedVector zp = z, zm = z;
    zp[k] += h;
    zm[k] -= h;
    H.col(k) = (reduced_gradient(zp, c, masses) - reduced_gradient(zm, c, masses)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

Eigen::Matrix<double, 10, 10> symplectic_J10() {
  Eigen::Matrix<double, 10, 10> J = Eigen::Matrix<double, 10, 10>::Zero();
  J.topRightCorner<5, 5>().setIdentity();
  J.bottomLeftCorner<5, 5>() = -Eigen::Matrix<double, 5, 5>::Identity();
  return J;
}

VectorField reduced_field(double c, const MassModel& masses) {
  return [c, masses](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const ReducedVector g = reduced_gradient(y.head<10>(), c, masses);
    dy.resize(10);
    dy.head<5>() = g.tail<5>();
    dy.tail<5>() = -g.head<5>();
  };
}

DenseSolution reduced_flow(const ReducedState& z0, double t_end, const MassModel& masses,
                           const IntegratorSettings& settings) {
  return solve_ode(reduced_field(z0.c, masses), 0.0, Eigen::VectorXd(z0.z), t_end, settings);
}

MonodromyResult monodromy(const PhaseState& seed, double period, const MassModel& masses,
                          const IntegratorSettings& settings, double fd_step) {
  if (period < 0.0) throw NegativeTime("negative period");
  MonodromyResult res;
  res.z0 = to_reduced(seed, masses);
  res.z_end = res.z0.z;
  const Eigen::Matrix<double, 10, 10> J = symplectic_J10();
  if (period == 0.0) return res;

  const double c = res.z0.c;
  auto field = [c, masses, J, fd_step](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const ReducedVector z = y.head<10>();
    const ReducedVector g = reduced_gradient(z, c, masses);
    dy.resize(110);
    dy.head<5>() = g.tail<5>();
    dy.segment<5>(5) = -g.head<5>();
    const Eigen::Matrix<double, 10, 10> A = J * reduced_hessian(z, c, masses, fd_step);
    Eigen::Map<const Eigen::Matrix<double, 10, 10>> X(y.data() + 10);
    Eigen::Map<Eigen::Matrix<double, 10, 10>>(dy.data() + 10) = A * X;
  };
  Eigen::VectorXd y0(110);
  y0.head<10>() = res.z0.z;
  Eigen::Map<Eigen::Matrix<double, 10, 10>>(y0.data() + 10).setIdentity();
  IntegratorSettings s = settings;
  s.dense_output = false;
  const DenseSolution sol = solve_ode(field, 0.0, y0, period, s);
  const Eigen::VectorXd& yf = sol.final_state();
  res.z_end = yf.head<10>();
  res.X = Eigen::Map<const Eigen::Matrix<double, 10, 10>>(yf.data() + 10);
  ReducedVector dz = res.z_end - res.z0.z;
  dz[3] = wrap_angle(dz[3]);
  dz[4] = wrap_angle(dz[4]);
  res.closure = dz.cwiseAbs().maxCoeff();
  res.symplectic_defect = (res.X.transpose() * J * res.X - J).cwiseAbs().maxCoeff();
  res.conditioning_warning = res.symplectic_defect > 1e-5;
  return res;
}

std::string to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::LinearlyStable:
      return "LinearlyStable";
    case StabilityVerdict::SpectrallyStable:
      return "SpectrallyStable";
    case StabilityVerdict::Unstable:
      return "Unstable";
    case StabilityVerdict::Indeterminate:
      return "Indeterminate";
  }
  return "Unknown";
}

MonodromyReport stability_verdict(const Eigen::Matrix<double, 10, 10>& X, double tol) {
  MonodromyReport rep;
  const Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(X);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw SingularMatrix("monodromy matrix is singular");
  const Eigen::Matrix<double, 10, 10> W = 0.5 * (X + lu.inverse());
  const Eigen::Matrix<double, 10, 10> J = symplectic_J10();
  rep.symplectic_defect = (X.transpose() * J * X - J).cwiseAbs().maxCoeff();

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> ex(X, false);
  for (int i = 0; i < 10; ++i) rep.reduced_multipliers.push_back(ex.eigenvalues()[i]);
  for (const auto& a : rep.reduced_multipliers) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : rep.reduced_multipliers) best = std::min(best, std::abs(a * b - 1.0));
    rep.reciprocal_defect = std::max(rep.reciprocal_defect, best);
  }

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> ew(W, false);
  for (int i = 0; i < 10; ++i) rep.w_eigenvalues.push_back(ew.eigenvalues()[i]);
  std::sort(rep.w_eigenvalues.begin(), rep.w_eigenvalues.end(),
            [](const auto& a, const auto& b) { return a.real() < b.real(); });

  for (const auto& w : rep.w_eigenvalues) {
    auto& sp = rep.w_spectrum;
    if (!sp.empty() && std::abs(w.real() - sp.back().first) <= tol) {
      sp.back().first = (sp.back().first * sp.back().second + w.real()) / (sp.back().second + 1);
      ++sp.back().second;
    } else {
      sp.emplace_back(w.real(), 1);
    }
  }

  for (const auto& w : rep.w_eigenvalues) {
    if (std::abs(w.imag()) > tol) {
      rep.verdict = StabilityVerdict::Unstable;
      rep.note = "non-real W eigenvalue";
      return rep;
    }
    if (w.real() > 1.0 + tol || w.real() < -1.0 - tol) {
      rep.verdict = StabilityVerdict::Unstable;
      rep.note = "W eigenvalue outside [-1, 1]";
      return rep;
    }
  }
  std::vector<double> pairs;
  for (int i = 0; i < 10; i += 2) {
    const double a = rep.w_eigenvalues[i].real(), b = rep.w_eigenvalues[i + 1].real();
    if (std::abs(a - b) > tol) {
      rep.verdict = StabilityVerdict::Indeterminate;
      rep.note = "W eigenvalues do not pair";
      return rep;
    }
    pairs.push_back(0.5 * (a + b));
  }
  std::vector<double> rest;
  int trivial = 0;
  for (double p : pairs) {
    if (std::abs(p - 1.0) <= tol)
      ++trivial;
    else
      rest.push_back(p);
  }
  if (trivial != 1) {
    rep.verdict = StabilityVerdict::Indeterminate;
    rep.note = "expected exactly one trivial pair at +1, found " + std::to_string(trivial);
    return rep;
  }
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < rest.size(); ++i) rep.min_gap = std::min(rep.min_gap, rest[i + 1] - rest[i]);
  for (double p : rest) {
    if (std::abs(p) >= 1.0 - tol) {
      rep.verdict = StabilityVerdict::Indeterminate;
      rep.note = "nontrivial W value at the boundary of [-1, 1]";
      return rep;
    }
  }
  if (rep.min_gap <= tol) {
    rep.verdict = StabilityVerdict::SpectrallyStable;
    rep.note = "nontrivial W values are not distinct";
    return rep;
  }
  rep.verdict = StabilityVerdict::LinearlyStable;
  return rep;
}

FullMonodromy full_monodromy_check(const PhaseState& seed, double period, const MassModel& masses,
                                   const IntegratorSettings& settings) {
  PhaseState s = seed;
  s.t = 0.0;
  const FlowWithSensitivity f = propagate_with_stm(s, period, masses, settings);
  Eigen::EigenSolver<Eigen::Matrix<double, 16, 16>> es(f.stm, false);
  FullMonodromy out;
  for (int i = 0; i < 16; ++i) {
    const std::complex<double> l = es.eigenvalues()[i];
    out.multipliers.push_back(l);
    out.max_modulus = std::max(out.max_modulus, std::abs(l));
    if (std::abs(l - 1.0) < 1e-3) ++out.near_one;
  }
  return out;
}

void StabilitySettings::validate() const {
  integrator.validate();
  if (!(tol > 0.0 && tol < 0.5)) throw std::invalid_argument("stability tol must lie in (0, 0.5)");
  if (!(fd_step > 0.0 && fd_step < 1e-2)) throw std::invalid_argument("fd_step must lie in (0, 1e-2)");
}

MonodromyReport analyze_stability(const PhaseState& seed, double period, const MassModel& masses,
                                  const StabilitySettings& settings) {
  settings.validate();
  if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
  const MonodromyResult mo = monodromy(seed, period, masses, settings.integrator, settings.fd_step);
  MonodromyReport rep = stability_verdict(mo.X, settings.tol);
  rep.closure = mo.closure;
  rep.conditioning_warning = mo.conditioning_warning;
  if (settings.full) rep.full = full_monodromy_check(seed, period, masses, settings.integrator);
  return rep;
}

}  // namespace spbc
