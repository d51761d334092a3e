#include "spbc/action.hpp"

#include <cmath>
#include <stdexcept>

namespace spbc {

DiscretePath DiscretePath::linear(const BoundaryParams& params, double theta,
                                  const MassModel& masses, double T, int N) {
  if (N < 2) throw std::invalid_argument("a discrete path needs N >= 2");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  DiscretePath p;
  p.T = T;
  p.N = N;
  p.params = params;
  p.theta = theta;
  const Configuration q0 = build_qstart(params, theta, masses);
  const Configuration q1 = build_qend(params, masses);
  p.nodes.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    const double s = static_cast<double>(k) / N;
    p.nodes[k] = (1.0 - s) * q0 + s * q1;
  }
  p.nodes[N] = q1;
  return p;
}

DiscretePath DiscretePath::resampled(int new_N) const {
  validate();
  if (new_N < 2) throw std::invalid_argument("a discrete path needs N >= 2");
  DiscretePath p = *this;
  p.N = new_N;
  p.nodes.assign(new_N + 1, Configuration::Zero());
  for (int k = 0; k <= new_N; ++k) {
    const double x = static_cast<double>(k) * N / new_N;
    int j = static_cast<int>(std::floor(x));
    if (j >= N) j = N - 1;
    const double s = x - j;
    p.nodes[k] = (1.0 - s) * nodes[j] + s * nodes[j + 1];
  }
  p.nodes.front() = nodes.front();
  p.nodes.back() = nodes.back();
  return p;
}

void DiscretePath::set_params(const BoundaryParams& p, const MassModel& masses) {
  params = p;
  nodes.front() = build_qstart(p, theta, masses);
  nodes.back() = build_qend(p, masses);
}

void DiscretePath::validate() const {
  if (N < 2) throw std::invalid_argument("a discrete path needs N >= 2");
  if (static_cast<int>(nodes.size()) != N + 1)
    throw std::invalid_argument("discrete path node count does not match N");
}

double discretized_action(const DiscretePath& path, const MassModel& masses) {
  path.validate();
  const double dt = path.dt();
  double kinetic = 0.0;
  double potential = 0.0;
  for (int k = 0; k < path.N; ++k) {
    const Configuration dq = path.nodes[k + 1] - path.nodes[k];
    for (int i = 0; i < 4; ++i) kinetic += masses.m(i) * dq.row(i).squaredNorm();
    potential += potential_energy(0.5 * (path.nodes[k] + path.nodes[k + 1]), masses);
  }
  return kinetic / (2.0 * dt) + dt * potential;
}

double action_and_gradient(const DiscretePath& path, const MassModel& masses,
                           ActionGradient& grad) {
  path.validate();
  const int N = path.N;
  const double dt = path.dt();
  grad.nodes.assign(N + 1, Configuration::Zero());
  double kinetic = 0.0;
  double potential = 0.0;
  for (int k = 0; k < N; ++k) {
    const Configuration dq = path.nodes[k + 1] - path.nodes[k];
    Configuration g = dq;
    for (int i = 0; i < 4; ++i) {
      kinetic += masses.m(i) * dq.row(i).squaredNorm();
      g.row(i) *= masses.m(i) / dt;
    }
    const Configuration mid = 0.5 * (path.nodes[k] + path.nodes[k + 1]);
    potential += potential_energy(mid, masses);
    Configuration f = accelerations(mid, masses);
    for (int i = 0; i < 4; ++i) f.row(i) *= 0.5 * dt * masses.m(i);
    grad.nodes[k] += f - g;
    grad.nodes[k + 1] += f + g;
  }
  grad.params.head<3>() =
      start_template(path.theta, masses).transpose() * pack_config(grad.nodes.front());
  grad.params.tail<3>() = end_template(masses).transpose() * pack_config(grad.nodes.back());
  return kinetic / (2.0 * dt) + dt * potential;
}

ActionGradient action_gradient(const DiscretePath& path, const MassModel& masses) {
  ActionGradient g;
  action_and_gradient(path, masses, g);
  return g;
}

}  // namespace spbc
