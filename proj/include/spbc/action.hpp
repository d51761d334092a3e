#pragma once

#include <vector>

#include "spbc/boundary.hpp"
#include "spbc/dynamics.hpp"

namespace spbc {

// Piecewise-linear path on a uniform grid t_k = k T / N.
struct DiscretePath {
  double T = 1.0;
  int N = 0;
  std::vector<Configuration> nodes;  // N + 1 entries
  BoundaryParams params;
  double theta = 0.0;

  double dt() const { return T / N; }

  // Straight line from Qstart to Qend.
  static DiscretePath linear(const BoundaryParams& params, double theta, const MassModel& masses,
                             double T, int N);

  // Resamples the piecewise-linear interpolant on a grid with new_N segments.
  DiscretePath resampled(int new_N) const;

  // Replaces the endpoints by the templates of params.
  void set_params(const BoundaryParams& p, const MassModel& masses);

  // Throws std::invalid_argument if N < 2 or the node count is wrong.
  void validate() const;
};

double discretized_action(const DiscretePath& path, const MassModel& masses);

struct ActionGradient {
  std::vector<Configuration> nodes;  // dS/dq_k for k = 0..N
  Eigen::Matrix<double, 6, 1> params = Eigen::Matrix<double, 6, 1>::Zero();
};

// Gradient with respect to every node and, through the templates, to a1..a6.
ActionGradient action_gradient(const DiscretePath& path, const MassModel& masses);

// Value and gradient in one sweep.
double action_and_gradient(const DiscretePath& path, const MassModel& masses, ActionGradient& grad);

}  // namespace spbc
