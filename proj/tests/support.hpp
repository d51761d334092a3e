#pragma once

#include <cmath>
#include <random>

#include "spbc/dynamics.hpp"

namespace spbc::testing {

// Well separated random state with zero center of mass and momentum.
inline PhaseState random_state(std::mt19937& rng, const MassModel& m) {
  std::uniform_real_distribution<double> pos(-1.5, 1.5), vel(-1.0, 1.0);
  PhaseState s;
  do {
    for (int i = 0; i < 4; ++i) {
      s.q.row(i) << pos(rng), pos(rng);
      s.v.row(i) << vel(rng), vel(rng);
    }
    s = recenter(s, m);
  } while (min_pair_distance(s.q) < 0.3);
  return s;
}

inline double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace spbc::testing
