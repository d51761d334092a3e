#pragma once

#include <string>
#include <vector>

#include "spbc/boundary.hpp"
#include "spbc/shooting.hpp"

namespace spbc {

// Initial states of six stable orbits, given to 10 digits, with T = 1.
struct Fixture {
  std::string name;  // "1" .. "6"
  long P = 0;
  long Q = 1;
  double mu = 1.0;
  double period = 0.0;
  PhaseState state;

  RotationAngle angle() const { return RotationAngle::rational(P, Q); }
  double theta() const { return angle().theta; }
  MassModel masses() const { return MassModel::from_ratio(mu); }
};

const std::vector<Fixture>& fixtures();
// Throws std::out_of_range for an unknown name.
const Fixture& fixture(const std::string& name);

// Newton polish of the printed state; the printed digits close only to about
// 1e-3 over the full period.
RefinedSeed refine_fixture(const Fixture& f, const ShootingSettings& settings = {});

}  // namespace spbc
