#pragma once

#include <stdexcept>
#include <string>

namespace spbc {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two bodies came closer than the collision floor.
class CollisionError : public Error {
 public:
  using Error::Error;
};

// Adaptive integrator step size underflowed the configured minimum.
class StepFailure : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

// omega == 0, i.e. theta in {pi/2, 3pi/2}; no homographic reference exists.
class DegenerateOmega : public Error {
 public:
  using Error::Error;
};

// Straight-line interpolants of two bodies intersect on [0, T].
class SegmentCollision : public Error {
 public:
  using Error::Error;
};

class ShootingDivergence : public Error {
 public:
  using Error::Error;
};

// A Jacobi radius vanished, polar coordinates are undefined.
class DegenerateRadius : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// theta in an excluded set ({pi} for classification, {pi/2, pi, 3pi/2} for
// minimization).
class ExcludedAngle : public Error {
 public:
  using Error::Error;
};

class NegativeTime : public Error {
 public:
  using Error::Error;
};

class DivergenceWarning : public Error {
 public:
  using Error::Error;
};

// A declared orbit relation does not hold numerically.
class VerificationFailure : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace spbc
