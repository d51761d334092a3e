#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spbc/boundary.hpp"
#include "spbc/integrator.hpp"

namespace spbc {

// Reflection B = diag(-1, 1) on row coordinates and the body permutation
// sigma = [3, 4, 1, 2].
inline constexpr std::array<int, 4> kSigma{2, 3, 0, 1};
Eigen::Matrix2d reflection_B();

// Periodic (or quasi-periodic) extension of a seed on [0, T]. Only [0, T] is
// integrated; later times follow from reflection, permutation and rotation.
class ExtendedOrbit {
 public:
  ExtendedOrbit(const PhaseState& seed, double theta, const MassModel& masses, double T = 1.0,
                const IntegratorSettings& settings = {}, std::optional<double> period = std::nullopt);

  // Throws NegativeTime for t < 0 unless a period was supplied.
  PhaseState state(double t) const;

  const PhaseState& seed() const { return seed_; }
  double theta() const { return theta_; }
  double T() const { return T_; }
  const MassModel& masses() const { return masses_; }

 private:
  PhaseState segment(double s) const;  // s in [0, T]

  PhaseState seed_;
  double theta_;
  MassModel masses_;
  double T_;
  std::optional<double> period_;
  DenseSolution cache_;
};

PhaseState extend_state(const PhaseState& seed, double theta, double t, const MassModel& masses,
                        double T = 1.0, const IntegratorSettings& settings = {});

struct MatchingReport {
  Eigen::Vector4d end_conditions = Eigen::Vector4d::Zero();  // at T
  std::array<double, 4> doubling{};                           // |A_k| at t = 0, per body
  Eigen::Vector3d start_conditions = Eigen::Vector3d::Zero(); // natural conditions at t = 0
  double max() const;
};

MatchingReport matching_residuals(const PhaseState& seed, double theta, const MassModel& masses,
                                  double T = 1.0, const IntegratorSettings& settings = {});

// Continued-fraction convergents of theta/pi with denominator <= Qmax; the
// first one with |theta - P pi / Q| <= tol.
std::optional<std::pair<long, long>> rationalize_theta(double theta, long Qmax, double tol);

enum class OrbitKind { QuasiPeriodic, NonChoreographic, DoubleChoreographic, SimpleChoreographic };

std::string to_string(OrbitKind kind);

// q_from(t + lag) = q_to(t); 0-based body indices.
struct ChaseRelation {
  int from = 0;
  int to = 0;
  double lag = 0.0;
};

struct OrbitClassification {
  OrbitKind kind = OrbitKind::QuasiPeriodic;
  std::optional<long> P;
  std::optional<long> Q;
  double T = 1.0;
  double period = 0.0;  // 0 for quasi-periodic
  std::string case_label;  // "even", "1", "2", "3A", "3B", "4"
  int curves = 0;
  int sides = 0;  // per closed curve
  std::vector<ChaseRelation> chase;
  std::vector<int> cyclic_order;  // simple choreographies, 0-based
  bool theta_above_pi = false;
};

// Throws ExcludedAngle for theta = pi.
OrbitClassification classify(const RotationAngle& theta, double mu, const BoundaryParams& a_star,
                             double shape_tol = 1e-6, double T = 1.0);

struct VerificationReport {
  double closure = 0.0;
  std::vector<std::pair<std::string, double>> relations;
  std::vector<std::pair<double, double>> subperiod_gaps;  // (candidate, |q(c) - q(0)|)
};

// Checks periodicity, the chase relations and minimality of the period.
// Throws VerificationFailure naming the violated relation.
VerificationReport verify_classification(const ExtendedOrbit& orbit, const OrbitClassification& c,
                                         double tol, int samples = 41, double min_gap = 1e-3);

// Long-format CSV t,body,x,y,vx,vy,curve_id,side.
void write_curves_csv(std::ostream& out, const ExtendedOrbit& orbit, const OrbitClassification& c,
                      double t_max, int samples);

}  // namespace spbc
