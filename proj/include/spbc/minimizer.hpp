#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spbc/action.hpp"
#include "spbc/boundary.hpp"

namespace spbc {

enum class OuterStrategy { Joint, NelderMead };

struct MinimizerSettings {
  double T = 1.0;
  double grad_tol = 1e-10;        // sup norm, final grid
  double coarse_grad_tol = 1e-8;  // intermediate grids and simplex evaluations
  int max_iterations = 20000;     // per grid level
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 60;
  int restart_interval = 200;
  double simplex_tol = 1e-12;
  int simplex_max_evaluations = 3000;
  double simplex_step = 0.05;
  int simplex_N = 64;
  std::vector<int> n_schedule{64, 128, 256, 512};
  int polish_N = 0;  // extra final level when > last schedule entry
  OuterStrategy strategy = OuterStrategy::Joint;
  int random_seeds = 0;
  std::uint64_t rng_seed = 12345;
  double random_seed_scale = 0.3;
  double divergence_bound = 100.0;
  bool record_history = false;

  // Throws std::invalid_argument.
  void validate() const;
};

struct MinimizationResult {
  DiscretePath path;
  double action = 0.0;
  BoundaryParams params;
  bool converged = false;
  double gradient_norm = 0.0;
  long iterations = 0;
  std::vector<std::pair<int, double>> refinement;  // (N, action) per grid level
  std::vector<double> history;                     // accepted actions, when recorded
  std::string seed_label;
};

// Inner minimization over interior nodes with the boundary fixed. The seed
// path, when given, must have the same endpoints; otherwise the straight
// test path is used.
MinimizationResult minimize_inner(const BoundaryParams& a, double theta, const MassModel& masses,
                                  const MinimizerSettings& settings,
                                  const std::optional<DiscretePath>& seed = std::nullopt);

// Outer minimization over the boundary parameters from one starting point.
MinimizationResult minimize_outer(double theta, const MassModel& masses, const BoundaryParams& a_init,
                                  const MinimizerSettings& settings);

// Joint descent from an explicit starting path (its params are the start).
MinimizationResult minimize_joint(const DiscretePath& seed, const MassModel& masses,
                                  const MinimizerSettings& settings);

// Multi-seed outer search: the stored test parameters, the homographic
// boundary and settings.random_seeds random perturbations, plus any extra
// seeds. Distinct minimizers sorted by action; the first is primary.
std::vector<MinimizationResult> find_minimizers(double theta, const MassModel& masses,
                                                const MinimizerSettings& settings,
                                                const std::vector<BoundaryParams>& extra_seeds = {});

struct CoercivityRow {
  double radius = 0.0;
  double guaranteed = 0.0;      // lambda_min(G) r^2 / T
  double sampled_min = 0.0;     // over random directions
  double sampled_max = 0.0;
};

// Kinetic lower bound sum m_i |Qend_i - Qstart_i|^2 / (2T) on spheres of
// increasing radius. Throws ExcludedAngle.
std::vector<CoercivityRow> coercivity_probe(double theta, const MassModel& masses,
                                            const std::vector<double>& radii, double T = 1.0,
                                            int directions = 64, std::uint64_t seed = 7);

double kinetic_lower_bound(const BoundaryParams& a, double theta, const MassModel& masses,
                           double T = 1.0);

}  // namespace spbc
