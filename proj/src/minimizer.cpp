#include "spbc/minimizer.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "spbc/reference.hpp"

namespace spbc {

void MinimizerSettings::validate() const {
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(grad_tol > 0.0 && coarse_grad_tol > 0.0 && simplex_tol > 0.0))
    throw std::invalid_argument("tolerances must be positive");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw std::invalid_argument("armijo_c1 in (0, 1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
    throw std::invalid_argument("backtrack_factor in (0, 1)");
  if (max_iterations < 1 || max_backtracks < 1 || restart_interval < 1)
    throw std::invalid_argument("iteration limits must be positive");
  if (n_schedule.empty()) throw std::invalid_argument("empty N schedule");
  for (int n : n_schedule)
    if (n < 2) throw std::invalid_argument("every N in the schedule must be >= 2");
  if (simplex_N < 2) throw std::invalid_argument("simplex_N must be >= 2");
  if (!(divergence_bound > 0.0)) throw std::invalid_argument("divergence_bound must be positive");
  if (random_seeds < 0) throw std::invalid_argument("random_seeds must be >= 0");
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Free variables y: interior nodes, preceded by (a1,a2,a3) and followed by
// (a4,a5,a6) in joint mode.
class PathProblem {
 public:
  PathProblem(const DiscretePath& path, const MassModel& masses, bool joint)
      : path_(path), masses_(masses), joint_(joint) {
    path_.validate();
    la_ = start_template(path_.theta, masses_);
    lb_ = end_template(masses_);
    off_ = joint_ ? 3 : 0;
    dim_ = 8 * (path_.N - 1) + 2 * off_;
    build_preconditioner();
  }

  int dim() const { return dim_; }
  const DiscretePath& path() const { return path_; }

  Eigen::VectorXd pack() const {
    Eigen::VectorXd y(dim_);
    if (joint_) {
      y.head<3>() = path_.params.start();
      y.tail<3>() = path_.params.end();
    }
    for (int k = 1; k < path_.N; ++k) y.segment<8>(off_ + 8 * (k - 1)) = pack_config(path_.nodes[k]);
    return y;
  }

  void unpack(const Eigen::VectorXd& y) {
    if (joint_) {
      Eigen::Matrix<double, 6, 1> a;
      a << y.head<3>(), y.tail<3>();
      path_.params.a = a;
      path_.nodes.front() = unpack_config(la_ * a.head<3>());
      path_.nodes.back() = unpack_config(lb_ * a.tail<3>());
    }
    for (int k = 1; k < path_.N; ++k) path_.nodes[k] = unpack_config(y.segment<8>(off_ + 8 * (k - 1)));
  }

  double eval(const Eigen::VectorXd& y, Eigen::VectorXd& g) {
    unpack(y);
    const double f = action_and_gradient(path_, masses_, grad_);
    g.resize(dim_);
    if (joint_) {
      g.head<3>() = grad_.params.head<3>();
      g.tail<3>() = grad_.params.tail<3>();
    }
    for (int k = 1; k < path_.N; ++k) g.segment<8>(off_ + 8 * (k - 1)) = pack_config(grad_.nodes[k]);
    return f;
  }

  Eigen::VectorXd precondition(const Eigen::VectorXd& g) const { return ldlt_.solve(g); }

  double boundary_size(const Eigen::VectorXd& y) const {
    if (!joint_) return 0.0;
    return std::max(y.head<3>().cwiseAbs().maxCoeff(), y.tail<3>().cwiseAbs().maxCoeff());
  }

 private:
  void build_preconditioner() {
    const int N = path_.N;
    const double dt = path_.dt();
    // E maps y to all node coordinates.
    std::vector<Eigen::Triplet<double>> e;
    for (int k = 1; k < N; ++k)
      for (int c = 0; c < 8; ++c) e.emplace_back(8 * k + c, off_ + 8 * (k - 1) + c, 1.0);
    if (joint_) {
      for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 3; ++c) {
          if (la_(r, c) != 0.0) e.emplace_back(r, c, la_(r, c));
          if (lb_(r, c) != 0.0) e.emplace_back(8 * N + r, dim_ - 3 + c, lb_(r, c));
        }
    }
    SpMat E(8 * (N + 1), dim_);
    E.setFromTriplets(e.begin(), e.end());

    std::vector<Eigen::Triplet<double>> kt;
    for (int k = 0; k < N; ++k)
      for (int c = 0; c < 8; ++c) {
        const double w = masses_.m(c / 2) / dt;
        kt.emplace_back(8 * k + c, 8 * k + c, w);
        kt.emplace_back(8 * (k + 1) + c, 8 * (k + 1) + c, w);
        kt.emplace_back(8 * k + c, 8 * (k + 1) + c, -w);
        kt.emplace_back(8 * (k + 1) + c, 8 * k + c, -w);
      }
    SpMat K(8 * (N + 1), 8 * (N + 1));
    K.setFromTriplets(kt.begin(), kt.end());

    SpMat P = SpMat(E.transpose() * K * E);
    SpMat shift(dim_, dim_);
    shift.setIdentity();
    P += dt * shift;
    ldlt_.compute(P);
    if (ldlt_.info() != Eigen::Success) throw SingularMatrix("kinetic preconditioner factorization failed");
  }

  DiscretePath path_;
  MassModel masses_;
  bool joint_;
  int off_ = 0;
  int dim_ = 0;
  Eigen::Matrix<double, 8, 3> la_, lb_;
  ActionGradient grad_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

struct CgOutcome {
  double f = 0.0;
  double gnorm = 0.0;
  long iterations = 0;
  bool converged = false;
};

// Preconditioned Polak-Ribiere+ with Armijo backtracking. The accepted
// action never rises by more than a 1e-14 relative roundoff band.
CgOutcome run_pcg(PathProblem& P, const MinimizerSettings& s, double tol,
                  std::vector<double>* history) {
  Eigen::VectorXd y = P.pack();
  Eigen::VectorXd g, z, d, y_t, g_t;
  CgOutcome out;
  double f = P.eval(y, g);
  if (!std::isfinite(f)) throw CollisionError("initial path has a non-finite action");
  z = P.precondition(g);
  d = -z;
  bool steepest = true;
  int since_restart = 0;
  if (history) history->push_back(f);

  for (long it = 0;; ++it) {
    out.gnorm = g.cwiseAbs().maxCoeff();
    out.iterations = it;
    if (out.gnorm <= tol) {
      out.converged = true;
      break;
    }
    if (it >= s.max_iterations) break;

    double gd = g.dot(d);
    if (!(gd < 0.0)) {
      d = -z;
      gd = g.dot(d);
      steepest = true;
      since_restart = 0;
    }

    const double band = 1e-14 * std::max(1.0, std::abs(f));
    double alpha = 1.0;
    bool accepted = false;
    bool all_collided = true;
    double f_t = f;
    for (int bt = 0; bt < s.max_backtracks; ++bt) {
      y_t = y + alpha * d;
      bool collided = false;
      try {
        f_t = P.eval(y_t, g_t);
      } catch (const CollisionError&) {
        collided = true;
      }
      if (!collided && std::isfinite(f_t)) {
        all_collided = false;
        if (f_t <= f + s.armijo_c1 * alpha * gd ||
            (f_t <= f + band && std::abs(g_t.dot(d)) < std::abs(gd))) {
          accepted = true;
          break;
        }
        const double denom = 2.0 * (f_t - f - alpha * gd);
        const double a_q = denom > 0.0 ? -gd * alpha * alpha / denom : s.backtrack_factor * alpha;
        alpha = std::clamp(a_q, 0.1 * alpha, s.backtrack_factor * alpha);
      } else {
        alpha *= 0.25;
      }
    }

    if (!accepted) {
      if (all_collided && steepest) throw CollisionError("line search cannot avoid the collision floor");
      if (steepest) break;  // stalled
      d = -z;
      steepest = true;
      since_restart = 0;
      P.unpack(y);
      continue;
    }

    if (P.boundary_size(y_t) > s.divergence_bound)
      throw DivergenceWarning("boundary parameters exceed the divergence bound");

    const Eigen::VectorXd z_new = P.precondition(g_t);
    const double gz_old = g.dot(z);
    double beta = 0.0;
    if (++since_restart < s.restart_interval && gz_old > 0.0) {
      beta = std::max(0.0, g_t.dot(z_new - z) / gz_old);
      if (std::abs(g_t.dot(z)) >= 0.2 * g_t.dot(z_new)) beta = 0.0;
    }
    if (beta == 0.0) since_restart = 0;
    y = y_t;
    g = g_t;
    z = z_new;
    f = f_t;
    d = -z + beta * d;
    steepest = beta == 0.0;
    if (history) history->push_back(f);
  }
  P.unpack(y);
  out.f = f;
  return out;
}

std::vector<int> full_schedule(const MinimizerSettings& s) {
  std::vector<int> sched = s.n_schedule;
  if (s.polish_N > sched.back()) sched.push_back(s.polish_N);
  return sched;
}

MinimizationResult run_levels(DiscretePath path, const MassModel& masses, const MinimizerSettings& s,
                              bool joint) {
  MinimizationResult res;
  const std::vector<int> sched = full_schedule(s);
  for (std::size_t li = 0; li < sched.size(); ++li) {
    if (path.N != sched[li]) path = path.resampled(sched[li]);
    const bool last = li + 1 == sched.size();
    PathProblem P(path, masses, joint);
    const CgOutcome o = run_pcg(P, s, last ? s.grad_tol : s.coarse_grad_tol,
                                s.record_history ? &res.history : nullptr);
    path = P.path();
    res.refinement.emplace_back(path.N, o.f);
    res.iterations += o.iterations;
    res.gradient_norm = o.gnorm;
    res.converged = o.converged;
    res.action = o.f;
  }
  res.path = path;
  res.params = path.params;
  return res;
}

// Shifts interior nodes so the path connects the boundaries of `a`.
DiscretePath reattach(const DiscretePath& warm, const BoundaryParams& a, const MassModel& masses) {
  DiscretePath p = warm;
  const Configuration d0 = build_qstart(a, p.theta, masses) - warm.nodes.front();
  const Configuration d1 = build_qend(a, masses) - warm.nodes.back();
  for (int k = 0; k <= p.N; ++k) {
    const double s = static_cast<double>(k) / p.N;
    p.nodes[k] += (1.0 - s) * d0 + s * d1;
  }
  p.set_params(a, masses);
  return p;
}

struct SimplexResult {
  Eigen::Matrix<double, 6, 1> x;
  double f;
  int evaluations;
};

template <class F>
SimplexResult nelder_mead(F&& f, const Eigen::Matrix<double, 6, 1>& x0, double step, double ftol,
                          int max_evals) {
  using V = Eigen::Matrix<double, 6, 1>;
  constexpr int n = 6;
  std::vector<V> x(n + 1, x0);
  std::vector<double> fx(n + 1);
  for (int i = 0; i < n; ++i) x[i + 1][i] += (x0[i] != 0.0 ? step * std::abs(x0[i]) : step);
  int evals = 0;
  for (int i = 0; i <= n; ++i) {
    fx[i] = f(x[i]);
    ++evals;
  }
  std::vector<int> idx(n + 1);
  while (true) {
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const int best = idx[0], worst = idx[n], second = idx[n - 1];
    double diam = 0.0;
    for (int i = 1; i <= n; ++i) diam = std::max(diam, (x[idx[i]] - x[best]).cwiseAbs().maxCoeff());
    if ((std::abs(fx[worst] - fx[best]) <= ftol * std::max(1.0, std::abs(fx[best])) && diam < 1e-7) ||
        evals >= max_evals)
      return {x[best], fx[best], evals};

    V c = V::Zero();
    for (int i = 0; i < n; ++i) c += x[idx[i]];
    c /= n;
    const V xr = c + (c - x[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr < fx[best]) {
      const V xe = c + 2.0 * (c - x[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        x[worst] = xe;
        fx[worst] = fe;
      } else {
        x[worst] = xr;
        fx[worst] = fr;
      }
    } else if (fr < fx[second]) {
      x[worst] = xr;
      fx[worst] = fr;
    } else {
      const bool outside = fr < fx[worst];
      const V xc = outside ? V(c + 0.5 * (xr - c)) : V(c + 0.5 * (x[worst] - c));
      const double fc = f(xc);
      ++evals;
      if (fc < (outside ? fr : fx[worst])) {
        x[worst] = xc;
        fx[worst] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          x[idx[i]] = x[best] + 0.5 * (x[idx[i]] - x[best]);
          fx[idx[i]] = f(x[idx[i]]);
          ++evals;
        }
      }
    }
  }
}

}  // namespace

MinimizationResult minimize_inner(const BoundaryParams& a, double theta, const MassModel& masses,
                                  const MinimizerSettings& settings,
                                  const std::optional<DiscretePath>& seed) {
  settings.validate();
  require_admissible(theta);
  DiscretePath path;
  if (seed) {
    path = *seed;
    path.theta = theta;
    path.set_params(a, masses);
  } else {
    path = DiscretePath::linear(a, theta, masses, settings.T, settings.n_schedule.front());
  }
  MinimizationResult r = run_levels(path, masses, settings, false);
  r.seed_label = seed ? "path" : "linear";
  return r;
}

MinimizationResult minimize_joint(const DiscretePath& seed, const MassModel& masses,
                                  const MinimizerSettings& settings) {
  settings.validate();
  require_admissible(seed.theta);
  return run_levels(seed, masses, settings, true);
}

MinimizationResult minimize_outer(double theta, const MassModel& masses, const BoundaryParams& a_init,
                                  const MinimizerSettings& settings) {
  settings.validate();
  require_admissible(theta);
  if (settings.strategy == OuterStrategy::Joint) {
    return run_levels(DiscretePath::linear(a_init, theta, masses, settings.T, settings.n_schedule.front()),
                      masses, settings, true);
  }

  MinimizerSettings inner = settings;
  inner.n_schedule = {settings.simplex_N};
  inner.polish_N = 0;
  inner.grad_tol = settings.coarse_grad_tol;
  inner.record_history = false;
  DiscretePath warm = DiscretePath::linear(a_init, theta, masses, settings.T, settings.simplex_N);
  double warm_f = std::numeric_limits<double>::infinity();
  auto objective = [&](const Eigen::Matrix<double, 6, 1>& x) {
    if (x.cwiseAbs().maxCoeff() > settings.divergence_bound)
      throw DivergenceWarning("boundary parameters exceed the divergence bound");
    try {
      const BoundaryParams a(x);
      const MinimizationResult r = run_levels(reattach(warm, a, masses), masses, inner, false);
      if (r.action < warm_f) {
        warm = r.path;
        warm_f = r.action;
      }
      return r.action;
    } catch (const CollisionError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const SegmentCollision&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const SimplexResult sr = nelder_mead(objective, a_init.a, settings.simplex_step, settings.simplex_tol,
                                       settings.simplex_max_evaluations);
  DiscretePath start = reattach(warm, BoundaryParams(sr.x), masses);
  MinimizationResult r = run_levels(start, masses, settings, true);
  r.seed_label = "simplex";
  return r;
}

std::vector<MinimizationResult> find_minimizers(double theta, const MassModel& masses,
                                                const MinimizerSettings& settings,
                                                const std::vector<BoundaryParams>& extra_seeds) {
  settings.validate();
  require_admissible(theta);
  std::vector<std::pair<std::string, BoundaryParams>> seeds;
  const auto& table = reference_test_params();
  for (std::size_t i = 0; i < table.size(); ++i) seeds.emplace_back("test-" + std::to_string(i), table[i].a);
  try {
    seeds.emplace_back("homographic", homographic_boundary_params(theta, masses, settings.T));
  } catch (const Error&) {
  }
  for (std::size_t i = 0; i < extra_seeds.size(); ++i)
    seeds.emplace_back("extra-" + std::to_string(i), extra_seeds[i]);
  std::mt19937_64 rng(settings.rng_seed);
  std::normal_distribution<double> normal(0.0, settings.random_seed_scale);
  for (int i = 0; i < settings.random_seeds; ++i) {
    Eigen::Matrix<double, 6, 1> a = table[0].a.a;
    for (int c = 0; c < 6; ++c) a[c] += normal(rng);
    seeds.emplace_back("random-" + std::to_string(i), BoundaryParams(a));
  }

  std::vector<MinimizationResult> found;
  for (const auto& [label, a] : seeds) {
    MinimizationResult r;
    try {
      r = minimize_outer(theta, masses, a, settings);
    } catch (const Error&) {
      continue;
    }
    r.seed_label = label;
    bool duplicate = false;
    for (MinimizationResult& f : found) {
      if (std::abs(f.action - r.action) <= 1e-7 * std::max(1.0, std::abs(r.action)) &&
          (f.params.a - r.params.a).cwiseAbs().maxCoeff() < 1e-4) {
        duplicate = true;
        if (r.gradient_norm < f.gradient_norm) f = r;
        break;
      }
    }
    if (!duplicate) found.push_back(std::move(r));
  }
  if (found.empty()) throw NoConvergence("no seed produced a minimizer");
  std::stable_sort(found.begin(), found.end(),
                   [](const MinimizationResult& a, const MinimizationResult& b) { return a.action < b.action; });
  return found;
}

double kinetic_lower_bound(const BoundaryParams& a, double theta, const MassModel& masses, double T) {
  const Configuration d = build_qend(a, masses) - build_qstart(a, theta, masses);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += masses.m(i) * d.row(i).squaredNorm();
  return 0.5 * s / T;
}

std::vector<CoercivityRow> coercivity_probe(double theta, const MassModel& masses,
                                            const std::vector<double>& radii, double T, int directions,
                                            std::uint64_t seed) {
  require_admissible(theta);
  Eigen::Matrix<double, 8, 6> D;
  D << -start_template(theta, masses), end_template(masses);
  Eigen::Matrix<double, 8, 8> M = Eigen::Matrix<double, 8, 8>::Zero();
  for (int r = 0; r < 8; ++r) M(r, r) = masses.m(r / 2);
  const Eigen::Matrix<double, 6, 6> G = 0.5 * D.transpose() * M * D;
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(G).eigenvalues()[0];

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Eigen::Matrix<double, 6, 1>> dirs(directions);
  for (auto& v : dirs) {
    for (int c = 0; c < 6; ++c) v[c] = normal(rng);
    v.normalize();
  }
  std::vector<CoercivityRow> rows;
  for (double r : radii) {
    CoercivityRow row;
    row.radius = r;
    row.guaranteed = lmin * r * r / T;
    row.sampled_min = std::numeric_limits<double>::infinity();
    row.sampled_max = 0.0;
    for (const auto& v : dirs) {
      const double lb = kinetic_lower_bound(BoundaryParams(Eigen::Matrix<double, 6, 1>(r * v)), theta, masses, T);
      row.sampled_min = std::min(row.sampled_min, lb);
      row.sampled_max = std::max(row.sampled_max, lb);
    }
    if (directions == 0) row.sampled_min = row.sampled_max = row.guaranteed;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace spbc
