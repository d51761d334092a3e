// spbc: reference actions, minimization, region scans, orbit extension,
// stability and fixture verification.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spbc/errors.hpp"
#include "spbc/extension.hpp"
#include "spbc/fixtures.hpp"
#include "spbc/io.hpp"
#include "spbc/minimizer.hpp"
#include "spbc/reference.hpp"
#include "spbc/shooting.hpp"
#include "spbc/stability.hpp"

using namespace spbc;

namespace {

constexpr double kPi = std::numbers::pi;

enum Exit { kOk = 0, kUsage = 2, kNumerical = 3, kVerification = 4 };

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

std::filesystem::path archive_or_default(const std::string& dir) {
  return dir.empty() ? archive_dir() : std::filesystem::path(dir);
}

std::vector<BoundaryParams> read_a_test_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  std::vector<BoundaryParams> out;
  try {
    for (const auto& row : j.get<std::vector<std::vector<double>>>()) {
      if (row.size() != 6) throw UsageError(path + ": each entry needs 6 values");
      out.emplace_back(row[0], row[1], row[2], row[3], row[4], row[5]);
    }
  } catch (const nlohmann::json::exception&) {
    throw UsageError(path + ": expected a list of 6-vectors");
  }
  if (out.empty()) throw UsageError(path + ": the test parameter list is empty");
  return out;
}

std::string params_text(const BoundaryParams& a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "(%.8f, %.8f, %.8f, %.8f, %.8f, %.8f)", a[0], a[1], a[2], a[3], a[4], a[5]);
  return buf;
}

void print_report(const MonodromyReport& r) {
  std::printf("verdict            %s%s%s\n", to_string(r.verdict).c_str(), r.note.empty() ? "" : "  -- ",
              r.note.c_str());
  std::printf("W spectrum        ");
  for (const auto& [w, k] : r.w_spectrum) std::printf(" %.6f(x%d)", w, k);
  std::printf("\nmin gap            %.3e\n", r.min_gap);
  std::printf("reciprocal defect  %.3e\n", r.reciprocal_defect);
  std::printf("symplectic defect  %.3e%s\n", r.symplectic_defect,
              r.conditioning_warning ? "  (conditioning warning)" : "");
  std::printf("reduced closure    %.3e\n", r.closure);
  std::printf("reduced multipliers\n");
  for (const auto& z : r.reduced_multipliers)
    std::printf("  % .17g % .17g  |%.10f|\n", z.real(), z.imag(), std::abs(z));
  if (r.full) {
    std::printf("full monodromy     max |lambda| = %.6f, %d within 1e-3 of +1\n", r.full->max_modulus,
                r.full->near_one);
  }
}

bool periodic(const OrbitClassification& c) { return c.kind != OrbitKind::QuasiPeriodic && c.period > 0.0; }

// ----------------------------------------------------------------------------

struct ReferenceArgs {
  std::string theta;
  double mu = 1.0;
  std::string a_test_file;
};

int cmd_reference(const ReferenceArgs& a) {
  const RotationAngle th = parse_angle(a.theta);
  if (std::abs(th.theta - kPi) < 1e-12) throw ExcludedAngle("theta = pi is excluded");
  if (!(a.mu > 0.0)) throw UsageError("mu must be positive");
  std::vector<BoundaryParams> list;
  if (a.a_test_file.empty()) {
    for (const auto& e : reference_test_params()) list.push_back(e.a);
  } else {
    list = read_a_test_file(a.a_test_file);
  }
  const double ah = homographic_action(th.theta, a.mu);
  std::printf("theta = %s (%.12f rad), mu = %g\n", format_angle(th).c_str(), th.theta, a.mu);
  std::printf("A_homographic = %.6f\n", ah);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < list.size(); ++k) {
    try {
      const double at = test_path_action(th.theta, a.mu, list[k]);
      best = std::min(best, at);
      std::printf("A_test[%zu]     = %.6f  a = %s\n", k, at, params_text(list[k]).c_str());
    } catch (const SegmentCollision& e) {
      std::printf("A_test[%zu]     = collision (%s)\n", k, e.what());
    }
  }
  const bool inside = best < ah;
  std::printf("min A_test    = %.6f\n", best);
  std::printf("inside Omega  = %s (%.6f %s %.6f)\n", inside ? "yes" : "no", ah, inside ? ">" : "<=", best);
  return kOk;
}

// ----------------------------------------------------------------------------

struct MinimizeArgs {
  std::string theta;
  double mu = 1.0;
  std::string config;
  std::string archive;
  int random_seeds = -1;
  bool skip_stability = false;
  double max_stability_period = 400.0;
};

int cmd_minimize(const MinimizeArgs& a) {
  RunConfig cfg = config_or_default(a.config);
  if (a.random_seeds >= 0) cfg.minimizer.random_seeds = a.random_seeds;
  cfg.validate();
  const RotationAngle th = parse_angle(a.theta);
  require_admissible(th.theta);
  if (!(a.mu > 0.0)) throw UsageError("mu must be positive");
  const MassModel masses = MassModel::from_ratio(a.mu);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<MinimizationResult> found;
  try {
    found = find_minimizers(th.theta, masses, cfg.minimizer);
  } catch (const NoConvergence& e) {
    std::fprintf(stderr, "minimization failed: %s\nconfiguration:\n%s\n", e.what(),
                 config_to_json_text(cfg).c_str());
    throw;
  }
  if (found.empty()) throw NoConvergence("no minimizer found");
  for (std::size_t k = 0; k < found.size(); ++k) {
    const MinimizationResult& r = found[k];
    std::printf("minimizer %zu: action %.10f  |grad| %.2e  N %d  seed %s%s\n  a* = %s\n", k, r.action,
                r.gradient_norm, r.path.N, r.seed_label.c_str(), r.converged ? "" : "  (not converged)",
                params_text(r.params).c_str());
  }
  const MinimizationResult& best = found.front();
  ShootingSettings shoot = cfg.shooting;
  shoot.T = cfg.minimizer.T;
  const RefinedSeed seed = refine_to_seed(best, masses, shoot);
  std::printf("shooting residual %.3e after %d iterations\n", seed.residual_norm, seed.iterations);

  OrbitRecord rec;
  rec.m1 = masses.m(0);
  rec.m2 = masses.m(1);
  rec.theta = th;
  rec.a_star = best.params;
  rec.T = cfg.minimizer.T;
  rec.state = seed.state;
  rec.action = best.action;
  rec.shooting_residual = seed.residual_norm;
  rec.classification = classify(th, a.mu, best.params, cfg.shape_tol, rec.T);
  rec.settings_hash = settings_hash(cfg);
  const OrbitClassification& c = rec.classification;
  std::printf("classification %s case %s period %g curves %d sides %d%s\n", to_string(c.kind).c_str(),
              c.case_label.c_str(), c.period, c.curves, c.sides, c.theta_above_pi ? "  (theta > pi)" : "");
  if (!a.skip_stability && periodic(c) && c.period <= a.max_stability_period) {
    rec.stability = analyze_stability(seed.state, c.period, masses, cfg.stability);
    print_report(*rec.stability);
  }
  const auto path = write_record(rec, archive_or_default(a.archive));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("record %s written to %s (%.2f s)\n", rec.id().c_str(), path.string().c_str(), secs);
  return kOk;
}

// ----------------------------------------------------------------------------

struct ScanArgs {
  std::string config;
  std::string a_test_file;
  std::string out;
  std::optional<double> theta_lo, theta_hi, theta_step, mu_lo, mu_hi, mu_step;
};

int cmd_scan(const ScanArgs& a) {
  RunConfig cfg = config_or_default(a.config);
  ScanConfig& s = cfg.scan;
  if (a.theta_lo) s.theta_lo = *a.theta_lo;
  if (a.theta_hi) s.theta_hi = *a.theta_hi;
  if (a.theta_step) s.theta_step = *a.theta_step;
  if (a.mu_lo) s.mu_lo = *a.mu_lo;
  if (a.mu_hi) s.mu_hi = *a.mu_hi;
  if (a.mu_step) s.mu_step = *a.mu_step;
  if (!a.a_test_file.empty()) s.a_test = read_a_test_file(a.a_test_file);
  cfg.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const OmegaRegionScan scan = scan_region(s.theta_grid(), s.mu_grid(), s.a_test, cfg.minimizer.T);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw UsageError("cannot write " + a.out);
    write_region_csv(f, scan);
  }
  std::size_t inside = 0;
  for (const auto& row : scan.mask)
    for (bool b : row) inside += b;
  std::printf("grid %zu theta x %zu mu, %zu cells inside, %zu test parameter sets, %.2f s\n",
              scan.theta_grid.size(), scan.mu_grid.size(), inside, s.a_test.size(), secs);
  for (const RegionTransition& t : scan.transitions)
    std::printf("mu %-8g %s between %.6fpi and %.6fpi, root %.6fpi\n", t.mu, t.entering ? "enters " : "leaves ",
                t.theta_lo / kPi, t.theta_hi / kPi, t.theta_root / kPi);
  for (const std::string& d : scan.diagnostics) std::printf("note: %s\n", d.c_str());
  return kOk;
}

// ----------------------------------------------------------------------------

struct ExtendArgs {
  std::string record;
  std::string archive;
  std::string config;
  double t_max = 0.0;
  int samples = 1001;
  std::string out;
};

int cmd_extend(const ExtendArgs& a) {
  const RunConfig cfg = config_or_default(a.config);
  const OrbitRecord rec = read_record(a.record, archive_or_default(a.archive));
  if (a.t_max < 0.0) throw NegativeTime("t_max must be nonnegative");
  if (a.samples < 1) throw UsageError("samples must be positive");
  const OrbitClassification& c = rec.classification;
  std::optional<double> period;
  if (periodic(c)) period = c.period;
  const ExtendedOrbit orbit(rec.state, rec.theta.theta, rec.masses(), rec.T, cfg.integrator, period);
  if (a.out.empty()) {
    write_curves_csv(std::cout, orbit, c, a.t_max, a.samples);
  } else {
    std::ofstream f(a.out);
    if (!f) throw UsageError("cannot write " + a.out);
    write_curves_csv(f, orbit, c, a.t_max, a.samples);
    std::printf("%s: %s, %d curve(s), %d side(s) per curve, t in [0, %g]\n", a.out.c_str(),
                to_string(c.kind).c_str(), c.curves, c.sides, a.t_max);
  }
  return kOk;
}

// ----------------------------------------------------------------------------

struct StabilityArgs {
  std::string record;
  std::string archive;
  std::string config;
};

int cmd_stability(const StabilityArgs& a) {
  const RunConfig cfg = config_or_default(a.config);
  const auto dir = archive_or_default(a.archive);
  OrbitRecord rec = read_record(a.record, dir);
  if (!periodic(rec.classification))
    throw UsageError("record " + rec.id() + " is quasi-periodic; stability needs a periodic orbit");
  std::printf("record %s: theta %s, mu %g, period %g\n", rec.id().c_str(), format_angle(rec.theta).c_str(),
              rec.m2 / rec.m1, rec.classification.period);
  rec.stability = analyze_stability(rec.state, rec.classification.period, rec.masses(), cfg.stability);
  print_report(*rec.stability);
  write_record(rec, dir);
  std::printf("record updated\n");
  return kOk;
}

// ----------------------------------------------------------------------------

struct VerifyArgs {
  std::string fixture;
  std::string config;
  bool raw = false;
};

struct Row {
  std::string check;
  std::string value;
  bool pass;
  bool counted;
};

bool verify_one(const Fixture& f, const RunConfig& cfg, bool raw) {
  const MassModel m = f.masses();
  std::vector<Row> rows;
  auto add = [&](const std::string& check, double v, bool pass, bool counted = true) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    rows.push_back({check, buf, pass, counted});
  };

  const PhaseState end = propagate(f.state, f.period, m, cfg.integrator);
  const double raw_closure = (end.q - f.state.q).cwiseAbs().maxCoeff();
  add("printed state closure", raw_closure, raw_closure < cfg.verify.closure_tol, raw);
  const double raw_match = matching_residuals(f.state, f.theta(), m, 1.0, cfg.integrator).max();
  add("printed state matching", raw_match, raw_match < cfg.verify.matching_tol);

  PhaseState seed = f.state;
  BoundaryParams params;
  if (!raw) {
    const RefinedSeed rs = refine_fixture(f, cfg.shooting);
    seed = rs.state;
    params = rs.params;
    add("shooting residual", rs.residual_norm, rs.residual_norm < cfg.shooting.tol);
    const PhaseState e2 = propagate(seed, f.period, m, cfg.integrator);
    const double cl = (e2.q - seed.q).cwiseAbs().maxCoeff();
    add("refined closure", cl, cl < cfg.verify.closure_tol);
    const double mr = matching_residuals(seed, f.theta(), m, 1.0, cfg.integrator).max();
    add("refined matching", mr, mr < cfg.verify.refined_matching_tol);
  } else {
    params = BoundaryParams(
        (Eigen::Matrix<double, 6, 1>() << membership_A(seed.q, f.theta(), m, 1e-3).params,
         membership_B(propagate(seed, 1.0, m, cfg.integrator).q, m, 1.0).params)
            .finished());
  }

  const OrbitClassification c = classify(f.angle(), f.mu, params, cfg.shape_tol);
  const bool period_ok = std::abs(c.period - f.period) < 1e-9;
  rows.push_back({"classification", to_string(c.kind) + " case " + c.case_label + " period " +
                                        std::to_string(static_cast<long>(c.period)),
                  period_ok, true});
  try {
    const ExtendedOrbit orbit(seed, f.theta(), m, 1.0, cfg.integrator, c.period);
    const VerificationReport vr =
        verify_classification(orbit, c, raw ? cfg.verify.closure_tol : cfg.verify.relation_tol,
                              cfg.verify.samples);
    double worst = vr.closure;
    for (const auto& [name, v] : vr.relations) worst = std::max(worst, v);
    add("chase relations", worst, true);
  } catch (const VerificationFailure& e) {
    rows.push_back({"chase relations", e.what(), false, true});
  }

  const MonodromyReport rep = analyze_stability(seed, f.period, m, cfg.stability);
  rows.push_back({"stability", to_string(rep.verdict), rep.verdict == StabilityVerdict::LinearlyStable, true});
  const double mm = rep.full ? rep.full->max_modulus : 0.0;
  add("full max |lambda|", mm, std::abs(mm - 1.0) <= 1e-3);

  bool ok = true;
  std::printf("fixture %s: theta %s, mu %g, period %g%s\n", f.name.c_str(), format_angle(f.angle()).c_str(), f.mu,
              f.period, raw ? " (printed state)" : "");
  for (const Row& r : rows) {
    const char* status = !r.counted ? "info" : (r.pass ? "PASS" : "FAIL");
    std::printf("  %-24s %-44s %s\n", r.check.c_str(), r.value.c_str(), status);
    if (r.counted && !r.pass) ok = false;
  }
  return ok;
}

int cmd_verify(const VerifyArgs& a) {
  const RunConfig cfg = config_or_default(a.config);
  std::vector<const Fixture*> list;
  if (a.fixture == "all") {
    for (const Fixture& f : fixtures()) list.push_back(&f);
  } else {
    try {
      list.push_back(&fixture(a.fixture));
    } catch (const std::out_of_range&) {
      throw UsageError("unknown fixture '" + a.fixture + "' (expected 1..6 or all)");
    }
  }
  bool ok = true;
  for (const Fixture* f : list) ok = verify_one(*f, cfg, a.raw) && ok;
  if (!ok) throw VerificationFailure("fixture verification failed");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Four-body SPBC orbit toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  ReferenceArgs ra;
  auto* ref = app.add_subcommand("reference", "homographic and test-path actions at (theta, mu)");
  ref->add_option("--theta", ra.theta, "angle: 4pi/5, 0.78pi, pi or radians")->required();
  ref->add_option("--mu", ra.mu, "mass ratio m2/m1")->required();
  ref->add_option("--a-test", ra.a_test_file, "JSON list of 6-vectors");

  MinimizeArgs ma;
  auto* mini = app.add_subcommand("minimize", "minimize the action and archive the orbit");
  mini->add_option("--theta", ma.theta, "rotation angle")->required();
  mini->add_option("--mu", ma.mu, "mass ratio m2/m1")->required();
  mini->add_option("--config", ma.config, "JSON configuration file");
  mini->add_option("--archive", ma.archive, "archive directory (default $SPBC_ARCHIVE_DIR)");
  mini->add_option("--random-seeds", ma.random_seeds, "extra random starting points");
  mini->add_flag("--no-stability", ma.skip_stability, "skip the monodromy analysis");
  mini->add_option("--max-stability-period", ma.max_stability_period, "skip stability above this period");

  ScanArgs sa;
  double tl = 0, th = 0, ts = 0, ml = 0, mh = 0, ms = 0;
  auto* scan = app.add_subcommand("scan", "admissible-region scan over (theta, mu)");
  scan->add_option("--config", sa.config, "JSON configuration file");
  scan->add_option("--a-test", sa.a_test_file, "JSON list of 6-vectors");
  scan->add_option("--out", sa.out, "region CSV output");
  auto* o_tl = scan->add_option("--theta-lo", tl, "lower theta, units of pi");
  auto* o_th = scan->add_option("--theta-hi", th, "upper theta, units of pi");
  auto* o_ts = scan->add_option("--theta-step", ts, "theta step, units of pi");
  auto* o_ml = scan->add_option("--mu-lo", ml, "lower mu");
  auto* o_mh = scan->add_option("--mu-hi", mh, "upper mu");
  auto* o_ms = scan->add_option("--mu-step", ms, "mu step");

  ExtendArgs ea;
  auto* ext = app.add_subcommand("extend", "sample the extended orbit of a record");
  ext->add_option("--record", ea.record, "record id, id prefix or file")->required();
  ext->add_option("--t-max", ea.t_max, "final time")->required();
  ext->add_option("--samples", ea.samples, "number of sample times");
  ext->add_option("--out", ea.out, "CSV output (default stdout)");
  ext->add_option("--archive", ea.archive, "archive directory");
  ext->add_option("--config", ea.config, "JSON configuration file");

  StabilityArgs st;
  auto* stab = app.add_subcommand("stability", "monodromy analysis of an archived orbit");
  stab->add_option("--record", st.record, "record id, id prefix or file")->required();
  stab->add_option("--archive", st.archive, "archive directory");
  stab->add_option("--config", st.config, "JSON configuration file");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "check the built-in fixtures");
  ver->add_option("--fixture", va.fixture, "1..6 or all")->required();
  ver->add_option("--config", va.config, "JSON configuration file");
  ver->add_flag("--raw", va.raw, "check the printed states without refinement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ref) return cmd_reference(ra);
    if (*mini) return cmd_minimize(ma);
    if (*scan) {
      if (*o_tl) sa.theta_lo = tl;
      if (*o_th) sa.theta_hi = th;
      if (*o_ts) sa.theta_step = ts;
      if (*o_ml) sa.mu_lo = ml;
      if (*o_mh) sa.mu_hi = mh;
      if (*o_ms) sa.mu_step = ms;
      return cmd_scan(sa);
    }
    if (*ext) return cmd_extend(ea);
    if (*stab) return cmd_stability(st);
    if (*ver) return cmd_verify(va);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ExcludedAngle& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const NegativeTime& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const VerificationFailure& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return kVerification;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return kNumerical;
  }
  return kUsage;
}
