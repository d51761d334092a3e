#include "spbc/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spbc/errors.hpp"
#include "spbc/reference.hpp"

namespace spbc {

using Json = nlohmann::ordered_json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

bool parse_long(const std::string& s, long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') return false;
  out = v;
  return true;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (*end != '\0') return false;
  out = v;
  return true;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  if (!parse_real(trim(s), v)) throw UsageError("not a number: '" + s + "'");
  return v;
}

RotationAngle parse_angle(const std::string& text) {
  std::string s;
  for (char ch : trim(text))
    if (ch != '*' && ch != ' ') s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s.empty()) throw UsageError("empty angle");
  const auto pos = s.find("pi");
  if (pos == std::string::npos) {
    double v = 0.0;
    if (!parse_real(s, v) || !std::isfinite(v)) throw UsageError("cannot parse angle '" + text + "'");
    return RotationAngle::radians(v);
  }
  std::string coef = s.substr(0, pos);
  std::string rest = s.substr(pos + 2);
  std::string den;
  if (!rest.empty()) {
    if (rest[0] != '/') throw UsageError("cannot parse angle '" + text + "'");
    den = rest.substr(1);
    if (den.empty()) throw UsageError("missing denominator in angle '" + text + "'");
  }
  if (coef.empty() || coef == "+") coef = "1";
  if (coef == "-") coef = "-1";
  long P = 0, Q = 1;
  if (parse_long(coef, P) && (den.empty() || parse_long(den, Q))) {
    if (Q == 0) throw UsageError("zero denominator in angle '" + text + "'");
    if (P > 0 && Q > 0) return RotationAngle::rational(P, Q);
    return RotationAngle::radians(kPi * static_cast<double>(P) / static_cast<double>(Q));
  }
  double c = 0.0, d = 1.0;
  if (!parse_real(coef, c) || (!den.empty() && !parse_real(den, d)) || d == 0.0 || !std::isfinite(c) ||
      !std::isfinite(d))
    throw UsageError("cannot parse angle '" + text + "'");
  return RotationAngle::radians(c * kPi / d);
}

std::string format_angle(const RotationAngle& a) {
  if (!a.is_rational()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10gpi", a.theta / kPi);
    return buf;
  }
  std::string s = *a.P == 1 ? "pi" : std::to_string(*a.P) + "pi";
  if (*a.Q != 1) s += "/" + std::to_string(*a.Q);
  return s;
}

std::vector<double> ScanConfig::theta_grid() const {
  std::vector<double> g = uniform_grid(theta_lo, theta_hi, theta_step);
  for (double& x : g) x *= kPi;
  return g;
}

std::vector<double> ScanConfig::mu_grid() const { return uniform_grid(mu_lo, mu_hi, mu_step); }

RunConfig default_config() {
  RunConfig c;
  for (const TestParamEntry& e : reference_test_params()) c.scan.a_test.push_back(e.a);
  return c;
}

void RunConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string(section) + ": " + e.what());
    }
  };
  wrap("integrator", [&] { integrator.validate(); });
  wrap("minimizer", [&] { minimizer.validate(); });
  wrap("shooting.integrator", [&] { shooting.integrator.validate(); });
  wrap("stability", [&] { stability.validate(); });
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid configuration: " + what);
  };
  require(shooting.tol > 0.0, "shooting.tol must be positive");
  require(shooting.max_iterations > 0, "shooting.max_iterations must be positive");
  require(shooting.initial_damping > 0.0, "shooting.initial_damping must be positive");
  require(shooting.T > 0.0, "shooting.T must be positive");
  require(scan.theta_step > 0.0 && scan.theta_lo <= scan.theta_hi, "scan theta range");
  require(scan.theta_lo > 0.0 && scan.theta_hi < 2.0, "scan theta must lie in (0, 2) pi");
  require(scan.mu_step > 0.0 && scan.mu_lo > 0.0 && scan.mu_lo <= scan.mu_hi, "scan mu range");
  require((scan.theta_hi - scan.theta_lo) / scan.theta_step < 1e6, "scan theta grid too large");
  require((scan.mu_hi - scan.mu_lo) / scan.mu_step < 1e6, "scan mu grid too large");
  require(!scan.a_test.empty(), "scan.a_test is empty");
  require(verify.closure_tol > 0.0 && verify.matching_tol > 0.0 && verify.refined_matching_tol > 0.0 &&
              verify.relation_tol > 0.0,
          "verify tolerances must be positive");
  require(verify.samples >= 2, "verify.samples must be >= 2");
  require(shape_tol > 0.0 && shape_tol < 1.0, "shape_tol must lie in (0, 1)");
}

namespace {

Json integrator_json(const IntegratorSettings& s) {
  return Json{{"abs_tol", s.abs_tol},       {"rel_tol", s.rel_tol},           {"min_step", s.min_step},
              {"max_step", s.max_step},     {"initial_step", s.initial_step}, {"dense_output", s.dense_output},
              {"max_steps", s.max_steps}};
}

// Reads known keys from an object and rejects anything else.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UsageError(where_ + " must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw UsageError("unknown configuration key " + where_ + "." + it.key());
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw UsageError("bad value for " + where_ + "." + key);
    }
  }
  const Json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const char* key) const { return where_ + "." + key; }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_integrator(const Json& j, const std::string& where, IntegratorSettings& s) {
  Reader r(j, where);
  r.get("abs_tol", s.abs_tol);
  r.get("rel_tol", s.rel_tol);
  r.get("min_step", s.min_step);
  r.get("max_step", s.max_step);
  r.get("initial_step", s.initial_step);
  r.get("dense_output", s.dense_output);
  r.get("max_steps", s.max_steps);
}

std::vector<double> params_vector(const BoundaryParams& a) { return {a.a.data(), a.a.data() + 6}; }

}  // namespace

std::string config_to_json_text(const RunConfig& c) {
  const MinimizerSettings& m = c.minimizer;
  Json a_test = Json::array();
  for (const BoundaryParams& a : c.scan.a_test) a_test.push_back(params_vector(a));
  Json j{
      {"integrator", integrator_json(c.integrator)},
      {"minimizer",
       {{"T", m.T},
        {"grad_tol", m.grad_tol},
        {"coarse_grad_tol", m.coarse_grad_tol},
        {"max_iterations", m.max_iterations},
        {"armijo_c1", m.armijo_c1},
        {"backtrack_factor", m.backtrack_factor},
        {"max_backtracks", m.max_backtracks},
        {"restart_interval", m.restart_interval},
        {"simplex_tol", m.simplex_tol},
        {"simplex_max_evaluations", m.simplex_max_evaluations},
        {"simplex_step", m.simplex_step},
        {"simplex_N", m.simplex_N},
        {"n_schedule", m.n_schedule},
        {"polish_N", m.polish_N},
        {"strategy", m.strategy == OuterStrategy::Joint ? "joint" : "nelder-mead"},
        {"random_seeds", m.random_seeds},
        {"rng_seed", m.rng_seed},
        {"random_seed_scale", m.random_seed_scale},
        {"divergence_bound", m.divergence_bound}}},
      {"shooting",
       {{"integrator", integrator_json(c.shooting.integrator)},
        {"tol", c.shooting.tol},
        {"max_iterations", c.shooting.max_iterations},
        {"initial_damping", c.shooting.initial_damping}}},
      {"stability",
       {{"integrator", integrator_json(c.stability.integrator)},
        {"tol", c.stability.tol},
        {"fd_step", c.stability.fd_step},
        {"full", c.stability.full}}},
      {"scan",
       {{"theta_lo_pi", c.scan.theta_lo},
        {"theta_hi_pi", c.scan.theta_hi},
        {"theta_step_pi", c.scan.theta_step},
        {"mu_lo", c.scan.mu_lo},
        {"mu_hi", c.scan.mu_hi},
        {"mu_step", c.scan.mu_step},
        {"a_test", a_test}}},
      {"verify",
       {{"closure_tol", c.verify.closure_tol},
        {"matching_tol", c.verify.matching_tol},
        {"refined_matching_tol", c.verify.refined_matching_tol},
        {"relation_tol", c.verify.relation_tol},
        {"samples", c.verify.samples}}},
      {"shape_tol", c.shape_tol},
  };
  return j.dump(2);
}

RunConfig config_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("configuration is not valid JSON: ") + e.what());
  }
  RunConfig c = default_config();
  {
    Reader top(j, "config");
    if (const Json* s = top.sub("integrator")) read_integrator(*s, "integrator", c.integrator);
    if (const Json* s = top.sub("minimizer")) {
      MinimizerSettings& m = c.minimizer;
      Reader r(*s, "minimizer");
      r.get("T", m.T);
      r.get("grad_tol", m.grad_tol);
      r.get("coarse_grad_tol", m.coarse_grad_tol);
      r.get("max_iterations", m.max_iterations);
      r.get("armijo_c1", m.armijo_c1);
      r.get("backtrack_factor", m.backtrack_factor);
      r.get("max_backtracks", m.max_backtracks);
      r.get("restart_interval", m.restart_interval);
      r.get("simplex_tol", m.simplex_tol);
      r.get("simplex_max_evaluations", m.simplex_max_evaluations);
      r.get("simplex_step", m.simplex_step);
      r.get("simplex_N", m.simplex_N);
      r.get("n_schedule", m.n_schedule);
      r.get("polish_N", m.polish_N);
      std::string strategy = m.strategy == OuterStrategy::Joint ? "joint" : "nelder-mead";
      r.get("strategy", strategy);
      if (strategy == "joint")
        m.strategy = OuterStrategy::Joint;
      else if (strategy == "nelder-mead")
        m.strategy = OuterStrategy::NelderMead;
      else
        throw UsageError("minimizer.strategy must be 'joint' or 'nelder-mead'");
      r.get("random_seeds", m.random_seeds);
      r.get("rng_seed", m.rng_seed);
      r.get("random_seed_scale", m.random_seed_scale);
      r.get("divergence_bound", m.divergence_bound);
    }
    if (const Json* s = top.sub("shooting")) {
      Reader r(*s, "shooting");
      if (const Json* i = r.sub("integrator")) read_integrator(*i, "shooting.integrator", c.shooting.integrator);
      r.get("tol", c.shooting.tol);
      r.get("max_iterations", c.shooting.max_iterations);
      r.get("initial_damping", c.shooting.initial_damping);
    }
    if (const Json* s = top.sub("stability")) {
      Reader r(*s, "stability");
      if (const Json* i = r.sub("integrator")) read_integrator(*i, "stability.integrator", c.stability.integrator);
      r.get("tol", c.stability.tol);
      r.get("fd_step", c.stability.fd_step);
      r.get("full", c.stability.full);
    }
    if (const Json* s = top.sub("scan")) {
      Reader r(*s, "scan");
      r.get("theta_lo_pi", c.scan.theta_lo);
      r.get("theta_hi_pi", c.scan.theta_hi);
      r.get("theta_step_pi", c.scan.theta_step);
      r.get("mu_lo", c.scan.mu_lo);
      r.get("mu_hi", c.scan.mu_hi);
      r.get("mu_step", c.scan.mu_step);
      if (const Json* a = r.sub("a_test")) {
        std::vector<std::vector<double>> rows;
        try {
          rows = a->get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception&) {
          throw UsageError("scan.a_test must be a list of 6-vectors");
        }
        c.scan.a_test.clear();
        for (const auto& row : rows) {
          if (row.size() != 6) throw UsageError("scan.a_test entries need 6 values");
          try {
            c.scan.a_test.emplace_back(row[0], row[1], row[2], row[3], row[4], row[5]);
          } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("scan.a_test: ") + e.what());
          }
        }
      }
    }
    if (const Json* s = top.sub("verify")) {
      Reader r(*s, "verify");
      r.get("closure_tol", c.verify.closure_tol);
      r.get("matching_tol", c.verify.matching_tol);
      r.get("refined_matching_tol", c.verify.refined_matching_tol);
      r.get("relation_tol", c.verify.relation_tol);
      r.get("samples", c.verify.samples);
    }
    top.get("shape_tol", c.shape_tol);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open configuration " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex16(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string settings_hash(const RunConfig& c) { return hex16(fnv1a64(config_to_json_text(c))); }

std::string OrbitRecord::id() const {
  std::string key = "m1=" + format_double(m1) + ";m2=" + format_double(m2) + ";theta=" + format_double(theta.theta);
  if (theta.is_rational()) key += ";P=" + std::to_string(*theta.P) + ";Q=" + std::to_string(*theta.Q);
  key += ";a=";
  for (int i = 0; i < 6; ++i) key += format_double(a_star[i]) + ",";
  key += ";T=" + format_double(T) + ";settings=" + settings_hash;
  return hex16(fnv1a64(key));
}

// Archive documents store every real as a 17-digit string.
namespace {

Json num(double x) { return format_double(x); }

double num_of(const Json& j, const char* key) {
  if (!j.contains(key)) throw UsageError(std::string("record is missing '") + key + "'");
  const Json& v = j.at(key);
  if (v.is_string()) return parse_double(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw UsageError(std::string("record field '") + key + "' is not a number");
}

Json complex_list(const std::vector<std::complex<double>>& v) {
  Json a = Json::array();
  for (const auto& z : v) a.push_back(Json::array({num(z.real()), num(z.imag())}));
  return a;
}

std::vector<std::complex<double>> complex_list_of(const Json& a) {
  std::vector<std::complex<double>> v;
  for (const Json& z : a) {
    if (!z.is_array() || z.size() != 2) throw UsageError("complex values must be [re, im] pairs");
    v.emplace_back(parse_double(z[0].get<std::string>()), parse_double(z[1].get<std::string>()));
  }
  return v;
}

Json opt_long(const std::optional<long>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<long> opt_long_of(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<long>();
}

OrbitKind kind_of(const std::string& s) {
  for (OrbitKind k : {OrbitKind::QuasiPeriodic, OrbitKind::NonChoreographic, OrbitKind::DoubleChoreographic,
                      OrbitKind::SimpleChoreographic})
    if (to_string(k) == s) return k;
  throw UsageError("unknown orbit kind '" + s + "'");
}

StabilityVerdict verdict_of(const std::string& s) {
  for (StabilityVerdict v : {StabilityVerdict::LinearlyStable, StabilityVerdict::SpectrallyStable,
                             StabilityVerdict::Unstable, StabilityVerdict::Indeterminate})
    if (to_string(v) == s) return v;
  throw UsageError("unknown verdict '" + s + "'");
}

}  // namespace

std::string record_to_json_text(const OrbitRecord& r) {
  const OrbitClassification& c = r.classification;
  Json chase = Json::array();
  for (const ChaseRelation& ch : c.chase) chase.push_back({{"from", ch.from}, {"to", ch.to}, {"lag", num(ch.lag)}});
  Json a = Json::array(), state = Json::array();
  for (int i = 0; i < 6; ++i) a.push_back(num(r.a_star[i]));
  const Eigen::VectorXd y = r.state.pack();
  for (int i = 0; i < 16; ++i) state.push_back(num(y[i]));

  Json stab = nullptr;
  if (r.stability) {
    const MonodromyReport& s = *r.stability;
    Json spectrum = Json::array();
    for (const auto& [w, k] : s.w_spectrum) spectrum.push_back(Json::array({num(w), k}));
    Json full = nullptr;
    if (s.full)
      full = {{"multipliers", complex_list(s.full->multipliers)},
              {"max_modulus", num(s.full->max_modulus)},
              {"near_one", s.full->near_one}};
    stab = {{"verdict", to_string(s.verdict)},
            {"note", s.note},
            {"reduced_multipliers", complex_list(s.reduced_multipliers)},
            {"w_eigenvalues", complex_list(s.w_eigenvalues)},
            {"w_spectrum", spectrum},
            {"min_gap", num(s.min_gap)},
            {"reciprocal_defect", num(s.reciprocal_defect)},
            {"symplectic_defect", num(s.symplectic_defect)},
            {"closure", num(s.closure)},
            {"conditioning_warning", s.conditioning_warning},
            {"full", full}};
  }

  Json j{
      {"schema_version", r.schema_version},
      {"id", r.id()},
      {"masses", {{"m1", num(r.m1)}, {"m2", num(r.m2)}, {"mu", num(r.m2 / r.m1)}}},
      {"theta", {{"radians", num(r.theta.theta)}, {"P", opt_long(r.theta.P)}, {"Q", opt_long(r.theta.Q)}}},
      {"a_star", a},
      {"T", num(r.T)},
      {"state", state},
      {"action", num(r.action)},
      {"shooting_residual", num(r.shooting_residual)},
      {"classification",
       {{"kind", to_string(c.kind)},
        {"P", opt_long(c.P)},
        {"Q", opt_long(c.Q)},
        {"T", num(c.T)},
        {"period", num(c.period)},
        {"case", c.case_label},
        {"curves", c.curves},
        {"sides", c.sides},
        {"chase", chase},
        {"cyclic_order", c.cyclic_order},
        {"theta_above_pi", c.theta_above_pi}}},
      {"stability", stab},
      {"provenance", {{"settings_hash", r.settings_hash}, {"tool_version", r.tool_version}}},
  };
  return j.dump(2) + "\n";
}

OrbitRecord record_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("record is not valid JSON: ") + e.what());
  }
  try {
    OrbitRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kArchiveSchemaVersion)
      throw UsageError("unsupported archive schema version " + std::to_string(r.schema_version));
    r.m1 = num_of(j.at("masses"), "m1");
    r.m2 = num_of(j.at("masses"), "m2");
    const Json& th = j.at("theta");
    r.theta.theta = num_of(th, "radians");
    r.theta.P = opt_long_of(th, "P");
    r.theta.Q = opt_long_of(th, "Q");
    const Json& a = j.at("a_star");
    const Json& st = j.at("state");
    if (a.size() != 6 || st.size() != 16) throw UsageError("record a_star/state have the wrong length");
    Eigen::Matrix<double, 6, 1> av;
    for (int i = 0; i < 6; ++i) av[i] = parse_double(a[i].get<std::string>());
    r.a_star = BoundaryParams(av);
    r.T = num_of(j, "T");
    Eigen::VectorXd y(16);
    for (int i = 0; i < 16; ++i) y[i] = parse_double(st[i].get<std::string>());
    r.state = PhaseState::unpack(y, 0.0);
    r.action = num_of(j, "action");
    r.shooting_residual = num_of(j, "shooting_residual");

    const Json& cj = j.at("classification");
    OrbitClassification& c = r.classification;
    c.kind = kind_of(cj.at("kind").get<std::string>());
    c.P = opt_long_of(cj, "P");
    c.Q = opt_long_of(cj, "Q");
    c.T = num_of(cj, "T");
    c.period = num_of(cj, "period");
    c.case_label = cj.at("case").get<std::string>();
    c.curves = cj.at("curves").get<int>();
    c.sides = cj.at("sides").get<int>();
    for (const Json& ch : cj.at("chase"))
      c.chase.push_back({ch.at("from").get<int>(), ch.at("to").get<int>(), num_of(ch, "lag")});
    c.cyclic_order = cj.at("cyclic_order").get<std::vector<int>>();
    c.theta_above_pi = cj.at("theta_above_pi").get<bool>();

    const Json& sj = j.at("stability");
    if (!sj.is_null()) {
      MonodromyReport s;
      s.verdict = verdict_of(sj.at("verdict").get<std::string>());
      s.note = sj.at("note").get<std::string>();
      s.reduced_multipliers = complex_list_of(sj.at("reduced_multipliers"));
      s.w_eigenvalues = complex_list_of(sj.at("w_eigenvalues"));
      for (const Json& w : sj.at("w_spectrum"))
        s.w_spectrum.emplace_back(parse_double(w.at(0).get<std::string>()), w.at(1).get<int>());
      s.min_gap = num_of(sj, "min_gap");
      s.reciprocal_defect = num_of(sj, "reciprocal_defect");
      s.symplectic_defect = num_of(sj, "symplectic_defect");
      s.closure = num_of(sj, "closure");
      s.conditioning_warning = sj.at("conditioning_warning").get<bool>();
      const Json& fj = sj.at("full");
      if (!fj.is_null()) {
        FullMonodromy f;
        f.multipliers = complex_list_of(fj.at("multipliers"));
        f.max_modulus = num_of(fj, "max_modulus");
        f.near_one = fj.at("near_one").get<int>();
        s.full = f;
      }
      r.stability = s;
    }
    const Json& pj = j.at("provenance");
    r.settings_hash = pj.at("settings_hash").get<std::string>();
    r.tool_version = pj.at("tool_version").get<std::string>();
    if (j.contains("id") && j.at("id").get<std::string>() != r.id())
      throw UsageError("record id does not match its content");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("malformed record: ") + e.what());
  }
}

std::filesystem::path archive_dir() {
  if (const char* env = std::getenv("SPBC_ARCHIVE_DIR"); env && *env) return env;
  return "spbc_archive";
}

std::filesystem::path write_record(const OrbitRecord& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path target = dir / (r.id() + ".json");
  const fs::path tmp = dir / ("." + r.id() + ".json.tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << record_to_json_text(r);
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, target);
  return target;
}

OrbitRecord read_record(const std::string& key, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::path file;
  if (fs::is_regular_file(key)) {
    file = key;
  } else if (fs::is_regular_file(dir / (key + ".json"))) {
    file = dir / (key + ".json");
  } else if (!key.empty() && fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind(key, 0) == 0 && e.path().extension() == ".json") {
        if (!file.empty()) throw UsageError("record prefix '" + key + "' is ambiguous");
        file = e.path();
      }
    }
  }
  if (file.empty()) throw UsageError("no record '" + key + "' in " + dir.string());
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return record_from_json_text(ss.str());
}

}  // namespace spbc
