#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spbc/boundary.hpp"
#include "spbc/extension.hpp"
#include "spbc/minimizer.hpp"
#include "spbc/shooting.hpp"
#include "spbc/stability.hpp"

namespace spbc {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr int kArchiveSchemaVersion = 1;

// "4pi/5", "pi/2", "pi", "0.78pi", "-pi/3" or plain radians "2.43".
// Integer multiples of pi keep their exact P/Q. Throws UsageError.
RotationAngle parse_angle(const std::string& text);
std::string format_angle(const RotationAngle& a);

struct ScanConfig {
  double theta_lo = 0.6;  // units of pi
  double theta_hi = 1.4;
  double theta_step = 0.005;
  double mu_lo = 0.2;
  double mu_hi = 3.0;
  double mu_step = 0.02;
  std::vector<BoundaryParams> a_test;  // defaults to the stored test parameters

  std::vector<double> theta_grid() const;  // radians
  std::vector<double> mu_grid() const;
};

struct VerifyConfig {
  double closure_tol = 1e-5;
  double matching_tol = 1e-4;
  double refined_matching_tol = 1e-9;
  double relation_tol = 1e-6;
  int samples = 41;
};

struct RunConfig {
  IntegratorSettings integrator;
  MinimizerSettings minimizer;
  ShootingSettings shooting;
  StabilitySettings stability;
  ScanConfig scan;
  VerifyConfig verify;
  double shape_tol = 1e-6;

  // Throws UsageError naming the offending field.
  void validate() const;
};

RunConfig default_config();
// Missing keys keep their defaults; unknown keys are rejected. Throws UsageError.
RunConfig load_config(const std::filesystem::path& file);
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& c);
// FNV-1a of the canonical configuration text, as 16 hex digits.
std::string settings_hash(const RunConfig& c);

std::uint64_t fnv1a64(const std::string& bytes);

struct OrbitRecord {
  int schema_version = kArchiveSchemaVersion;
  double m1 = 1.0;
  double m2 = 1.0;
  RotationAngle theta;
  BoundaryParams a_star;
  double T = 1.0;
  PhaseState state;
  double action = 0.0;
  double shooting_residual = 0.0;
  OrbitClassification classification;
  std::optional<MonodromyReport> stability;
  std::string settings_hash;
  std::string tool_version = kToolVersion;

  MassModel masses() const { return MassModel(m1, m2); }
  // Content address over masses, theta, a_star and settings.
  std::string id() const;
};

std::string record_to_json_text(const OrbitRecord& r);
// Throws UsageError on malformed or unsupported documents.
OrbitRecord record_from_json_text(const std::string& text);

// SPBC_ARCHIVE_DIR, else ./spbc_archive.
std::filesystem::path archive_dir();
// Writes <dir>/<id>.json through a temporary file and rename.
std::filesystem::path write_record(const OrbitRecord& r, const std::filesystem::path& dir);
// `key` is a file path or an id in `dir`. Throws UsageError when missing.
OrbitRecord read_record(const std::string& key, const std::filesystem::path& dir);

// 17 significant digits; parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& s);

}  // namespace spbc
