#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gravdec/config.hpp"
#include "gravdec/diagnostics.hpp"

namespace gravdec::runner {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitGuard = 3;
inline constexpr int kExitInvariant = 4;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "GRAVDEC_OUT_DIR";

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
};

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = true;
};

struct Outcome {
  int exit_code = kExitOk;
  std::string out_dir;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  std::string error;
};

/// Output directory: command line, then config, then the environment, then ./gravdec-out.
std::string resolve_out_dir(const config::ExperimentConfig& cfg, const Overrides& o);

/// Runs the configured mode and writes manifest.ini, summary.txt and the CSV
/// outputs. Never throws; failures map to exit codes.
Outcome run(config::ExperimentConfig cfg, const Overrides& o = {});
Outcome run_file(const std::string& path, const Overrides& o = {});

struct Validation {
  std::vector<std::string> errors;    // schema or guard violations
  std::vector<std::string> warnings;  // physical sanity
  std::vector<std::string> notes;
  int exit_code = kExitOk;
  std::optional<double> suggested_dt;
  std::string text() const;
};

Validation validate(const config::ExperimentConfig& cfg);
Validation validate_file(const std::string& path);

/// Largest |eigenvalue| of the coherent Hamiltonian by deterministic power iteration.
double spectral_radius(const dynamics::System& sys, int iterations = 200);

/// Initial state and the coherence pair it defines: site pairs are read in
/// the position basis, plane-wave pairs in the momentum basis.
struct Preparation {
  CVec psi;
  diagnostics::Basis basis = diagnostics::Basis::position;
  std::pair<std::size_t, std::size_t> pair{0, 0};
};

Preparation prepare_state(const config::ExperimentConfig& cfg);

}  // namespace gravdec::runner
