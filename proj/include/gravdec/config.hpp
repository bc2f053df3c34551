#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "gravdec/dynamics.hpp"
#include "gravdec/noise.hpp"

namespace gravdec::config {

/// Malformed or unknown configuration content.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode {
  trajectories,
  master,
  position_limit,
  momentum_limit,
  fw_verify,
  identities,
  noise_stats,
  compare_models
};

enum class EMPreset { off, uniform_b, coulomb_like };

enum class InitialState { superposition, plane_wave, plane_wave_pair, position };

struct GridBlock {
  int dim = 1;
  int n = 16;
  double spacing = 1.0;
  bool operator==(const GridBlock&) const = default;
};

/// Physical constants in engine units, plus the SI size of one engine unit of
/// mass, length and time (recorded for conversion, never used internally).
struct ScalesBlock {
  double hbar = 1.0, c = 1.0, m = 1.0, e = 1.0;
  double mass = 1.0, length = 1.0, time = 1.0;
  bool operator==(const ScalesBlock&) const = default;
};

struct EMBlock {
  EMPreset preset = EMPreset::off;
  std::array<double, 3> B{0.0, 0.0, 0.0};
  double charge = 1.0;
  double softening = 1.0;
  bool operator==(const EMBlock&) const = default;
};

struct StateBlock {
  InitialState kind = InitialState::superposition;
  int site_a = 0, site_b = 1;  // superposition / position
  int k_a = 1, k_b = 2;        // plane waves, along x
  int spin = 0;
  bool operator==(const StateBlock&) const = default;
};

struct RunBlock {
  Mode mode = Mode::master;
  double T = 1.0;
  double dt = 1e-3;
  std::uint64_t n_traj = 1000;
  std::uint64_t seed = 1;
  std::uint64_t record_every = 10;
  std::uint64_t samples = 100000;  // noise-stats
  dynamics::CouplingSet couplings = dynamics::CouplingSet::hamiltonian;
  bool include_hr = false;
  bool include_rest_mass = false;
  bool operator==(const RunBlock&) const = default;
};

struct OutputBlock {
  std::string directory;  // empty: command line, then environment, then ./gravdec-out
  std::string formats = "csv";
  bool operator==(const OutputBlock&) const = default;
};

struct ExperimentConfig {
  GridBlock grid;
  ScalesBlock scales;
  EMBlock em;
  noise::NoiseSpec noise;
  StateBlock state;
  RunBlock run;
  OutputBlock output;
  bool operator==(const ExperimentConfig&) const = default;

  Grid make_grid() const;
  dynamics::Physical units() const;
  dynamics::EMField make_em() const;
};

/// Strict parse: unknown sections or keys, bad values and failed range checks throw ConfigError.
ExperimentConfig parse(const std::string& text);
ExperimentConfig load(const std::string& path);
/// Every field is written, so parse(serialize(c)) == c.
std::string serialize(const ExperimentConfig& c);

std::string mode_name(Mode m);
bool needs_dense(Mode m);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace gravdec::config
