#pragma once

// Classical Gaussian metric noise: independent components h_c(x) per time
// step, white in time, with a stationary spatial kernel per block.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gravdec/grid.hpp"

namespace gravdec::noise {

// ---------------------------------------------------------------------------
// Counter-based RNG

/// Philox4x32-10 (Salmon et al., SC'11). Stateless: output depends only on
/// (key, counter).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter generate(Counter ctr, Key key);
};

/// Stream identity. Every draw is addressed by (seed, trajectory, step, component, index).
struct StreamId {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
};

/// Two independent standard normals for draw `index` of the addressed stream.
std::array<double, 2> normal_pair(const StreamId& s, std::uint64_t step, std::uint32_t component,
                                  std::uint32_t index);

// ---------------------------------------------------------------------------
// NoiseSpec

enum class KernelType { gaussian, exponential, delta };

struct Kernel {
  KernelType type = KernelType::gaussian;
  double ell = 1.0;  // correlation length, ignored for delta
  bool operator==(const Kernel&) const = default;
};

enum class Block { b00 = 0, b0i = 1, bij = 2 };

/// The ten independent components, h_ij generated for i <= j only.
enum class Component { h00 = 0, h01, h02, h03, h11, h12, h13, h22, h23, h33 };
inline constexpr int kComponents = 10;

Block block_of(Component c);
std::array<int, 2> indices_of(Component c);  // (mu, nu), mu <= nu
Component component_of(int mu, int nu);      // symmetric
std::string component_name(Component c);

enum class LambdaRule { min_tau_t, fixed };

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct NoiseSpec {
  double alpha = 0.0;
  double tau_c = 1.0;
  std::array<Kernel, 3> kernels{};                  // per block 00, 0i, ij
  std::array<bool, kComponents> active{};           // all off by default
  std::array<double, 3> block_scale{1.0, 1.0, 1.0};  // relative amplitude per block
  LambdaRule lambda_rule = LambdaRule::min_tau_t;
  double lambda_fixed = 0.0;

  void validate() const;  // throws SpecError
  bool is_active(Component c) const { return active[static_cast<std::size_t>(c)]; }
  const Kernel& kernel(Component c) const { return kernels[static_cast<std::size_t>(block_of(c))]; }
  double scale(Component c) const { return block_scale[static_cast<std::size_t>(block_of(c))]; }
  bool operator==(const NoiseSpec&) const = default;
};

double lambda_of(const NoiseSpec& spec, double t);

/// Lattice spectral weights w(q), normalized so that sum_q w(q) = N and the
/// lattice covariance C(r) = (1/N) sum_q w(q) exp(i q.r) has C(0) = 1.
std::vector<double> spectral_weights(const Kernel& k, const Grid& g);
/// Lattice covariance C(r) for every displacement site r (grid ordering).
std::vector<double> lattice_covariance(const Kernel& k, const Grid& g);
/// Continuum kernel u(r) with u(0) = 1 (for comparison with the lattice form).
double kernel_value(const Kernel& k, double r);

// ---------------------------------------------------------------------------
// Samples

struct MetricSample {
  std::array<std::vector<double>, kComponents> h;  // per component, per site; zeros if inactive
  double dt = 0.0;
  std::uint64_t step = 0;
  StreamId stream;

  const std::vector<double>& operator[](Component c) const { return h[static_cast<std::size_t>(c)]; }
  double at(int mu, int nu, std::size_t site) const;
};

/// One white-noise step: each active component is Gaussian with covariance
/// alpha^2 lambda scale_c^2 C_c(x - y) / dt. `lambda` is normally lambda_of(spec, t_mid).
MetricSample sample_step(const NoiseSpec& spec, const Grid& grid, double dt, const StreamId& stream,
                         std::uint64_t step, double lambda);

/// Expected Cov[h_c(x), h_c(x + r)] for the synthesis above.
double expected_covariance(const NoiseSpec& spec, const Grid& grid, Component c, std::size_t r,
                           double dt, double lambda);

// ---------------------------------------------------------------------------
// Statistics

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  double expected = 0.0;
  double z() const;
};

struct ComponentStats {
  Component component;
  Estimate mean;
  std::vector<Estimate> two_point;  // displacement 0..n/2 along axis x
  double two_point_chi2 = 0.0;
  double two_point_p = 1.0;
};

struct CrossStats {
  Component a, b;
  Estimate covariance;  // same-site E[h_a h_b], expected 0
  bool flagged = false;  // |z| > 3
};

struct StatisticsReport {
  std::size_t samples = 0;
  std::vector<ComponentStats> components;
  std::vector<CrossStats> cross;
  double mean_chi2 = 0.0, mean_p = 1.0;
  double cross_chi2 = 0.0, cross_p = 1.0;
  /// All chi-square families consistent at the 3 sigma level (p > 0.0027).
  bool accepted() const;
};

/// Streaming accumulator; per-sample site averages are treated as the
/// independent observations, so spatial correlation inside a sample does not
/// bias the standard errors.
class StatisticsAccumulator {
 public:
  StatisticsAccumulator(const NoiseSpec& spec, const Grid& grid, double dt, double lambda);
  void add(const MetricSample& s);
  StatisticsReport report() const;  // throws std::invalid_argument below 1000 samples
  std::size_t count() const { return n_; }

 private:
  struct Welford {
    double mean = 0, m2 = 0;
    std::size_t n = 0;
    void push(double x);
    Estimate estimate(double expected) const;
  };
  NoiseSpec spec_;
  Grid grid_;
  double dt_, lambda_;
  std::size_t n_ = 0;
  std::vector<Welford> mean_;                 // per component
  std::vector<std::vector<Welford>> pair_;    // per component, per displacement
  std::vector<Welford> cross_;                // per unordered component pair
};

StatisticsReport estimate_statistics(const std::vector<MetricSample>& stream, const NoiseSpec& spec,
                                     const Grid& grid, double lambda);

inline constexpr std::size_t kMinStatisticsSamples = 1000;

}  // namespace gravdec::noise
