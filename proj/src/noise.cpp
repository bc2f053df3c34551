#include "gravdec/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

namespace gravdec::noise {

// ---------------------------------------------------------------------------
// Philox

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

double to_unit(std::uint32_t hi, std::uint32_t lo) {
  // 53 random bits mapped to (0, 1]
  const std::uint64_t x = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(x) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

std::array<double, 2> normal_pair(const StreamId& s, std::uint64_t step, std::uint32_t component,
                                  std::uint32_t index) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (step > kMax || s.trajectory > kMax)
    throw std::out_of_range("RNG stream address exceeds 32-bit step/trajectory range");
  const auto w = Philox4x32::generate(
      {index, component, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(s.trajectory)},
      {static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32)});
  const double u1 = to_unit(w[0], w[1]);
  const double u2 = to_unit(w[2], w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

// ---------------------------------------------------------------------------
// Components and NoiseSpec

Block block_of(Component c) {
  switch (c) {
    case Component::h00: return Block::b00;
    case Component::h01:
    case Component::h02:
    case Component::h03: return Block::b0i;
    default: return Block::bij;
  }
}

std::array<int, 2> indices_of(Component c) {
  static constexpr std::array<std::array<int, 2>, kComponents> t{
      {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};
  return t[static_cast<std::size_t>(c)];
}

Component component_of(int mu, int nu) {
  if (mu > nu) std::swap(mu, nu);
  for (int c = 0; c < kComponents; ++c) {
    const auto ix = indices_of(static_cast<Component>(c));
    if (ix[0] == mu && ix[1] == nu) return static_cast<Component>(c);
  }
  throw std::out_of_range("metric index out of range");
}

std::string component_name(Component c) {
  const auto ix = indices_of(c);
  return "h" + std::to_string(ix[0]) + std::to_string(ix[1]);
}

void NoiseSpec::validate() const {
  if (!(alpha >= 0) || !std::isfinite(alpha)) throw SpecError("noise alpha must be >= 0");
  if (!(tau_c > 0) || !std::isfinite(tau_c)) throw SpecError("noise tau_c must be > 0");
  for (const auto& k : kernels)
    if (k.type != KernelType::delta && (!(k.ell > 0) || !std::isfinite(k.ell)))
      throw SpecError("kernel correlation length must be > 0");
  for (double s : block_scale)
    if (!(s >= 0) || !std::isfinite(s)) throw SpecError("block scale must be >= 0");
  if (lambda_rule == LambdaRule::fixed && (!(lambda_fixed >= 0) || !std::isfinite(lambda_fixed)))
    throw SpecError("fixed lambda must be >= 0");
}

double lambda_of(const NoiseSpec& spec, double t) {
  if (spec.lambda_rule == LambdaRule::fixed) return spec.lambda_fixed;
  return std::min(spec.tau_c, std::max(t, 0.0));
}

std::vector<double> spectral_weights(const Kernel& k, const Grid& g) {
  const std::size_t N = g.sites();
  std::vector<double> w(N);
  double sum = 0;
  for (std::size_t q = 0; q < N; ++q) {
    const auto kv = g.wavevector(q);
    const double q2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
    const double l = k.ell;
    switch (k.type) {
      case KernelType::gaussian: w[q] = std::exp(-0.5 * q2 * l * l); break;
      case KernelType::exponential:
        w[q] = g.dim == 1 ? 2 * l / (1 + q2 * l * l)
                          : 8 * std::numbers::pi * l * l * l / ((1 + q2 * l * l) * (1 + q2 * l * l));
        break;
      case KernelType::delta: w[q] = 1.0; break;
    }
    sum += w[q];
  }
  const double norm = static_cast<double>(N) / sum;
  for (auto& x : w) x *= norm;
  return w;
}

std::vector<double> lattice_covariance(const Kernel& k, const Grid& g) {
  const auto w = spectral_weights(k, g);
  CVec c(w.begin(), w.end());
  Spectral(g).inverse(c);
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

double kernel_value(const Kernel& k, double r) {
  switch (k.type) {
    case KernelType::gaussian: return std::exp(-r * r / (2 * k.ell * k.ell));
    case KernelType::exponential: return std::exp(-std::abs(r) / k.ell);
    case KernelType::delta: return r == 0 ? 1.0 : 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Sampling

double MetricSample::at(int mu, int nu, std::size_t site) const {
  const auto& v = h[static_cast<std::size_t>(component_of(mu, nu))];
  return v.empty() ? 0.0 : v[site];
}

MetricSample sample_step(const NoiseSpec& spec, const Grid& grid, double dt, const StreamId& stream,
                         std::uint64_t step, double lambda) {
  if (!(dt > 0)) throw std::invalid_argument("sample_step: dt must be positive");
  if (lambda < 0) throw std::invalid_argument("sample_step: lambda must be >= 0");
  const std::size_t N = grid.sites();
  MetricSample out;
  out.dt = dt;
  out.step = step;
  out.stream = stream;
  std::optional<Spectral> fft;
  for (int ci = 0; ci < kComponents; ++ci) {
    const auto c = static_cast<Component>(ci);
    auto& field = out.h[static_cast<std::size_t>(ci)];
    field.assign(N, 0.0);
    const double amp = spec.alpha * spec.scale(c) * std::sqrt(lambda / dt);
    if (!spec.is_active(c) || amp == 0.0) continue;
    for (std::size_t s = 0; s < N; s += 2) {
      const auto z = normal_pair(stream, step, static_cast<std::uint32_t>(ci), static_cast<std::uint32_t>(s / 2));
      field[s] = z[0];
      if (s + 1 < N) field[s + 1] = z[1];
    }
    const Kernel& k = spec.kernel(c);
    if (k.type != KernelType::delta) {
      if (!fft) fft.emplace(grid);
      const auto w = spectral_weights(k, grid);
      CVec data(field.begin(), field.end());
      fft->forward(data);
      for (std::size_t q = 0; q < N; ++q) data[q] *= std::sqrt(w[q]);
      fft->inverse(data);
      for (std::size_t s = 0; s < N; ++s) field[s] = data[s].real();
    }
    for (auto& x : field) x *= amp;
  }
  return out;
}

double expected_covariance(const NoiseSpec& spec, const Grid& grid, Component c, std::size_t r,
                           double dt, double lambda) {
  if (!spec.is_active(c)) return 0.0;
  const double a = spec.alpha * spec.scale(c);
  return a * a * lambda / dt * lattice_covariance(spec.kernel(c), grid)[r];
}

// ---------------------------------------------------------------------------
// Statistics

double Estimate::z() const {
  if (se == 0.0) return value == expected ? 0.0 : std::numeric_limits<double>::infinity();
  return (value - expected) / se;
}

namespace {

double chi2_sf(double x, std::size_t dof) {
  if (dof == 0) return 1.0;
  if (!std::isfinite(x)) return 0.0;
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, x));
}

constexpr double kThreeSigmaP = 0.0027;

}  // namespace

bool StatisticsReport::accepted() const {
  if (mean_p <= kThreeSigmaP || cross_p <= kThreeSigmaP) return false;
  for (const auto& c : components)
    if (c.two_point_p <= kThreeSigmaP) return false;
  return true;
}

void StatisticsAccumulator::Welford::push(double x) {
  ++n;
  const double d = x - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (x - mean);
}

Estimate StatisticsAccumulator::Welford::estimate(double expected) const {
  Estimate e;
  e.value = mean;
  e.expected = expected;
  e.se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  return e;
}

StatisticsAccumulator::StatisticsAccumulator(const NoiseSpec& spec, const Grid& grid, double dt,
                                             double lambda)
    : spec_(spec), grid_(grid), dt_(dt), lambda_(lambda) {
  spec_.validate();
  grid_.validate();
  mean_.resize(kComponents);
  pair_.assign(kComponents, std::vector<Welford>(static_cast<std::size_t>(grid_.n / 2 + 1)));
  cross_.resize(kComponents * (kComponents - 1) / 2);
}

void StatisticsAccumulator::add(const MetricSample& s) {
  const std::size_t N = grid_.sites();
  const double invN = 1.0 / static_cast<double>(N);
  for (int c = 0; c < kComponents; ++c) {
    const auto& h = s.h[static_cast<std::size_t>(c)];
    if (h.size() != N) throw std::invalid_argument("sample does not match grid");
    double m = 0;
    for (double x : h) m += x;
    mean_[static_cast<std::size_t>(c)].push(m * invN);
    for (std::size_t d = 0; d < pair_[static_cast<std::size_t>(c)].size(); ++d) {
      double g = 0;
      for (std::size_t site = 0; site < N; ++site) {
        auto co = grid_.coords(site);
        co[0] += static_cast<int>(d);
        g += h[site] * h[grid_.site(co)];
      }
      pair_[static_cast<std::size_t>(c)][d].push(g * invN);
    }
  }
  std::size_t p = 0;
  for (int a = 0; a < kComponents; ++a)
    for (int b = a + 1; b < kComponents; ++b, ++p) {
      const auto& ha = s.h[static_cast<std::size_t>(a)];
      const auto& hb = s.h[static_cast<std::size_t>(b)];
      double g = 0;
      for (std::size_t site = 0; site < N; ++site) g += ha[site] * hb[site];
      cross_[p].push(g * invN);
    }
  ++n_;
}

StatisticsReport StatisticsAccumulator::report() const {
  if (n_ < kMinStatisticsSamples)
    throw std::invalid_argument("estimate_statistics needs at least " +
                                std::to_string(kMinStatisticsSamples) + " samples, got " +
                                std::to_string(n_));
  StatisticsReport r;
  r.samples = n_;
  std::size_t mean_dof = 0;
  for (int ci = 0; ci < kComponents; ++ci) {
    const auto c = static_cast<Component>(ci);
    ComponentStats cs;
    cs.component = c;
    cs.mean = mean_[static_cast<std::size_t>(ci)].estimate(0.0);
    std::size_t dof = 0;
    for (std::size_t d = 0; d < pair_[static_cast<std::size_t>(ci)].size(); ++d) {
      auto co = grid_.coords(0);
      co[0] = static_cast<int>(d);
      const double expect = expected_covariance(spec_, grid_, c, grid_.site(co), dt_, lambda_);
      cs.two_point.push_back(pair_[static_cast<std::size_t>(ci)][d].estimate(expect));
      if (spec_.is_active(c)) {
        cs.two_point_chi2 += cs.two_point.back().z() * cs.two_point.back().z();
        ++dof;
      }
    }
    cs.two_point_p = chi2_sf(cs.two_point_chi2, dof);
    if (spec_.is_active(c)) {
      r.mean_chi2 += cs.mean.z() * cs.mean.z();
      ++mean_dof;
    }
    r.components.push_back(std::move(cs));
  }
  r.mean_p = chi2_sf(r.mean_chi2, mean_dof);
  std::size_t p = 0, cross_dof = 0;
  for (int a = 0; a < kComponents; ++a)
    for (int b = a + 1; b < kComponents; ++b, ++p) {
      CrossStats x;
      x.a = static_cast<Component>(a);
      x.b = static_cast<Component>(b);
      x.covariance = cross_[p].estimate(0.0);
      x.flagged = std::abs(x.covariance.z()) > 3.0;
      if (spec_.is_active(x.a) && spec_.is_active(x.b)) {
        r.cross_chi2 += x.covariance.z() * x.covariance.z();
        ++cross_dof;
      }
      r.cross.push_back(x);
    }
  r.cross_p = chi2_sf(r.cross_chi2, cross_dof);
  return r;
}

StatisticsReport estimate_statistics(const std::vector<MetricSample>& stream, const NoiseSpec& spec,
                                     const Grid& grid, double lambda) {
  if (stream.size() < kMinStatisticsSamples)
    throw std::invalid_argument("estimate_statistics needs at least " +
                                std::to_string(kMinStatisticsSamples) + " samples");
  StatisticsAccumulator acc(spec, grid, stream.front().dt, lambda);
  for (const auto& s : stream) acc.add(s);
  return acc.report();
}

}  // namespace gravdec::noise
