#include "doctest.h"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "gravdec/noise.hpp"

using namespace gravdec;
using namespace gravdec::noise;

namespace {

NoiseSpec single(Component c, Kernel k, double alpha = 1.0) {
  NoiseSpec s;
  s.alpha = alpha;
  s.tau_c = 1.0;
  s.kernels = {k, k, k};
  s.active[static_cast<std::size_t>(c)] = true;
  s.lambda_rule = LambdaRule::fixed;
  s.lambda_fixed = 1.0;
  return s;
}

}  // namespace

TEST_CASE("Philox4x32-10 reproduces the Random123 known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal draws have unit variance and distinct addresses decorrelate") {
  StreamId s{42, 0};
  double m = 0, v = 0, cross = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto z = normal_pair(s, 0, 0, static_cast<std::uint32_t>(i));
    m += z[0] + z[1];
    v += z[0] * z[0] + z[1] * z[1];
    cross += z[0] * z[1];
  }
  m /= 2 * n;
  v /= 2 * n;
  cross /= n;
  CHECK(std::abs(m) < 3 / std::sqrt(2.0 * n));
  CHECK(std::abs(v - 1) < 3 * std::sqrt(2.0 / (2 * n)));
  CHECK(std::abs(cross) < 3 / std::sqrt(1.0 * n));
  CHECK(normal_pair(s, 0, 0, 0) != normal_pair(StreamId{42, 1}, 0, 0, 0));
  CHECK(normal_pair(s, 0, 0, 0) != normal_pair(s, 1, 0, 0));
  CHECK(normal_pair(s, 0, 0, 0) != normal_pair(s, 0, 1, 0));
  CHECK_THROWS_AS(normal_pair(s, std::uint64_t{1} << 32, 0, 0), std::out_of_range);
}

TEST_CASE("component indexing is symmetric") {
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) {
      const auto c = component_of(mu, nu);
      CHECK(c == component_of(nu, mu));
      const auto ix = indices_of(c);
      CHECK(ix[0] == std::min(mu, nu));
      CHECK(ix[1] == std::max(mu, nu));
    }
  CHECK(block_of(Component::h00) == Block::b00);
  CHECK(block_of(Component::h02) == Block::b0i);
  CHECK(block_of(Component::h23) == Block::bij);
  CHECK(component_name(Component::h13) == "h13");
  CHECK_THROWS(component_of(0, 4));
}

TEST_CASE("NoiseSpec validation") {
  auto s = single(Component::h00, {KernelType::gaussian, 1.0});
  CHECK_NOTHROW(s.validate());
  auto bad = s;
  bad.alpha = -1;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = s;
  bad.tau_c = 0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = s;
  bad.kernels[1].ell = 0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = s;
  bad.lambda_fixed = -2;
  CHECK_THROWS_AS(bad.validate(), SpecError);
}

TEST_CASE("lambda rule") {
  NoiseSpec s;
  s.tau_c = 2.5;
  CHECK(lambda_of(s, 0.0) == 0.0);
  CHECK(lambda_of(s, 1.0) == 1.0);
  CHECK(lambda_of(s, 25.0) == 2.5);
  s.lambda_rule = LambdaRule::fixed;
  s.lambda_fixed = 0.7;
  CHECK(lambda_of(s, 0.0) == 0.7);
  CHECK(lambda_of(s, 1e6) == 0.7);
}

TEST_CASE("spectral transform round trip matches a direct DFT") {
  for (int dim : {1, 3}) {
    Grid g{dim, 4, 0.5};
    const std::size_t N = g.sites();
    CVec x(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = {std::sin(1.0 + i), std::cos(0.3 * i)};
    CVec y = x;
    Spectral sp(g);
    sp.forward(y);
    for (std::size_t q = 0; q < N; ++q) {
      const auto cq = g.coords(q);
      cplx direct = 0;
      for (std::size_t s = 0; s < N; ++s) {
        const auto cs = g.coords(s);
        double ph = 0;
        for (int d = 0; d < 3; ++d) ph -= 2 * std::numbers::pi * cq[d] * cs[d] / g.n;
        direct += x[s] * std::polar(1.0, ph);
      }
      CHECK(std::abs(y[q] - direct) < 1e-12);
    }
    sp.inverse(y);
    for (std::size_t i = 0; i < N; ++i) CHECK(std::abs(y[i] - x[i]) < 1e-13);
  }
}

TEST_CASE("kernel spectral weights are normalized and reproduce the closed form") {
  Grid g{1, 64, 1.0};
  for (auto k : {Kernel{KernelType::gaussian, 3.0}, Kernel{KernelType::exponential, 2.0},
                 Kernel{KernelType::delta, 1.0}}) {
    const auto w = spectral_weights(k, g);
    double sum = 0;
    for (double x : w) {
      CHECK(x >= 0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(64.0));
    const auto c = lattice_covariance(k, g);
    CHECK(c[0] == doctest::Approx(1.0));
  }
  const auto cg = lattice_covariance({KernelType::gaussian, 3.0}, g);
  for (int r = 0; r < 12; ++r) CHECK(cg[static_cast<std::size_t>(r)] == doctest::Approx(std::exp(-r * r / 18.0)).epsilon(1e-9));
  const auto cd = lattice_covariance({KernelType::delta, 1.0}, g);
  for (std::size_t r = 1; r < cd.size(); ++r) CHECK(std::abs(cd[r]) < 1e-14);
}

TEST_CASE("alpha = 0 produces an identically zero field") {
  Grid g{3, 4, 1.0};
  auto s = single(Component::h00, {KernelType::gaussian, 1.0}, 0.0);
  s.active.fill(true);
  const auto m = sample_step(s, g, 0.1, {7, 0}, 3, 1.0);
  for (const auto& f : m.h)
    for (double x : f) CHECK(x == 0.0);
}

TEST_CASE("synthesis is linear in alpha, deterministic and symmetric") {
  Grid g{3, 4, 1.0};
  auto s1 = single(Component::h00, {KernelType::gaussian, 1.5}, 0.3);
  s1.active.fill(true);
  s1.block_scale = {1.0, 0.5, 2.0};
  auto s2 = s1;
  s2.alpha = 0.6;
  const StreamId id{1234, 5};
  const auto a = sample_step(s1, g, 0.01, id, 17, 0.4);
  const auto b = sample_step(s2, g, 0.01, id, 17, 0.4);
  const auto a2 = sample_step(s1, g, 0.01, id, 17, 0.4);
  for (int c = 0; c < kComponents; ++c)
    for (std::size_t x = 0; x < g.sites(); ++x) {
      CHECK(b.h[c][x] == 2 * a.h[c][x]);
      CHECK(a2.h[c][x] == a.h[c][x]);
    }
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) CHECK(a.at(i, j, 5) == a.at(j, i, 5));
  const auto other = sample_step(s1, g, 0.01, id, 18, 0.4);
  CHECK(other.h[0][0] != a.h[0][0]);
}

TEST_CASE("sample_step rejects a non-positive step") {
  Grid g{1, 8, 1.0};
  const auto s = single(Component::h00, {KernelType::delta, 1.0});
  CHECK_THROWS_AS(sample_step(s, g, 0.0, {}, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_step(s, g, -1.0, {}, 0, 1.0), std::invalid_argument);
}

TEST_CASE("delta kernel: distinct points are uncorrelated over 1e5 steps") {
  Grid g{1, 16, 1.0};
  const auto s = single(Component::h11, {KernelType::delta, 1.0}, 0.5);
  const double dt = 0.05, lambda = 1.0;
  StatisticsAccumulator acc(s, g, dt, lambda);
  for (std::uint64_t k = 0; k < 100000; ++k) acc.add(sample_step(s, g, dt, {99, 0}, k, lambda));
  const auto r = acc.report();
  const auto& cs = r.components[static_cast<std::size_t>(Component::h11)];
  CHECK(std::abs(cs.two_point[0].value - 0.25 / dt) < 3 * cs.two_point[0].se);
  for (std::size_t d = 1; d < cs.two_point.size(); ++d) {
    CHECK(cs.two_point[d].expected == 0.0);
    CHECK(std::abs(cs.two_point[d].z()) < 3.0);
  }
  CHECK(r.accepted());
}

TEST_CASE("gaussian kernel: normalized covariance follows exp(-dx^2 / 2 l^2)") {
  Grid g{1, 32, 1.0};
  const double ell = 2.0, dt = 0.1, lambda = 0.5, alpha = 0.2;
  const auto s = single(Component::h00, {KernelType::gaussian, ell}, alpha);
  StatisticsAccumulator acc(s, g, dt, lambda);
  for (std::uint64_t k = 0; k < 20000; ++k) acc.add(sample_step(s, g, dt, {5, 0}, k, lambda));
  const auto r = acc.report();
  const auto& tp = r.components[0].two_point;
  const double var = alpha * alpha * lambda / dt;
  double chi2 = 0;
  for (std::size_t d = 0; d < tp.size(); ++d) {
    const double closed = var * std::exp(-static_cast<double>(d * d) / (2 * ell * ell));
    const double z = (tp[d].value - closed) / tp[d].se;
    chi2 += z * z;
  }
  boost::math::chi_squared dist(static_cast<double>(tp.size()));
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.0027);
  CHECK(r.accepted());
}

TEST_CASE("covariance is stationary across anchor points") {
  Grid g{1, 16, 1.0};
  const auto s = single(Component::h00, {KernelType::exponential, 1.5}, 1.0);
  const int steps = 20000;
  const std::size_t dx = 2;
  std::vector<double> sum(g.sites(), 0.0), sum2(g.sites(), 0.0);
  for (int k = 0; k < steps; ++k) {
    const auto m = sample_step(s, g, 1.0, {11, 0}, static_cast<std::uint64_t>(k), 1.0);
    for (std::size_t x = 0; x < g.sites(); ++x) {
      const double p = m.h[0][x] * m.h[0][(x + dx) % g.sites()];
      sum[x] += p;
      sum2[x] += p * p;
    }
  }
  const double expected = expected_covariance(s, g, Component::h00, dx, 1.0, 1.0);
  double chi2 = 0;
  for (std::size_t x = 0; x < g.sites(); ++x) {
    const double mean = sum[x] / steps;
    const double se = std::sqrt((sum2[x] / steps - mean * mean) / (steps - 1));
    chi2 += (mean - expected) * (mean - expected) / (se * se);
  }
  boost::math::chi_squared dist(static_cast<double>(g.sites()));
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.0027);
}

TEST_CASE("statistics on a zero stream are exactly zero") {
  Grid g{1, 8, 1.0};
  auto s = single(Component::h00, {KernelType::gaussian, 1.0}, 0.0);
  std::vector<MetricSample> stream;
  for (std::uint64_t k = 0; k < 1000; ++k) stream.push_back(sample_step(s, g, 0.1, {1, 0}, k, 1.0));
  const auto r = estimate_statistics(stream, s, g, 1.0);
  for (const auto& c : r.components) {
    CHECK(c.mean.value == 0.0);
    for (const auto& e : c.two_point) CHECK(e.value == 0.0);
  }
  for (const auto& x : r.cross) {
    CHECK(x.covariance.value == 0.0);
    CHECK_FALSE(x.flagged);
  }
  CHECK(r.accepted());
  stream.pop_back();
  CHECK_THROWS_AS(estimate_statistics(stream, s, g, 1.0), std::invalid_argument);
}

TEST_CASE("independent components: cross-correlations are consistent with zero") {
  Grid g{3, 4, 1.0};
  NoiseSpec s;
  s.alpha = 0.7;
  s.kernels = {Kernel{KernelType::gaussian, 1.2}, Kernel{KernelType::exponential, 0.8},
               Kernel{KernelType::gaussian, 0.9}};
  s.active.fill(true);
  s.lambda_rule = LambdaRule::fixed;
  s.lambda_fixed = 1.0;
  StatisticsAccumulator acc(s, g, 0.2, 1.0);
  for (std::uint64_t k = 0; k < 4000; ++k) acc.add(sample_step(s, g, 0.2, {77, 3}, k, 1.0));
  const auto r = acc.report();
  CHECK(r.cross.size() == 45u);
  CHECK(r.accepted());

  // only h00 active: the h00 x h11 pair is exactly zero
  auto one = single(Component::h00, {KernelType::gaussian, 1.0});
  StatisticsAccumulator acc1(one, g, 0.2, 1.0);
  for (std::uint64_t k = 0; k < 1000; ++k) acc1.add(sample_step(one, g, 0.2, {77, 3}, k, 1.0));
  const auto r1 = acc1.report();
  for (const auto& x : r1.cross)
    if (x.a == Component::h00 && x.b == Component::h11) {
      CHECK(x.covariance.value == 0.0);
      CHECK_FALSE(x.flagged);
    }
}
