#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "gravdec/conventions.hpp"
#include "gravdec/dynamics.hpp"

using namespace gravdec;
using namespace gravdec::dynamics;
using noise::Component;

namespace {

const Physical kUnits{1.3, 2.1, 0.7, 0.9};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<double> random_field(std::mt19937& rng, std::size_t n, double amp) {
  std::normal_distribution<double> d(0.0, amp);
  std::vector<double> f(n);
  for (auto& x : f) x = d(rng);
  return f;
}

// smooth periodic random field (few low modes), so spectral derivatives are exact
std::vector<double> smooth_field(std::mt19937& rng, const Grid& g, double amp) {
  std::uniform_real_distribution<double> u(-amp, amp);
  const double a1 = u(rng), a2 = u(rng), b1 = u(rng);
  std::vector<double> f(g.sites());
  for (std::size_t s = 0; s < f.size(); ++s) {
    const double x = 2 * std::numbers::pi * g.coords(s)[0] / g.n;
    f[s] = a1 * std::cos(x) + a2 * std::sin(2 * x) + b1 * std::cos(3 * x + 0.4);
  }
  return f;
}

MetricField random_metric(std::mt19937& rng, const Grid& g, double amp) {
  MetricField h;
  for (auto& f : h.h) f = random_field(rng, g.sites(), amp);
  return h;
}

MetricField uniform_metric(const Grid& g, Component c, double eps) {
  auto h = zero_metric(g);
  h.h[static_cast<std::size_t>(c)].assign(g.sites(), eps);
  return h;
}

CVec random_state(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<double> d;
  CVec v(n);
  for (auto& z : v) z = {d(rng), d(rng)};
  return normalized(v);
}

cplx expectation(const Operator& op, const CVec& v) {
  const CVec w = op.apply(v);
  cplx e = 0;
  for (std::size_t i = 0; i < v.size(); ++i) e += std::conj(v[i]) * w[i];
  return e;
}

// |op v - lambda v| for an expected eigenpair
double eigen_residual(const Operator& op, const CVec& v, double lambda) {
  const CVec w = op.apply(v);
  double r = 0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(w[i] - lambda * v[i]));
  return r;
}

// ---- independent dense oracle (explicit DFT sums, 1D only) ----
struct Oracle {
  Grid g;
  Physical u;
  EMField em;
  Eigen::Index N;

  Matrix p() const {  // hbar * d/dx spectral, N x N
    Matrix P(N, N);
    for (Eigen::Index x = 0; x < N; ++x)
      for (Eigen::Index y = 0; y < N; ++y) {
        cplx s = 0;
        for (int j = 0; j < g.n; ++j) {
          const double k = (j < g.n / 2 ? j : j - g.n) * 2 * std::numbers::pi / (g.n * g.spacing);
          s += u.hbar * k * std::polar(1.0, k * g.spacing * static_cast<double>(x - y));
        }
        P(x, y) = s / static_cast<double>(N);
      }
    return P;
  }
  Matrix diag(const std::vector<double>& f) const {
    Matrix D = Matrix::Zero(N, N);
    for (Eigen::Index x = 0; x < N; ++x) D(x, x) = f[static_cast<std::size_t>(x)];
    return D;
  }
  Matrix pi(int a) const {
    Matrix P = a == 0 ? p() : Matrix::Zero(N, N);
    return P - (u.e / u.c) * diag(em.A[a]);
  }
  Matrix spin(const Matrix& M, int k) const {  // M (x) sigma_k in spin-major layout
    const Spin s = pauli(k);
    Matrix out(2 * N, 2 * N);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) out.block(a * N, b * N, N, N) = s(a, b) * M;
    return out;
  }
  static Matrix anti(const Matrix& A, const Matrix& B) { return A * B + B * A; }
};

}  // namespace

TEST_CASE("H0: free plane waves and Hermiticity") {
  Grid g{1, 16, 0.8};
  System sys(g, kUnits, EMField::off(g), {{true}});
  for (int k : {0, 1, 3, -5, 8}) {
    const double kk = 2 * std::numbers::pi * k / (g.n * g.spacing);
    const double kn = k == 8 ? -kk : kk;
    const double E = kUnits.m * kUnits.c * kUnits.c + kUnits.hbar * kUnits.hbar * kn * kn / (2 * kUnits.m);
    CHECK(eigen_residual(sys.H(), plane_wave(g, {k, 0, 0}, 1), E) < 1e-12);
  }
  std::mt19937 rng(3);
  auto em = EMField::from_potentials(g, smooth_field(rng, g, 0.5), {smooth_field(rng, g, 0.3), smooth_field(rng, g, 0.3), smooth_field(rng, g, 0.3)});
  System s2(g, kUnits, em);
  const Matrix H = s2.H_dense();
  CHECK(max_abs(H - H.adjoint()) < 1e-12);
}

TEST_CASE("H0: uniform B splits the sigma_z states by hbar e B / mc") {
  Grid g{1, 8, 1.0};
  const double B = 0.37;
  System sys(g, kUnits, EMField::uniform_magnetic(g, {0, 0, B}));
  const double z = kUnits.hbar * kUnits.e * B / (2 * kUnits.m * kUnits.c);
  CHECK(eigen_residual(sys.H(), plane_wave(g, {0, 0, 0}, 0), -z) < 1e-13);
  CHECK(eigen_residual(sys.H(), plane_wave(g, {0, 0, 0}, 1), z) < 1e-13);
  // 2x2 oracle for B along x: eigenvalues -+ z
  System sx(g, kUnits, EMField::uniform_magnetic(g, {B, 0, 0}));
  Eigen::SelfAdjointEigenSolver<Matrix> es(sx.H_dense());
  CHECK(es.eigenvalues()(0) == doctest::Approx(-z).epsilon(1e-12));
}

TEST_CASE("matrix-free and dense operators agree on random vectors") {
  Grid g{1, 16, 0.7};
  std::mt19937 rng(11);
  auto em = EMField::from_potentials(g, smooth_field(rng, g, 0.4), {smooth_field(rng, g, 0.3), smooth_field(rng, g, 0.2), smooth_field(rng, g, 0.25)});
  auto ctx = Context::make(g, kUnits, em);
  const auto h = random_metric(rng, g, 0.05);
  const auto X = build_Xi(ctx, em);
  std::vector<Operator> ops{build_H0(ctx, em), build_Hp_fermion(ctx, em, h), build_Hp_boson(ctx, h), build_Hr(ctx, em), X.xi00, X.xi[0][1]};
  for (const auto& K : coupling_operators(ctx, em, CouplingSet::hamiltonian)) ops.push_back(K);
  for (const auto& K : coupling_operators(ctx, em, CouplingSet::xi)) ops.push_back(K);
  for (const auto& op : ops) {
    const Matrix D = op.dense();
    for (int t = 0; t < 3; ++t) {
      const CVec v = random_state(rng, 2 * g.sites());
      const CVec w = op.apply(v);
      const Eigen::VectorXcd ref = D * Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(w[i] - ref(static_cast<Eigen::Index>(i))) < 1e-12);
    }
  }
}

TEST_CASE("gravitational couplings match an explicit dense construction") {
  Grid g{1, 8, 0.9};
  std::mt19937 rng(5);
  auto em = EMField::from_potentials(g, smooth_field(rng, g, 0.4), {smooth_field(rng, g, 0.3), smooth_field(rng, g, 0.2), smooth_field(rng, g, 0.2)});
  auto ctx = Context::make(g, kUnits, em);
  const auto h = random_metric(rng, g, 0.1);
  Oracle o{g, kUnits, em, static_cast<Eigen::Index>(g.sites())};
  const auto& u = kUnits;
  auto hc = [&](int mu, int nu) { return o.diag(h.h[static_cast<std::size_t>(noise::component_of(mu, nu))]); };
  Matrix pi2 = Matrix::Zero(o.N, o.N);
  for (int a = 0; a < 3; ++a) pi2 += o.pi(a) * o.pi(a);
  Matrix scalar = u.m * u.c * u.c / 2 * hc(0, 0) - 1.0 / (8 * u.m) * Oracle::anti(hc(0, 0), pi2) +
                  u.c / 2 * Oracle::anti(hc(0, 1), o.p());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) scalar -= 1.0 / (4 * u.m) * Oracle::anti(hc(i + 1, j + 1), o.pi(i) * o.pi(j));
  Matrix ref = o.spin(scalar, 0);
  for (int l = 0; l < 3; ++l) {
    Matrix f = Matrix::Zero(o.N, o.N);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) f += levi_civita(i + 1, k + 1, l + 1) * hc(i + 1, j + 1) * o.diag(em.F[j][k]);
    f += hc(0, 0) * o.diag(em.B[l]);
    ref -= u.hbar * u.e / (4 * u.m * u.c) * o.spin(f, l + 1);
  }
  CHECK(max_abs(build_Hp_fermion(ctx, em, h).dense() - ref) < 1e-12);

  // H + sum_c 1/2 {h_c, K_c} reproduces H0 + Hp exactly
  System sys(g, u, em);
  CHECK(max_abs(sys.hamiltonian(h).dense() - (sys.H_dense() + ref)) < 1e-12);
}

TEST_CASE("Hp plane-wave shifts") {
  Grid g{1, 16, 1.0};
  auto ctx = Context::make(g, kUnits, EMField::off(g));
  const auto em = EMField::off(g);
  const auto& u = kUnits;
  const double eps = 0.03;
  CHECK(build_Hp_fermion(ctx, em, zero_metric(g)).is_zero());
  CHECK(build_Hp_boson(ctx, zero_metric(g)).is_zero());
  for (int k : {0, 2, -3}) {
    const double p = u.hbar * 2 * std::numbers::pi * k / g.n;
    const CVec v = plane_wave(g, {k, 0, 0}, 0);
    CHECK(eigen_residual(build_Hp_fermion(ctx, em, uniform_metric(g, Component::h00, eps)), v,
                         eps * (u.m * u.c * u.c / 2 - p * p / (4 * u.m))) < 1e-13);
    CHECK(eigen_residual(build_Hp_fermion(ctx, em, uniform_metric(g, Component::h01, eps)), v, eps * u.c * p) < 1e-13);
    CHECK(eigen_residual(build_Hp_boson(ctx, uniform_metric(g, Component::h11, eps)), v, -eps * p * p / (2 * u.m)) < 1e-13);
  }
}

TEST_CASE("fermion and boson couplings coincide without electromagnetism") {
  Grid g{1, 32, 0.5};
  auto ctx = Context::make(g, kUnits, EMField::off(g));
  std::mt19937 rng(8);
  for (int t = 0; t < 5; ++t) {
    const auto h = random_metric(rng, g, 0.2);
    CHECK(max_abs(build_Hp_fermion(ctx, EMField::off(g), h).dense() - build_Hp_boson(ctx, h).dense()) == 0.0);
  }
}

TEST_CASE("relativistic corrections") {
  Grid g{1, 16, 1.0};
  const auto& u = kUnits;
  {
    auto ctx = Context::make(g, u, EMField::off(g));
    const auto Hr = build_Hr(ctx, EMField::off(g));
    for (int k : {1, 4}) {
      const double p = u.hbar * 2 * std::numbers::pi * k / g.n;
      CHECK(eigen_residual(Hr, plane_wave(g, {k, 0, 0}, 1), -p * p * p * p / (8 * u.m * u.m * u.m * u.c * u.c)) < 1e-13);
    }
  }
  {
    const double B = 0.6;
    const auto em = EMField::uniform_magnetic(g, {0.0, B, 0.0});
    auto ctx = Context::make(g, u, em);
    const double shift = -u.hbar * u.hbar * u.e * u.e * B * B / (8 * std::pow(u.m, 3) * std::pow(u.c, 4));
    CHECK(eigen_residual(build_Hr(ctx, em), plane_wave(g, {0, 0, 0}, 0), shift) < 1e-14);
  }
  {
    // Coulomb-like A0: Darwin and spin-orbit terms against the explicit dense form
    const auto em = EMField::coulomb_like(g, 0.8, 1.5);
    auto ctx = Context::make(g, u, em);
    Oracle o{g, u, em, static_cast<Eigen::Index>(g.sites())};
    const Matrix P = o.p();
    // div E from the explicit DFT: f' = i P f / hbar
    const Eigen::VectorXd Ev = Eigen::Map<const Eigen::VectorXd>(em.E[0].data(), o.N);
    const Eigen::VectorXcd dE = P * Ev.cast<cplx>() * cplx(0, 1.0 / u.hbar);
    Matrix dEx = Matrix::Zero(o.N, o.N);
    for (Eigen::Index x = 0; x < o.N; ++x) dEx(x, x) = dE(x).real();
    const double c2 = u.c * u.c, m = u.m;
    Matrix ref = o.spin(-u.hbar * u.hbar * u.e / (8 * m * m * c2) * dEx, 0);
    // (p x E - E x p)_l with only E_x and p_x nonzero vanishes; the quartic term remains
    ref += o.spin(-1.0 / (8 * m * m * m * c2) * P * P * P * P, 0);
    const Matrix got = build_Hr(ctx, em).dense();
    CHECK(max_abs(got - ref) < 1e-10);
  }
}

TEST_CASE("Xi operators") {
  Grid g{1, 16, 1.0};
  const auto& u = kUnits;
  auto ctx = Context::make(g, u, EMField::off(g));
  const auto X = build_Xi(ctx, EMField::off(g));
  for (int k : {0, 3}) {
    const double p = u.hbar * 2 * std::numbers::pi * k / g.n;
    const CVec v = plane_wave(g, {k, 0, 0}, 0);
    CHECK(eigen_residual(X.xi00, v, p * p / (4 * u.m) + u.m * u.c * u.c / 2) < 1e-13);
    CHECK(eigen_residual(X.xi[0][0], v, p * p / (4 * u.m) + u.m * u.c * u.c / 2) < 1e-13);
    CHECK(eigen_residual(X.xi[0][1], v, 0.0) < 1e-13);
  }
  std::mt19937 rng(2);
  const auto em = EMField::from_potentials(g, {}, {smooth_field(rng, g, 0.3), smooth_field(rng, g, 0.3), smooth_field(rng, g, 0.3)});
  auto c2 = Context::make(g, u, em);
  const Matrix x00 = build_Xi(c2, em).xi00.dense();
  CHECK(max_abs(x00 - x00.adjoint()) < 1e-12);
  Physical neutral = u;
  neutral.e = 0;
  auto c3 = Context::make(g, neutral, em);
  const auto Xn = build_Xi(c3, em);
  const CVec v = plane_wave(g, {2, 0, 0}, 1);
  const double p = u.hbar * 2 * std::numbers::pi * 2 / g.n;
  CHECK(eigen_residual(Xn.xi[0][0], v, p * p / (4 * u.m) + u.m * u.c * u.c / 2) < 1e-13);
}

TEST_CASE("Krylov exponential matches the dense exponential and preserves the norm") {
  std::mt19937 rng(4);
  const int n = 24;
  Matrix A = Matrix::Random(n, n);
  A = (A + A.adjoint()).eval();
  const CVec v = random_state(rng, n);
  const auto mv = [&](const CVec& x) {
    const Eigen::VectorXcd y = A * Eigen::Map<const Eigen::VectorXcd>(x.data(), n);
    return CVec(y.data(), y.data() + n);
  };
  double err = 0;
  const CVec w = expm_krylov(mv, v, 0.3, 1e-13, &err);
  const Eigen::VectorXcd ref = (A * cplx(0, -0.3)).exp() * Eigen::Map<const Eigen::VectorXcd>(v.data(), n);
  for (int i = 0; i < n; ++i) CHECK(std::abs(w[static_cast<std::size_t>(i)] - ref(i)) < 1e-12);
  double nrm = 0;
  for (auto z : w) nrm += std::norm(z);
  CHECK(std::abs(std::sqrt(nrm) - 1) < 1e-13);
  CHECK_THROWS_AS(expm_krylov(mv, v, 50.0, 1e-12, nullptr, 4), StepSizeError);
}

TEST_CASE("noise-free trajectories reduce to H0 evolution") {
  Grid g{1, 16, 1.0};
  System sys(g, kUnits, EMField::uniform_magnetic(g, {0.2, 0.0, 0.3}));
  std::mt19937 rng(9);
  const CVec psi0 = random_state(rng, sys.dim());
  noise::NoiseSpec spec;
  spec.active.fill(true);
  spec.alpha = 0.0;
  TrajectoryOptions o;
  o.T = 2.0;
  o.dt = 0.05;
  const auto r = evolve_stochastic(psi0, spec, sys, o);
  const CVec split = evolve_free_split(psi0, sys, 2.0, 0.05);
  const Eigen::VectorXcd exact = (sys.H_dense() * cplx(0, -2.0 / kUnits.hbar)).exp() *
                                 Eigen::Map<const Eigen::VectorXcd>(psi0.data(), static_cast<Eigen::Index>(psi0.size()));
  for (std::size_t i = 0; i < psi0.size(); ++i) {
    CHECK(std::abs(r.psi[i] - exact(static_cast<Eigen::Index>(i))) < 1e-10);
    CHECK(std::abs(split[i] - exact(static_cast<Eigen::Index>(i))) < 1e-10);
  }
  CHECK(r.norm_drift < 1e-12);
}

TEST_CASE("frozen uniform h00 gives the analytic eigenphase") {
  Grid g{1, 16, 1.0};
  const auto& u = kUnits;
  System sys(g, u, EMField::off(g));
  const double eps = 0.02, T = 3.0;
  const Operator H = sys.hamiltonian(uniform_metric(g, Component::h00, eps));
  const int k = 2;
  const double p = u.hbar * 2 * std::numbers::pi * k / g.n;
  const double E = p * p / (2 * u.m) + eps * (u.m * u.c * u.c / 2 - p * p / (4 * u.m));
  CVec psi = plane_wave(g, {k, 0, 0}, 0);
  const CVec psi0 = psi;
  for (int s = 0; s < 30; ++s) psi = expm_krylov([&](const CVec& v) { return H.apply(v); }, psi, T / 30 / u.hbar, 1e-13);
  for (std::size_t i = 0; i < psi.size(); ++i) CHECK(std::abs(psi[i] - std::polar(1.0, -E * T / u.hbar) * psi0[i]) < 1e-11);
}

TEST_CASE("trajectory ensembles are deterministic for any thread count") {
  Grid g{1, 8, 1.0};
  System sys(g, kUnits, EMField::off(g));
  noise::NoiseSpec spec;
  spec.alpha = 0.3;
  spec.kernels.fill({noise::KernelType::delta, 1.0});
  spec.active[0] = spec.active[1] = true;
  spec.lambda_rule = noise::LambdaRule::fixed;
  spec.lambda_fixed = 0.5;
  const CVec psi0 = normalized(plane_wave(g, {1, 0, 0}, 0));
  const auto a = ensemble_average(psi0, spec, sys, 0.2, 0.02, 17, 40, 0, 1);
  const auto b = ensemble_average(psi0, spec, sys, 0.2, 0.02, 17, 40, 0, 3);
  CHECK(max_abs(a.mean - b.mean) == 0.0);
  CHECK(std::abs(a.mean.trace() - 1.0) < 1e-12);
  CHECK(a.max_norm_drift < 1e-10);
  const auto c = ensemble_average(psi0, spec, sys, 0.2, 0.02, 18, 40, 0, 1);
  CHECK(max_abs(a.mean - c.mean) > 0.0);
}

namespace {

noise::NoiseSpec all_channels(double alpha, noise::KernelType kt, double ell) {
  noise::NoiseSpec s;
  s.alpha = alpha;
  s.kernels.fill({kt, ell});
  s.active.fill(true);
  s.block_scale = {1.0, 0.8, 0.6};
  s.lambda_rule = noise::LambdaRule::fixed;
  s.lambda_fixed = 0.7;
  return s;
}

}  // namespace

TEST_CASE("master equation without noise is unitary") {
  Grid g{1, 8, 1.0};
  System sys(g, kUnits, EMField::coulomb_like(g, 0.5, 1.0));
  std::mt19937 rng(1);
  const Matrix rho0 = projector(random_state(rng, sys.dim()));
  auto spec = all_channels(0.0, noise::KernelType::gaussian, 1.0);
  MasterOptions o;
  o.T = 1.0;
  o.dt = 1e-3;
  const auto r = evolve_master(rho0, spec, sys, o);
  CHECK(std::abs((r.rho * r.rho).trace().real() - 1.0) < 1e-10);
  const Matrix U = (sys.H_dense() * cplx(0, -1.0 / kUnits.hbar)).exp();
  CHECK(max_abs(r.rho - U * rho0 * U.adjoint()) < 1e-9);
}

TEST_CASE("master equation agrees with the explicit superoperator on small systems") {
  std::mt19937 rng(21);
  for (int n : {2, 4}) {
    Grid g{1, n, 0.9};
    auto em = EMField::from_potentials(g, random_field(rng, g.sites(), 0.3), {random_field(rng, g.sites(), 0.2), random_field(rng, g.sites(), 0.2), {}});
    for (auto set : {CouplingSet::hamiltonian, CouplingSet::xi}) {
      SystemOptions so;
      so.couplings = set;
      System sys(g, kUnits, em, so);
      const Matrix rho0 = projector(random_state(rng, sys.dim()));
      auto spec = all_channels(0.4, noise::KernelType::gaussian, 1.1);
      MasterOptions o;
      o.T = 0.5;
      o.dt = 5e-4;
      const auto r = evolve_master(rho0, spec, sys, o);
      CHECK(max_abs(r.rho - reference_master(rho0, spec, sys, 0.5)) < 1e-9);
    }
  }
}

TEST_CASE("master equation conserves trace and Hermiticity and stays positive") {
  Grid g{1, 16, 1.0};
  System sys(g, kUnits, EMField::off(g));
  const Matrix rho0 = projector(normalized(plane_wave(g, {1, 0, 0}, 0)));
  auto spec = all_channels(0.2, noise::KernelType::exponential, 1.5);
  MasterOptions o;
  o.T = 1.0;
  o.dt = 1e-3;
  const auto r = evolve_master(rho0, spec, sys, o);
  CHECK(r.steps == 1000u);
  CHECK(r.max_trace_drift < 1e-10);
  CHECK(r.max_hermiticity_drift < 1e-10);
  CHECK(r.min_eigenvalue >= -1e-8);
  CHECK((r.rho * r.rho).trace().real() < 1.0 - 1e-4);
}

TEST_CASE("dense operators are guarded by size") {
  Grid g{3, 8, 1.0};
  System sys(g, kUnits, EMField::off(g));
  CHECK_THROWS_AS(sys.H_dense(), GuardError);
}

TEST_CASE("position limit: diagonal preserved and closed-form rates") {
  const auto& u = kUnits;
  Grid g{1, 2, 1.0};
  noise::NoiseSpec spec;
  spec.alpha = 0.05;
  spec.kernels.fill({noise::KernelType::delta, 1.0});
  spec.active[0] = true;
  spec.lambda_rule = noise::LambdaRule::fixed;
  spec.lambda_fixed = 1.0;
  MasterOptions o;
  o.T = 2.0;
  o.dt = 1e-3;
  CVec plus(4, 0.0);
  plus[0] = plus[1] = 1 / std::sqrt(2.0);
  const Matrix rho0 = projector(plus);
  {
    System sys(g, u, EMField::off(g));
    const auto r = evolve_position_limit(rho0, spec, sys, o);
    CHECK(std::abs(r.rho(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(r.rho(1, 1) - 0.5) < 1e-14);
    CHECK(position_decay_rate(spec, sys, 0, 0, 1.0) == 0.0);
    // independent 2-site rate: delta kernel, C(1) = 0
    const double gamma = spec.alpha * spec.alpha * std::pow(u.m * u.c * u.c / 2, 2) / (u.hbar * u.hbar);
    CHECK(position_decay_rate(spec, sys, 0, 1, 1.0) == doctest::Approx(gamma).epsilon(1e-14));
    CHECK(std::abs(r.rho(0, 1) - 0.5 * std::exp(-gamma * 2.0)) < 1e-9);
  }
  {
    // uniform B: spin-dependent rates sigma^2 (k_s^2 + k_s'^2 - 2 C k_s k_s') / 2 hbar^2
    const double B = 3.0;
    System sys(g, u, EMField::uniform_magnetic(g, {0, 0, B}));
    CVec all(4, 0.5);
    const Matrix r0 = projector(all);
    const auto r = evolve_position_limit(r0, spec, sys, o);
    const double b = u.hbar * u.e * B / (4 * u.m * u.c);
    const double k[2] = {u.m * u.c * u.c / 2 - b, u.m * u.c * u.c / 2 + b};
    const double s2 = spec.alpha * spec.alpha;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double C = (i % 2 == j % 2) ? 1.0 : 0.0;
        const double ki = k[i / 2], kj = k[j / 2];
        const double rate = s2 * (ki * ki + kj * kj - 2 * C * ki * kj) / (2 * u.hbar * u.hbar);
        CHECK(std::abs(r.rho(i, j) - 0.25 * std::exp(-rate * 2.0)) < 1e-9);
      }
  }
}

TEST_CASE("momentum limit: closed form against the master equation") {
  const auto& u = kUnits;
  Grid g{1, 4, 1.0};
  for (auto set : {CouplingSet::hamiltonian, CouplingSet::xi}) {
    SystemOptions so;
    so.couplings = set;
    System sys(g, u, EMField::off(g), so);
    auto spec = all_channels(0.3, noise::KernelType::gaussian, 1e6);  // e^{iqX} -> 1
    std::mt19937 rng(6);
    const Matrix rho0 = projector(random_state(rng, sys.dim()));
    MasterOptions o;
    o.T = 1.0;
    o.dt = 1e-3;
    const auto r = evolve_master(rho0, spec, sys, o);
    CHECK(max_abs(r.rho - evolve_momentum_limit(rho0, spec, sys, 1.0)) < 1e-8);
  }
  // diagonal preserved, 0i channel quadratic in the momentum transfer
  noise::NoiseSpec s;
  s.alpha = 0.5;
  s.active[static_cast<std::size_t>(Component::h01)] = true;
  const std::array<double, 3> p0{0.2, 0, 0}, p1{0.5, 0, 0}, p2{0.8, 0, 0};
  CHECK(momentum_decay_rate(s, CouplingSet::hamiltonian, p1, p1, u) == 0.0);
  const double r1 = momentum_decay_rate(s, CouplingSet::hamiltonian, p0, p1, u);
  const double r2 = momentum_decay_rate(s, CouplingSet::hamiltonian, p0, p2, u);
  CHECK(r2 == doctest::Approx(4 * r1).epsilon(1e-14));
  System bad(g, u, EMField::uniform_magnetic(g, {0, 0, 1}));
  CHECK_THROWS_AS(evolve_momentum_limit(Matrix::Identity(8, 8) / 8.0, s, bad, 1.0), GuardError);
}

TEST_CASE("integrated lambda follows min(tau_c, t)") {
  noise::NoiseSpec s;
  s.tau_c = 2.0;
  CHECK(integrated_lambda(s, 1.0) == doctest::Approx(0.5));
  CHECK(integrated_lambda(s, 5.0) == doctest::Approx(2.0 + 6.0));
  s.lambda_rule = noise::LambdaRule::fixed;
  s.lambda_fixed = 0.3;
  CHECK(integrated_lambda(s, 5.0) == doctest::Approx(1.5));
}
