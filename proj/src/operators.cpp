#include <algorithm>
#include <cmath>

#include "gravdec/conventions.hpp"
#include "gravdec/dynamics.hpp"

namespace gravdec::dynamics {

using noise::Component;
using noise::component_of;

namespace {

bool all_zero(const std::vector<double>& f) {
  return std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; });
}

std::vector<double> zeros(const Grid& g) { return std::vector<double>(g.sites(), 0.0); }

void derive_fields(EMField& em) {
  const Grid& g = em.grid;
  for (int i = 0; i < 3; ++i) {
    em.E[i] = spectral_derivative(g, em.A0, i);
    for (double& x : em.E[i]) x = -x;
  }
  std::array<std::array<std::vector<double>, 3>, 3> dA;  // dA[i][j] = d_i A_j
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) dA[i][j] = spectral_derivative(g, em.A[j], i);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      em.F[i][j] = zeros(g);
      for (std::size_t s = 0; s < g.sites(); ++s) em.F[i][j][s] = dA[i][j][s] - dA[j][i][s];
    }
  for (int k = 0; k < 3; ++k) {
    em.B[k] = zeros(g);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int eps = levi_civita(k + 1, i + 1, j + 1);
        if (eps == 0) continue;
        for (std::size_t s = 0; s < g.sites(); ++s) em.B[k][s] += eps * dA[i][j][s];
      }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// EM fields

std::vector<double> spectral_derivative(const Grid& g, const std::vector<double>& f, int axis) {
  if (f.size() != g.sites()) throw std::invalid_argument("field does not match grid");
  if (axis >= g.dim) return zeros(g);
  CVec data(f.begin(), f.end());
  Spectral sp(g);
  sp.forward(data);
  for (std::size_t q = 0; q < data.size(); ++q) {
    const auto c = g.coords(q);
    // the Nyquist mode has no real odd derivative
    const bool nyquist = c[static_cast<std::size_t>(axis)] == g.n / 2;
    data[q] *= nyquist ? cplx{0, 0} : cplx{0, g.wavevector(q)[static_cast<std::size_t>(axis)]};
  }
  sp.inverse(data);
  std::vector<double> out(f.size());
  for (std::size_t s = 0; s < f.size(); ++s) out[s] = data[s].real();
  return out;
}

EMField EMField::off(const Grid& g) {
  g.validate();
  EMField em;
  em.grid = g;
  em.A0 = zeros(g);
  for (auto& a : em.A) a = zeros(g);
  derive_fields(em);
  return em;
}

EMField EMField::from_potentials(const Grid& g, std::vector<double> A0, std::array<std::vector<double>, 3> A) {
  g.validate();
  EMField em;
  em.grid = g;
  em.A0 = A0.empty() ? zeros(g) : std::move(A0);
  for (int i = 0; i < 3; ++i) em.A[i] = A[i].empty() ? zeros(g) : std::move(A[i]);
  if (em.A0.size() != g.sites()) throw std::invalid_argument("A0 does not match grid");
  for (const auto& a : em.A)
    if (a.size() != g.sites()) throw std::invalid_argument("A does not match grid");
  derive_fields(em);
  return em;
}

EMField EMField::uniform_magnetic(const Grid& g, std::array<double, 3> B) {
  EMField em = off(g);
  for (int k = 0; k < 3; ++k) em.B[k].assign(g.sites(), B[k]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double f = 0;
      for (int k = 0; k < 3; ++k) f += levi_civita(i + 1, j + 1, k + 1) * B[k];
      em.F[i][j].assign(g.sites(), f);
    }
  em.derived_from_potentials = false;
  return em;
}

EMField EMField::coulomb_like(const Grid& g, double q, double softening) {
  if (!(softening > 0)) throw std::invalid_argument("coulomb softening must be positive");
  g.validate();
  std::vector<double> A0(g.sites());
  const auto centre = g.coords(0);
  for (std::size_t s = 0; s < g.sites(); ++s) {
    const auto c = g.coords(s);
    double r2 = 0;
    for (int d = 0; d < g.dim; ++d) {
      int dx = c[d] - (centre[d] + g.n / 2);
      dx = ((dx % g.n) + g.n) % g.n;
      if (dx > g.n / 2) dx -= g.n;
      r2 += (dx * g.spacing) * (dx * g.spacing);
    }
    A0[s] = q / std::sqrt(r2 + softening * softening);
  }
  return from_potentials(g, std::move(A0), {});
}

bool EMField::has_vector_potential() const {
  return std::any_of(A.begin(), A.end(), [](const auto& a) { return !all_zero(a); });
}

bool EMField::is_off() const {
  if (!all_zero(A0) || has_vector_potential()) return false;
  for (const auto& b : B)
    if (!all_zero(b)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Context and primitives

std::shared_ptr<const Context> Context::make(const Grid& g, const Physical& u, const EMField& em) {
  g.validate();
  if (!(em.grid == g)) throw std::invalid_argument("EM field grid does not match");
  auto ctx = std::make_shared<Context>();
  ctx->grid = g;
  ctx->units = u;
  ctx->A = em.A;
  ctx->has_A = em.has_vector_potential();
  ctx->fft = std::make_shared<const Spectral>(g);
  for (int a = 0; a < 3; ++a) {
    auto& m = ctx->momenta[static_cast<std::size_t>(a)];
    m.assign(g.sites(), 0.0);
    for (std::size_t q = 0; q < g.sites(); ++q) m[q] = u.hbar * g.wavevector(q)[static_cast<std::size_t>(a)];
  }
  return ctx;
}

bool Context::factor_vanishes(int axis, bool minimal) const {
  return axis >= grid.dim && (!minimal || all_zero(A[static_cast<std::size_t>(axis)]));
}

Spin pauli(int k) {
  Spin s;
  switch (k) {
    case 0: s << 1, 0, 0, 1; break;
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: throw std::out_of_range("pauli index must be 0..3");
  }
  return s;
}

namespace {

void apply_factor(const Context& ctx, int axis, bool minimal, CVec& psi) {
  const std::size_t N = ctx.grid.sites();
  CVec out(psi.size(), cplx{0, 0});
  if (axis < ctx.grid.dim) {
    const auto& k = ctx.momenta[static_cast<std::size_t>(axis)];
    CVec block(N);
    for (int s = 0; s < 2; ++s) {
      std::copy(psi.begin() + s * N, psi.begin() + (s + 1) * N, block.begin());
      ctx.fft->forward(block);
      for (std::size_t q = 0; q < N; ++q) block[q] *= k[q];
      ctx.fft->inverse(block);
      std::copy(block.begin(), block.end(), out.begin() + s * N);
    }
  }
  if (minimal) {
    const double ec = ctx.units.e / ctx.units.c;
    const auto& A = ctx.A[static_cast<std::size_t>(axis)];
    for (int s = 0; s < 2; ++s)
      for (std::size_t x = 0; x < N; ++x) out[s * N + x] -= ec * A[x] * psi[s * N + x];
  }
  psi = std::move(out);
}

Matrix dense_factor(const Context& ctx, int axis, bool minimal) {
  const std::size_t N = ctx.grid.sites();
  Matrix P = Matrix::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  if (axis < ctx.grid.dim) {
    const auto& k = ctx.momenta[static_cast<std::size_t>(axis)];
    // P = F^-1 diag(hbar k) F, built column by column
    for (std::size_t j = 0; j < N; ++j) {
      CVec col(N, cplx{0, 0});
      col[j] = 1.0;
      ctx.fft->forward(col);
      for (std::size_t q = 0; q < N; ++q) col[q] *= k[q];
      ctx.fft->inverse(col);
      for (std::size_t i = 0; i < N; ++i) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
  }
  if (minimal) {
    const double ec = ctx.units.e / ctx.units.c;
    const auto& A = ctx.A[static_cast<std::size_t>(axis)];
    for (std::size_t x = 0; x < N; ++x) P(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) -= ec * A[x];
  }
  return P;
}

}  // namespace

CVec apply_monomial(const Context& ctx, const Monomial& q, const CVec& psi) {
  CVec v = psi;
  for (auto it = q.axes.rbegin(); it != q.axes.rend(); ++it) apply_factor(ctx, *it, q.minimal, v);
  return v;
}

Matrix dense_monomial(const Context& ctx, const Monomial& q) {
  const auto N = static_cast<Eigen::Index>(ctx.grid.sites());
  Matrix M = Matrix::Identity(N, N);
  for (int a : q.axes) M = M * dense_factor(ctx, a, q.minimal);
  return M;
}

// ---------------------------------------------------------------------------
// Operator

Operator::Operator(std::shared_ptr<const Context> ctx) : ctx_(std::move(ctx)) {}

void Operator::ensure_local() {
  if (local_.empty()) local_.assign(ctx_->grid.sites(), Spin::Zero());
}

void Operator::add_local(std::size_t site, const Spin& m) {
  ensure_local();
  local_.at(site) += m;
}

void Operator::add_local(const std::vector<double>& f, const Spin& m) {
  if (f.size() != ctx_->grid.sites()) throw std::invalid_argument("field does not match grid");
  if (all_zero(f) || m.isZero()) return;
  ensure_local();
  for (std::size_t s = 0; s < f.size(); ++s) local_[s] += f[s] * m;
}

void Operator::add_sym(const std::vector<Spin>& g, const Monomial& q_in) {
  Monomial q = q_in;
  if (!ctx_->has_vector_potential()) q.minimal = false;
  for (int a : q.axes)
    if (ctx_->factor_vanishes(a, q.minimal)) return;
  if (std::all_of(g.begin(), g.end(), [](const Spin& m) { return m.isZero(); })) return;
  if (q.axes.empty()) {
    ensure_local();
    for (std::size_t s = 0; s < g.size(); ++s) local_[s] += g[s];
    return;
  }
  for (auto& t : terms_)
    if (t.q == q) {
      for (std::size_t s = 0; s < g.size(); ++s) t.g[s] += g[s];
      return;
    }
  terms_.push_back({g, q});
  std::sort(terms_.begin(), terms_.end(), [](const SymTerm& a, const SymTerm& b) { return a.q < b.q; });
}

void Operator::add_sym(const std::vector<double>& f, const Spin& m, const Monomial& q) {
  if (all_zero(f) || m.isZero()) return;
  std::vector<Spin> g(f.size());
  for (std::size_t s = 0; s < f.size(); ++s) g[s] = f[s] * m;
  add_sym(g, q);
}

void Operator::add_sym(double scalar, const Monomial& q) {
  if (scalar == 0.0) return;
  add_sym(std::vector<Spin>(ctx_->grid.sites(), scalar * Spin::Identity()), q);
}

Operator& Operator::operator+=(const Operator& o) {
  if (!ctx_) ctx_ = o.ctx_;
  if (!o.ctx_) return *this;
  if (!o.local_.empty()) {
    ensure_local();
    for (std::size_t s = 0; s < local_.size(); ++s) local_[s] += o.local_[s];
  }
  for (const auto& t : o.terms_) add_sym(t.g, t.q);
  return *this;
}

Operator Operator::operator+(const Operator& o) const {
  Operator r = *this;
  r += o;
  return r;
}

Operator Operator::scaled(double s) const {
  Operator r = *this;
  for (auto& m : r.local_) m *= s;
  for (auto& t : r.terms_)
    for (auto& m : t.g) m *= s;
  return r;
}

bool Operator::is_zero() const {
  for (const auto& m : local_)
    if (!m.isZero()) return false;
  for (const auto& t : terms_)
    for (const auto& m : t.g)
      if (!m.isZero()) return false;
  return true;
}

namespace {

CVec apply_spin_field(const std::vector<Spin>& g, const CVec& psi) {
  const std::size_t N = g.size();
  CVec out(psi.size());
  for (std::size_t x = 0; x < N; ++x) {
    const cplx u = psi[x], d = psi[N + x];
    out[x] = g[x](0, 0) * u + g[x](0, 1) * d;
    out[N + x] = g[x](1, 0) * u + g[x](1, 1) * d;
  }
  return out;
}

}  // namespace

CVec Operator::apply(const CVec& psi) const {
  if (psi.size() != dim()) throw std::invalid_argument("state dimension does not match operator");
  CVec out = local_.empty() ? CVec(psi.size(), cplx{0, 0}) : apply_spin_field(local_, psi);
  for (const auto& t : terms_) {
    const CVec a = apply_spin_field(t.g, apply_monomial(*ctx_, t.q, psi));
    const CVec b = apply_monomial(*ctx_, t.q, apply_spin_field(t.g, psi));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.5 * (a[i] + b[i]);
  }
  return out;
}

Matrix Operator::dense() const {
  const auto N = static_cast<Eigen::Index>(ctx_->grid.sites());
  Matrix D = Matrix::Zero(2 * N, 2 * N);
  if (!local_.empty())
    for (Eigen::Index x = 0; x < N; ++x)
      for (int s = 0; s < 2; ++s)
        for (int r = 0; r < 2; ++r) D(s * N + x, r * N + x) += local_[static_cast<std::size_t>(x)](s, r);
  for (const auto& t : terms_) {
    const Matrix Q = dense_monomial(*ctx_, t.q);
    for (int s = 0; s < 2; ++s)
      for (int r = 0; r < 2; ++r)
        for (Eigen::Index x = 0; x < N; ++x)
          for (Eigen::Index y = 0; y < N; ++y) {
            // (G Q)_{sx,ry} = sum_k g_sk(x) Q_xy delta_kr ; (Q G)_{sx,ry} = Q_xy g_sr(y)
            const cplx v = t.g[static_cast<std::size_t>(x)](s, r) * Q(x, y) + Q(x, y) * t.g[static_cast<std::size_t>(y)](s, r);
            D(s * N + x, r * N + y) += 0.5 * v;
          }
  }
  return D;
}

// ---------------------------------------------------------------------------
// Hamiltonian builders

namespace {

const Physical& U(const std::shared_ptr<const Context>& ctx) { return ctx->units; }

Monomial pi(std::initializer_list<int> axes) { return {std::vector<int>(axes), true}; }
Monomial bare(std::initializer_list<int> axes) { return {std::vector<int>(axes), false}; }

const std::vector<double>& comp(const MetricField& h, int mu, int nu) {
  return h.h[static_cast<std::size_t>(component_of(mu, nu))];
}

std::vector<double> scaled(const std::vector<double>& f, double s) {
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = s * f[i];
  return r;
}

void check_metric(const Grid& g, const MetricField& h) {
  for (const auto& f : h.h)
    if (f.size() != g.sites()) throw std::invalid_argument("metric sample does not match grid");
}

// sum_k B_k sigma_k at each site
void add_B_sigma(Operator& op, const EMField& em, double coef, const std::vector<double>* weight = nullptr) {
  for (int k = 0; k < 3; ++k) {
    auto f = scaled(em.B[k], coef);
    if (weight)
      for (std::size_t s = 0; s < f.size(); ++s) f[s] *= (*weight)[s];
    op.add_local(f, pauli(k + 1));
  }
}

// sum_{k,l} eps_{ikl} F_jk sigma_l for fixed (i, j), scaled
void add_eps_F_sigma(Operator& op, const EMField& em, int i, int j, double coef,
                     const std::vector<double>* weight = nullptr) {
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      const int eps = levi_civita(i + 1, k + 1, l + 1);
      if (eps == 0) continue;
      auto f = scaled(em.F[j][k], coef * eps);
      if (weight)
        for (std::size_t s = 0; s < f.size(); ++s) f[s] *= (*weight)[s];
      op.add_local(f, pauli(l + 1));
    }
}

}  // namespace

Operator build_H0(const std::shared_ptr<const Context>& ctx, const EMField& em, const H0Options& opt) {
  const auto& u = U(ctx);
  Operator H(ctx);
  const std::vector<double> one(ctx->grid.sites(), 1.0);
  if (opt.include_rest_mass) H.add_local(one, u.m * u.c * u.c * Spin::Identity());
  H.add_local(scaled(em.A0, u.e), Spin::Identity());
  add_B_sigma(H, em, -u.hbar * u.e / (2 * u.m * u.c));
  for (int a = 0; a < 3; ++a) H.add_sym(1.0 / (2 * u.m), pi({a, a}));
  return H;
}

Operator build_Hp_fermion(const std::shared_ptr<const Context>& ctx, const EMField& em, const MetricField& h) {
  check_metric(ctx->grid, h);
  const auto& u = U(ctx);
  const Spin I = Spin::Identity();
  Operator H(ctx);
  const auto& h00 = comp(h, 0, 0);
  H.add_local(scaled(h00, u.m * u.c * u.c / 2), I);
  for (int a = 0; a < 3; ++a) H.add_sym(scaled(h00, -1.0 / (4 * u.m)), I, pi({a, a}));
  for (int i = 0; i < 3; ++i) H.add_sym(scaled(comp(h, 0, i + 1), u.c), I, bare({i}));
  const double spin = -u.hbar * u.e / (4 * u.m * u.c);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) add_eps_F_sigma(H, em, i, j, spin, &comp(h, i + 1, j + 1));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) H.add_sym(scaled(comp(h, i + 1, j + 1), -1.0 / (2 * u.m)), I, pi({i, j}));
  add_B_sigma(H, em, spin, &h00);
  return H;
}

Operator build_Hp_boson(const std::shared_ptr<const Context>& ctx, const MetricField& h) {
  check_metric(ctx->grid, h);
  const auto& u = U(ctx);
  const Spin I = Spin::Identity();
  Operator H(ctx);
  const auto& h00 = comp(h, 0, 0);
  H.add_local(scaled(h00, u.m * u.c * u.c / 2), I);
  for (int a = 0; a < 3; ++a) H.add_sym(scaled(h00, -1.0 / (4 * u.m)), I, bare({a, a}));
  for (int i = 0; i < 3; ++i) H.add_sym(scaled(comp(h, 0, i + 1), u.c), I, bare({i}));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) H.add_sym(scaled(comp(h, i + 1, j + 1), -1.0 / (2 * u.m)), I, bare({i, j}));
  return H;
}

Operator build_Hr(const std::shared_ptr<const Context>& ctx, const EMField& em) {
  const auto& u = U(ctx);
  const Grid& g = ctx->grid;
  const double m = u.m, c = u.c, hb = u.hbar, e = u.e;
  Operator H(ctx);
  // spin-orbit, symmetrized: (hbar e / 8 m^2 c^2) sum eps_lij {E_j, p_i} sigma_l
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int eps = levi_civita(l + 1, i + 1, j + 1);
        if (eps == 0) continue;
        H.add_sym(scaled(em.E[j], eps * hb * e / (4 * m * m * c * c)), pauli(l + 1), bare({i}));
      }
  // Darwin
  std::vector<double> divE(g.sites(), 0.0);
  for (int i = 0; i < 3; ++i) {
    const auto d = spectral_derivative(g, em.E[i], i);
    for (std::size_t s = 0; s < d.size(); ++s) divE[s] += d[s];
  }
  H.add_local(scaled(divE, -hb * hb * e / (8 * m * m * c * c)), Spin::Identity());
  // kinetic p^4
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) H.add_sym(-1.0 / (8 * m * m * m * c * c), pi({a, a, b, b}));
  // B^2
  std::vector<double> B2(g.sites(), 0.0);
  for (int k = 0; k < 3; ++k)
    for (std::size_t s = 0; s < B2.size(); ++s) B2[s] += em.B[k][s] * em.B[k][s];
  H.add_local(scaled(B2, -hb * hb * e * e / (8 * m * m * m * c * c * c * c)), Spin::Identity());
  // (hbar e / 8 m^3 c^3) {pi^2, B.sigma}
  for (int k = 0; k < 3; ++k)
    for (int a = 0; a < 3; ++a)
      H.add_sym(scaled(em.B[k], hb * e / (4 * m * m * m * c * c * c)), pauli(k + 1), pi({a, a}));
  return H;
}

XiOperators build_Xi(const std::shared_ptr<const Context>& ctx, const EMField& em) {
  const auto& u = U(ctx);
  const std::vector<double> one(ctx->grid.sites(), 1.0);
  XiOperators X{Operator(ctx), {}};
  X.xi00.add_local(one, u.m * u.c * u.c / 2 * Spin::Identity());
  for (int a = 0; a < 3; ++a) X.xi00.add_sym(1.0 / (4 * u.m), pi({a, a}));
  add_B_sigma(X.xi00, em, -u.hbar * u.e / (2 * u.m * u.c));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Operator& x = X.xi[i][j];
      x = Operator(ctx);
      x.add_sym(1.0 / (4 * u.m), pi({i, j}));
      if (i == j) x.add_local(one, u.m * u.c * u.c / 2 * Spin::Identity());
      // (hbar e / 2mc) eps_kil F_kj sigma_l
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const int eps = levi_civita(k + 1, i + 1, l + 1);
          if (eps) x.add_local(scaled(em.F[k][j], eps * u.hbar * u.e / (2 * u.m * u.c)), pauli(l + 1));
        }
    }
  return X;
}

std::array<Operator, noise::kComponents> coupling_operators(const std::shared_ptr<const Context>& ctx,
                                                            const EMField& em, CouplingSet set) {
  const auto& u = U(ctx);
  const std::vector<double> one(ctx->grid.sites(), 1.0);
  std::array<Operator, noise::kComponents> K;
  for (auto& k : K) k = Operator(ctx);
  auto& K00 = K[static_cast<std::size_t>(Component::h00)];
  for (int i = 0; i < 3; ++i) K[static_cast<std::size_t>(component_of(0, i + 1))].add_sym(u.c, bare({i}));

  if (set == CouplingSet::xi) {
    const auto X = build_Xi(ctx, em);
    K00 = X.xi00;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        auto& k = K[static_cast<std::size_t>(component_of(a + 1, b + 1))];
        k += X.xi[a][b];
        if (a != b) k += X.xi[b][a];
      }
    return K;
  }

  K00.add_local(one, u.m * u.c * u.c / 2 * Spin::Identity());
  for (int a = 0; a < 3; ++a) K00.add_sym(-1.0 / (4 * u.m), pi({a, a}));
  add_B_sigma(K00, em, -u.hbar * u.e / (4 * u.m * u.c));
  // T_ij = -pi_i pi_j / 2m - (hbar e / 4mc) eps_ikl F_jk sigma_l; K_ab sums the (a,b) orbit
  auto add_T = [&](Operator& k, int i, int j) {
    k.add_sym(-1.0 / (2 * u.m), pi({i, j}));
    add_eps_F_sigma(k, em, i, j, -u.hbar * u.e / (4 * u.m * u.c));
  };
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      auto& k = K[static_cast<std::size_t>(component_of(a + 1, b + 1))];
      add_T(k, a, b);
      if (a != b) add_T(k, b, a);
    }
  return K;
}

MetricField zero_metric(const Grid& g) {
  MetricField h;
  for (auto& f : h.h) f.assign(g.sites(), 0.0);
  return h;
}

// ---------------------------------------------------------------------------
// States

CVec plane_wave(const Grid& g, std::array<int, 3> mode, int spin) {
  if (spin != 0 && spin != 1) throw std::out_of_range("spin index must be 0 or 1");
  const std::size_t N = g.sites();
  CVec v(2 * N, cplx{0, 0});
  const double norm = 1.0 / std::sqrt(static_cast<double>(N));
  for (std::size_t s = 0; s < N; ++s) {
    const auto c = g.coords(s);
    double ph = 0;
    for (int d = 0; d < g.dim; ++d) ph += 2 * std::acos(-1.0) * mode[d] * c[d] / g.n;
    v[static_cast<std::size_t>(spin) * N + s] = std::polar(norm, ph);
  }
  return v;
}

CVec position_state(const Grid& g, std::size_t site, int spin) {
  if (site >= g.sites() || (spin != 0 && spin != 1)) throw std::out_of_range("position state out of range");
  CVec v(2 * g.sites(), cplx{0, 0});
  v[static_cast<std::size_t>(spin) * g.sites() + site] = 1.0;
  return v;
}

CVec normalized(CVec v) {
  double n = 0;
  for (const auto& z : v) n += std::norm(z);
  if (n == 0) throw std::invalid_argument("cannot normalize the zero vector");
  n = 1.0 / std::sqrt(n);
  for (auto& z : v) z *= n;
  return v;
}

Matrix projector(const CVec& psi) {
  Eigen::Map<const Eigen::VectorXcd> v(psi.data(), static_cast<Eigen::Index>(psi.size()));
  return v * v.adjoint();
}

namespace {

Matrix dft_unitary(const Grid& g) {
  const auto N = static_cast<Eigen::Index>(g.sites());
  Matrix F(N, N);
  Spectral sp(g);
  const double s = 1.0 / std::sqrt(static_cast<double>(N));
  for (Eigen::Index j = 0; j < N; ++j) {
    CVec col(static_cast<std::size_t>(N), cplx{0, 0});
    col[static_cast<std::size_t>(j)] = 1.0;
    sp.forward(col);
    for (Eigen::Index i = 0; i < N; ++i) F(i, j) = s * col[static_cast<std::size_t>(i)];
  }
  Matrix U = Matrix::Zero(2 * N, 2 * N);
  U.topLeftCorner(N, N) = F;
  U.bottomRightCorner(N, N) = F;
  return U;
}

}  // namespace

Matrix to_momentum_basis(const Grid& g, const Matrix& rho) {
  const Matrix U = dft_unitary(g);
  return U * rho * U.adjoint();
}

Matrix from_momentum_basis(const Grid& g, const Matrix& rho_p) {
  const Matrix U = dft_unitary(g);
  return U.adjoint() * rho_p * U;
}

}  // namespace gravdec::dynamics
