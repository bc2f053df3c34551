#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "gravdec/dynamics.hpp"

namespace gravdec::dynamics {

using noise::Component;
using noise::kComponents;

namespace {

Component comp(int c) { return static_cast<Component>(c); }

std::size_t step_count(double T, double dt) {
  if (!(dt > 0) || !(T >= 0)) throw std::invalid_argument("need T >= 0 and dt > 0");
  const double n = std::round(T / dt);
  if (std::abs(n * dt - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("T must be an integer multiple of dt");
  return static_cast<std::size_t>(n);
}

// 1/2 {h(x), K} for K whose momentum terms carry site-uniform coefficients
Operator half_anticommutator(const std::vector<double>& h, const Operator& K) {
  Operator out(K.context_ptr());
  const auto& local = K.local();
  if (!local.empty())
    for (std::size_t s = 0; s < h.size(); ++s)
      if (h[s] != 0.0) out.add_local(s, h[s] * local[s]);
  for (const auto& t : K.terms()) {
    std::vector<Spin> g(h.size());
    for (std::size_t s = 0; s < h.size(); ++s) {
      if (!t.g[s].isApprox(t.g[0], 0.0)) throw std::logic_error("coupling has a non-uniform momentum coefficient");
      g[s] = h[s] * t.g[s];
    }
    out.add_sym(g, t.q);
  }
  return out;
}

// exp(-i theta M) for a Hermitian 2x2 M = a I + b.sigma
Spin expm_spin(const Spin& M, double theta) {
  const double a = 0.5 * (M(0, 0) + M(1, 1)).real();
  const double bx = M(0, 1).real(), by = -M(0, 1).imag(), bz = 0.5 * (M(0, 0) - M(1, 1)).real();
  const double b = std::sqrt(bx * bx + by * by + bz * bz);
  Spin out = std::cos(theta * b) * Spin::Identity();
  if (b > 0) {
    const Spin n = (bx * pauli(1) + by * pauli(2) + bz * pauli(3)) / b;
    out -= cplx(0, std::sin(theta * b)) * n;
  }
  return std::polar(1.0, -theta * a) * out;
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// System

System::System(const Grid& g, const Physical& u, EMField em, const SystemOptions& opt)
    : ctx_(Context::make(g, u, em)), em_(std::move(em)), opt_(opt) {
  H_ = build_H0(ctx_, em_, opt_.h0);
  if (opt_.include_Hr) H_ += build_Hr(ctx_, em_);
  K_ = coupling_operators(ctx_, em_, opt_.couplings);
}

void System::ensure_dense() const {
  if (dim() > kMaxDenseDim)
    throw GuardError("dense operators need 2N <= " + std::to_string(kMaxDenseDim) + ", got " +
                     std::to_string(dim()));
}

const Matrix& System::H_dense() const {
  ensure_dense();
  if (!H_dense_) H_dense_ = H_.dense();
  return *H_dense_;
}

const Matrix& System::coupling_dense(Component c) const {
  ensure_dense();
  auto& slot = K_dense_[static_cast<std::size_t>(c)];
  if (!slot) slot = K_[static_cast<std::size_t>(c)].dense();
  return *slot;
}

Operator System::hamiltonian(const MetricField& h) const {
  Operator out = H_;
  for (int c = 0; c < kComponents; ++c) {
    const auto& f = h.h[static_cast<std::size_t>(c)];
    if (f.empty() || K_[static_cast<std::size_t>(c)].is_zero()) continue;
    if (f.size() != grid().sites()) throw std::invalid_argument("metric sample does not match grid");
    out += half_anticommutator(f, K_[static_cast<std::size_t>(c)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Krylov exponential

CVec expm_krylov(const std::function<CVec(const CVec&)>& matvec, const CVec& psi, double tau, double tol,
                 double* error, int max_dim) {
  using Eigen::VectorXcd;
  const auto n = static_cast<Eigen::Index>(psi.size());
  Eigen::Map<const VectorXcd> p0(psi.data(), n);
  const double beta0 = p0.norm();
  if (error) *error = 0.0;
  if (beta0 == 0.0 || tau == 0.0) return psi;
  const int mmax = static_cast<int>(std::min<Eigen::Index>(max_dim, n));
  std::vector<VectorXcd> V;
  std::vector<double> alpha, beta;
  V.push_back(p0 / beta0);
  Eigen::VectorXcd y;
  double est = 0.0;
  for (int j = 0; j < mmax; ++j) {
    const CVec wv = matvec(CVec(V[j].data(), V[j].data() + n));
    VectorXcd w = Eigen::Map<const VectorXcd>(wv.data(), n);
    const double a = V[j].dot(w).real();
    alpha.push_back(a);
    // full reorthogonalization, applied twice
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : V) w -= v * v.dot(w);
    const double b = w.norm();
    const int m = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXcd phase =
        (es.eigenvalues().cast<cplx>() * cplx(0, -tau)).array().exp().matrix();
    y = es.eigenvectors().cast<cplx>() * phase.cwiseProduct(es.eigenvectors().row(0).transpose().cast<cplx>());
    est = b * std::abs(y(m - 1));
    const bool invariant = b <= 1e-14 * std::max(1.0, std::abs(a));
    if (invariant || est <= tol || m == mmax) {
      if (!invariant && est > tol && m < n)
        throw StepSizeError("Krylov propagator did not converge: local error estimate " + std::to_string(est) +
                                " exceeds " + std::to_string(tol) + "; reduce dt",
                            est);
      if (invariant || m == n) est = 0.0;
      VectorXcd out = VectorXcd::Zero(n);
      for (int i = 0; i < m; ++i) out += V[static_cast<std::size_t>(i)] * y(i);
      out *= beta0;
      if (error) *error = est;
      return CVec(out.data(), out.data() + n);
    }
    beta.push_back(b);
    V.push_back(w / b);
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Trajectories

namespace {

constexpr std::size_t kDenseTrajectoryDim = 128;

}  // namespace

TrajectoryResult evolve_stochastic(const CVec& psi0, const noise::NoiseSpec& spec, const System& sys,
                                   const TrajectoryOptions& opt) {
  spec.validate();
  if (psi0.size() != sys.dim()) throw std::invalid_argument("initial state does not match system");
  const std::size_t steps = step_count(opt.T, opt.dt);
  const double hbar = sys.units().hbar;
  const bool use_dense = sys.dim() <= kDenseTrajectoryDim;
  bool any_active = false;
  for (int c = 0; c < kComponents; ++c) any_active |= spec.is_active(comp(c)) && !sys.coupling(comp(c)).is_zero();
  const bool noisy = any_active && spec.alpha > 0;

  TrajectoryResult res;
  res.psi = psi0;
  double norm0 = 0;
  for (const auto& z : psi0) norm0 += std::norm(z);
  norm0 = std::sqrt(norm0);
  auto record = [&](std::size_t k) {
    if (opt.record_every && k % opt.record_every == 0) {
      res.times.push_back(static_cast<double>(k) * opt.dt);
      res.snapshots.push_back(res.psi);
    }
  };
  record(0);

  const auto N = static_cast<Eigen::Index>(sys.grid().sites());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t_mid = (static_cast<double>(k) + 0.5) * opt.dt;
    double err = 0;
    if (use_dense) {
      Matrix H = sys.H_dense();
      if (noisy) {
        const auto h = noise::sample_step(spec, sys.grid(), opt.dt, opt.stream, k, noise::lambda_of(spec, t_mid));
        for (int c = 0; c < kComponents; ++c) {
          const auto& f = h.h[static_cast<std::size_t>(c)];
          if (!spec.is_active(comp(c))) continue;
          const Matrix& K = sys.coupling_dense(comp(c));
          for (Eigen::Index j = 0; j < 2 * N; ++j)
            for (Eigen::Index i = 0; i < 2 * N; ++i)
              H(i, j) += 0.5 * (f[static_cast<std::size_t>(i % N)] + f[static_cast<std::size_t>(j % N)]) * K(i, j);
        }
      }
      auto mv = [&H](const CVec& v) {
        Eigen::Map<const Eigen::VectorXcd> x(v.data(), static_cast<Eigen::Index>(v.size()));
        const Eigen::VectorXcd y = H * x;
        return CVec(y.data(), y.data() + y.size());
      };
      res.psi = expm_krylov(mv, res.psi, opt.dt / hbar, opt.tolerance, &err);
    } else {
      const Operator H = noisy ? sys.hamiltonian(noise::sample_step(spec, sys.grid(), opt.dt, opt.stream, k,
                                                                    noise::lambda_of(spec, t_mid)))
                               : sys.H();
      res.psi = expm_krylov([&H](const CVec& v) { return H.apply(v); }, res.psi, opt.dt / hbar, opt.tolerance, &err);
    }
    res.max_local_error = std::max(res.max_local_error, err);
    double nrm = 0;
    for (const auto& z : res.psi) nrm += std::norm(z);
    res.norm_drift = std::max(res.norm_drift, std::abs(std::sqrt(nrm) - norm0));
    record(k + 1);
  }
  return res;
}

CVec evolve_free_split(const CVec& psi0, const System& sys, double T, double dt) {
  if (sys.em().has_vector_potential() || sys.options().include_Hr)
    throw GuardError("split propagation needs A = 0 and no relativistic corrections");
  if (psi0.size() != sys.dim()) throw std::invalid_argument("initial state does not match system");
  const std::size_t steps = step_count(T, dt);
  const auto& ctx = *sys.context();
  const auto& u = sys.units();
  const std::size_t N = sys.grid().sites();
  const double theta = dt / u.hbar;

  std::vector<Spin> half(N, Spin::Identity());
  const auto& local = sys.H().local();
  if (!local.empty())
    for (std::size_t x = 0; x < N; ++x) half[x] = expm_spin(local[x], 0.5 * theta);
  CVec kin(N);
  for (std::size_t q = 0; q < N; ++q) {
    double p2 = 0;
    for (int a = 0; a < 3; ++a) p2 += ctx.momenta[a][q] * ctx.momenta[a][q];
    kin[q] = std::polar(1.0, -theta * p2 / (2 * u.m));
  }
  CVec psi = psi0, block(N);
  auto apply_half = [&] {
    for (std::size_t x = 0; x < N; ++x) {
      const cplx a = psi[x], b = psi[N + x];
      psi[x] = half[x](0, 0) * a + half[x](0, 1) * b;
      psi[N + x] = half[x](1, 0) * a + half[x](1, 1) * b;
    }
  };
  for (std::size_t k = 0; k < steps; ++k) {
    apply_half();
    for (int s = 0; s < 2; ++s) {
      std::copy(psi.begin() + s * N, psi.begin() + (s + 1) * N, block.begin());
      ctx.fft->forward(block);
      for (std::size_t q = 0; q < N; ++q) block[q] *= kin[q];
      ctx.fft->inverse(block);
      std::copy(block.begin(), block.end(), psi.begin() + s * N);
    }
    apply_half();
  }
  return psi;
}

namespace {

// Neumaier-compensated running sum
struct CompensatedSum {
  double sum = 0, comp = 0;
  void add(double x) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

EnsembleResult ensemble_average(const CVec& psi0, const noise::NoiseSpec& spec, const System& sys, double T,
                                double dt, std::uint64_t seed, std::size_t n_traj, std::uint64_t first_id,
                                unsigned threads) {
  if (n_traj < 2) throw std::invalid_argument("ensemble needs at least two trajectories");
  threads = std::max(1u, threads);
  // populate the lazily built dense caches before workers share the system
  if (sys.dim() <= kDenseTrajectoryDim) {
    sys.H_dense();
    for (int c = 0; c < kComponents; ++c) sys.coupling_dense(comp(c));
  }
  std::vector<CVec> finals(n_traj);
  std::vector<double> drift(n_traj, 0.0);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < n_traj; i += threads) {
        TrajectoryOptions o;
        o.T = T;
        o.dt = dt;
        o.stream = {seed, first_id + i};
        auto r = evolve_stochastic(psi0, spec, sys, o);
        finals[i] = std::move(r.psi);
        drift[i] = r.norm_drift;
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // fixed-order reduction, independent of the thread count
  const auto D = static_cast<Eigen::Index>(sys.dim());
  std::vector<CompensatedSum> s_re(static_cast<std::size_t>(D * D)), s_im(s_re.size()), q_re(s_re.size()),
      q_im(s_re.size());
  for (std::size_t i = 0; i < n_traj; ++i) {
    const auto& v = finals[i];
    for (Eigen::Index b = 0; b < D; ++b)
      for (Eigen::Index a = 0; a < D; ++a) {
        const cplx z = v[static_cast<std::size_t>(a)] * std::conj(v[static_cast<std::size_t>(b)]);
        const auto k = static_cast<std::size_t>(b * D + a);
        s_re[k].add(z.real());
        s_im[k].add(z.imag());
        q_re[k].add(z.real() * z.real());
        q_im[k].add(z.imag() * z.imag());
      }
  }
  EnsembleResult r;
  r.n_traj = n_traj;
  r.mean = Matrix(D, D);
  r.se_re = Eigen::MatrixXd(D, D);
  r.se_im = Eigen::MatrixXd(D, D);
  const double n = static_cast<double>(n_traj);
  for (Eigen::Index b = 0; b < D; ++b)
    for (Eigen::Index a = 0; a < D; ++a) {
      const auto k = static_cast<std::size_t>(b * D + a);
      const double mr = s_re[k].value() / n, mi = s_im[k].value() / n;
      r.mean(a, b) = {mr, mi};
      r.se_re(a, b) = std::sqrt(std::max(0.0, q_re[k].value() / n - mr * mr) / (n - 1));
      r.se_im(a, b) = std::sqrt(std::max(0.0, q_im[k].value() / n - mi * mi) / (n - 1));
    }
  r.max_norm_drift = *std::max_element(drift.begin(), drift.end());
  return r;
}

// ---------------------------------------------------------------------------
// Master equation

namespace {

Eigen::MatrixXd covariance_matrix(const Grid& g, const std::vector<double>& C) {
  const auto N = static_cast<Eigen::Index>(g.sites());
  Eigen::MatrixXd M(2 * N, 2 * N);
  for (Eigen::Index j = 0; j < 2 * N; ++j)
    for (Eigen::Index i = 0; i < 2 * N; ++i)
      M(i, j) = C[g.site(g.offset(static_cast<std::size_t>(i % N), static_cast<std::size_t>(j % N)))];
  return M;
}

}  // namespace

MasterGenerator::MasterGenerator(const Grid& g, const Physical& u, Matrix H, std::vector<Channel> channels,
                                 const noise::NoiseSpec& spec)
    : grid_(g), units_(u), H_(std::move(H)), spec_(spec) {
  spec_.validate();
  const auto D = static_cast<Eigen::Index>(2 * g.sites());
  if (H_.rows() != D || H_.cols() != D) throw std::invalid_argument("Hamiltonian does not match grid");
  std::vector<std::vector<double>> seen;
  for (auto& ch : channels) {
    if (ch.K.rows() != D) throw std::invalid_argument("coupling does not match grid");
    std::size_t idx = 0;
    while (idx < seen.size() && seen[idx] != ch.C) ++idx;
    if (idx == seen.size()) {
      seen.push_back(ch.C);
      covs_.push_back(covariance_matrix(g, ch.C));
    }
    const auto& C = covs_[idx];
    Prepared p;
    p.K = std::move(ch.K);
    const Matrix K2 = p.K * p.K;
    const Matrix CK = hadamard(C, p.K);
    p.Ahat = CK * p.K + hadamard(C, K2) + K2 + p.K * CK;
    p.cov = idx;
    p.weight = ch.weight;
    channels_.push_back(std::move(p));
  }
}

Matrix MasterGenerator::operator()(double t, const Matrix& rho) const {
  const double hbar = units_.hbar;
  const double lambda = noise::lambda_of(spec_, t);
  Matrix R = (H_ * rho - rho * H_) * cplx(0, -1.0 / hbar);
  if (lambda == 0.0) return R;
  for (const auto& ch : channels_) {
    const double kappa = ch.weight * lambda / (8 * hbar * hbar);
    if (kappa == 0.0) continue;
    const auto& C = covs_[ch.cov];
    const Matrix Kr = ch.K * rho;
    const Matrix rK = rho * ch.K;
    const Matrix KrK = Kr * ch.K;
    Matrix cross = hadamard(C, Kr) * ch.K + hadamard(C, KrK) + ch.K * (hadamard(C, rho) * ch.K) +
                   ch.K * hadamard(C, rK);
    R -= kappa * (ch.Ahat * rho + rho * ch.Ahat - 2.0 * cross);
  }
  return R;
}

std::vector<Channel> master_channels(const System& sys, const noise::NoiseSpec& spec) {
  std::vector<Channel> out;
  for (int c = 0; c < kComponents; ++c) {
    if (!spec.is_active(comp(c)) || sys.coupling(comp(c)).is_zero()) continue;
    const double s = spec.scale(comp(c));
    out.push_back({comp(c), sys.coupling_dense(comp(c)), noise::lattice_covariance(spec.kernel(comp(c)), sys.grid()),
                   spec.alpha * spec.alpha * s * s});
  }
  return out;
}

MasterResult integrate_master(const MasterGenerator& gen, const Matrix& rho0, const MasterOptions& opt) {
  if (static_cast<std::size_t>(rho0.rows()) != gen.dim() || rho0.cols() != rho0.rows())
    throw std::invalid_argument("density operator does not match system");
  const std::size_t steps = step_count(opt.T, opt.dt);
  const double dt = opt.dt;
  MasterResult res;
  res.rho = rho0;
  const cplx tr0 = rho0.trace();
  const bool every_step = gen.dim() <= 64;
  auto monitor = [&](bool sampled) {
    if (!res.rho.allFinite()) throw InvariantError("density operator is no longer finite (step size too large?)");
    res.max_trace_drift = std::max(res.max_trace_drift, std::abs(res.rho.trace() - tr0));
    const double herm = max_abs(res.rho - res.rho.adjoint());
    res.max_hermiticity_drift = std::max(res.max_hermiticity_drift, herm);
    if (herm > opt.hermiticity_abort)
      throw InvariantError("density operator lost Hermiticity: drift " + std::to_string(herm));
    if (opt.check_positivity && (sampled || every_step)) {
      const Matrix h = 0.5 * (res.rho + res.rho.adjoint());
      Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
      res.min_eigenvalue = std::min(res.min_eigenvalue, es.eigenvalues().minCoeff());
    }
  };
  auto record = [&](std::size_t k) {
    if (opt.record_every && k % opt.record_every == 0) {
      res.times.push_back(static_cast<double>(k) * dt);
      res.snapshots.push_back(res.rho);
    }
  };
  monitor(true);
  record(0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Matrix k1 = gen(t, res.rho);
    const Matrix k2 = gen(t + dt / 2, res.rho + (dt / 2) * k1);
    const Matrix k3 = gen(t + dt / 2, res.rho + (dt / 2) * k2);
    const Matrix k4 = gen(t + dt, res.rho + dt * k3);
    res.rho += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    const bool sampled = opt.record_every && (k + 1) % opt.record_every == 0;
    monitor(sampled || k + 1 == steps);
    record(k + 1);
  }
  res.steps = steps;
  return res;
}

MasterResult evolve_master(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys,
                           const MasterOptions& opt) {
  MasterGenerator gen(sys.grid(), sys.units(), sys.H_dense(), master_channels(sys, spec), spec);
  return integrate_master(gen, rho0, opt);
}

Matrix reference_master(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys, double t) {
  spec.validate();
  const std::size_t D = sys.dim();
  if (D > 8) throw GuardError("reference superoperator is limited to 2N <= 8");
  if (spec.lambda_rule != noise::LambdaRule::fixed) throw GuardError("reference superoperator needs a fixed lambda");
  const Grid& g = sys.grid();
  const auto d = static_cast<Eigen::Index>(D);
  const auto N = static_cast<Eigen::Index>(g.sites());
  const double hbar = sys.units().hbar;
  const Matrix I = Matrix::Identity(d, d);
  auto kron = [](const Matrix& A, const Matrix& B) {
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
  };
  // column-major vec: vec(A X B) = (B^T kron A) vec(X)
  const Matrix& H = sys.H_dense();
  Matrix S = cplx(0, -1.0 / hbar) * (kron(I, H) - kron(H.transpose(), I));
  for (int c = 0; c < kComponents; ++c) {
    if (!spec.is_active(comp(c)) || sys.coupling(comp(c)).is_zero()) continue;
    const Matrix& K = sys.coupling_dense(comp(c));
    const auto w = noise::spectral_weights(spec.kernel(comp(c)), g);
    const double s = spec.scale(comp(c));
    const double kappa = spec.alpha * spec.alpha * spec.lambda_fixed * s * s / (8 * hbar * hbar * static_cast<double>(N));
    for (std::size_t q = 0; q < g.sites(); ++q) {
      if (w[q] == 0.0) continue;
      const auto qv = g.wavevector(q);
      Matrix E = Matrix::Zero(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto x = g.coords(static_cast<std::size_t>(i % N));
        double ph = 0;
        for (int a = 0; a < 3; ++a) ph += qv[a] * x[a] * g.spacing;
        E(i, i) = std::polar(1.0, ph);
      }
      const Matrix L = E * K + K * E;
      const Matrix Ld = L.adjoint();
      S -= kappa * w[q] *
           (kron(I, L * Ld) - kron(Ld.transpose(), L) - kron(L.transpose(), Ld) + kron((Ld * L).transpose(), I));
    }
  }
  const Eigen::VectorXcd v0 = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), rho0.size());
  const Matrix P = (S * t).exp();
  const Eigen::VectorXcd v = P * v0;
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

// ---------------------------------------------------------------------------
// Limits

MasterResult evolve_position_limit(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys,
                                   const MasterOptions& opt, bool include_hamiltonian) {
  const auto D = static_cast<Eigen::Index>(sys.dim());
  const Matrix H = include_hamiltonian ? sys.H_dense() : Matrix::Zero(D, D);
  std::vector<Channel> ch;
  if (spec.is_active(Component::h00)) {
    Operator Kpos(sys.context());
    const auto& local = sys.coupling(Component::h00).local();
    for (std::size_t s = 0; s < local.size(); ++s) Kpos.add_local(s, local[s]);
    const double sc = spec.scale(Component::h00);
    ch.push_back({Component::h00, Kpos.dense(), noise::lattice_covariance(spec.kernel(Component::h00), sys.grid()),
                  spec.alpha * spec.alpha * sc * sc});
  }
  MasterGenerator gen(sys.grid(), sys.units(), H, std::move(ch), spec);
  return integrate_master(gen, rho0, opt);
}

double position_decay_rate(const noise::NoiseSpec& spec, const System& sys, std::size_t x, std::size_t y,
                           double lambda) {
  if (!spec.is_active(Component::h00)) return 0.0;
  const Grid& g = sys.grid();
  const auto C = noise::lattice_covariance(spec.kernel(Component::h00), g);
  const auto& u = sys.units();
  const double k = u.m * u.c * u.c / 2;
  const double s = spec.scale(Component::h00);
  return spec.alpha * spec.alpha * lambda * s * s * k * k * (1.0 - C[g.site(g.offset(x, y))]) / (u.hbar * u.hbar);
}

double plane_wave_coupling(CouplingSet set, Component c, const std::array<double, 3>& p, const Physical& u) {
  const auto ix = noise::indices_of(c);
  const double p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  const double rest = u.m * u.c * u.c / 2;
  const bool ham = set == CouplingSet::hamiltonian;
  if (ix[0] == 0 && ix[1] == 0) return ham ? rest - p2 / (4 * u.m) : rest + p2 / (4 * u.m);
  if (ix[0] == 0) return u.c * p[static_cast<std::size_t>(ix[1] - 1)];
  const double pa = p[static_cast<std::size_t>(ix[0] - 1)], pb = p[static_cast<std::size_t>(ix[1] - 1)];
  if (ix[0] == ix[1]) return ham ? -pa * pa / (2 * u.m) : pa * pa / (4 * u.m) + rest;
  return ham ? -pa * pb / u.m : pa * pb / (2 * u.m);
}

double momentum_decay_rate(const noise::NoiseSpec& spec, CouplingSet set, const std::array<double, 3>& p,
                           const std::array<double, 3>& p2, const Physical& u) {
  double rate = 0;
  for (int c = 0; c < kComponents; ++c) {
    if (!spec.is_active(comp(c))) continue;
    const double d = plane_wave_coupling(set, comp(c), p, u) - plane_wave_coupling(set, comp(c), p2, u);
    const double s = spec.scale(comp(c));
    rate += spec.alpha * spec.alpha * s * s * d * d / (2 * u.hbar * u.hbar);
  }
  return rate;
}

double integrated_lambda(const noise::NoiseSpec& spec, double t) {
  if (spec.lambda_rule == noise::LambdaRule::fixed) return spec.lambda_fixed * t;
  const double tau = spec.tau_c;
  return t <= tau ? 0.5 * t * t : 0.5 * tau * tau + tau * (t - tau);
}

Matrix evolve_momentum_limit(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys, double t) {
  spec.validate();
  if (!sys.em().is_off()) throw GuardError("the momentum limit requires A0 = 0, A = 0 and B = 0");
  const Grid& g = sys.grid();
  const std::size_t N = g.sites();
  if (static_cast<std::size_t>(rho0.rows()) != 2 * N) throw std::invalid_argument("density operator does not match system");
  const auto& u = sys.units();
  // plane waves are eigenstates of H when the fields vanish
  std::vector<double> energy(N);
  std::vector<std::array<double, 3>> mom(N);
  for (std::size_t q = 0; q < N; ++q) {
    const auto c = g.coords(q);
    const CVec pw = plane_wave(g, {c[0], c[1], c[2]}, 0);
    const CVec hp = sys.H().apply(pw);
    cplx e = 0;
    for (std::size_t i = 0; i < pw.size(); ++i) e += std::conj(pw[i]) * hp[i];
    energy[q] = e.real();
    for (int a = 0; a < 3; ++a) mom[q][a] = sys.context()->momenta[a][q];
  }
  Matrix rp = to_momentum_basis(g, rho0);
  const double Lambda = integrated_lambda(spec, t);
  const auto n = static_cast<Eigen::Index>(N);
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
      const auto qi = static_cast<std::size_t>(i % n), qj = static_cast<std::size_t>(j % n);
      const double gamma = momentum_decay_rate(spec, sys.options().couplings, mom[qi], mom[qj], u);
      rp(i, j) *= std::polar(std::exp(-gamma * Lambda), -(energy[qi] - energy[qj]) * t / u.hbar);
    }
  return from_momentum_basis(g, rp);
}

}  // namespace gravdec::dynamics
