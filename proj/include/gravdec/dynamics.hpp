#pragma once

// Numerical single-particle dynamics on a periodic grid: Pauli operators,
// gravitational couplings, stochastic trajectories and the averaged master
// equation with its two analytic limits.
//
// State layout: spin-major, index = s * N + site, s in {0, 1} (sigma_z up/down).

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gravdec/grid.hpp"
#include "gravdec/noise.hpp"

namespace gravdec::dynamics {

using Matrix = Eigen::MatrixXcd;
using Spin = Eigen::Matrix2cd;

/// Numeric values of the physical constants. The engine is written with
/// explicit constants; the defaults are natural units hbar = c = m = 1.
struct Physical {
  double hbar = 1.0;
  double c = 1.0;
  double m = 1.0;
  double e = 1.0;
  bool operator==(const Physical&) const = default;
};

class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A conserved quantity drifted beyond its abort threshold.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a step is too large for the propagator to reach its tolerance.
class StepSizeError : public std::runtime_error {
 public:
  StepSizeError(const std::string& what, double estimate) : std::runtime_error(what), estimate(estimate) {}
  double estimate;
};

inline constexpr std::size_t kMaxDenseDim = 512;

// ---------------------------------------------------------------------------
// Electromagnetic background (static)

struct EMField {
  Grid grid;
  std::vector<double> A0;
  std::array<std::vector<double>, 3> A;  // lower-index A_i
  std::array<std::vector<double>, 3> E;
  std::array<std::vector<double>, 3> B;
  std::array<std::array<std::vector<double>, 3>, 3> F;  // F_ij = d_i A_j - d_j A_i
  /// False when B/F were imposed directly rather than derived from A.
  bool derived_from_potentials = true;

  static EMField off(const Grid& g);
  /// E = -grad A0, B = curl A, F from spectral derivatives.
  static EMField from_potentials(const Grid& g, std::vector<double> A0, std::array<std::vector<double>, 3> A);
  /// Uniform B with A = 0: the Zeeman and F-dependent terms see B, the
  /// orbital coupling is absent (a uniform B has no periodic potential).
  static EMField uniform_magnetic(const Grid& g, std::array<double, 3> B);
  /// Softened point charge A0 = q / sqrt(r^2 + s^2) at the grid centre (minimum image).
  static EMField coulomb_like(const Grid& g, double q, double softening);

  bool has_vector_potential() const;
  bool is_off() const;
};

/// Spectral derivative d/dx_axis of a periodic real field.
std::vector<double> spectral_derivative(const Grid& g, const std::vector<double>& f, int axis);

// ---------------------------------------------------------------------------
// Operators

/// Ordered product of momentum factors. Each factor is p_a, or pi_a = p_a - (e/c) A_a
/// when `minimal` is set.
struct Monomial {
  std::vector<int> axes;
  bool minimal = true;
  bool operator==(const Monomial&) const = default;
  bool operator<(const Monomial& o) const {
    return minimal != o.minimal ? minimal < o.minimal : axes < o.axes;
  }
};

/// Shared numerical context for operators on one grid.
struct Context {
  Grid grid;
  Physical units;
  std::array<std::vector<double>, 3> A;  // vector potential used by minimal monomials
  std::shared_ptr<const Spectral> fft;
  std::array<std::vector<double>, 3> momenta;  // hbar k_a per reciprocal site

  static std::shared_ptr<const Context> make(const Grid& g, const Physical& u, const EMField& em);
  /// Whether p_a or pi_a acts as the zero operator.
  bool factor_vanishes(int axis, bool minimal) const;
  bool has_vector_potential() const { return has_A; }
  bool has_A = false;
};

/// Operator on (N, 2) spinor fields:
///   sum_x local(x) |x><x|  +  sum_t 1/2 { g_t(x), Q_t }
/// with g_t a 2x2 matrix field and Q_t a momentum monomial. Available
/// matrix-free (apply) and dense.
class Operator {
 public:
  struct SymTerm {
    std::vector<Spin> g;
    Monomial q;
  };

  Operator() = default;
  explicit Operator(std::shared_ptr<const Context> ctx);

  const Context& context() const { return *ctx_; }
  std::shared_ptr<const Context> context_ptr() const { return ctx_; }
  std::size_t dim() const { return 2 * ctx_->grid.sites(); }

  void add_local(std::size_t site, const Spin& m);
  void add_local(const std::vector<double>& f, const Spin& m);  // f(x) * m
  void add_sym(const std::vector<Spin>& g, const Monomial& q);
  void add_sym(const std::vector<double>& f, const Spin& m, const Monomial& q);
  void add_sym(double scalar, const Monomial& q);

  Operator& operator+=(const Operator& o);
  Operator operator+(const Operator& o) const;
  Operator scaled(double s) const;

  CVec apply(const CVec& psi) const;
  Matrix dense() const;
  bool is_zero() const;

  const std::vector<Spin>& local() const { return local_; }
  const std::vector<SymTerm>& terms() const { return terms_; }

 private:
  void ensure_local();
  std::shared_ptr<const Context> ctx_;
  std::vector<Spin> local_;  // empty when zero
  std::vector<SymTerm> terms_;
};

/// Apply a monomial matrix-free (rightmost factor first).
CVec apply_monomial(const Context& ctx, const Monomial& q, const CVec& psi);
/// Dense N x N (spin-scalar) matrix of a monomial.
Matrix dense_monomial(const Context& ctx, const Monomial& q);

Spin pauli(int k);  // k = 1, 2, 3; pauli(0) = identity

// Metric sample view used by the Hamiltonian builders.
using MetricField = noise::MetricSample;

struct H0Options {
  bool include_rest_mass = false;  // mc^2 can be removed by a global phase
};

Operator build_H0(const std::shared_ptr<const Context>& ctx, const EMField& em, const H0Options& opt = {});
Operator build_Hp_fermion(const std::shared_ptr<const Context>& ctx, const EMField& em, const MetricField& h);
Operator build_Hp_boson(const std::shared_ptr<const Context>& ctx, const MetricField& h);
Operator build_Hr(const std::shared_ptr<const Context>& ctx, const EMField& em);

struct XiOperators {
  Operator xi00;
  std::array<std::array<Operator, 3>, 3> xi;  // raw Xi_ij
};
XiOperators build_Xi(const std::shared_ptr<const Context>& ctx, const EMField& em);

/// Which operators dress the position phases in the dissipator.
///  hamiltonian: K_c with H_p = sum_c 1/2 {h_c, K_c} (consistent with the trajectories)
///  xi:          the Xi set, K_00 = Xi_00, K_0i = c p_i, K_ab = Xi_ab (+ Xi_ba for a != b)
enum class CouplingSet { hamiltonian, xi };

/// Coupling operator K_c for every independent metric component.
std::array<Operator, noise::kComponents> coupling_operators(const std::shared_ptr<const Context>& ctx,
                                                            const EMField& em, CouplingSet set);

/// A zero-metric sample on the grid (all components zero).
MetricField zero_metric(const Grid& g);

// ---------------------------------------------------------------------------
// Assembled system

struct SystemOptions {
  H0Options h0;
  bool include_Hr = false;  // coherent part only
  CouplingSet couplings = CouplingSet::hamiltonian;
};

class System {
 public:
  System(const Grid& g, const Physical& u, EMField em, const SystemOptions& opt = {});

  const Grid& grid() const { return ctx_->grid; }
  const Physical& units() const { return ctx_->units; }
  const EMField& em() const { return em_; }
  const SystemOptions& options() const { return opt_; }
  std::shared_ptr<const Context> context() const { return ctx_; }
  std::size_t dim() const { return 2 * grid().sites(); }

  const Operator& H() const { return H_; }
  const Operator& coupling(noise::Component c) const { return K_[static_cast<std::size_t>(c)]; }
  /// Dense forms; throw GuardError when 2N exceeds kMaxDenseDim.
  const Matrix& H_dense() const;
  const Matrix& coupling_dense(noise::Component c) const;

  /// H + sum_c 1/2 {h_c, K_c}, matrix-free.
  Operator hamiltonian(const MetricField& h) const;

 private:
  void ensure_dense() const;
  std::shared_ptr<const Context> ctx_;
  EMField em_;
  SystemOptions opt_;
  Operator H_;
  std::array<Operator, noise::kComponents> K_;
  mutable std::optional<Matrix> H_dense_;
  mutable std::array<std::optional<Matrix>, noise::kComponents> K_dense_;
};

// ---------------------------------------------------------------------------
// States

CVec plane_wave(const Grid& g, std::array<int, 3> mode, int spin);  // normalized
CVec position_state(const Grid& g, std::size_t site, int spin);
CVec normalized(CVec v);
Matrix projector(const CVec& psi);
/// Unitary (normalized) DFT per spin block: momentum-basis matrix F rho F^dagger.
Matrix to_momentum_basis(const Grid& g, const Matrix& rho);
Matrix from_momentum_basis(const Grid& g, const Matrix& rho_p);

// ---------------------------------------------------------------------------
// Trajectories

/// Lanczos approximation of exp(-i tau A) psi for Hermitian A given as a
/// matvec. Returns the local error estimate through `error`.
CVec expm_krylov(const std::function<CVec(const CVec&)>& matvec, const CVec& psi, double tau, double tol,
                 double* error = nullptr, int max_dim = 40);

struct TrajectoryOptions {
  double T = 1.0;
  double dt = 0.01;
  noise::StreamId stream;
  double tolerance = 1e-12;  // Krylov local error target
  std::size_t record_every = 0;  // 0: final state only
};

struct TrajectoryResult {
  CVec psi;
  std::vector<double> times;
  std::vector<CVec> snapshots;
  double norm_drift = 0.0;
  double max_local_error = 0.0;
};

/// i hbar d_t psi = (H + H_p(h_n)) psi with h_n drawn per step and held
/// constant over the step; each step is the exact (Krylov) exponential of the
/// midpoint Hamiltonian, so the norm is preserved to the Krylov tolerance.
TrajectoryResult evolve_stochastic(const CVec& psi0, const noise::NoiseSpec& spec, const System& sys,
                                   const TrajectoryOptions& opt);

/// Noise-free evolution by Strang splitting (local half steps around an
/// exact spectral kinetic step). Exact when H0 has no vector potential and
/// the local part is uniform.
CVec evolve_free_split(const CVec& psi0, const System& sys, double T, double dt);

struct EnsembleResult {
  Matrix mean;    // averaged |psi><psi|
  Eigen::MatrixXd se_re, se_im;  // standard error per element
  std::size_t n_traj = 0;
  double max_norm_drift = 0.0;
};

/// Trajectory average of |psi(T)><psi(T)|; trajectories first_id .. first_id + n - 1
/// of `seed`. Deterministic for any thread count.
EnsembleResult ensemble_average(const CVec& psi0, const noise::NoiseSpec& spec, const System& sys, double T,
                                double dt, std::uint64_t seed, std::size_t n_traj, std::uint64_t first_id = 0,
                                unsigned threads = 1);

// ---------------------------------------------------------------------------
// Master equation

struct Channel {
  noise::Component component;
  Matrix K;
  std::vector<double> C;  // lattice covariance per displacement site
  double weight;          // alpha^2 * scale^2 (lambda applied at evaluation)
};

/// d rho/dt = -(i/hbar)[H, rho]
///   - sum_c (alpha^2 lambda s_c^2 / (8 hbar^2 N)) sum_q w_c(q) [L_q, [L_q^dagger, rho]],
/// L_q = {exp(i q.X), K_c}. Evaluated through Hadamard products with the
/// lattice covariance instead of the explicit q-sum.
class MasterGenerator {
 public:
  MasterGenerator(const Grid& g, const Physical& u, Matrix H, std::vector<Channel> channels,
                  const noise::NoiseSpec& spec);
  Matrix operator()(double t, const Matrix& rho) const;
  const Grid& grid() const { return grid_; }
  std::size_t dim() const { return static_cast<std::size_t>(H_.rows()); }
  const noise::NoiseSpec& spec() const { return spec_; }

 private:
  Matrix hadamard(const Eigen::MatrixXd& C, const Matrix& M) const { return C.cast<cplx>().cwiseProduct(M); }
  Grid grid_;
  Physical units_;
  Matrix H_;
  noise::NoiseSpec spec_;
  struct Prepared {
    Matrix K, Ahat;
    std::size_t cov;  // index into covs_
    double weight;
  };
  std::vector<Eigen::MatrixXd> covs_;
  std::vector<Prepared> channels_;
};

/// Channels for every active component of `spec` from the system's couplings.
std::vector<Channel> master_channels(const System& sys, const noise::NoiseSpec& spec);

struct MasterOptions {
  double T = 1.0;
  double dt = 0.01;
  std::size_t record_every = 0;  // 0: final state only
  bool check_positivity = true;
  double hermiticity_abort = 1e-10;
};

struct MasterResult {
  Matrix rho;
  std::vector<double> times;
  std::vector<Matrix> snapshots;
  double max_trace_drift = 0.0;
  double max_hermiticity_drift = 0.0;
  double min_eigenvalue = 1.0;
  std::size_t steps = 0;
};

MasterResult integrate_master(const MasterGenerator& gen, const Matrix& rho0, const MasterOptions& opt);
MasterResult evolve_master(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys,
                           const MasterOptions& opt);

/// Independent reference: the explicit q-sum superoperator on vec(rho),
/// exponentiated exactly. Requires 2N <= 8 and a fixed lambda.
Matrix reference_master(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys, double t);

// ---------------------------------------------------------------------------
// Limits

/// 00 channel only with L_q = {exp(iqX), mc^2/2 - (hbar e/2mc) B.sigma}.
MasterResult evolve_position_limit(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys,
                                   const MasterOptions& opt, bool include_hamiltonian = false);
/// Off-diagonal decay rate between sites x, y for B = 0, per unit time:
/// alpha^2 lambda s_00^2 (mc^2/2)^2 (1 - C(x - y)) / hbar^2.
double position_decay_rate(const noise::NoiseSpec& spec, const System& sys, std::size_t x, std::size_t y,
                           double lambda);

/// Eigenvalue of K_c on the plane wave with momentum p (A = B = 0).
double plane_wave_coupling(CouplingSet set, noise::Component c, const std::array<double, 3>& p,
                           const Physical& u);
/// Momentum-basis decay exponent per unit integrated lambda.
double momentum_decay_rate(const noise::NoiseSpec& spec, CouplingSet set, const std::array<double, 3>& p,
                           const std::array<double, 3>& p2, const Physical& u);
/// Integral of lambda(s) over [0, t].
double integrated_lambda(const noise::NoiseSpec& spec, double t);
/// Closed form in the momentum basis, returned in the position basis.
/// Requires A = 0 and B = 0 (throws GuardError otherwise).
Matrix evolve_momentum_limit(const Matrix& rho0, const noise::NoiseSpec& spec, const System& sys, double t);

}  // namespace gravdec::dynamics
