#include "gravdec/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace gravdec::diagnostics {

using dynamics::GuardError;
using noise::Component;

std::string basis_name(Basis b) {
  switch (b) {
    case Basis::position: return "position";
    case Basis::momentum: return "momentum";
    case Basis::energy: return "energy";
  }
  return "?";
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::position: return "position";
    case Regime::momentum: return "momentum";
    case Regime::mixed: return "mixed";
  }
  return "?";
}

void CoherenceSeries::validate() const {
  if (times.size() != values.size()) throw std::invalid_argument("coherence series: length mismatch");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("coherence series: times must strictly increase");
  for (double v : values)
    if (!(v >= 0.0)) throw std::invalid_argument("coherence series: negative or NaN value");
}

BasisMap::BasisMap(const dynamics::System& sys, Basis basis) : sys_(&sys), basis_(basis) {
  if (basis != Basis::energy) return;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sys.H_dense());
  if (es.info() != Eigen::Success) throw std::runtime_error("energy basis: eigensolver failed");
  U_ = es.eigenvectors();
  energies_ = es.eigenvalues();
}

Matrix BasisMap::transform(const Matrix& rho) const {
  switch (basis_) {
    case Basis::position: return rho;
    case Basis::momentum: return dynamics::to_momentum_basis(sys_->grid(), rho);
    case Basis::energy: return U_.adjoint() * rho * U_;
  }
  return rho;
}

namespace {

void check_pair(const Matrix& rho, std::pair<std::size_t, std::size_t> pair) {
  const auto n = static_cast<std::size_t>(rho.rows());
  if (pair.first >= n || pair.second >= n)
    throw std::out_of_range("coherence pair (" + std::to_string(pair.first) + ", " + std::to_string(pair.second) +
                            ") outside dimension " + std::to_string(n));
}

double element(const Matrix& rho, std::pair<std::size_t, std::size_t> pair) {
  return std::abs(rho(static_cast<Eigen::Index>(pair.first), static_cast<Eigen::Index>(pair.second)));
}

}  // namespace

double coherence(const Matrix& rho, Basis basis, std::pair<std::size_t, std::size_t> pair,
                 const dynamics::System& sys) {
  check_pair(rho, pair);
  if (basis == Basis::position) return element(rho, pair);
  return element(BasisMap(sys, basis).transform(rho), pair);
}

CoherenceSeries coherence_series(const std::vector<double>& times, const std::vector<Matrix>& snapshots,
                                 Basis basis, std::pair<std::size_t, std::size_t> pair,
                                 const dynamics::System& sys) {
  if (times.size() != snapshots.size()) throw std::invalid_argument("coherence series: length mismatch");
  CoherenceSeries s{basis, pair.first, pair.second, times, {}};
  const BasisMap map(sys, basis);
  for (const auto& rho : snapshots) {
    check_pair(rho, pair);
    s.values.push_back(element(map.transform(rho), pair));
  }
  s.validate();
  return s;
}

DecayFit fit_decay_rate(const CoherenceSeries& series) {
  series.validate();
  std::size_t n = 0;
  while (n < series.values.size() && series.values[n] > 0.0 && std::isfinite(series.values[n])) ++n;
  if (n < 10) throw std::invalid_argument("fit_decay_rate: fewer than 10 positive leading points");

  DecayFit f;
  f.points = n;
  f.truncated = n < series.values.size();

  // logs relative to the first point: a constant series is exactly flat
  const double y0 = std::log(series.values[0]);
  double tm = 0, ym = 0;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::log(series.values[i]) - y0;
    tm += series.times[i];
    ym += y[i];
  }
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = series.times[i] - tm, dy = y[i] - ym;
    sxx += dt * dt;
    sxy += dt * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  f.gamma = -slope;
  const double intercept = ym - slope * tm;
  f.log_amplitude = y0 + intercept;

  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * series.times[i]);
    sse += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  const double dof = static_cast<double>(n - 2);
  const boost::math::students_t t(dof);
  f.ci95 = boost::math::quantile(t, 0.975) * std::sqrt(sse / dof / sxx);
  return f;
}

Regime classify_regime(const noise::NoiseSpec& spec, const StateSummary& s, const dynamics::Physical& u,
                       const RegimeOptions& opt) {
  const double k = opt.factor;

  bool h00_dominant = spec.is_active(Component::h00);
  for (int c = 1; c < noise::kComponents && h00_dominant; ++c) {
    const auto comp = static_cast<Component>(c);
    if (spec.is_active(comp) && k * spec.scale(comp) > spec.scale(Component::h00)) h00_dominant = false;
  }
  const double u00 = noise::kernel_value(spec.kernels[0], s.delta_x);
  const double rest = u.m * u.c * u.c;
  if (h00_dominant && k * std::abs(s.delta_E) < rest * (1.0 - u00)) return Regime::position;

  // low momentum transfer: every active kernel is smooth on the scale of delta_x
  bool smooth = true;
  for (int c = 0; c < noise::kComponents; ++c) {
    const auto comp = static_cast<Component>(c);
    if (!spec.is_active(comp)) continue;
    const auto& kern = spec.kernel(comp);
    const double q_max = kern.type == noise::KernelType::delta ? std::numeric_limits<double>::infinity() : 1.0 / kern.ell;
    if (!(k * q_max * std::abs(s.delta_x) < 1.0)) smooth = false;
  }
  const double p = std::abs(s.p);
  const bool minimal_small = p > k * std::abs(u.e * s.A / u.c);
  const bool zeeman_small = p * p / (2 * u.m) > k * std::abs(u.hbar * u.e * s.B / (2 * u.m * u.c));
  if (smooth && minimal_small && zeeman_small) return Regime::momentum;
  return Regime::mixed;
}

ModelComparison compare_models(const Grid& g, const dynamics::Physical& u, const dynamics::EMField& em,
                               const dynamics::MetricField& h) {
  bool magnetic = em.has_vector_potential();
  for (const auto& b : em.B)
    for (double x : b) magnetic = magnetic || x != 0.0;
  if (magnetic) throw GuardError("compare_models requires A = 0 and B = 0");

  const auto ctx = dynamics::Context::make(g, u, em);
  ModelComparison out;
  const Matrix F = dynamics::build_Hp_fermion(ctx, em, h).dense();
  const Matrix Bz = dynamics::build_Hp_boson(ctx, h).dense();
  out.max_abs_diff = (F - Bz).cwiseAbs().maxCoeff();

  for (int c = 0; c < noise::kComponents; ++c) {
    auto hc = dynamics::zero_metric(g);
    hc.h[static_cast<std::size_t>(c)] = h.h[static_cast<std::size_t>(c)];
    const Matrix d = dynamics::build_Hp_fermion(ctx, em, hc).dense() - dynamics::build_Hp_boson(ctx, hc).dense();
    out.terms.push_back({noise::component_name(static_cast<Component>(c)), d.cwiseAbs().maxCoeff()});
  }
  return out;
}

}  // namespace gravdec::diagnostics
