#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gravdec/dynamics.hpp"

namespace gravdec::diagnostics {

using dynamics::Matrix;

enum class Basis { position, momentum, energy };

std::string basis_name(Basis b);

/// |rho_ab(t)| for one pair in one basis. Times strictly increase, values are non-negative.
struct CoherenceSeries {
  Basis basis = Basis::position;
  std::size_t a = 0, b = 0;
  std::vector<double> times;
  std::vector<double> values;

  void validate() const;
};

/// Changes basis for coherence readout. The energy basis diagonalizes the
/// system's coherent Hamiltonian (EM terms included), in ascending order.
class BasisMap {
 public:
  BasisMap(const dynamics::System& sys, Basis basis);
  Matrix transform(const Matrix& rho) const;
  Basis basis() const { return basis_; }
  const Eigen::VectorXd& energies() const { return energies_; }

 private:
  const dynamics::System* sys_;
  Basis basis_;
  Matrix U_;  // columns are energy eigenvectors
  Eigen::VectorXd energies_;
};

/// |<a|rho|b>| in the requested basis; throws std::out_of_range for a bad pair.
double coherence(const Matrix& rho, Basis basis, std::pair<std::size_t, std::size_t> pair,
                 const dynamics::System& sys);

CoherenceSeries coherence_series(const std::vector<double>& times, const std::vector<Matrix>& snapshots,
                                 Basis basis, std::pair<std::size_t, std::size_t> pair,
                                 const dynamics::System& sys);

struct DecayFit {
  double gamma = 0.0;
  double ci95 = 0.0;  // half width
  double r2 = 1.0;
  double log_amplitude = 0.0;
  std::size_t points = 0;
  bool truncated = false;  // fitted on the positive prefix only
};

/// Least squares of log value against -gamma t + const. Needs at least 10
/// positive leading points.
DecayFit fit_decay_rate(const CoherenceSeries& series);

enum class Regime { position, momentum, mixed };

std::string regime_name(Regime r);

struct StateSummary {
  double delta_E = 0.0;  // energy spread of the superposed branches
  double delta_x = 0.0;  // branch separation
  double p = 0.0;        // typical momentum magnitude
  double A = 0.0;        // vector potential magnitude
  double B = 0.0;        // magnetic field magnitude
};

struct RegimeOptions {
  double factor = 10.0;  // how much smaller "much smaller" has to be
};

/// Position regime: h00 dominates the active noise and dE << mc^2 (1 - u00(dx)).
/// Momentum regime: the kernel is smooth over dx (dx / l << 1), |p| >> |eA/c| and
/// p^2/2m >> |hbar e B / 2mc|. Anything else is mixed.
Regime classify_regime(const noise::NoiseSpec& spec, const StateSummary& s, const dynamics::Physical& u,
                       const RegimeOptions& opt = {});

struct TermDiff {
  std::string term;
  double diff = 0.0;
};

struct ModelComparison {
  double max_abs_diff = 0.0;
  std::vector<TermDiff> terms;  // one row per metric component
};

/// Dense max-norm difference between the fermion and boson couplings for one
/// metric sample. Throws GuardError when the field carries A or B.
ModelComparison compare_models(const Grid& g, const dynamics::Physical& u, const dynamics::EMField& em,
                               const dynamics::MetricField& h);

}  // namespace gravdec::diagnostics
