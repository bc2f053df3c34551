#pragma once

// Graded non-commutative operator algebra used to carry out the
// Foldy-Wouthuysen reduction symbolically.
//
// A term is
//     coeff * hbar^a c^b m^d e^f * (product of field symbols) * d^alpha * Gamma_mask
// where the field symbols are commuting functions of (t, x), d^alpha is a
// monomial of spatial derivatives acting on everything to its right, and
// Gamma_mask is one of the 16 Clifford basis elements. Fields always sit to
// the left of the derivatives; products are brought back to this normal form
// with the Leibniz rule d o f = f d + (d f).

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/container/small_vector.hpp>
#include <boost/rational.hpp>

namespace gravdec::fwsym {

using Rational = boost::rational<std::int64_t>;

/// Exact Gaussian rational re + i im.
struct Coeff {
  Rational re{0};
  Rational im{0};

  Coeff() = default;
  Coeff(Rational r, Rational i = Rational{0}) : re(r), im(i) {}
  Coeff(std::int64_t r) : re(r) {}
  static Coeff i_unit() { return {Rational{0}, Rational{1}}; }
  static Coeff frac(std::int64_t n, std::int64_t d) { return {Rational{n, d}}; }

  Coeff operator+(const Coeff& o) const { return {re + o.re, im + o.im}; }
  Coeff operator-(const Coeff& o) const { return {re - o.re, im - o.im}; }
  Coeff operator-() const { return {-re, -im}; }
  Coeff operator*(const Coeff& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  Coeff conj() const { return {re, -im}; }
  bool is_zero() const { return re == Rational{0} && im == Rational{0}; }
  bool operator==(const Coeff&) const = default;
  std::string to_string() const;
};

enum class FieldKind : std::uint8_t { h00 = 0, h0i = 1, hij = 2, A0 = 3, Ai = 4 };

/// Field symbol with a derivative multi-index (d_t, d_1, d_2, d_3).
/// hij is stored with i <= j.
struct FieldSymbol {
  FieldKind kind = FieldKind::h00;
  std::uint8_t i = 0;
  std::uint8_t j = 0;
  std::array<std::uint8_t, 4> deriv{};

  static FieldSymbol h00() { return {FieldKind::h00}; }
  static FieldSymbol h0(int i);
  static FieldSymbol h(int i, int j);
  static FieldSymbol A0() { return {FieldKind::A0}; }
  static FieldSymbol A(int i);

  bool is_metric() const { return kind <= FieldKind::hij; }
  bool is_spatial_potential() const { return kind == FieldKind::Ai; }
  bool differentiated() const { return deriv[0] + deriv[1] + deriv[2] + deriv[3] > 0; }

  std::uint64_t packed() const;
  static FieldSymbol unpack(std::uint64_t key);
  std::string to_string() const;
};

using FieldProduct = boost::container::small_vector<std::uint64_t, 6>;  // sorted packed symbols

/// Exponents of hbar, c, m, e.
struct Constants {
  std::array<std::int8_t, 4> exp{};
  static Constants of(int hbar, int c, int m, int e) {
    return Constants{{static_cast<std::int8_t>(hbar), static_cast<std::int8_t>(c),
                      static_cast<std::int8_t>(m), static_cast<std::int8_t>(e)}};
  }
  Constants operator*(const Constants& o) const;
  auto operator<=>(const Constants&) const = default;
  std::string to_string() const;
};

struct TermKey {
  Constants constants;
  FieldProduct fields;
  std::array<std::uint8_t, 3> derivs{};  // d_1, d_2, d_3 acting to the right
  std::uint8_t matrix = 0;               // Clifford basis mask

  bool operator==(const TermKey& o) const;
  bool operator<(const TermKey& o) const;
  std::size_t hash() const;
};

struct SymbolicTerm {
  Coeff coeff;
  TermKey key;

  int grade_h() const;
  /// Order in v/c relative to the rest energy: each explicit 1/c counts one,
  /// each spatial vector potential A_i counts -1 (so that eA_i/c ~ p), and the
  /// result is shifted by +2 so that mc^2 has grade 0, p^2/2m grade 2.
  int grade_v() const;
  bool has_derivative_of_metric() const;
  bool has_time_derivative() const;
  bool has_potential() const;
  std::string to_string() const;
};

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Truncation applied by sym_mul. Terms with grade_h > max_h or
/// grade_v > max_v are discarded. Truncating on grade_v is only safe when later
/// operations never multiply by positive powers of c, which holds for the
/// BCH series since every generator carries 1/c.
struct GradeCutoff {
  std::optional<int> max_v;
  int max_h = 1;
};

class SymbolicOperator {
 public:
  SymbolicOperator() = default;

  static SymbolicOperator scalar(Coeff c, Constants k = {});
  static SymbolicOperator field(FieldSymbol f);
  static SymbolicOperator partial(int axis);  // right-acting d_axis, axis in 1..3
  static SymbolicOperator matrix(unsigned mask, Coeff c = Coeff{1});
  static SymbolicOperator from_terms(std::vector<SymbolicTerm> terms);

  const std::vector<SymbolicTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  SymbolicOperator operator+(const SymbolicOperator& o) const;
  SymbolicOperator operator-(const SymbolicOperator& o) const;
  SymbolicOperator operator-() const;
  SymbolicOperator& operator+=(const SymbolicOperator& o);
  SymbolicOperator scaled(Coeff c, Constants k = {}) const;
  bool operator==(const SymbolicOperator& o) const { return terms_ == o.terms_; }

  /// Product with O(h^2) truncation only (no v/c cutoff); used for building inputs.
  SymbolicOperator operator*(const SymbolicOperator& o) const;

  /// Time derivative of the field coefficients (d_t on every field, Leibniz).
  SymbolicOperator time_derivative() const;
  /// Formal adjoint: fields real, d^dagger = -d, Gamma^dagger from the Clifford table.
  SymbolicOperator adjoint() const;

  template <class Pred>
  SymbolicOperator filter(Pred&& keep) const {
    SymbolicOperator out;
    for (const auto& t : terms_)
      if (keep(t)) out.terms_.push_back(t);
    return out;
  }

  std::string to_string() const;

 private:
  friend SymbolicOperator multiply(const SymbolicOperator&, const SymbolicOperator&,
                                   std::optional<int>, int);
  std::vector<SymbolicTerm> terms_;  // sorted by key, no zero coefficients
};

inline bool operator==(const SymbolicTerm& a, const SymbolicTerm& b) {
  return a.coeff == b.coeff && a.key == b.key;
}

/// Product with the Leibniz rewrite, Clifford table and grade truncation.
/// Throws ConfigurationError if the v/c cutoff is not set.
SymbolicOperator sym_mul(const SymbolicOperator& a, const SymbolicOperator& b,
                         const GradeCutoff& cutoff);
SymbolicOperator sym_commutator(const SymbolicOperator& a, const SymbolicOperator& b,
                                const GradeCutoff& cutoff);

struct EvenOddParts {
  SymbolicOperator even;
  SymbolicOperator odd;
};

EvenOddParts even_odd_split(const SymbolicOperator& h);

/// e^{iS}(H - i hbar d_t)e^{-iS} to `depth` nested commutators, including the
/// -hbar (S' + (i/2)[S,S'] - ...) series from the time dependence of S.
SymbolicOperator bch_transform(const SymbolicOperator& h, const SymbolicOperator& s, int depth,
                               const GradeCutoff& cutoff);

/// S = -i gamma^0 O / (2 m c^2)
SymbolicOperator fw_generator(const SymbolicOperator& odd);

class VerificationFailure : public std::runtime_error {
 public:
  VerificationFailure(const std::string& what, SymbolicOperator offending)
      : std::runtime_error(what), offending_(std::move(offending)) {}
  const SymbolicOperator& offending() const { return offending_; }

 private:
  SymbolicOperator offending_;
};

struct FwResult {
  SymbolicOperator even;          // reduced Hamiltonian
  SymbolicOperator residual_odd;  // odd terms that survived (all grade_v >= 5)
  std::array<std::size_t, 3> step_sizes{};
};

/// Three successive FW steps U, U', U''. Throws VerificationFailure if an odd
/// term of grade_v < 5 survives.
FwResult fw_reduce_full(const SymbolicOperator& h, int target_v_order);
SymbolicOperator fw_reduce(const SymbolicOperator& h, int target_v_order);

// ---------------------------------------------------------------------------
// Building blocks

/// Exact expansion of a named Clifford generator over the 16-element basis.
SymbolicOperator gamma0();
SymbolicOperator alpha(int i);
SymbolicOperator sigma_big(int k);

/// D_j = d_j - (i e / hbar c) A_j (lower index); D^j = -D_j.
SymbolicOperator covariant_lower(int j);
SymbolicOperator laplacian();  // sum_j d_j d_j
SymbolicOperator trace_h();    // eta^{mu nu} h_{mu nu} = h00 - sum_i h_ii
SymbolicOperator derivative_of(const SymbolicOperator& fields_only, int axis);

SymbolicOperator electric_field(int i);     // E_i = -d_i A0 - (1/c) d_t A^i, A^i = -A_i
SymbolicOperator magnetic_field(int k);     // B^k = eps^{kij} d_i A_j
SymbolicOperator field_strength(int i, int k);  // F_ik = d_i A_k - d_k A_i

struct HamiltonianOptions {
  bool gravity = true;
  bool electromagnetism = true;
};

/// H = m c^2 gamma^0 + E + O with the even and odd parts of the
/// charge-normalized Dirac Hamiltonian to first order in h.
SymbolicOperator dirac_hamiltonian(const HamiltonianOptions& opt);
SymbolicOperator even_part_input(const HamiltonianOptions& opt);
SymbolicOperator odd_part_input(const HamiltonianOptions& opt);

/// Restrict to the large component: gamma^0 -> 1, Sigma_k -> sigma_k, odd tags dropped.
/// The result uses mask 0 for the identity and the Sigma_k masks for sigma_k.
SymbolicOperator project_large_component(const SymbolicOperator& op);

/// Subsectors used for matching against displayed Hamiltonians.
SymbolicOperator sector(const SymbolicOperator& op, int grade_h, bool allow_metric_derivatives,
                        bool allow_potentials, std::optional<int> max_v = std::nullopt);

// ---------------------------------------------------------------------------
// Reference Hamiltonians written from the displayed formulas

/// Upper-block gravitational coupling in the EM-free limit:
/// (mc^2/2) h^00 - (1/8m){h^00, p^2} + (c/2){h^0i, p_i} - (1/4m){h^ij, p_i p_j},
/// with p^i = -i hbar d_i and covariant index contraction.
SymbolicOperator boson_fermion_gravity_coupling();
/// gamma^0 [ -(hbar^2/2m)(1+h00) D^2 - (hbar e/2mc)(1+h00) B.Sigma
///           - (hbar^2/2m) h_ij D^i D^j + (hbar e/4mc) eps^{ijl} h_jk F_i^k Sigma_l ],
/// the part of gamma^0 O^2/2mc^2 without derivatives of h (F_i^k = -F_ik).
SymbolicOperator odd_square_reference();
/// gamma^0 O^2 / 2mc^2 computed from the input odd part.
SymbolicOperator odd_square_block(const HamiltonianOptions& opt = {});

/// Free kinetic tower mc^2 + p^2/2m - p^4/8m^3c^2 on the large component.
SymbolicOperator free_kinetic_tower();

// ---------------------------------------------------------------------------
// Reports

struct TermMatch {
  std::vector<std::string> matched;
  std::vector<std::string> missing;     // in the reference, not in the result
  std::vector<std::string> unexpected;  // in the result, not in the reference
  bool pass() const { return missing.empty() && unexpected.empty(); }
};

TermMatch compare_terms(const SymbolicOperator& result, const SymbolicOperator& reference);

struct ChargeReport {
  bool pass = false;
  SymbolicOperator residue;            // T^{-dagger} M T^{-1} - 1 at O(h)
  SymbolicOperator literal_residue;    // T^dagger M T - 1 at O(h), for reference
};

struct ChargeOptions {
  bool h00 = true;
  bool h0i = true;
  bool hij = true;
};

ChargeReport charge_transform_check(const ChargeOptions& opt = {});

}  // namespace gravdec::fwsym
