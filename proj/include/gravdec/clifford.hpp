#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gravdec::clifford {

/// Gaussian integer a + b i. Generators and their finite products live in Z[i],
/// so every identity below is checked without tolerances.
struct GaussInt {
  std::int64_t re = 0;
  std::int64_t im = 0;

  constexpr GaussInt() = default;
  constexpr GaussInt(std::int64_t r, std::int64_t i = 0) : re(r), im(i) {}

  constexpr GaussInt operator+(GaussInt o) const { return {re + o.re, im + o.im}; }
  constexpr GaussInt operator-(GaussInt o) const { return {re - o.re, im - o.im}; }
  constexpr GaussInt operator-() const { return {-re, -im}; }
  constexpr GaussInt operator*(GaussInt o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  constexpr GaussInt conj() const { return {re, -im}; }
  constexpr bool operator==(const GaussInt&) const = default;
  constexpr bool is_zero() const { return re == 0 && im == 0; }
};

inline constexpr GaussInt kI{0, 1};

using Matrix4 = std::array<std::array<GaussInt, 4>, 4>;

class CliffordElement {
 public:
  CliffordElement() = default;
  explicit CliffordElement(const Matrix4& m, std::string label = "composite")
      : entries_(m), label_(std::move(label)) {}

  static CliffordElement zero();
  static CliffordElement identity();

  const Matrix4& entries() const { return entries_; }
  const GaussInt& operator()(int r, int c) const { return entries_[r][c]; }
  GaussInt& operator()(int r, int c) { return entries_[r][c]; }
  const std::string& label() const { return label_; }

  CliffordElement adjoint() const;
  bool is_zero() const;
  bool is_hermitian() const;
  bool is_antihermitian() const;

  CliffordElement operator+(const CliffordElement& o) const;
  CliffordElement operator-(const CliffordElement& o) const;
  CliffordElement operator-() const;
  CliffordElement operator*(GaussInt s) const;
  bool operator==(const CliffordElement& o) const { return entries_ == o.entries_; }

  std::string to_string() const;

 private:
  Matrix4 entries_{};
  std::string label_ = "composite";
};

CliffordElement operator*(GaussInt s, const CliffordElement& a);

enum class Generator { identity, gamma0, gamma_i, alpha_i, sigma_big, pauli };

/// Exact Pauli-representation matrix of a named generator.
/// gamma_i, alpha_i, sigma_big and pauli take an index in {1,2,3}; pauli(k)
/// is sigma_k placed in the large-component (upper-left) block.
/// Throws std::domain_error on a bad index.
CliffordElement basis(Generator g, int index = 0);

CliffordElement mul(const CliffordElement& a, const CliffordElement& b);
CliffordElement commutator(const CliffordElement& a, const CliffordElement& b);
CliffordElement anticommutator(const CliffordElement& a, const CliffordElement& b);

/// The four generators gamma^0..gamma^3. Everything else (alpha, Sigma) is derived.
struct GammaSet {
  std::array<CliffordElement, 4> gamma;
  static GammaSet pauli_representation();
  CliffordElement alpha(int i) const;      // gamma^0 gamma^i
  CliffordElement sigma_big(int k) const;  // (i/2) eps_kij gamma^i gamma^j
};

struct IdentityReport {
  bool pass = true;
  std::vector<std::string> failures;
  int checks = 0;
};

IdentityReport verify_identity_suite();
IdentityReport verify_identity_suite(const GammaSet& gammas);

// ---------------------------------------------------------------------------
// 16-element basis. Element `mask` (bit mu set <=> gamma^mu present) is the
// ordered product gamma^{mu_1} gamma^{mu_2} ... with mu increasing.

inline constexpr unsigned kBasisSize = 16;

CliffordElement basis_element(unsigned mask);

/// Gamma_a Gamma_b = i^phase Gamma_mask (phase in 0..3).
struct BasisProduct {
  unsigned mask = 0;
  int phase = 0;
};

/// Exact table, derived once from the matrices above.
BasisProduct multiply_basis(unsigned a, unsigned b);

/// Gamma_mask^dagger = sign * Gamma_mask.
int adjoint_sign(unsigned mask);

/// Even (commutes with gamma^0) iff the number of spatial generators is even.
bool is_even(unsigned mask);

/// Expansion M = sum_mask (c_mask / 4) Gamma_mask. Returns the nonzero
/// numerators c_mask, which are Gaussian integers for any M over Z[i].
std::vector<std::pair<unsigned, GaussInt>> decompose(const CliffordElement& m);

/// Short display name, e.g. "1", "g0", "a1", "g0g1g2".
std::string basis_name(unsigned mask);

}  // namespace gravdec::clifford
