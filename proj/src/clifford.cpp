#include "gravdec/clifford.hpp"

#include <mutex>
#include <sstream>
#include <stdexcept>

#include "gravdec/conventions.hpp"

namespace gravdec::clifford {

namespace {

using Matrix2 = std::array<std::array<GaussInt, 2>, 2>;

Matrix2 pauli2(int k) {
  switch (k) {
    case 1: return {{{GaussInt{0}, GaussInt{1}}, {GaussInt{1}, GaussInt{0}}}};
    case 2: return {{{GaussInt{0}, GaussInt{0, -1}}, {GaussInt{0, 1}, GaussInt{0}}}};
    case 3: return {{{GaussInt{1}, GaussInt{0}}, {GaussInt{0}, GaussInt{-1}}}};
    default: throw std::domain_error("pauli index must be in {1,2,3}");
  }
}

Matrix4 blocks(const Matrix2& tl, const Matrix2& tr, const Matrix2& bl, const Matrix2& br) {
  Matrix4 m{};
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      m[r][c] = tl[r][c];
      m[r][c + 2] = tr[r][c];
      m[r + 2][c] = bl[r][c];
      m[r + 2][c + 2] = br[r][c];
    }
  }
  return m;
}

Matrix2 scaled(const Matrix2& a, GaussInt s) {
  Matrix2 out{};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out[r][c] = a[r][c] * s;
  return out;
}

const Matrix2 kZero2{};
const Matrix2 kId2{{{GaussInt{1}, GaussInt{0}}, {GaussInt{0}, GaussInt{1}}}};

void check_index(int i) {
  if (i < 1 || i > 3) throw std::domain_error("Clifford index must be in {1,2,3}");
}

std::string fmt(GaussInt z) {
  std::ostringstream os;
  if (z.im == 0) {
    os << z.re;
  } else if (z.re == 0) {
    os << z.im << "i";
  } else {
    os << "(" << z.re << (z.im < 0 ? "" : "+") << z.im << "i)";
  }
  return os.str();
}

}  // namespace

CliffordElement CliffordElement::zero() { return CliffordElement(Matrix4{}, "zero"); }

CliffordElement CliffordElement::identity() {
  Matrix4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1;
  return CliffordElement(m, "identity");
}

CliffordElement CliffordElement::adjoint() const {
  Matrix4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r][c] = entries_[c][r].conj();
  return CliffordElement(m);
}

bool CliffordElement::is_zero() const {
  for (const auto& row : entries_)
    for (const auto& z : row)
      if (!z.is_zero()) return false;
  return true;
}

bool CliffordElement::is_hermitian() const { return adjoint() == *this; }
bool CliffordElement::is_antihermitian() const { return adjoint() == -*this; }

CliffordElement CliffordElement::operator+(const CliffordElement& o) const {
  Matrix4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r][c] = entries_[r][c] + o.entries_[r][c];
  return CliffordElement(m);
}

CliffordElement CliffordElement::operator-(const CliffordElement& o) const {
  return *this + (-o);
}

CliffordElement CliffordElement::operator-() const { return *this * GaussInt{-1}; }

CliffordElement CliffordElement::operator*(GaussInt s) const {
  Matrix4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r][c] = entries_[r][c] * s;
  return CliffordElement(m);
}

CliffordElement operator*(GaussInt s, const CliffordElement& a) { return a * s; }

std::string CliffordElement::to_string() const {
  std::ostringstream os;
  os << label_ << " [";
  for (int r = 0; r < 4; ++r) {
    os << (r ? "; " : "");
    for (int c = 0; c < 4; ++c) os << (c ? " " : "") << fmt(entries_[r][c]);
  }
  os << "]";
  return os.str();
}

CliffordElement basis(Generator g, int index) {
  switch (g) {
    case Generator::identity:
      return CliffordElement::identity();
    case Generator::gamma0:
      return CliffordElement(blocks(kId2, kZero2, kZero2, scaled(kId2, -1)), "gamma0");
    case Generator::gamma_i: {
      check_index(index);
      const auto s = pauli2(index);
      return CliffordElement(blocks(kZero2, s, scaled(s, -1), kZero2),
                             "gamma" + std::to_string(index));
    }
    case Generator::alpha_i: {
      check_index(index);
      const auto s = pauli2(index);
      return CliffordElement(blocks(kZero2, s, s, kZero2), "alpha" + std::to_string(index));
    }
    case Generator::sigma_big: {
      check_index(index);
      const auto s = pauli2(index);
      return CliffordElement(blocks(s, kZero2, kZero2, s), "Sigma" + std::to_string(index));
    }
    case Generator::pauli: {
      check_index(index);
      return CliffordElement(blocks(pauli2(index), kZero2, kZero2, kZero2),
                             "pauli" + std::to_string(index));
    }
  }
  throw std::domain_error("unknown Clifford generator");
}

CliffordElement mul(const CliffordElement& a, const CliffordElement& b) {
  Matrix4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      GaussInt acc;
      for (int k = 0; k < 4; ++k) acc = acc + a(r, k) * b(k, c);
      m[r][c] = acc;
    }
  return CliffordElement(m);
}

CliffordElement commutator(const CliffordElement& a, const CliffordElement& b) {
  return mul(a, b) - mul(b, a);
}

CliffordElement anticommutator(const CliffordElement& a, const CliffordElement& b) {
  return mul(a, b) + mul(b, a);
}

GammaSet GammaSet::pauli_representation() {
  return GammaSet{{basis(Generator::gamma0), basis(Generator::gamma_i, 1),
                   basis(Generator::gamma_i, 2), basis(Generator::gamma_i, 3)}};
}

CliffordElement GammaSet::alpha(int i) const {
  check_index(i);
  return mul(gamma[0], gamma[i]);
}

CliffordElement GammaSet::sigma_big(int k) const {
  check_index(k);
  // (i/2) eps_kij gamma^i gamma^j = i gamma^i gamma^j for the cyclic pair (i,j)
  const int i = k % 3 + 1;
  const int j = i % 3 + 1;
  return mul(gamma[i], gamma[j]) * kI;
}

IdentityReport verify_identity_suite() {
  return verify_identity_suite(GammaSet::pauli_representation());
}

IdentityReport verify_identity_suite(const GammaSet& g) {
  IdentityReport report;
  const auto id = CliffordElement::identity();
  auto check = [&](bool ok, const std::string& what) {
    ++report.checks;
    if (!ok) {
      report.pass = false;
      report.failures.push_back(what);
    }
  };

  // Clifford relation {gamma^mu, gamma^nu} = 2 eta^{mu nu}
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu)
      check(anticommutator(g.gamma[mu], g.gamma[nu]) == id * GaussInt{2 * eta(mu, nu)},
            "{gamma" + std::to_string(mu) + ",gamma" + std::to_string(nu) + "} != 2 eta");

  check(g.gamma[0].is_hermitian(), "gamma0 not Hermitian");
  for (int i = 1; i <= 3; ++i) {
    const auto si = std::to_string(i);
    check(g.gamma[i].is_antihermitian(), "gamma" + si + " not anti-Hermitian");
    check(g.alpha(i).is_hermitian(), "alpha" + si + " not Hermitian");
    check(g.sigma_big(i).is_hermitian(), "Sigma" + si + " not Hermitian");
    check(mul(g.alpha(i), g.alpha(i)) == id, "alpha" + si + "^2 != 1");
    check(mul(g.sigma_big(i), g.sigma_big(i)) == id, "Sigma" + si + "^2 != 1");
  }
  check(mul(g.gamma[0], g.gamma[0]) == id, "gamma0^2 != 1");

  for (int i = 1; i <= 3; ++i) {
    for (int j = 1; j <= 3; ++j) {
      const auto tag = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      check(eta(i, j) == -kronecker(i, j), "eta^ij != -delta^ij " + tag);
      check(anticommutator(g.alpha(i), g.alpha(j)) == id * GaussInt{-2 * eta(i, j)},
            "{alpha^i,alpha^j} != -2 eta^ij " + tag);
      auto rhs = id * GaussInt{-eta(i, j)};
      for (int k = 1; k <= 3; ++k)
        if (const int e = levi_civita(i, j, k); e != 0)
          rhs = rhs + g.sigma_big(k) * (kI * GaussInt{e});
      check(mul(g.alpha(i), g.alpha(j)) == rhs,
            "alpha^i alpha^j != -eta^ij + i eps^ijk Sigma_k " + tag);
    }
  }

  // Odd operators: integer combinations of alpha^i, including the generators themselves.
  const std::vector<std::array<int, 3>> combos = {
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, -2, 3}, {-4, 1, 1}, {2, 5, -7}};
  for (const auto& w : combos) {
    auto odd = CliffordElement::zero();
    for (int i = 1; i <= 3; ++i) odd = odd + g.alpha(i) * GaussInt{w[i - 1]};
    const auto tag = "O=(" + std::to_string(w[0]) + "," + std::to_string(w[1]) + "," +
                     std::to_string(w[2]) + ")";
    check(anticommutator(g.gamma[0], odd).is_zero(), "{gamma0,O} != 0 " + tag);
    check(commutator(mul(g.gamma[0], odd), g.gamma[0]) == odd * GaussInt{-2},
          "[gamma0 O, gamma0] != -2 O " + tag);
    check(commutator(mul(g.gamma[0], odd), odd) == mul(g.gamma[0], mul(odd, odd)) * GaussInt{2},
          "[gamma0 O, O] != 2 gamma0 O^2 " + tag);
  }
  // Even operators commute with gamma0.
  for (int k = 1; k <= 3; ++k)
    check(commutator(g.gamma[0], g.sigma_big(k)).is_zero(),
          "[gamma0,Sigma" + std::to_string(k) + "] != 0");
  return report;
}

// ---------------------------------------------------------------------------

CliffordElement basis_element(unsigned mask) {
  const auto g = GammaSet::pauli_representation();
  auto out = CliffordElement::identity();
  for (int mu = 0; mu < 4; ++mu)
    if (mask & (1u << mu)) out = mul(out, g.gamma[mu]);
  return CliffordElement(out.entries(), basis_name(mask));
}

namespace {

struct Table {
  std::array<std::array<BasisProduct, kBasisSize>, kBasisSize> product{};
  std::array<int, kBasisSize> adjoint{};
};

const Table& table() {
  static const Table t = [] {
    Table out;
    std::array<CliffordElement, kBasisSize> elems;
    for (unsigned m = 0; m < kBasisSize; ++m) elems[m] = basis_element(m);
    const GaussInt phases[4] = {GaussInt{1}, GaussInt{0, 1}, GaussInt{-1}, GaussInt{0, -1}};
    for (unsigned a = 0; a < kBasisSize; ++a) {
      for (unsigned b = 0; b < kBasisSize; ++b) {
        const auto prod = mul(elems[a], elems[b]);
        const unsigned target = a ^ b;  // product of generator subsets
        bool found = false;
        for (int p = 0; p < 4 && !found; ++p) {
          if (prod == elems[target] * phases[p]) {
            out.product[a][b] = {target, p};
            found = true;
          }
        }
        if (!found) throw std::logic_error("Clifford basis product not closed");
      }
      const auto adj = elems[a].adjoint();
      if (adj == elems[a]) {
        out.adjoint[a] = 1;
      } else if (adj == -elems[a]) {
        out.adjoint[a] = -1;
      } else {
        throw std::logic_error("Clifford basis element neither Hermitian nor anti-Hermitian");
      }
    }
    return out;
  }();
  return t;
}

}  // namespace

BasisProduct multiply_basis(unsigned a, unsigned b) { return table().product[a][b]; }

int adjoint_sign(unsigned mask) { return table().adjoint[mask]; }

bool is_even(unsigned mask) {
  const unsigned spatial = mask & 0b1110u;
  return __builtin_popcount(spatial) % 2 == 0;
}

std::vector<std::pair<unsigned, GaussInt>> decompose(const CliffordElement& m) {
  // tr(Gamma_a^{-1} Gamma_b) = 4 delta_ab, Gamma_a^{-1} = i^{-p} Gamma_a when Gamma_a^2 = i^p.
  static constexpr GaussInt kPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  std::vector<std::pair<unsigned, GaussInt>> out;
  for (unsigned a = 0; a < kBasisSize; ++a) {
    const int p = multiply_basis(a, a).phase;
    const CliffordElement inv = basis_element(a) * kPow[(4 - p) % 4];
    const CliffordElement prod = mul(inv, m);
    GaussInt tr{};
    for (int r = 0; r < 4; ++r) tr = tr + prod(r, r);
    if (!tr.is_zero()) out.emplace_back(a, tr);
  }
  return out;
}

std::string basis_name(unsigned mask) {
  if (mask == 0) return "1";
  std::string s;
  for (int mu = 0; mu < 4; ++mu)
    if (mask & (1u << mu)) s += "g" + std::to_string(mu);
  return s;
}

}  // namespace gravdec::clifford
