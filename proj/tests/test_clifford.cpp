#include <doctest.h>

#include <chrono>
#include <stdexcept>

#include "gravdec/clifford.hpp"

using namespace gravdec::clifford;

namespace {

CliffordElement power_of_i(int p) {
  static constexpr GaussInt k[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return CliffordElement::identity() * k[p % 4];
}

}  // namespace

TEST_CASE("identity suite holds exactly and quickly") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = verify_identity_suite();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& f : rep.failures) MESSAGE(f);
  CHECK(rep.pass);
  // Clifford relation 16, gamma0 Hermiticity and square 2, per-axis 3x5,
  // spatial pairs 9x3, six odd operators x3, [gamma0, Sigma_k] 3
  CHECK(rep.checks == 16 + 2 + 3 * 5 + 9 * 3 + 6 * 3 + 3);
  CHECK(secs < 1.0);
}

TEST_CASE("gamma^0 squared is the identity and gamma^i squared is minus the identity") {
  const auto g0 = basis(Generator::gamma0);
  CHECK(mul(g0, g0) == CliffordElement::identity());
  for (int i = 1; i <= 3; ++i) {
    const auto gi = basis(Generator::gamma_i, i);
    CHECK(mul(gi, gi) == -CliffordElement::identity());
  }
}

TEST_CASE("bad generator index is rejected") {
  CHECK_THROWS_AS(basis(Generator::gamma_i, 4), std::domain_error);
  CHECK_THROWS_AS(basis(Generator::alpha_i, 0), std::domain_error);
  CHECK_THROWS_AS(basis(Generator::sigma_big, -1), std::domain_error);
}

TEST_CASE("product table agrees with explicit matrix products") {
  for (unsigned a = 0; a < kBasisSize; ++a)
    for (unsigned b = 0; b < kBasisSize; ++b) {
      const auto p = multiply_basis(a, b);
      const auto direct = mul(basis_element(a), basis_element(b));
      CHECK(direct == mul(power_of_i(static_cast<unsigned>(p.phase)), basis_element(p.mask)));
      CHECK(p.mask == (a ^ b));
    }
}

TEST_CASE("adjoint signs and parity") {
  for (unsigned m = 0; m < kBasisSize; ++m) {
    const auto e = basis_element(m);
    CHECK(e.adjoint() == e * GaussInt{adjoint_sign(m)});
    const auto g0 = basis(Generator::gamma0);
    const bool commutes = commutator(g0, e).is_zero();
    const bool anticommutes = anticommutator(g0, e).is_zero();
    CHECK(is_even(m) == commutes);
    CHECK(!is_even(m) == anticommutes);
  }
}

TEST_CASE("decompose reconstructs named generators") {
  for (auto g : {Generator::gamma0, Generator::alpha_i, Generator::sigma_big, Generator::pauli}) {
    for (int i = (g == Generator::gamma0 ? 0 : 1); i <= (g == Generator::gamma0 ? 0 : 3); ++i) {
      const auto m = basis(g, i);
      CliffordElement sum = CliffordElement::zero();
      for (const auto& [mask, num] : decompose(m)) sum = sum + basis_element(mask) * num;
      CHECK(sum == m * GaussInt{4});
    }
  }
}
