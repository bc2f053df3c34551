#include "gravdec/fwsym.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "gravdec/clifford.hpp"
#include "gravdec/conventions.hpp"

namespace gravdec::fwsym {

namespace {

constexpr int kUnbounded = 1 << 20;

std::string rat_str(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Coeff i_pow(int p) {
  switch (((p % 4) + 4) % 4) {
    case 0: return Coeff{1};
    case 1: return Coeff::i_unit();
    case 2: return Coeff{-1};
    default: return -Coeff::i_unit();
  }
}

std::int64_t binom(int n, int k) {
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_axis(int axis, int lo) {
  if (axis < lo || axis > 3) throw std::domain_error("axis out of range: " + std::to_string(axis));
}

int count_metric(const FieldProduct& f) {
  int n = 0;
  for (auto k : f) n += FieldSymbol::unpack(k).is_metric() ? 1 : 0;
  return n;
}

int count_spatial_potential(const FieldProduct& f) {
  int n = 0;
  for (auto k : f) n += FieldSymbol::unpack(k).is_spatial_potential() ? 1 : 0;
  return n;
}

int grade_v_of(const Constants& k, const FieldProduct& f) {
  return -k.exp[1] - count_spatial_potential(f) + 2;
}

FieldProduct merge(const FieldProduct& a, const FieldProduct& b) {
  FieldProduct out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

using FieldSum = std::vector<std::pair<std::int64_t, FieldProduct>>;

// d_axis of a product of fields (axis 0 = t).
FieldSum differentiate(const FieldSum& in, int axis) {
  std::map<FieldProduct, std::int64_t> acc;
  for (const auto& [n, prod] : in) {
    for (std::size_t p = 0; p < prod.size(); ++p) {
      if (p > 0 && prod[p] == prod[p - 1]) continue;  // equal factors handled by multiplicity
      const auto mult = static_cast<std::int64_t>(std::count(prod.begin(), prod.end(), prod[p]));
      FieldSymbol f = FieldSymbol::unpack(prod[p]);
      ++f.deriv[axis];
      FieldProduct next = prod;
      next.erase(next.begin() + static_cast<std::ptrdiff_t>(p));
      next.insert(std::upper_bound(next.begin(), next.end(), f.packed()), f.packed());
      acc[next] += n * mult;
    }
  }
  FieldSum out;
  for (auto& [prod, n] : acc)
    if (n != 0) out.emplace_back(n, prod);
  return out;
}

FieldSum multi_derivative(const FieldProduct& f, const std::array<int, 3>& order) {
  FieldSum cur{{1, f}};
  for (int a = 0; a < 3; ++a)
    for (int r = 0; r < order[a]; ++r) cur = differentiate(cur, a + 1);
  return cur;
}

struct KeyHash {
  std::size_t operator()(const TermKey& k) const { return k.hash(); }
};

using Accumulator = std::unordered_map<TermKey, Coeff, KeyHash>;

std::vector<SymbolicTerm> drain(Accumulator& acc) {
  std::vector<SymbolicTerm> out;
  out.reserve(acc.size());
  for (auto& [k, c] : acc)
    if (!c.is_zero()) out.push_back({c, k});
  std::sort(out.begin(), out.end(),
            [](const SymbolicTerm& a, const SymbolicTerm& b) { return a.key < b.key; });
  return out;
}

SymbolicOperator from_clifford(const clifford::CliffordElement& m) {
  SymbolicOperator out;
  for (const auto& [mask, num] : clifford::decompose(m))
    out += SymbolicOperator::matrix(mask, Coeff{Rational{num.re, 4}, Rational{num.im, 4}});
  return out;
}

SymbolicOperator fld(FieldSymbol f) { return SymbolicOperator::field(f); }

SymbolicOperator d_of(FieldSymbol f, int axis) {
  ++f.deriv[axis];
  return fld(f);
}

const Coeff kI = Coeff::i_unit();

}  // namespace

// ---------------------------------------------------------------------------
// Scalars and symbols

std::string Coeff::to_string() const {
  if (im == Rational{0}) return rat_str(re);
  if (re == Rational{0}) return rat_str(im) + "i";
  return "(" + rat_str(re) + (im > Rational{0} ? "+" : "") + rat_str(im) + "i)";
}

FieldSymbol FieldSymbol::h0(int i) {
  check_axis(i, 1);
  return {FieldKind::h0i, static_cast<std::uint8_t>(i)};
}

FieldSymbol FieldSymbol::h(int i, int j) {
  check_axis(i, 1);
  check_axis(j, 1);
  if (i > j) std::swap(i, j);
  return {FieldKind::hij, static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j)};
}

FieldSymbol FieldSymbol::A(int i) {
  check_axis(i, 1);
  return {FieldKind::Ai, static_cast<std::uint8_t>(i)};
}

std::uint64_t FieldSymbol::packed() const {
  return (static_cast<std::uint64_t>(kind) << 48) | (static_cast<std::uint64_t>(i) << 44) |
         (static_cast<std::uint64_t>(j) << 40) | (static_cast<std::uint64_t>(deriv[0]) << 24) |
         (static_cast<std::uint64_t>(deriv[1]) << 16) |
         (static_cast<std::uint64_t>(deriv[2]) << 8) | static_cast<std::uint64_t>(deriv[3]);
}

FieldSymbol FieldSymbol::unpack(std::uint64_t k) {
  FieldSymbol f;
  f.kind = static_cast<FieldKind>((k >> 48) & 0xff);
  f.i = static_cast<std::uint8_t>((k >> 44) & 0xf);
  f.j = static_cast<std::uint8_t>((k >> 40) & 0xf);
  f.deriv = {static_cast<std::uint8_t>((k >> 24) & 0xff), static_cast<std::uint8_t>((k >> 16) & 0xff),
             static_cast<std::uint8_t>((k >> 8) & 0xff), static_cast<std::uint8_t>(k & 0xff)};
  return f;
}

std::string FieldSymbol::to_string() const {
  std::string name;
  switch (kind) {
    case FieldKind::h00: name = "h00"; break;
    case FieldKind::h0i: name = "h0" + std::to_string(i); break;
    case FieldKind::hij: name = "h" + std::to_string(i) + std::to_string(j); break;
    case FieldKind::A0: name = "A0"; break;
    case FieldKind::Ai: name = "A" + std::to_string(i); break;
  }
  if (!differentiated()) return name;
  std::string d;
  static const char* axes[] = {"t", "x", "y", "z"};
  for (int a = 0; a < 4; ++a)
    for (int r = 0; r < deriv[a]; ++r) d += axes[a];
  return "d" + d + "(" + name + ")";
}

Constants Constants::operator*(const Constants& o) const {
  Constants r;
  for (int a = 0; a < 4; ++a) r.exp[a] = static_cast<std::int8_t>(exp[a] + o.exp[a]);
  return r;
}

std::string Constants::to_string() const {
  static const char* names[] = {"hbar", "c", "m", "e"};
  std::string s;
  for (int a = 0; a < 4; ++a) {
    if (exp[a] == 0) continue;
    if (!s.empty()) s += " ";
    s += names[a];
    if (exp[a] != 1) s += "^" + std::to_string(exp[a]);
  }
  return s;
}

bool TermKey::operator==(const TermKey& o) const {
  return matrix == o.matrix && derivs == o.derivs && constants == o.constants && fields == o.fields;
}

bool TermKey::operator<(const TermKey& o) const {
  if (constants != o.constants) return constants < o.constants;
  if (fields != o.fields)
    return std::lexicographical_compare(fields.begin(), fields.end(), o.fields.begin(),
                                        o.fields.end());
  if (derivs != o.derivs) return derivs < o.derivs;
  return matrix < o.matrix;
}

std::size_t TermKey::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  for (auto e : constants.exp) mix(static_cast<std::uint8_t>(e));
  for (auto f : fields) mix(f);
  mix((static_cast<std::uint64_t>(derivs[0]) << 16) | (derivs[1] << 8) | derivs[2]);
  mix(matrix);
  return static_cast<std::size_t>(h);
}

int SymbolicTerm::grade_h() const { return count_metric(key.fields); }
int SymbolicTerm::grade_v() const { return grade_v_of(key.constants, key.fields); }

bool SymbolicTerm::has_derivative_of_metric() const {
  for (auto k : key.fields) {
    const auto f = FieldSymbol::unpack(k);
    if (f.is_metric() && f.differentiated()) return true;
  }
  return false;
}

bool SymbolicTerm::has_time_derivative() const {
  for (auto k : key.fields)
    if (FieldSymbol::unpack(k).deriv[0] > 0) return true;
  return false;
}

bool SymbolicTerm::has_potential() const {
  for (auto k : key.fields) {
    const auto kind = FieldSymbol::unpack(k).kind;
    if (kind == FieldKind::A0 || kind == FieldKind::Ai) return true;
  }
  return false;
}

std::string SymbolicTerm::to_string() const {
  std::string s = coeff.to_string();
  const auto k = key.constants.to_string();
  if (!k.empty()) s += " " + k;
  for (auto f : key.fields) s += " " + FieldSymbol::unpack(f).to_string();
  if (key.derivs != std::array<std::uint8_t, 3>{}) {
    s += " D[" + std::to_string(key.derivs[0]) + "," + std::to_string(key.derivs[1]) + "," +
         std::to_string(key.derivs[2]) + "]";
  }
  if (key.matrix != 0) s += " " + clifford::basis_name(key.matrix);
  return s;
}

// ---------------------------------------------------------------------------
// Operators

SymbolicOperator SymbolicOperator::scalar(Coeff c, Constants k) {
  SymbolicOperator out;
  if (!c.is_zero()) out.terms_.push_back({c, TermKey{k, {}, {}, 0}});
  return out;
}

SymbolicOperator SymbolicOperator::field(FieldSymbol f) {
  SymbolicOperator out;
  out.terms_.push_back({Coeff{1}, TermKey{{}, FieldProduct{f.packed()}, {}, 0}});
  return out;
}

SymbolicOperator SymbolicOperator::partial(int axis) {
  check_axis(axis, 1);
  SymbolicOperator out;
  TermKey k;
  k.derivs[axis - 1] = 1;
  out.terms_.push_back({Coeff{1}, k});
  return out;
}

SymbolicOperator SymbolicOperator::matrix(unsigned mask, Coeff c) {
  if (mask >= clifford::kBasisSize) throw std::domain_error("Clifford mask out of range");
  SymbolicOperator out;
  TermKey k;
  k.matrix = static_cast<std::uint8_t>(mask);
  if (!c.is_zero()) out.terms_.push_back({c, k});
  return out;
}

SymbolicOperator SymbolicOperator::from_terms(std::vector<SymbolicTerm> terms) {
  Accumulator acc;
  for (auto& t : terms) {
    auto [it, inserted] = acc.try_emplace(t.key, t.coeff);
    if (!inserted) it->second = it->second + t.coeff;
  }
  SymbolicOperator out;
  out.terms_ = drain(acc);
  return out;
}

SymbolicOperator SymbolicOperator::operator+(const SymbolicOperator& o) const {
  SymbolicOperator out;
  out.terms_.reserve(terms_.size() + o.terms_.size());
  auto a = terms_.begin();
  auto b = o.terms_.begin();
  while (a != terms_.end() || b != o.terms_.end()) {
    if (b == o.terms_.end() || (a != terms_.end() && a->key < b->key)) {
      out.terms_.push_back(*a++);
    } else if (a == terms_.end() || b->key < a->key) {
      out.terms_.push_back(*b++);
    } else {
      Coeff c = a->coeff + b->coeff;
      if (!c.is_zero()) out.terms_.push_back({c, a->key});
      ++a;
      ++b;
    }
  }
  return out;
}

SymbolicOperator SymbolicOperator::operator-() const {
  SymbolicOperator out = *this;
  for (auto& t : out.terms_) t.coeff = -t.coeff;
  return out;
}

SymbolicOperator SymbolicOperator::operator-(const SymbolicOperator& o) const { return *this + (-o); }

SymbolicOperator& SymbolicOperator::operator+=(const SymbolicOperator& o) {
  *this = *this + o;
  return *this;
}

SymbolicOperator SymbolicOperator::scaled(Coeff c, Constants k) const {
  if (c.is_zero()) return {};
  SymbolicOperator out = *this;
  for (auto& t : out.terms_) {
    t.coeff = t.coeff * c;
    t.key.constants = t.key.constants * k;
  }
  return out;
}

SymbolicOperator multiply(const SymbolicOperator& a, const SymbolicOperator& b,
                          std::optional<int> max_v, int max_h) {
  Accumulator acc;
  for (const auto& ta : a.terms_) {
    const int ha = ta.grade_h();
    const std::array<int, 3> alpha{ta.key.derivs[0], ta.key.derivs[1], ta.key.derivs[2]};
    for (const auto& tb : b.terms_) {
      if (ha + tb.grade_h() > max_h) continue;
      const Constants k = ta.key.constants * tb.key.constants;
      if (max_v) {
        const int nA = count_spatial_potential(ta.key.fields) + count_spatial_potential(tb.key.fields);
        if (-k.exp[1] - nA + 2 > *max_v) continue;
      }
      const auto bp = clifford::multiply_basis(ta.key.matrix, tb.key.matrix);
      const Coeff base = ta.coeff * tb.coeff * i_pow(bp.phase);
      for (int g1 = 0; g1 <= alpha[0]; ++g1)
        for (int g2 = 0; g2 <= alpha[1]; ++g2)
          for (int g3 = 0; g3 <= alpha[2]; ++g3) {
            const std::int64_t w = binom(alpha[0], g1) * binom(alpha[1], g2) * binom(alpha[2], g3);
            const FieldSum dg = multi_derivative(tb.key.fields, {g1, g2, g3});
            for (const auto& [n, prod] : dg) {
              TermKey key;
              key.constants = k;
              key.fields = merge(ta.key.fields, prod);
              key.derivs = {static_cast<std::uint8_t>(alpha[0] - g1 + tb.key.derivs[0]),
                            static_cast<std::uint8_t>(alpha[1] - g2 + tb.key.derivs[1]),
                            static_cast<std::uint8_t>(alpha[2] - g3 + tb.key.derivs[2])};
              key.matrix = static_cast<std::uint8_t>(bp.mask);
              const Coeff c = base * Coeff{w * n};
              auto [it, inserted] = acc.try_emplace(std::move(key), c);
              if (!inserted) it->second = it->second + c;
            }
          }
    }
  }
  SymbolicOperator out;
  out.terms_ = drain(acc);
  return out;
}

SymbolicOperator SymbolicOperator::operator*(const SymbolicOperator& o) const {
  return multiply(*this, o, std::nullopt, 1);
}

SymbolicOperator SymbolicOperator::time_derivative() const {
  std::vector<SymbolicTerm> out;
  for (const auto& t : terms_) {
    for (const auto& [n, prod] : differentiate({{1, t.key.fields}}, 0)) {
      TermKey k = t.key;
      k.fields = prod;
      out.push_back({t.coeff * Coeff{n}, k});
    }
  }
  return from_terms(std::move(out));
}

SymbolicOperator SymbolicOperator::adjoint() const {
  SymbolicOperator out;
  for (const auto& t : terms_) {
    const int order = t.key.derivs[0] + t.key.derivs[1] + t.key.derivs[2];
    const int sign = clifford::adjoint_sign(t.key.matrix) * (order % 2 == 0 ? 1 : -1);
    SymbolicOperator left;
    left.terms_.push_back({t.coeff.conj() * Coeff{sign}, TermKey{t.key.constants, {}, t.key.derivs, 0}});
    SymbolicOperator right;
    right.terms_.push_back({Coeff{1}, TermKey{{}, t.key.fields, {}, t.key.matrix}});
    out += multiply(left, right, std::nullopt, kUnbounded);
  }
  return out;
}

std::string SymbolicOperator::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  for (std::size_t n = 0; n < terms_.size(); ++n) os << (n ? "\n" : "") << terms_[n].to_string();
  return os.str();
}

SymbolicOperator sym_mul(const SymbolicOperator& a, const SymbolicOperator& b,
                         const GradeCutoff& cutoff) {
  if (!cutoff.max_v) throw ConfigurationError("sym_mul requires a v/c grade cutoff");
  return multiply(a, b, cutoff.max_v, cutoff.max_h);
}

SymbolicOperator sym_commutator(const SymbolicOperator& a, const SymbolicOperator& b,
                                const GradeCutoff& cutoff) {
  return sym_mul(a, b, cutoff) - sym_mul(b, a, cutoff);
}

EvenOddParts even_odd_split(const SymbolicOperator& h) {
  return {h.filter([](const SymbolicTerm& t) { return clifford::is_even(t.key.matrix); }),
          h.filter([](const SymbolicTerm& t) { return !clifford::is_even(t.key.matrix); })};
}

SymbolicOperator bch_transform(const SymbolicOperator& h, const SymbolicOperator& s, int depth,
                               const GradeCutoff& cutoff) {
  if (!cutoff.max_v) throw ConfigurationError("bch_transform requires a v/c grade cutoff");
  SymbolicOperator result = h;
  SymbolicOperator x = h;
  for (int n = 1; n <= depth && !x.empty(); ++n) {
    x = sym_commutator(s, x, cutoff).scaled(kI * Coeff{Rational{1, n}});
    result += x;
  }
  // -hbar sum_n i^n/(n+1)! ad_S^n (dS/dt)
  SymbolicOperator y = s.time_derivative();
  const Constants hbar = Constants::of(1, 0, 0, 0);
  for (int n = 0; n <= depth && !y.empty(); ++n) {
    if (n > 0) y = sym_commutator(s, y, cutoff).scaled(kI * Coeff{Rational{1, n + 1}});
    result += y.scaled(Coeff{-1}, hbar).filter([&](const SymbolicTerm& t) {
      return t.grade_v() <= *cutoff.max_v && t.grade_h() <= cutoff.max_h;
    });
  }
  return result;
}

SymbolicOperator fw_generator(const SymbolicOperator& odd) {
  return (gamma0() * odd).scaled(Coeff{Rational{0}, Rational{-1, 2}}, Constants::of(0, -2, -1, 0));
}

FwResult fw_reduce_full(const SymbolicOperator& h, int target_v_order) {
  const GradeCutoff cut{target_v_order, 1};
  FwResult res;
  SymbolicOperator cur = h.filter([&](const SymbolicTerm& t) {
    return t.grade_v() <= target_v_order && t.grade_h() <= 1;
  });
  for (int step = 0; step < 3; ++step) {
    const auto parts = even_odd_split(cur);
    if (parts.odd.empty()) break;
    const SymbolicOperator s = fw_generator(parts.odd);
    cur = bch_transform(cur, s, target_v_order + 3, cut);
    res.step_sizes[static_cast<std::size_t>(step)] = cur.size();
  }
  auto parts = even_odd_split(cur);
  res.even = parts.even;
  res.residual_odd = parts.odd;
  if (!parts.odd.empty()) {
    throw VerificationFailure("odd terms survive three FW steps at grade_v <= " +
                                  std::to_string(target_v_order),
                              parts.odd);
  }
  return res;
}

SymbolicOperator fw_reduce(const SymbolicOperator& h, int target_v_order) {
  return fw_reduce_full(h, target_v_order).even;
}

// ---------------------------------------------------------------------------
// Building blocks

SymbolicOperator gamma0() { return from_clifford(clifford::basis(clifford::Generator::gamma0)); }
SymbolicOperator alpha(int i) { return from_clifford(clifford::basis(clifford::Generator::alpha_i, i)); }
SymbolicOperator sigma_big(int k) {
  return from_clifford(clifford::basis(clifford::Generator::sigma_big, k));
}

SymbolicOperator covariant_lower(int j) {
  return SymbolicOperator::partial(j) + fld(FieldSymbol::A(j)).scaled(-kI, Constants::of(-1, -1, 0, 1));
}

SymbolicOperator laplacian() {
  SymbolicOperator out;
  for (int j = 1; j <= 3; ++j) out += SymbolicOperator::partial(j) * SymbolicOperator::partial(j);
  return out;
}

SymbolicOperator trace_h() {
  SymbolicOperator out = fld(FieldSymbol::h00());
  for (int i = 1; i <= 3; ++i) out = out - fld(FieldSymbol::h(i, i));
  return out;
}

SymbolicOperator derivative_of(const SymbolicOperator& op, int axis) {
  if (axis == 0) return op.time_derivative();
  const auto d = SymbolicOperator::partial(axis);
  return multiply(d, op, std::nullopt, kUnbounded) - multiply(op, d, std::nullopt, kUnbounded);
}

SymbolicOperator electric_field(int i) {
  check_axis(i, 1);
  return -d_of(FieldSymbol::A0(), i) + d_of(FieldSymbol::A(i), 0).scaled(Coeff{1}, Constants::of(0, -1, 0, 0));
}

SymbolicOperator magnetic_field(int k) {
  check_axis(k, 1);
  SymbolicOperator out;
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) {
      const int eps = levi_civita(k, i, j);
      if (eps != 0) out += d_of(FieldSymbol::A(j), i).scaled(Coeff{eps});
    }
  return out;
}

SymbolicOperator field_strength(int i, int k) {
  check_axis(i, 1);
  check_axis(k, 1);
  return d_of(FieldSymbol::A(k), i) - d_of(FieldSymbol::A(i), k);
}

namespace {

SymbolicOperator D_lower(int j, bool em) {
  return em ? covariant_lower(j) : SymbolicOperator::partial(j);
}

}  // namespace

SymbolicOperator even_part_input(const HamiltonianOptions& opt) {
  SymbolicOperator e;
  if (opt.electromagnetism) e += fld(FieldSymbol::A0()).scaled(Coeff{1}, Constants::of(0, 0, 0, 1));
  if (!opt.gravity) return e;
  e += (fld(FieldSymbol::h00()) * gamma0()).scaled(Coeff::frac(1, 2), Constants::of(0, 2, 1, 0));
  const Constants hc = Constants::of(1, 1, 0, 0);
  for (int i = 1; i <= 3; ++i) {
    // i hbar c h_0i D^i with D^i = -D_i
    e += (fld(FieldSymbol::h0(i)) * D_lower(i, opt.electromagnetism)).scaled(-kI, hc);
    // (i hbar c / 4) d_i(h_0^i), h_0^i = -h_0i
    e += d_of(FieldSymbol::h0(i), i).scaled(-kI * Coeff::frac(1, 4), hc);
  }
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j)
      for (int k = 1; k <= 3; ++k) {
        const int eps = levi_civita(i, j, k);
        if (eps == 0) continue;
        e += (d_of(FieldSymbol::h0(j), i) * sigma_big(k)).scaled(Coeff::frac(eps, 4), hc);
      }
  const Constants hb = Constants::of(1, 0, 0, 0);
  e += derivative_of(trace_h(), 0).scaled(-kI * Coeff::frac(3, 8), hb);
  e += d_of(FieldSymbol::h00(), 0).scaled(kI * Coeff::frac(1, 4), hb);
  return e;
}

SymbolicOperator odd_part_input(const HamiltonianOptions& opt) {
  SymbolicOperator o;
  const Constants hc = Constants::of(1, 1, 0, 0);
  const bool em = opt.electromagnetism;
  SymbolicOperator lapse = SymbolicOperator::scalar(Coeff{1});
  if (opt.gravity) lapse += fld(FieldSymbol::h00()).scaled(Coeff::frac(1, 2));
  for (int j = 1; j <= 3; ++j) o += (lapse * D_lower(j, em) * alpha(j)).scaled(-kI, hc);
  if (!opt.gravity) return o;
  const SymbolicOperator shape = trace_h().scaled(Coeff::frac(1, 2)) - fld(FieldSymbol::h00());
  for (int i = 1; i <= 3; ++i) {
    o += (d_of(FieldSymbol::h0(i), 0) * alpha(i)).scaled(kI * Coeff::frac(1, 4), Constants::of(1, 0, 0, 0));
    for (int j = 1; j <= 3; ++j) {
      // (i hbar c/2) h_ij D^j alpha^i with D^j = -D_j
      o += (fld(FieldSymbol::h(i, j)) * D_lower(j, em) * alpha(i)).scaled(-kI * Coeff::frac(1, 2), hc);
    }
    o += (derivative_of(shape, i) * alpha(i)).scaled(kI * Coeff::frac(1, 4), hc);
  }
  return o;
}

SymbolicOperator dirac_hamiltonian(const HamiltonianOptions& opt) {
  return gamma0().scaled(Coeff{1}, Constants::of(0, 2, 1, 0)) + even_part_input(opt) +
         odd_part_input(opt);
}

SymbolicOperator project_large_component(const SymbolicOperator& op) {
  // Upper-left block of each basis element in the Pauli basis, then sigma_k -> Sigma_k.
  static const std::array<std::array<Coeff, 4>, clifford::kBasisSize> upper = [] {
    std::array<std::array<Coeff, 4>, clifford::kBasisSize> t{};
    for (unsigned m = 0; m < clifford::kBasisSize; ++m) {
      const auto e = clifford::basis_element(m);
      auto q = [&](int r, int c) { return Coeff{Rational{e(r, c).re}, Rational{e(r, c).im}}; };
      const Coeff half = Coeff::frac(1, 2);
      t[m][0] = (q(0, 0) + q(1, 1)) * half;
      t[m][3] = (q(0, 0) - q(1, 1)) * half;
      t[m][1] = (q(0, 1) + q(1, 0)) * half;
      t[m][2] = (q(0, 1) - q(1, 0)) * half * kI;
    }
    return t;
  }();
  std::array<SymbolicOperator, 4> pauli{SymbolicOperator::scalar(Coeff{1}), sigma_big(1),
                                        sigma_big(2), sigma_big(3)};
  std::vector<SymbolicTerm> out;
  for (const auto& t : op.terms()) {
    for (int k = 0; k < 4; ++k) {
      const Coeff a = upper[t.key.matrix][static_cast<std::size_t>(k)];
      if (a.is_zero()) continue;
      for (const auto& p : pauli[static_cast<std::size_t>(k)].terms()) {
        TermKey key = t.key;
        key.matrix = p.key.matrix;
        out.push_back({t.coeff * a * p.coeff, key});
      }
    }
  }
  return SymbolicOperator::from_terms(std::move(out));
}

SymbolicOperator sector(const SymbolicOperator& op, int grade_h, bool allow_metric_derivatives,
                        bool allow_potentials, std::optional<int> max_v) {
  return op.filter([&](const SymbolicTerm& t) {
    if (t.grade_h() != grade_h) return false;
    if (!allow_metric_derivatives && t.has_derivative_of_metric()) return false;
    if (!allow_potentials && t.has_potential()) return false;
    if (max_v && t.grade_v() > *max_v) return false;
    return true;
  });
}

// ---------------------------------------------------------------------------
// Reference Hamiltonians

namespace {

SymbolicOperator momentum(int i) {
  return SymbolicOperator::partial(i).scaled(-kI, Constants::of(1, 0, 0, 0));
}

SymbolicOperator anticomm(const SymbolicOperator& a, const SymbolicOperator& b) {
  return a * b + b * a;
}

}  // namespace

SymbolicOperator boson_fermion_gravity_coupling() {
  SymbolicOperator p2;
  for (int i = 1; i <= 3; ++i) p2 += momentum(i) * momentum(i);
  const auto h00 = fld(FieldSymbol::h00());
  SymbolicOperator out = h00.scaled(Coeff::frac(1, 2), Constants::of(0, 2, 1, 0));
  out += anticomm(h00, p2).scaled(Coeff::frac(-1, 8), Constants::of(0, 0, -1, 0));
  for (int i = 1; i <= 3; ++i) {
    out += anticomm(fld(FieldSymbol::h0(i)), momentum(i)).scaled(Coeff::frac(1, 2), Constants::of(0, 1, 0, 0));
    for (int j = 1; j <= 3; ++j) {
      out += anticomm(fld(FieldSymbol::h(i, j)), momentum(i) * momentum(j))
                 .scaled(Coeff::frac(-1, 4), Constants::of(0, 0, -1, 0));
    }
  }
  return out;
}

SymbolicOperator odd_square_reference() {
  const auto lapse = SymbolicOperator::scalar(Coeff{1}) + fld(FieldSymbol::h00());
  SymbolicOperator d2, hdd, bs, fs;
  for (int i = 1; i <= 3; ++i) {
    d2 += covariant_lower(i) * covariant_lower(i);
    bs += magnetic_field(i) * sigma_big(i);
    for (int j = 1; j <= 3; ++j) {
      // D^i D^j = D_i D_j
      hdd += fld(FieldSymbol::h(i, j)) * covariant_lower(i) * covariant_lower(j);
      for (int l = 1; l <= 3; ++l) {
        const int eps = levi_civita(i, j, l);
        if (eps == 0) continue;
        for (int k = 1; k <= 3; ++k)
          fs += (fld(FieldSymbol::h(j, k)) * field_strength(i, k) * sigma_big(l)).scaled(Coeff{-eps});
      }
    }
  }
  const auto kin = Constants::of(2, 0, -1, 0);
  const auto spin = Constants::of(1, -1, -1, 1);
  SymbolicOperator out = (lapse * d2).scaled(Coeff::frac(-1, 2), kin);
  out += (lapse * bs).scaled(Coeff::frac(-1, 2), spin);
  out += hdd.scaled(Coeff::frac(-1, 2), kin);
  out += fs.scaled(Coeff::frac(1, 4), spin);
  return gamma0() * out;
}

SymbolicOperator odd_square_block(const HamiltonianOptions& opt) {
  const auto o = odd_part_input(opt);
  return (gamma0() * o * o).scaled(Coeff::frac(1, 2), Constants::of(0, -2, -1, 0));
}

SymbolicOperator free_kinetic_tower() {
  const auto lap = laplacian();
  SymbolicOperator out = SymbolicOperator::scalar(Coeff{1}, Constants::of(0, 2, 1, 0));
  out += lap.scaled(Coeff::frac(-1, 2), Constants::of(2, 0, -1, 0));
  out += (lap * lap).scaled(Coeff::frac(-1, 8), Constants::of(4, -2, -3, 0));
  return out * gamma0();
}

TermMatch compare_terms(const SymbolicOperator& result, const SymbolicOperator& reference) {
  TermMatch m;
  auto a = result.terms().begin();
  auto b = reference.terms().begin();
  const auto ae = result.terms().end();
  const auto be = reference.terms().end();
  while (a != ae || b != be) {
    if (b == be || (a != ae && a->key < b->key)) {
      m.unexpected.push_back(a++->to_string());
    } else if (a == ae || b->key < a->key) {
      m.missing.push_back(b++->to_string());
    } else {
      if (a->coeff == b->coeff) {
        m.matched.push_back(a->to_string());
      } else {
        m.unexpected.push_back(a->to_string());
        m.missing.push_back(b->to_string());
      }
      ++a;
      ++b;
    }
  }
  return m;
}

ChargeReport charge_transform_check(const ChargeOptions& opt) {
  // T = 1 + X, M = 1 + 2X at O(h); the density psi^dagger M psi in the new
  // variables psi' = T psi is psi'^dagger T^{-dagger} M T^{-1} psi'.
  SymbolicOperator tr;
  if (opt.h00) tr += fld(FieldSymbol::h00());
  if (opt.hij)
    for (int i = 1; i <= 3; ++i) tr = tr - fld(FieldSymbol::h(i, i));
  SymbolicOperator x = tr.scaled(Coeff::frac(-1, 2));
  SymbolicOperator kernel = -tr;
  if (opt.h00) {
    x += fld(FieldSymbol::h00()).scaled(Coeff::frac(-1, 4));
    kernel += fld(FieldSymbol::h00()).scaled(Coeff::frac(-1, 2));
  }
  if (opt.h0i)
    for (int i = 1; i <= 3; ++i) {
      x += (fld(FieldSymbol::h0(i)) * alpha(i)).scaled(Coeff::frac(-1, 4));
      kernel += (fld(FieldSymbol::h0(i)) * alpha(i)).scaled(Coeff::frac(-1, 2));
    }
  const auto one = SymbolicOperator::scalar(Coeff{1});
  const auto t = one + x;
  const auto t_inv = one - x;
  const auto m = one + kernel;
  ChargeReport r;
  r.residue = t_inv.adjoint() * m * t_inv - one;
  r.literal_residue = t.adjoint() * m * t - one;
  r.pass = r.residue.empty();
  return r;
}

}  // namespace gravdec::fwsym
