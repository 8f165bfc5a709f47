#include "cuntzlab/abgroups.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "cuntzlab/errors.hpp"
#include "doctest.h"

using namespace cuntzlab;

namespace {

Matrix mk(std::size_t rows, std::size_t cols, std::vector<long long> entries) {
  REQUIRE(entries.size() == rows * cols);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = entries[r * cols + c];
  return m;
}

// Independent determinant oracle: Laplace expansion along the first row.
Int naive_det(const Matrix& m) {
  REQUIRE(m.rows() == m.cols());
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  if (n == 1) return m.at(0, 0);
  Int acc = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (m.at(0, c) == 0) continue;
    Matrix sub(n - 1, n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t cc = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == c) continue;
        sub.at(r - 1, cc++) = m.at(r, k);
      }
    }
    const Int term = m.at(0, c) * naive_det(sub);
    acc += (c % 2 == 0) ? term : Int(-term);
  }
  return acc;
}

// gcd of all k x k minors (0 if every minor vanishes).
Int gcd_of_minors(const Matrix& m, std::size_t k) {
  std::vector<std::size_t> rows(k), cols(k);
  std::iota(rows.begin(), rows.end(), 0);
  Int g = 0;
  auto next_combo = [](std::vector<std::size_t>& idx, std::size_t bound) {
    const std::size_t kk = idx.size();
    std::size_t i = kk;
    while (i > 0) {
      --i;
      if (idx[i] + (kk - i) < bound + 0) {
        ++idx[i];
        for (std::size_t j = i + 1; j < kk; ++j) idx[j] = idx[j - 1] + 1;
        return true;
      }
    }
    return false;
  };
  do {
    std::iota(cols.begin(), cols.end(), 0);
    do {
      Matrix sub(k, k);
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c)
          sub.at(r, c) = m.at(rows[r], cols[c]);
      g = boost::multiprecision::gcd(g, naive_det(sub));
    } while (next_combo(cols, m.cols()));
  } while (next_combo(rows, m.rows()));
  return g < 0 ? Int(-g) : g;
}

struct Lcg {
  unsigned long long state;
  unsigned long long next() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 33;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

// ---- Brute-force subgroup oracle ------------------------------------------
// Elements of Z/m1 + ... + Z/mk are integer tuples; the multiset of element
// orders of a finite abelian group determines it up to isomorphism.

using Tuple = std::vector<long long>;

std::set<Tuple> closure(const std::vector<long long>& mods,
                        const std::vector<Tuple>& gens) {
  const Tuple zero(mods.size(), 0);
  std::set<Tuple> seen{zero};
  std::vector<Tuple> frontier{zero};
  while (!frontier.empty()) {
    std::vector<Tuple> next;
    for (const Tuple& x : frontier)
      for (const Tuple& g : gens) {
        Tuple y(mods.size());
        for (std::size_t i = 0; i < mods.size(); ++i)
          y[i] = ((x[i] + g[i]) % mods[i] + mods[i]) % mods[i];
        if (seen.insert(y).second) next.push_back(y);
      }
    frontier = std::move(next);
  }
  return seen;
}

long long element_order(const std::vector<long long>& mods, const Tuple& x) {
  long long o = 1;
  for (std::size_t i = 0; i < mods.size(); ++i) {
    const long long d = mods[i] / std::gcd(mods[i], x[i] % mods[i]);
    o = std::lcm(o, d);
  }
  return o;
}

std::multiset<long long> order_multiset(const std::vector<long long>& mods,
                                        const std::set<Tuple>& elems) {
  std::multiset<long long> out;
  for (const Tuple& x : elems) out.insert(element_order(mods, x));
  return out;
}

std::multiset<long long> group_order_multiset(const FgAbGroup& g) {
  REQUIRE(g.is_finite());
  std::vector<long long> mods;
  for (const Int& d : g.invariant_factors())
    mods.push_back(d.convert_to<long long>());
  std::set<Tuple> all;
  Tuple cur(mods.size(), 0);
  while (true) {
    all.insert(cur);
    std::size_t i = 0;
    while (i < mods.size() && cur[i] + 1 == mods[i]) cur[i++] = 0;
    if (i == mods.size()) break;
    ++cur[i];
  }
  return order_multiset(mods, all);
}

FgAbGroup brute_image(const std::vector<long long>& mods, const Matrix& m) {
  std::vector<Tuple> gens;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    Tuple g(mods.size());
    for (std::size_t r = 0; r < mods.size(); ++r)
      g[r] = m.at(r, c).convert_to<long long>();
    gens.push_back(g);
  }
  const std::set<Tuple> sub = closure(mods, gens);
  // Recover the abstract type from the order multiset by searching over
  // candidate invariant-factor chains of the right total order.
  const std::multiset<long long> target = order_multiset(mods, sub);
  const long long n = static_cast<long long>(sub.size());
  std::vector<std::vector<Int>> stack{{}};
  while (!stack.empty()) {
    std::vector<Int> chain = stack.back();
    stack.pop_back();
    long long prod = 1;
    for (const Int& d : chain) prod *= d.convert_to<long long>();
    if (prod == n) {
      const FgAbGroup cand(0, chain);
      if (group_order_multiset(cand) == target) return cand;
      continue;
    }
    const long long last = chain.empty() ? 2 : chain.back().convert_to<long long>();
    for (long long d = last; prod * d <= n; ++d)
      if (n % (prod * d) == 0 && (chain.empty() || d % last == 0)) {
        auto ext = chain;
        ext.push_back(d);
        stack.push_back(ext);
      }
  }
  REQUIRE(n == 1);
  return FgAbGroup();
}

GroupMorphism endo(const FgAbGroup& g, std::vector<long long> entries) {
  return GroupMorphism(g, g, mk(g.generator_count(), g.generator_count(),
                                std::move(entries)));
}

}  // namespace

TEST_CASE("matrix product and determinant") {
  const Matrix a = mk(2, 3, {1, 2, 3, 4, 5, 6});
  const Matrix b = mk(3, 2, {7, 8, 9, 10, 11, 12});
  CHECK(mat_mul(a, b) == mk(2, 2, {58, 64, 139, 154}));
  CHECK_THROWS_AS(mat_mul(a, a), InvalidParams);

  CHECK(determinant(Matrix::identity(3)) == 1);
  CHECK(determinant(mk(2, 2, {2, 1, 1, 2})) == 3);
  CHECK(determinant(mk(3, 3, {0, 1, 0, 1, 0, 0, 0, 0, 1})) == -1);
  CHECK(determinant(mk(2, 2, {2, 4, 1, 2})) == 0);
  CHECK_THROWS_AS(determinant(a), InvalidParams);

  Lcg rng{0xabcdef01ULL};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    Matrix m(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        m.at(r, c) = static_cast<long long>(rng.below(9)) - 4;
    CHECK(determinant(m) == naive_det(m));
  }
}

TEST_CASE("smith normal form: frozen shapes") {
  SUBCASE("identity is fixed") {
    const SnfResult s = smith_normal_form(Matrix::identity(3));
    CHECK(s.d == Matrix::identity(3));
  }
  SUBCASE("diag(2,3) has invariant factors 1,6") {
    const SnfResult s = smith_normal_form(mk(2, 2, {2, 0, 0, 3}));
    CHECK(s.d == mk(2, 2, {1, 0, 0, 6}));
  }
  SUBCASE("zero matrix is fixed") {
    const SnfResult s = smith_normal_form(Matrix(2, 3));
    CHECK(s.d == Matrix(2, 3));
  }
  SUBCASE("rectangular with torsion") {
    const SnfResult s = smith_normal_form(mk(2, 3, {2, 4, 4, -6, 6, 12}));
    CHECK(s.d == mk(2, 3, {2, 0, 0, 0, 6, 0}));
  }
}

TEST_CASE("smith normal form agrees with the determinantal-divisor oracle") {
  Lcg rng{0x5eed00abULL};
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t rows = 1 + rng.below(4);
    const std::size_t cols = 1 + rng.below(4);
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        m.at(r, c) = static_cast<long long>(rng.below(9)) - 4;

    const SnfResult s = smith_normal_form(m);
    CAPTURE(trial);

    // Exact factorization with unimodular transforms.
    CHECK(mat_mul(mat_mul(s.u, m), s.v) == s.d);
    const Int du = naive_det(s.u), dv = naive_det(s.v);
    CHECK((du == 1 || du == -1));
    CHECK((dv == 1 || dv == -1));

    // Diagonal, non-negative, divisibility chain.
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (r != c) CHECK(s.d.at(r, c) == 0);
    const std::size_t rank = std::min(rows, cols);
    for (std::size_t i = 0; i < rank; ++i) {
      CHECK(s.d.at(i, i) >= 0);
      if (i > 0 && s.d.at(i - 1, i - 1) != 0 && s.d.at(i, i) != 0)
        CHECK(s.d.at(i, i) % s.d.at(i - 1, i - 1) == 0);
      if (i > 0 && s.d.at(i - 1, i - 1) == 0) CHECK(s.d.at(i, i) == 0);
    }

    // d_1 * ... * d_k equals the gcd of all k x k minors.
    Int prod = 1;
    for (std::size_t k = 1; k <= rank; ++k) {
      prod *= s.d.at(k - 1, k - 1);
      CHECK(prod == gcd_of_minors(m, k));
    }
  }
}

TEST_CASE("canonical decomposition of finitely generated groups") {
  CHECK(FgAbGroup().is_trivial());
  CHECK(FgAbGroup().str() == "0");
  CHECK(FgAbGroup(1, {}).str() == "Z");
  CHECK(FgAbGroup(2, {Int(2), Int(6)}).str() == "Z^2 + Z/2 + Z/6");
  CHECK(FgAbGroup(0, {Int(5)}).order() == 5);
  CHECK(FgAbGroup(0, {Int(2), Int(4)}).order() == 8);
  CHECK_THROWS_AS(FgAbGroup(1, {}).order(), InvalidParams);

  CHECK_THROWS_AS(FgAbGroup(0, {Int(1)}), InvalidParams);
  CHECK_THROWS_AS(FgAbGroup(0, {Int(2), Int(3)}), InvalidParams);

  CHECK(FgAbGroup::from_diagonal(0, {Int(2), Int(3)}) ==
        FgAbGroup(0, {Int(6)}));
  CHECK(FgAbGroup::from_diagonal(0, {Int(4), Int(6)}) ==
        FgAbGroup(0, {Int(2), Int(12)}));
  CHECK(FgAbGroup::from_diagonal(0, {Int(0), Int(1), Int(-5), Int(0)}) ==
        FgAbGroup(2, {Int(5)}));
  CHECK(FgAbGroup::from_diagonal(0, {Int(2), Int(2), Int(3)}) ==
        FgAbGroup(0, {Int(2), Int(6)}));
  CHECK(FgAbGroup::from_diagonal(1, {}) == FgAbGroup(1, {}));
  CHECK(FgAbGroup::cyclic(Int(1)).is_trivial());
  CHECK(FgAbGroup::cyclic(Int(12)) == FgAbGroup(0, {Int(12)}));
  CHECK_THROWS_AS(FgAbGroup::cyclic(Int(0)), InvalidParams);

  // from_diagonal output always satisfies the constructor invariants and
  // preserves the group order.
  Lcg rng{0x0fab1234ULL};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Int> diag;
    Int order = 1;
    const std::size_t k = 1 + rng.below(4);
    for (std::size_t i = 0; i < k; ++i) {
      const Int d = static_cast<long long>(1 + rng.below(12));
      diag.push_back(d);
      order *= d;
    }
    const FgAbGroup g = FgAbGroup::from_diagonal(0, diag);
    CHECK(g.order() == order);
    CHECK(FgAbGroup(g.free_rank(), g.invariant_factors()) == g);
  }
}

TEST_CASE("morphism construction enforces torsion relations") {
  const FgAbGroup z6 = FgAbGroup::cyclic(Int(6));
  const FgAbGroup z4 = FgAbGroup::cyclic(Int(4));
  // 6 * 1 is not 0 mod 4, so the generator of Z/6 cannot map to 1 in Z/4 ...
  CHECK_THROWS_AS(GroupMorphism(z6, z4, mk(1, 1, {1})), InvalidParams);
  // ... but 6 * 2 = 12 = 0 mod 4 is fine.
  CHECK_NOTHROW(GroupMorphism(z6, z4, mk(1, 1, {2})));
  // A torsion generator cannot hit a free generator.
  CHECK_THROWS_AS(GroupMorphism(FgAbGroup::cyclic(Int(2)), FgAbGroup(1, {}),
                                mk(1, 1, {1})),
                  InvalidParams);
  CHECK_NOTHROW(GroupMorphism(FgAbGroup(1, {}), FgAbGroup::cyclic(Int(2)),
                              mk(1, 1, {1})));
  CHECK_THROWS_AS(GroupMorphism(z6, z6, mk(1, 2, {1, 0})), InvalidParams);
  CHECK_NOTHROW(GroupMorphism::cyclic_mult(Int(12), Int(7)));
  CHECK_NOTHROW(GroupMorphism::cyclic_mult(Int(1), Int(3)));
}

TEST_CASE("image subgroup matches brute-force closure") {
  SUBCASE("frozen: doubling inside Z/6 gives Z/3") {
    CHECK(image_subgroup(FgAbGroup::cyclic(Int(6)), mk(1, 1, {2})) ==
          FgAbGroup::cyclic(Int(3)));
  }
  SUBCASE("frozen: diagonal of Z/2 + Z/2 is one copy of Z/2") {
    CHECK(image_subgroup(FgAbGroup(0, {Int(2), Int(2)}), mk(2, 1, {1, 1})) ==
          FgAbGroup::cyclic(Int(2)));
  }
  SUBCASE("frozen: (2,0) and (0,2) inside Z/4 + Z/4") {
    CHECK(image_subgroup(FgAbGroup(0, {Int(4), Int(4)}),
                         mk(2, 2, {2, 0, 0, 2})) ==
          FgAbGroup(0, {Int(2), Int(2)}));
  }
  SUBCASE("empty generator list gives the trivial subgroup") {
    CHECK(image_subgroup(FgAbGroup::cyclic(Int(6)), Matrix(1, 0)).is_trivial());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(image_subgroup(FgAbGroup(1, {}), mk(1, 1, {1})),
                    InvalidParams);
    CHECK_THROWS_AS(image_subgroup(FgAbGroup::cyclic(Int(6)), mk(2, 1, {1, 0})),
                    InvalidParams);
  }
  SUBCASE("randomized against the closure oracle") {
    const std::vector<std::vector<long long>> shapes = {
        {6}, {8}, {9}, {2, 4}, {2, 2}, {3, 9}, {2, 2, 4}, {2, 6}};
    Lcg rng{0xc1051234ULL};
    for (int trial = 0; trial < 80; ++trial) {
      const auto& mods = shapes[rng.below(shapes.size())];
      std::vector<Int> invs;
      for (long long m : mods) invs.push_back(m);
      const FgAbGroup g(0, invs);
      const std::size_t gens = rng.below(4);
      Matrix m(mods.size(), gens);
      for (std::size_t r = 0; r < mods.size(); ++r)
        for (std::size_t c = 0; c < gens; ++c)
          m.at(r, c) = static_cast<long long>(rng.below(
              static_cast<std::size_t>(mods[r])));
      CAPTURE(trial);
      CHECK(image_subgroup(g, m) == brute_image(mods, m));
    }
  }
}

TEST_CASE("colimits of endomorphism towers over a finite group") {
  const FgAbGroup z6 = FgAbGroup::cyclic(Int(6));
  CHECK(colim_finite(z6, GroupMorphism::cyclic_mult(Int(6), Int(2))) ==
        FgAbGroup::cyclic(Int(3)));
  CHECK(colim_finite(z6, GroupMorphism::cyclic_mult(Int(6), Int(3))) ==
        FgAbGroup::cyclic(Int(2)));
  CHECK(colim_finite(FgAbGroup::cyclic(Int(5)),
                     GroupMorphism::cyclic_mult(Int(5), Int(1))) ==
        FgAbGroup::cyclic(Int(5)));
  CHECK(colim_finite(FgAbGroup::cyclic(Int(12)),
                     GroupMorphism::cyclic_mult(Int(12), Int(2))) ==
        FgAbGroup::cyclic(Int(3)));
  CHECK(colim_finite(FgAbGroup::cyclic(Int(15)),
                     GroupMorphism::cyclic_mult(Int(15), Int(3))) ==
        FgAbGroup::cyclic(Int(5)));
  CHECK(colim_finite(FgAbGroup::cyclic(Int(2)),
                     GroupMorphism::cyclic_mult(Int(2), Int(2)))
            .is_trivial());

  const FgAbGroup klein(0, {Int(2), Int(2)});
  CHECK(colim_finite(klein, endo(klein, {0, 1, 1, 0})) == klein);

  const FgAbGroup z2z4(0, {Int(2), Int(4)});
  // e1 -> e2^2, e2 -> e1: the whole tower eventually dies.
  CHECK(colim_finite(z2z4, endo(z2z4, {0, 1, 2, 0})).is_trivial());
  // e1 -> e1, e2 -> e2^2: stabilizes on the copy of Z/2 spanned by e1.
  CHECK(colim_finite(z2z4, endo(z2z4, {1, 0, 0, 2})) ==
        FgAbGroup::cyclic(Int(2)));

  SUBCASE("errors") {
    CHECK_THROWS_AS(
        colim_finite(FgAbGroup(1, {}),
                     GroupMorphism(FgAbGroup(1, {}), FgAbGroup(1, {}),
                                   mk(1, 1, {1}))),
        InvalidParams);
    CHECK_THROWS_AS(colim_finite(z6, GroupMorphism::cyclic_mult(Int(4), Int(2))),
                    InvalidParams);
  }

  SUBCASE("cofinality: skipping to every second stage changes nothing") {
    const std::vector<std::pair<FgAbGroup, GroupMorphism>> samples = {
        {z6, GroupMorphism::cyclic_mult(Int(6), Int(2))},
        {FgAbGroup::cyclic(Int(12)), GroupMorphism::cyclic_mult(Int(12), Int(2))},
        {klein, endo(klein, {0, 1, 1, 0})},
        {z2z4, endo(z2z4, {0, 1, 2, 0})},
        {z2z4, endo(z2z4, {1, 0, 0, 2})},
        {FgAbGroup::cyclic(Int(9)), GroupMorphism::cyclic_mult(Int(9), Int(6))},
    };
    for (const auto& [g, phi] : samples) {
      const GroupMorphism sq(g, g, mat_mul(phi.matrix, phi.matrix));
      CHECK(colim_finite(g, phi) == colim_finite(g, sq));
    }
  }
}

TEST_CASE("colimits of rank-one multiplier towers") {
  CHECK(colim_rank_one({Int(1), Int(1), Int(1)}) == LocalizedClass{});
  CHECK(colim_rank_one({Int(8), Int(8), Int(8)}) ==
        LocalizedClass{{Int(2)}});
  CHECK(colim_rank_one({Int(216), Int(216)}) ==
        LocalizedClass{{Int(2), Int(3)}});
  CHECK(colim_rank_one({Int(2), Int(3), Int(1), Int(10)}) ==
        LocalizedClass{{Int(2), Int(3), Int(5)}});
  CHECK(colim_rank_one({}) == LocalizedClass{});
  CHECK_THROWS_AS(colim_rank_one({Int(0)}), InvalidParams);
  CHECK_THROWS_AS(colim_rank_one({Int(-3)}), InvalidParams);
  CHECK_THROWS_AS(colim_rank_one({Int(10007) * Int(10009)}, Int(10)),
                  UnsupportedSystem);
}

TEST_CASE("group class normalization and isomorphism") {
  const GroupClass z3 = FgAbGroup::cyclic(Int(3));
  const GroupClass z5 = FgAbGroup::cyclic(Int(5));
  CHECK(class_iso(z3, z3));
  CHECK_FALSE(class_iso(z5, z3));

  SUBCASE("finite parts merge into one canonical group") {
    FormalSumClass sum;
    sum.parts = {FgAbGroup::cyclic(Int(2)), FgAbGroup::cyclic(Int(3))};
    CHECK(class_iso(sum, FgAbGroup::cyclic(Int(6))));
    CHECK(class_str(sum) == "Z/6");

    FormalSumClass mixed;
    mixed.parts = {FgAbGroup(1, {}), FgAbGroup::cyclic(Int(2))};
    CHECK(class_iso(mixed, FgAbGroup(1, {Int(2)})));
  }

  SUBCASE("an empty localization is the integers") {
    CHECK(class_iso(LocalizedClass{}, FgAbGroup(1, {})));
    FormalSumClass sum;
    sum.parts = {LocalizedClass{}, LocalizedClass{}};
    CHECK(class_iso(sum, FgAbGroup(2, {})));
  }

  SUBCASE("proper localizations compare as a sorted multiset") {
    const LocalizedClass l2{{Int(2)}}, l3{{Int(3)}};
    CHECK_FALSE(class_iso(l2, l3));
    FormalSumClass ab, ba;
    ab.parts = {AtomClass(l2), AtomClass(l3)};
    ba.parts = {AtomClass(l3), AtomClass(l2)};
    CHECK(class_iso(ab, ba));
    FormalSumClass aa;
    aa.parts = {AtomClass(l2), AtomClass(l2)};
    CHECK_FALSE(class_iso(ab, aa));
  }

  SUBCASE("trivial parts vanish and singletons unwrap") {
    FormalSumClass sum;
    sum.parts = {FgAbGroup(), FgAbGroup::cyclic(Int(4))};
    const GroupClass n = class_normalize(sum);
    CHECK(std::holds_alternative<FgAbGroup>(n));
    CHECK(std::get<FgAbGroup>(n) == FgAbGroup::cyclic(Int(4)));
    CHECK(std::holds_alternative<FgAbGroup>(
        class_normalize(FormalSumClass{})));
  }

  SUBCASE("symbolic sums: the index shift that pads a trivial factor") {
    const std::vector<Int> primes = {Int(2), Int(3), Int(5), Int(7)};
    const FormalSumClass a{
        {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, 0, primes}};
    const FormalSumClass shifted{
        {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, -1, primes}};
    CHECK(class_iso(a, shifted));

    const FormalSumClass tail{
        {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, 1, primes}};
    CHECK_THROWS_AS(class_iso(a, tail), UndecidableComparison);

    const FormalSumClass otherSeq{
        {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, 0,
                      {Int(2), Int(3), Int(5)}}};
    CHECK_THROWS_AS(class_iso(a, otherSeq), UndecidableComparison);

    const FormalSumClass localizedRule{
        {}, IndexRule{IndexRule::Kind::LocalizedQSeq, 0, primes}};
    CHECK_FALSE(class_iso(a, localizedRule));

    FormalSumClass noRule;
    noRule.parts = {AtomClass(LocalizedClass{{Int(2)}}),
                    AtomClass(LocalizedClass{{Int(3)}})};
    FormalSumClass withRule = noRule;
    withRule.rule = IndexRule{IndexRule::Kind::LocalizedQSeq, 0, primes};
    CHECK_FALSE(class_iso(noRule, withRule));

    FormalSumClass aWithPart = a;
    aWithPart.parts = {AtomClass(FgAbGroup::cyclic(Int(2)))};
    CHECK_FALSE(class_iso(a, aWithPart));
    CHECK(class_iso(aWithPart, aWithPart));
  }

  SUBCASE("isomorphism is an equivalence relation on decidable classes") {
    FormalSumClass sumZ6;
    sumZ6.parts = {FgAbGroup::cyclic(Int(2)), FgAbGroup::cyclic(Int(3))};
    FormalSumClass locPair;
    locPair.parts = {AtomClass(LocalizedClass{{Int(2)}}),
                     AtomClass(LocalizedClass{})};
    FormalSumClass locPairAlt;
    locPairAlt.parts = {AtomClass(FgAbGroup(1, {})),
                        AtomClass(LocalizedClass{{Int(2)}})};
    const std::vector<GroupClass> battery = {
        FgAbGroup::cyclic(Int(6)), GroupClass(sumZ6),
        FgAbGroup::cyclic(Int(5)), FgAbGroup(1, {}),
        GroupClass(LocalizedClass{}), GroupClass(LocalizedClass{{Int(2)}}),
        GroupClass(locPair), GroupClass(locPairAlt), FgAbGroup()};
    for (const auto& x : battery) CHECK(class_iso(x, x));
    for (const auto& x : battery)
      for (const auto& y : battery) CHECK(class_iso(x, y) == class_iso(y, x));
    for (const auto& x : battery)
      for (const auto& y : battery)
        for (const auto& z : battery)
          if (class_iso(x, y) && class_iso(y, z)) CHECK(class_iso(x, z));
  }
}

TEST_CASE("direct sums of group classes") {
  CHECK(class_iso(class_direct_sum(FgAbGroup::cyclic(Int(2)),
                                   FgAbGroup::cyclic(Int(3))),
                  FgAbGroup::cyclic(Int(6))));

  const GroupClass s =
      class_direct_sum(LocalizedClass{{Int(2)}}, FgAbGroup(1, {}));
  CHECK(class_str(s) == "Z + Z[1/(2)]");

  const std::vector<Int> primes = {Int(2), Int(3), Int(5)};
  const FormalSumClass ruled{
      {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, 0, primes}};
  const GroupClass extended = class_direct_sum(ruled, FgAbGroup::cyclic(Int(2)));
  const auto& ext = std::get<FormalSumClass>(extended);
  CHECK(ext.rule.has_value());
  CHECK(ext.parts.size() == 1);
  CHECK_THROWS_AS(class_direct_sum(ruled, ruled), InvalidParams);
}

TEST_CASE("six-term assembly over the scalar quotient") {
  SUBCASE("trivial ideal leaves the scalars' K-theory") {
    const auto [k0, k1] = six_term_assemble(FgAbGroup(), FgAbGroup());
    CHECK(class_iso(k0, FgAbGroup(1, {})));
    CHECK(class_iso(k1, FgAbGroup()));
    CHECK(class_str(k0) == "Z");
    CHECK(class_str(k1) == "0");
  }
  SUBCASE("a localized ideal gains one free summand in degree zero") {
    const auto [k0, k1] =
        six_term_assemble(LocalizedClass{{Int(2)}}, FgAbGroup::cyclic(Int(3)));
    CHECK(class_str(k0) == "Z + Z[1/(2)]");
    CHECK(class_iso(k1, FgAbGroup::cyclic(Int(3))));
  }
  SUBCASE("degree one passes through unchanged, including symbolic sums") {
    const std::vector<Int> primes = {Int(2), Int(3), Int(5)};
    const FormalSumClass ruled{
        {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, 0, primes}};
    const auto [k0, k1] = six_term_assemble(LocalizedClass{{Int(2)}}, ruled);
    CHECK(class_str(k1) == "sum_{i>=0} Z/p(i)");
    CHECK(class_iso(k1, GroupClass(ruled)));
    CHECK(class_str(k0) == "Z + Z[1/(2)]");
  }
}

TEST_CASE("symbolic sum rendering") {
  const std::vector<Int> primes = {Int(2), Int(3)};
  const FormalSumClass torsion{
      {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, 1, primes}};
  CHECK(class_str(torsion) == "sum_{i>=0} Z/p(i+1)");
  const FormalSumClass localized{
      {AtomClass(FgAbGroup(1, {}))},
      IndexRule{IndexRule::Kind::LocalizedQSeq, 0, primes}};
  CHECK(class_str(localized) == "Z + sum_{i>=0} Z[1/q(i)]");
  const FormalSumClass padded{
      {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, -2, primes}};
  CHECK(class_str(padded) == "sum_{i>=0} Z/p(i)");
}
