#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "cuntzlab/errors.hpp"
#include "cuntzlab/unitary.hpp"

namespace cuntzlab {

namespace {

Int mod_reduce(const Int& v, const Int& m) {
  if (m == 0) return v;
  Int r = v % m;
  if (r < 0) r += m;
  return r;
}

// ---------------------------------------------------------------------------
// Finite-table helpers
// ---------------------------------------------------------------------------

std::string table_label(const FiniteCuModel& m, std::size_t x) {
  return x < m.labels.size() ? m.labels[x] : std::to_string(x);
}

// First shape violation of the tables, empty when well-formed.  Axiom and
// ideal routines gate on this so out-of-range entries surface as data errors
// instead of undefined reads.
std::string table_shape_error(const FiniteCuModel& m) {
  const std::size_t n = m.labels.size();
  if (n == 0) return "no elements";
  if (m.zero >= n) return "zero index out of range";
  if (m.unit && *m.unit >= n) return "unit index out of range";
  if (m.add.size() != n || m.leq.size() != n || m.wayBelow.size() != n)
    return "table row counts do not match the element count";
  for (std::size_t x = 0; x < n; ++x) {
    if (m.add[x].size() != n || m.leq[x].size() != n ||
        m.wayBelow[x].size() != n)
      return "table row " + table_label(m, x) + " has the wrong size";
    for (std::size_t y = 0; y < n; ++y)
      if (m.add[x][y] >= n) return "addition table leaves the fragment";
  }
  return {};
}

// x + k * unit, stabilized table iteration.
bool below_unit_multiple(const FiniteCuModel& m, std::size_t x,
                         std::size_t unit) {
  std::size_t z = unit;
  for (std::size_t step = 0; step <= m.labels.size() + 1; ++step) {
    if (m.leq[x][z]) return true;
    const std::size_t next = m.add[z][unit];
    if (next == z) break;
    z = next;
  }
  return false;
}

// Stabilized value of infinity * x for positive x (the iterates increase
// once the order is compatible with addition, so they stop moving).
std::size_t infinite_multiple(const FiniteCuModel& m, std::size_t x) {
  std::size_t z = x;
  for (std::size_t step = 0; step <= m.labels.size() + 1; ++step) {
    const std::size_t next = m.add[z][x];
    if (next == z) return z;
    z = next;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Pair-model helpers
// ---------------------------------------------------------------------------

bool pair_positive(const PairElem& a) { return a.k == 0; }

const PairElem& pair_zero() {
  static const PairElem z{ExtNat(0), Int(0)};
  return z;
}

// ---------------------------------------------------------------------------
// Cokernel presentation of a generator/relation table
// ---------------------------------------------------------------------------

// Presentation of Z^gens modulo the span of the relation columns, in the
// coordinates of the row transform of a normal form: one factor per
// generator row (0 free, 1 collapsed, >= 2 torsion).  reduce() emits the
// canonical coordinates, free entries first and torsion entries in chain
// order, matching the canonical group form.
struct CokerPresentation {
  Matrix u;
  std::vector<Int> factors;
  FgAbGroup group;

  static CokerPresentation from_relations(
      std::size_t gens, const std::vector<std::vector<Int>>& relations) {
    Matrix r(gens, relations.size());
    for (std::size_t c = 0; c < relations.size(); ++c)
      for (std::size_t g = 0; g < gens; ++g) r.at(g, c) = relations[c][g];
    const SnfResult snf = smith_normal_form(r);
    CokerPresentation p;
    p.u = snf.u;
    p.factors.assign(gens, Int(0));
    const std::size_t diag = std::min(snf.d.rows(), snf.d.cols());
    for (std::size_t i = 0; i < diag; ++i) p.factors[i] = snf.d.at(i, i);
    p.group = FgAbGroup::from_diagonal(0, p.factors);
    return p;
  }

  std::vector<Int> reduce(const std::vector<Int>& v) const {
    std::vector<Int> w(factors.size(), Int(0));
    for (std::size_t r = 0; r < u.rows(); ++r)
      for (std::size_t c = 0; c < u.cols(); ++c) w[r] += u.at(r, c) * v[c];
    std::vector<Int> out;
    for (std::size_t r = 0; r < factors.size(); ++r)
      if (factors[r] == 0) out.push_back(w[r]);
    for (std::size_t r = 0; r < factors.size(); ++r)
      if (factors[r] >= 2) out.push_back(mod_reduce(w[r], factors[r]));
    return out;
  }

  // Inverse of a class in reduced coordinates.
  std::vector<Int> negate(const std::vector<Int>& coords) const {
    std::vector<Int> out = coords;
    const std::size_t freeCount = group.free_rank();
    for (std::size_t i = 0; i < freeCount; ++i) out[i] = -out[i];
    const auto& invs = group.invariant_factors();
    for (std::size_t i = 0; i < invs.size(); ++i)
      out[freeCount + i] = mod_reduce(-out[freeCount + i], invs[i]);
    return out;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Pair model operations
// ---------------------------------------------------------------------------

PairElem pair_add(const PairElem& a, const PairElem& b) {
  return PairElem{a.g + b.g, a.k + b.k};
}

bool pair_leq(const PairElem& a, const PairElem& b) {
  return a.g <= b.g && a.k == b.k;
}

bool pair_way_below(const PairElem& a, const PairElem& b) {
  return !a.g.is_infinite() && a.g <= b.g && a.k == b.k;
}

std::vector<PairElem> pair_window(const PairCuModel& m) {
  std::vector<PairElem> out;
  for (Int g(0); g <= m.gMax; ++g)
    for (Int k = -m.kMax; k <= m.kMax; ++k)
      out.push_back(PairElem{ExtNat(g), k});
  for (Int k = -m.kMax; k <= m.kMax; ++k)
    out.push_back(PairElem{ExtNat::infinity(), k});
  return out;
}

std::string pair_str(const PairElem& a) {
  return "(" + a.g.str() + ", " + a.k.str() + ")";
}

std::string model_name(const AbstractCuModel& m) {
  if (const auto* f = std::get_if<FiniteCuModel>(&m)) return f->name;
  return "nbar-z";
}

// ---------------------------------------------------------------------------
// Structural laws
// ---------------------------------------------------------------------------

namespace {

LayeredValidation validate_finite(const FiniteCuModel& m) {
  auto fail = [](std::string d) { return LayeredValidation{false, std::move(d)}; };
  const std::string shape = table_shape_error(m);
  if (!shape.empty()) return fail(shape);
  const std::size_t n = m.labels.size();
  auto L = [&](std::size_t x) { return table_label(m, x); };

  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (m.add[x][y] != m.add[y][x])
        return fail("addition is not commutative at (" + L(x) + ", " + L(y) + ")");
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z)
        if (m.add[m.add[x][y]][z] != m.add[x][m.add[y][z]])
          return fail("addition is not associative at (" + L(x) + ", " + L(y) +
                      ", " + L(z) + ")");
  for (std::size_t x = 0; x < n; ++x)
    if (m.add[x][m.zero] != x)
      return fail("zero is not neutral at " + L(x));

  for (std::size_t x = 0; x < n; ++x)
    if (!m.leq[x][x]) return fail("order is not reflexive at " + L(x));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (x != y && m.leq[x][y] && m.leq[y][x])
        return fail("order is not antisymmetric at (" + L(x) + ", " + L(y) + ")");
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z)
        if (m.leq[x][y] && m.leq[y][z] && !m.leq[x][z])
          return fail("order is not transitive at (" + L(x) + ", " + L(y) +
                      ", " + L(z) + ")");

  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z)
        if (m.leq[x][y] && !m.leq[m.add[x][z]][m.add[y][z]])
          return fail("addition is not order-compatible at (" + L(x) + " <= " +
                      L(y) + ") + " + L(z));

  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (m.wayBelow[x][y] && !m.leq[x][y])
        return fail("way-below is not contained in the order at (" + L(x) +
                    ", " + L(y) + ")");
  for (std::size_t x2 = 0; x2 < n; ++x2)
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t y2 = 0; y2 < n; ++y2)
          if (m.leq[x2][x] && m.wayBelow[x][y] && m.leq[y][y2] &&
              !m.wayBelow[x2][y2])
            return fail("way-below is not auxiliary at " + L(x2) + " <= " +
                        L(x) + " << " + L(y) + " <= " + L(y2));
  return {};
}

LayeredValidation validate_pair(const PairCuModel& m) {
  auto fail = [](std::string d) { return LayeredValidation{false, std::move(d)}; };
  const std::vector<PairElem> w = pair_window(m);
  for (const auto& a : w)
    for (const auto& b : w) {
      if (!(pair_add(a, b) == pair_add(b, a)))
        return fail("addition is not commutative at " + pair_str(a) + ", " +
                    pair_str(b));
      if (pair_way_below(a, b) && !pair_leq(a, b))
        return fail("way-below is not contained in the order at " +
                    pair_str(a) + ", " + pair_str(b));
    }
  for (const auto& a : w) {
    if (!(pair_add(a, pair_zero()) == a))
      return fail("zero is not neutral at " + pair_str(a));
    if (!pair_leq(a, a)) return fail("order is not reflexive at " + pair_str(a));
  }
  for (const auto& a : w)
    for (const auto& b : w)
      for (const auto& c : w) {
        if (!(pair_add(pair_add(a, b), c) == pair_add(a, pair_add(b, c))))
          return fail("addition is not associative");
        if (pair_leq(a, b) && pair_leq(b, c) && !pair_leq(a, c))
          return fail("order is not transitive");
        if (pair_leq(a, b) && !pair_leq(pair_add(a, c), pair_add(b, c)))
          return fail("addition is not order-compatible at " + pair_str(a) +
                      " <= " + pair_str(b) + " plus " + pair_str(c));
      }
  for (const auto& a : w)
    for (const auto& b : w) {
      if (pair_leq(a, b) && pair_leq(b, a) && !(a == b))
        return fail("order is not antisymmetric");
      if (!pair_way_below(a, b)) continue;
      for (const auto& a2 : w)
        for (const auto& b2 : w)
          if (pair_leq(a2, a) && pair_leq(b, b2) && !pair_way_below(a2, b2))
            return fail("way-below is not auxiliary at " + pair_str(a2) +
                        " <= " + pair_str(a) + " << " + pair_str(b) + " <= " +
                        pair_str(b2));
    }
  return {};
}

}  // namespace

LayeredValidation abstract_validate(const AbstractCuModel& m) {
  if (const auto* f = std::get_if<FiniteCuModel>(&m)) return validate_finite(*f);
  return validate_pair(std::get<PairCuModel>(m));
}

// ---------------------------------------------------------------------------
// Axiom checks
// ---------------------------------------------------------------------------

std::string axiom_str(CuAxiom a) {
  switch (a) {
    case CuAxiom::PD:
      return "PD";
    case CuAxiom::PC:
      return "PC";
    case CuAxiom::PWC:
      return "PWC";
    case CuAxiom::PCC:
      return "PCC";
    case CuAxiom::O0:
      return "O0";
    case CuAxiom::O1:
      return "O1";
    case CuAxiom::O2:
      return "O2";
    case CuAxiom::O3:
      return "O3";
    case CuAxiom::O4:
      return "O4";
  }
  return "?";
}

namespace {

AxiomVerdict check_finite(const FiniteCuModel& m, CuAxiom axiom) {
  AxiomVerdict v{axiom, true, ""};
  auto fail = [&](std::string w) {
    v.holds = false;
    v.witness = std::move(w);
    return v;
  };
  const std::string shape = table_shape_error(m);
  if (!shape.empty()) return fail(shape);
  const std::size_t n = m.labels.size();
  auto L = [&](std::size_t x) { return table_label(m, x); };
  auto positive = [&](std::size_t x) { return m.leq[m.zero][x]; };

  switch (axiom) {
    case CuAxiom::PD: {
      std::ostringstream witnesses;
      for (std::size_t x = 0; x < n; ++x) {
        bool found = false;
        for (std::size_t p = 0; p < n && !found; ++p)
          if (positive(m.add[x][p])) {
            witnesses << (x ? "; " : "") << "p_" << L(x) << " = " << L(p);
            found = true;
          }
        if (!found)
          return fail("no p lifts " + L(x) + " above zero");
      }
      v.witness = witnesses.str();
      return v;
    }
    case CuAxiom::PC: {
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
          if (positive(y) && m.leq[x][y] && !positive(m.add[x][y]))
            return fail(L(x) + " + " + L(y) + " = " + L(m.add[x][y]) +
                        " is not positive although " + L(x) + " <= " + L(y) +
                        " >= 0");
      v.witness = "all pairs x <= y >= 0 keep x + y positive";
      return v;
    }
    case CuAxiom::PWC: {
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t z = 0; z < n; ++z)
          if (m.wayBelow[m.add[x][z]][z] && !m.wayBelow[x][m.zero])
            return fail(L(x) + " + " + L(z) + " << " + L(z) + " but " + L(x) +
                        " is not way below zero");
      v.witness = "x + z << z always forces x << 0";
      return v;
    }
    case CuAxiom::PCC: {
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t z = 0; z < n; ++z)
          if (m.wayBelow[z][z] && m.leq[m.add[x][z]][z] && !m.leq[x][m.zero])
            return fail(L(x) + " + " + L(z) + " <= compact " + L(z) + " but " +
                        L(x) + " is not below zero");
      v.witness = "x + z <= z with z compact always forces x <= 0";
      return v;
    }
    case CuAxiom::O0: {
      for (std::size_t x = 0; x < n; ++x)
        if (m.add[x][m.zero] != x)
          return fail("zero is not neutral at " + L(x));
      if (!m.wayBelow[m.zero][m.zero]) return fail("zero is not compact");
      v.witness = "zero is neutral and compact";
      return v;
    }
    case CuAxiom::O1: {
      const LayeredValidation order = validate_finite(m);
      if (!order.ok) return fail(order.detail);
      v.witness =
          "the order is a valid partial order, so increasing sequences "
          "stabilize at their suprema";
      return v;
    }
    case CuAxiom::O2: {
      for (std::size_t x = 0; x < n; ++x)
        if (!m.wayBelow[x][x])
          return fail(L(x) +
                      " is not way below itself, so no rapidly increasing "
                      "sequence in the fragment reaches it");
      v.witness = "every element is its own compact approximation";
      return v;
    }
    case CuAxiom::O3: {
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
          for (std::size_t x2 = 0; x2 < n; ++x2)
            for (std::size_t y2 = 0; y2 < n; ++y2) {
              if (m.leq[x][x2] && m.leq[y][y2] &&
                  !m.leq[m.add[x][y]][m.add[x2][y2]])
                return fail("sums do not preserve <= at " + L(x) + " + " +
                            L(y));
              if (m.wayBelow[x][x2] && m.wayBelow[y][y2] &&
                  !m.wayBelow[m.add[x][y]][m.add[x2][y2]])
                return fail("sums do not preserve << at " + L(x) + " + " +
                            L(y));
            }
      v.witness = "addition preserves the order and way-below";
      return v;
    }
    case CuAxiom::O4: {
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
          for (std::size_t z = 0; z < n; ++z)
            if (m.leq[x][y] && !m.leq[m.add[x][z]][m.add[y][z]])
              return fail("translation by " + L(z) +
                          " does not preserve the supremum of " + L(x) +
                          " <= " + L(y));
      v.witness =
          "addition is monotone, so it commutes with the stabilized suprema";
      return v;
    }
  }
  return fail("unknown axiom");
}

AxiomVerdict check_pair(const PairCuModel& m, CuAxiom axiom) {
  AxiomVerdict v{axiom, true, ""};
  auto fail = [&](std::string w) {
    v.holds = false;
    v.witness = std::move(w);
    return v;
  };
  const std::vector<PairElem> w = pair_window(m);

  switch (axiom) {
    case CuAxiom::PD: {
      for (const auto& a : w) {
        const PairElem p{ExtNat(0), Int(-a.k)};
        if (!pair_positive(pair_add(a, p)))
          return fail("(0, -k) does not lift " + pair_str(a));
      }
      v.witness = "p_(g, k) = (0, -k) lifts every window element above zero";
      return v;
    }
    case CuAxiom::PC: {
      for (const auto& a : w)
        for (const auto& b : w)
          if (pair_positive(b) && pair_leq(a, b) &&
              !pair_positive(pair_add(a, b)))
            return fail("convexity fails at " + pair_str(a) + " <= " +
                        pair_str(b));
      v.witness = "x <= y >= 0 forces k_x = 0, so x + y stays positive";
      return v;
    }
    case CuAxiom::PWC: {
      for (const auto& a : w)
        for (const auto& z : w)
          if (pair_way_below(pair_add(a, z), z) &&
              !pair_way_below(a, pair_zero()))
            return fail("weak cancellation fails at " + pair_str(a) + " + " +
                        pair_str(z));
      v.witness =
          "x + z << z forces a finite first coordinate sum, hence x = (0, 0)";
      return v;
    }
    case CuAxiom::PCC: {
      for (const auto& a : w)
        for (const auto& z : w)
          if (pair_way_below(z, z) && pair_leq(pair_add(a, z), z) &&
              !pair_leq(a, pair_zero()))
            return fail("compact cancellation fails at " + pair_str(a) +
                        " + " + pair_str(z));
      v.witness = "compact z has finite g, so x + z <= z forces x = (0, 0)";
      return v;
    }
    case CuAxiom::O0: {
      for (const auto& a : w)
        if (!(pair_add(a, pair_zero()) == a))
          return fail("zero is not neutral at " + pair_str(a));
      if (!pair_way_below(pair_zero(), pair_zero()))
        return fail("zero is not compact");
      v.witness = "zero is neutral and compact";
      return v;
    }
    case CuAxiom::O1: {
      // Increasing sequences keep their integer coordinate, so the only
      // unbounded chains are (n, k) with n running through the naturals.
      // Their supremum must be (infinity, k): it bounds the chain, every
      // element with another class bounds nothing, and every element with a
      // finite first coordinate is overtaken one step past itself.
      for (Int k = -m.kMax; k <= m.kMax; ++k) {
        const PairElem sup{ExtNat::infinity(), k};
        for (Int g(0); g <= m.gMax; ++g)
          if (!pair_leq(PairElem{ExtNat(g), k}, sup))
            return fail("(inf, " + k.str() + ") does not bound its chain");
        for (const auto& u : w) {
          if (u.k != k) {
            if (pair_leq(PairElem{ExtNat(0), k}, u))
              return fail("an element of another class bounds the chain at "
                          "k = " + k.str());
            continue;
          }
          if (!u.g.is_infinite() &&
              pair_leq(PairElem{ExtNat(u.g.finite_value() + 1), k}, u))
            return fail(pair_str(u) + " bounds a chain element above itself");
        }
      }
      v.witness =
          "increasing chains have constant integer coordinate and supremum "
          "(sup g_n, k)";
      return v;
    }
    case CuAxiom::O2: {
      for (const auto& a : w) {
        if (!a.g.is_infinite()) {
          if (!pair_way_below(a, a))
            return fail(pair_str(a) + " is not its own compact approximation");
          continue;
        }
        // The chain (n, k) is way-below increasing with supremum (inf, k).
        for (Int g(0); g < m.gMax; ++g)
          if (!pair_way_below(PairElem{ExtNat(g), a.k},
                              PairElem{ExtNat(g + 1), a.k}))
            return fail("the finite chain under " + pair_str(a) +
                        " is not rapidly increasing");
      }
      v.witness =
          "finite elements are compact; (infinity, k) is the supremum of the "
          "rapidly increasing chain (n, k)";
      return v;
    }
    case CuAxiom::O3: {
      for (const auto& a : w)
        for (const auto& b : w)
          for (const auto& a2 : w)
            for (const auto& b2 : w) {
              if (pair_leq(a, a2) && pair_leq(b, b2) &&
                  !pair_leq(pair_add(a, b), pair_add(a2, b2)))
                return fail("sums do not preserve <= at " + pair_str(a) +
                            " + " + pair_str(b));
              if (pair_way_below(a, a2) && pair_way_below(b, b2) &&
                  !pair_way_below(pair_add(a, b), pair_add(a2, b2)))
                return fail("sums do not preserve << at " + pair_str(a) +
                            " + " + pair_str(b));
            }
      v.witness = "addition preserves the order and way-below on the window";
      return v;
    }
    case CuAxiom::O4: {
      // sup((n, k) + z) = (inf, k) + z for every window z: the translate
      // bounds the translated chain, and it is least because finite bounds
      // are overtaken (z finite) or the translated chain is constantly equal
      // to it (z infinite).
      for (Int k = -m.kMax; k <= m.kMax; ++k)
        for (const auto& z : w) {
          const PairElem lhs = pair_add(PairElem{ExtNat::infinity(), k}, z);
          for (Int g(0); g <= m.gMax; ++g)
            if (!pair_leq(pair_add(PairElem{ExtNat(g), k}, z), lhs))
              return fail("translated chain exceeds its translated supremum");
          if (z.g.is_infinite()) {
            if (!pair_leq(lhs, pair_add(PairElem{ExtNat(0), k}, z)))
              return fail("constant translated chain misses its supremum");
            continue;
          }
          for (const auto& u : w) {
            if (u.k != k + z.k || u.g.is_infinite()) continue;
            const Int overtake = u.g.finite_value() + 1;
            if (pair_leq(pair_add(PairElem{ExtNat(overtake), k}, z), u))
              return fail(pair_str(u) +
                          " bounds a translated chain element above itself");
          }
        }
      v.witness = "translation maps chain suprema to chain suprema";
      return v;
    }
  }
  return fail("unknown axiom");
}

}  // namespace

AxiomVerdict axiom_check(const AbstractCuModel& m, CuAxiom axiom) {
  if (const auto* f = std::get_if<FiniteCuModel>(&m))
    return check_finite(*f, axiom);
  return check_pair(std::get<PairCuModel>(m), axiom);
}

std::vector<AxiomVerdict> axiom_check_all(const AbstractCuModel& m) {
  std::vector<AxiomVerdict> out;
  for (CuAxiom a : {CuAxiom::PD, CuAxiom::PC, CuAxiom::PWC, CuAxiom::PCC,
                    CuAxiom::O0, CuAxiom::O1, CuAxiom::O2, CuAxiom::O3,
                    CuAxiom::O4})
    out.push_back(axiom_check(m, a));
  return out;
}

// ---------------------------------------------------------------------------
// Ideals generated by a positive element
// ---------------------------------------------------------------------------

std::vector<std::size_t> ideal_generated(const FiniteCuModel& m,
                                         std::size_t x) {
  const std::string shape = table_shape_error(m);
  if (!shape.empty()) throw InvalidParams(shape);
  if (x >= m.labels.size()) throw InvalidParams("element index out of range");
  if (!m.leq[m.zero][x])
    throw ConditionFailed("the ideal formula needs a positive generator, and " +
                          table_label(m, x) + " is not positive");

  const std::size_t n = m.labels.size();
  const std::size_t infx = infinite_multiple(m, x);
  bool positivelyOrdered = true;
  for (std::size_t y = 0; y < n; ++y)
    positivelyOrdered = positivelyOrdered && m.leq[m.zero][y];

  std::vector<std::size_t> out;
  if (positivelyOrdered) {
    for (std::size_t y = 0; y < n; ++y)
      if (m.leq[y][infx]) out.push_back(y);
    return out;
  }
  // The two-sided formula needs directedness and convexity on the fragment.
  const AbstractCuModel am = m;
  if (const AxiomVerdict pd = axiom_check(am, CuAxiom::PD); !pd.holds)
    throw ConditionFailed(
        "the two-sided ideal formula needs positive directedness: " +
        pd.witness);
  if (const AxiomVerdict pc = axiom_check(am, CuAxiom::PC); !pc.holds)
    throw ConditionFailed(
        "the two-sided ideal formula needs positive convexity: " + pc.witness);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t y2 = 0; y2 < n; ++y2) {
      const std::size_t s = m.add[y][y2];
      if (m.leq[m.zero][s] && m.leq[s][infx]) {
        out.push_back(y);
        break;
      }
    }
  return out;
}

std::vector<PairElem> ideal_generated(const PairCuModel& m,
                                      const PairElem& x) {
  if (!pair_positive(x))
    throw ConditionFailed("the ideal formula needs a positive generator, and " +
                          pair_str(x) + " is not positive");
  std::vector<PairElem> out;
  for (const auto& y : pair_window(m)) {
    // y is in the ideal iff some y' gives 0 <= y + y' <= infinity * x; the
    // complement (0, -k_y) settles the class, so only the first coordinate
    // constrains membership.
    const bool member = x.g.is_zero() ? y.g.is_zero() : true;
    if (member) out.push_back(y);
  }
  return out;
}

std::string ideal_descriptor(const PairCuModel& m, const PairElem& x) {
  if (!pair_positive(x))
    throw ConditionFailed("the ideal formula needs a positive generator, and " +
                          pair_str(x) + " is not positive");
  (void)m;
  return x.g.is_zero() ? "{0} x Z" : "the whole model";
}

// ---------------------------------------------------------------------------
// Shipped models
// ---------------------------------------------------------------------------

FiniteCuModel synthetic_pwc_violation() {
  FiniteCuModel m;
  m.name = "synthetic-pwc-violation";
  m.labels = {"0", "a", "w"};
  m.zero = 0;
  m.unit = 2;
  m.add = {{0, 1, 2}, {1, 1, 2}, {2, 2, 2}};
  m.leq = {{true, false, true}, {false, true, true}, {false, false, true}};
  m.wayBelow = {{true, false, true}, {false, true, true}, {false, false, true}};
  return m;
}

PairCuModel nbar_z_model() { return PairCuModel{}; }

std::vector<std::pair<std::string, AbstractCuModel>> shipped_models() {
  FiniteCuModel trivial;
  trivial.name = "trivial";
  trivial.labels = {"0"};
  trivial.zero = 0;
  trivial.unit = 0;
  trivial.add = {{0}};
  trivial.leq = {{true}};
  trivial.wayBelow = {{true}};
  std::vector<std::pair<std::string, AbstractCuModel>> out;
  out.emplace_back("trivial", AbstractCuModel(trivial));
  out.emplace_back("nbar-z", AbstractCuModel(nbar_z_model()));
  out.emplace_back("synthetic-pwc-violation",
                   AbstractCuModel(synthetic_pwc_violation()));
  return out;
}

// ---------------------------------------------------------------------------
// The compact-element functor
// ---------------------------------------------------------------------------

GrothendieckData grothendieck_compacts(const FiniteCuModel& m) {
  const std::string shape = table_shape_error(m);
  if (!shape.empty()) throw InvalidParams(shape);
  const AbstractCuModel am = m;
  if (const AxiomVerdict pc = axiom_check(am, CuAxiom::PC); !pc.holds)
    throw PrerequisiteFailed("PC", pc.witness);
  if (const AxiomVerdict pcc = axiom_check(am, CuAxiom::PCC); !pcc.holds)
    throw PrerequisiteFailed("PCC", pcc.witness);
  const std::vector<std::size_t> idealZero = ideal_generated(m, m.zero);
  if (idealZero != std::vector<std::size_t>{m.zero})
    throw PrerequisiteFailed("I0",
                             "the ideal generated by zero is not trivial");

  std::vector<std::size_t> compacts;
  for (std::size_t x = 0; x < m.labels.size(); ++x)
    if (m.wayBelow[x][x]) compacts.push_back(x);
  std::vector<std::size_t> genOf(m.labels.size(), SIZE_MAX);
  for (std::size_t g = 0; g < compacts.size(); ++g) genOf[compacts[g]] = g;
  for (std::size_t a = 0; a < compacts.size(); ++a)
    for (std::size_t b = 0; b < compacts.size(); ++b)
      if (genOf[m.add[compacts[a]][compacts[b]]] == SIZE_MAX)
        throw PrerequisiteFailed(
            "compacts", "the compact elements are not closed under addition");

  if (!m.unit) throw PrerequisiteFailed("unit", "the model declares no unit");
  if (genOf[*m.unit] == SIZE_MAX)
    throw PrerequisiteFailed("unit", "the unit is not compact");
  for (std::size_t c : compacts)
    if (!below_unit_multiple(m, c, *m.unit))
      throw PrerequisiteFailed("unit",
                               "the unit does not dominate every compact");

  std::vector<std::vector<Int>> relations;
  for (std::size_t a = 0; a < compacts.size(); ++a)
    for (std::size_t b = a; b < compacts.size(); ++b) {
      std::vector<Int> column(compacts.size(), Int(0));
      column[a] += 1;
      column[b] += 1;
      column[genOf[m.add[compacts[a]][compacts[b]]]] -= 1;
      relations.push_back(std::move(column));
    }
  const CokerPresentation p =
      CokerPresentation::from_relations(compacts.size(), relations);

  GrothendieckData gd;
  gd.group = p.group;
  for (std::size_t g = 0; g < compacts.size(); ++g) {
    std::vector<Int> e(compacts.size(), Int(0));
    e[g] = 1;
    gd.cone.push_back(p.reduce(e));
    gd.coneLabels.push_back(table_label(m, compacts[g]));
  }
  {
    std::vector<Int> e(compacts.size(), Int(0));
    e[genOf[*m.unit]] = 1;
    gd.unit = p.reduce(e);
  }
  gd.notes = {"positive convexity holds on the fragment",
              "positive cancellation of compacts holds on the fragment",
              "the ideal generated by zero is trivial",
              "order unit: " + table_label(m, *m.unit)};
  return gd;
}

GrothendieckData grothendieck_compacts(const PairCuModel& m) {
  const AbstractCuModel am = m;
  if (const AxiomVerdict pc = axiom_check(am, CuAxiom::PC); !pc.holds)
    throw PrerequisiteFailed("PC", pc.witness);
  if (const AxiomVerdict pcc = axiom_check(am, CuAxiom::PCC); !pcc.holds)
    throw PrerequisiteFailed("PCC", pcc.witness);
  const std::vector<PairElem> idealZero = ideal_generated(m, pair_zero());
  if (idealZero.size() != 1 || !(idealZero.front() == pair_zero()))
    throw PrerequisiteFailed(
        "I0", "the ideal generated by zero is " +
                  ideal_descriptor(m, pair_zero()) + ", not {0}");
  // The window always contains (0, k) for nonzero k, so the check above
  // rejects the model before any construction could start.
  throw PrerequisiteFailed("I0", "the ideal check did not fire");
}

// ---------------------------------------------------------------------------
// Grothendieck data of a layered model and the recovery check
// ---------------------------------------------------------------------------

namespace {

Int block_min_compact(const BlockObject& b) {
  if (const auto* f = std::get_if<FoldingCu>(&b)) return f->q;
  return Int(1);
}

Int block_fold_modulus(const BlockObject& b) {
  if (const auto* f = std::get_if<FoldingCu>(&b)) return f->q;
  return Int(0);
}

// A compact fragment member of a layered model: multiplicities of the
// minimal compact per block of its ideal, plus a class.
struct FragmentMember {
  std::size_t ideal = 0;
  std::vector<Int> mults;
  std::vector<Int> k;
};

Cu1Element realize_member(const LayeredCu& S, const FragmentMember& f) {
  const LayeredIdeal& ideal = S.ideals[f.ideal];
  std::vector<StepFn> x;
  for (std::size_t t = 0; t < ideal.blocks.size(); ++t)
    x.push_back(StepFn::constant(
        ExtNat(block_min_compact(S.blocks[ideal.blocks[t]]) * f.mults[t])));
  return make_cu1(S, f.ideal, std::move(x), f.k);
}

std::string member_str(const LayeredCu& S, const FragmentMember& f) {
  return cu1_str(S, realize_member(S, f));
}

// All fragment members with multiplicities up to multCap, capped in count.
std::vector<FragmentMember> enumerate_fragment(const LayeredCu& S,
                                               Int multCap,
                                               std::size_t countCap) {
  std::vector<FragmentMember> out;
  for (std::size_t i = 0; i < S.ideals.size(); ++i) {
    const LayeredIdeal& ideal = S.ideals[i];
    std::vector<FragmentMember> partial{
        FragmentMember{i, {}, std::vector<Int>(ideal.k1Moduli.size(), Int(0))}};
    for (std::size_t t = 0; t < ideal.blocks.size(); ++t) {
      std::vector<FragmentMember> next;
      for (const auto& f : partial)
        for (Int mult(1); mult <= multCap; ++mult) {
          FragmentMember g = f;
          g.mults.push_back(mult);
          next.push_back(std::move(g));
        }
      partial = std::move(next);
      if (partial.size() > countCap)
        throw ResourceLimit("compact fragment exceeds the enumeration cap");
    }
    for (std::size_t s = 0; s < ideal.k1Moduli.size(); ++s) {
      std::vector<FragmentMember> next;
      for (const auto& f : partial) {
        const Int modulus = ideal.k1Moduli[s];
        const Int residues = modulus == 0 ? Int(1) : modulus;
        for (Int r(0); r < residues; ++r) {
          FragmentMember g = f;
          g.k[s] = r;
          next.push_back(std::move(g));
        }
      }
      partial = std::move(next);
      if (partial.size() > countCap)
        throw ResourceLimit("compact fragment exceeds the enumeration cap");
    }
    for (auto& f : partial) out.push_back(std::move(f));
    if (out.size() > countCap)
      throw ResourceLimit("compact fragment exceeds the enumeration cap");
  }
  return out;
}

// Serialized total identity of an element, used to detect collisions of
// distinct generator words (honest relations of the compact monoid).
std::string element_key(const LayeredCu& S, const Cu1Element& a) {
  std::ostringstream os;
  os << a.ideal;
  for (std::size_t t = 0; t < a.x.size(); ++t)
    os << "|" << a.x[t].value_at(Rational(1, 2)).str();
  for (const Int& r : a.k) os << "/" << r.str();
  (void)S;
  return os.str();
}

struct LayeredGenerators {
  // Generator: a minimal compact of one single-block ideal, classless
  // (residue 0) or carrying one residue in one declared slot.
  struct Gen {
    std::size_t block = 0;
    std::size_t ideal = 0;
    std::size_t slot = 0;
    Int residue;  // 0 for the classless generator
  };
  std::vector<Gen> gens;
  std::map<std::size_t, std::size_t> principalIdeal;  // block -> ideal index
};

LayeredGenerators layered_generators(const LayeredCu& S) {
  LayeredGenerators out;
  for (std::size_t b = 0; b < S.blocks.size(); ++b) {
    std::optional<std::size_t> principal;
    for (std::size_t i = 0; i < S.ideals.size(); ++i)
      if (S.ideals[i].blocks == std::vector<std::size_t>{b}) principal = i;
    if (!principal)
      throw PrerequisiteFailed(
          "lattice", "block " + std::to_string(b) + " has no principal ideal");
    out.principalIdeal[b] = *principal;
    out.gens.push_back({b, *principal, 0, Int(0)});
    const auto& moduli = S.ideals[*principal].k1Moduli;
    for (std::size_t s = 0; s < moduli.size(); ++s) {
      if (moduli[s] == 0)
        throw ResourceLimit(
            "a free class slot needs an infinite compact generator set");
      for (Int r(1); r < moduli[s]; ++r)
        out.gens.push_back({b, *principal, s, r});
    }
  }
  if (out.gens.size() > 40)
    throw ResourceLimit("too many compact generators for the relation sweep");
  return out;
}

Cu1Element generator_element(const LayeredCu& S,
                             const LayeredGenerators::Gen& g) {
  const LayeredIdeal& ideal = S.ideals[g.ideal];
  std::vector<Int> k(ideal.k1Moduli.size(), Int(0));
  if (g.residue != 0) k[g.slot] = g.residue;
  return make_cu1(S, g.ideal,
                  {StepFn::constant(ExtNat(block_min_compact(S.blocks[g.block])))},
                  std::move(k));
}

}  // namespace

GrothendieckData grothendieck_compacts(const LayeredCu& S) {
  const LayeredValidation valid = layered_validate(S);
  if (!valid.ok) throw InvalidParams(valid.detail);
  GrothendieckData gd;

  const std::vector<FragmentMember> fragment =
      enumerate_fragment(S, Int(2), 30000);
  std::vector<Cu1Element> elems;
  elems.reserve(fragment.size());
  for (const auto& f : fragment) elems.push_back(realize_member(S, f));

  // Positive convexity on the fragment.
  for (std::size_t a = 0; a < elems.size(); ++a)
    for (std::size_t b = 0; b < elems.size(); ++b) {
      const bool bPositive =
          std::all_of(elems[b].k.begin(), elems[b].k.end(),
                      [](const Int& r) { return r == 0; });
      if (!bPositive || !cu1_leq(S, elems[a], elems[b])) continue;
      const Cu1Element sum = cu1_add(S, elems[a], elems[b]);
      if (!std::all_of(sum.k.begin(), sum.k.end(),
                       [](const Int& r) { return r == 0; }))
        throw PrerequisiteFailed(
            "PC", "convexity fails at " + cu1_str(S, elems[a]) + " <= " +
                      cu1_str(S, elems[b]));
    }
  gd.notes.push_back("positive convexity holds on the compact fragment");

  // Positive cancellation of compacts on the fragment.
  for (std::size_t a = 0; a < elems.size(); ++a)
    for (std::size_t b = 0; b < elems.size(); ++b) {
      const Cu1Element sum = cu1_add(S, elems[a], elems[b]);
      if (cu1_leq(S, sum, elems[b]) && !cu1_leq(S, elems[a], cu1_zero(S)))
        throw PrerequisiteFailed(
            "PCC", "cancellation fails at " + cu1_str(S, elems[a]) + " + " +
                       cu1_str(S, elems[b]));
    }
  gd.notes.push_back(
      "positive cancellation of compacts holds on the compact fragment");

  // The ideal generated by zero: every sum ideal contains its summands'
  // ideals (joins are unions), so a sum with a nonzero summand never lands
  // on the bottom ideal and the ideal of zero is trivial.
  const std::size_t bottom = S.bottom();
  for (std::size_t i = 0; i < S.ideals.size(); ++i)
    for (std::size_t j = 0; j < S.ideals.size(); ++j)
      if (const auto u = S.join(i, j); !u || (i != bottom && *u == bottom))
        throw PrerequisiteFailed("I0", "a nonzero ideal collapses into zero");
  gd.notes.push_back("the ideal generated by zero is trivial");

  // Relation harvest: all generator words of degree <= 3, keyed by the value
  // they evaluate to; a collision of distinct words is a relation.
  const LayeredGenerators lg = layered_generators(S);
  std::vector<Cu1Element> genElems;
  for (const auto& g : lg.gens) genElems.push_back(generator_element(S, g));
  std::map<std::string, std::vector<Int>> seen;
  std::vector<std::vector<Int>> relations;
  std::vector<std::size_t> word;
  const std::size_t genCount = lg.gens.size();
  auto visit = [&](const std::vector<std::size_t>& w) {
    Cu1Element value = genElems[w[0]];
    for (std::size_t t = 1; t < w.size(); ++t)
      value = cu1_add(S, value, genElems[w[t]]);
    std::vector<Int> coeffs(genCount, Int(0));
    for (std::size_t g : w) coeffs[g] += 1;
    const std::string key = element_key(S, value);
    const auto [it, inserted] = seen.emplace(key, coeffs);
    if (!inserted && it->second != coeffs) {
      std::vector<Int> column(genCount, Int(0));
      for (std::size_t g = 0; g < genCount; ++g)
        column[g] = it->second[g] - coeffs[g];
      relations.push_back(std::move(column));
    }
  };
  const std::size_t maxDegree = 3;
  std::vector<std::size_t> stack;
  // Iterative enumeration of non-decreasing words of length 1..maxDegree.
  for (std::size_t len = 1; len <= maxDegree; ++len) {
    stack.assign(len, 0);
    while (true) {
      bool ordered = true;
      for (std::size_t t = 1; t < len && ordered; ++t)
        ordered = stack[t - 1] <= stack[t];
      if (ordered) visit(stack);
      std::size_t pos = len;
      while (pos > 0 && ++stack[pos - 1] == genCount) {
        stack[pos - 1] = 0;
        --pos;
      }
      if (pos == 0) break;
    }
  }
  const CokerPresentation p =
      CokerPresentation::from_relations(genCount, relations);
  gd.group = p.group;

  // Cone: classes of the fragment members over the generators, replayed
  // through the actual addition so a corrupted table cannot smuggle in a
  // formal decomposition that the monoid does not satisfy.
  for (std::size_t f = 0; f < fragment.size(); ++f) {
    const FragmentMember& member = fragment[f];
    const LayeredIdeal& ideal = S.ideals[member.ideal];
    std::vector<Int> coeffs(genCount, Int(0));
    std::optional<Cu1Element> replay;
    auto refuse = [&]() -> PrerequisiteFailed {
      return PrerequisiteFailed(
          "compacts", "fragment member " + member_str(S, member) +
                          " does not decompose over the compact generators");
    };
    std::size_t slot = 0;
    for (std::size_t t = 0; t < ideal.blocks.size(); ++t) {
      const std::size_t block = ideal.blocks[t];
      const auto& pModuli =
          S.ideals[lg.principalIdeal.at(block)].k1Moduli;
      if (slot + pModuli.size() > ideal.k1Moduli.size()) throw refuse();
      for (std::size_t s = 0; s < pModuli.size(); ++s)
        if (ideal.k1Moduli[slot + s] != pModuli[s]) throw refuse();
      Int plainCopies = member.mults[t];
      auto push = [&](const Cu1Element& e) {
        replay = replay ? cu1_add(S, *replay, e) : e;
      };
      for (std::size_t s = 0; s < pModuli.size(); ++s) {
        const Int residue = member.k[slot + s];
        if (residue == 0) continue;
        plainCopies -= 1;
        if (plainCopies < 0) throw refuse();
        for (std::size_t g = 0; g < genCount; ++g)
          if (lg.gens[g].block == block && lg.gens[g].slot == s &&
              lg.gens[g].residue == residue) {
            coeffs[g] += 1;
            push(genElems[g]);
          }
      }
      slot += pModuli.size();
      for (std::size_t g = 0; g < genCount; ++g)
        if (lg.gens[g].block == block && lg.gens[g].residue == 0) {
          coeffs[g] += plainCopies;
          for (Int c(0); c < plainCopies; ++c) push(genElems[g]);
        }
    }
    if (member.ideal == bottom) continue;  // the zero class needs no entry
    if (slot != ideal.k1Moduli.size()) throw refuse();
    if (!replay || !(*replay == elems[f]))
      throw refuse();
    gd.cone.push_back(p.reduce(coeffs));
    gd.coneLabels.push_back(cu1_str(S, elems[f]));
  }

  // The unit's class and its order-unit property on the fragment.
  if (S.unitValues.size() != S.blocks.size())
    throw PrerequisiteFailed("unit", "the model declares no unit values");
  std::vector<Int> unitMults;
  for (std::size_t b = 0; b < S.blocks.size(); ++b) {
    const ExtNat value = S.unitValues[b].value_at(Rational(1, 2));
    if (!is_compact(S.unitValues[b]) || value.is_infinite())
      throw PrerequisiteFailed("unit", "the unit is not compact");
    const Int base = block_min_compact(S.blocks[b]);
    if (value.finite_value() % base != 0)
      throw PrerequisiteFailed(
          "unit", "the unit is not a multiple of the minimal compacts");
    unitMults.push_back(value.finite_value() / base);
  }
  {
    std::vector<Int> coeffs(genCount, Int(0));
    for (std::size_t g = 0; g < genCount; ++g)
      if (lg.gens[g].residue == 0) coeffs[g] = unitMults[lg.gens[g].block];
    gd.unit = p.reduce(coeffs);
  }
  for (const auto& member : fragment) {
    // n * unit dominates the member once every block multiplicity clears the
    // member's (full-mask classes are realized by fragment elements).
    bool dominated = false;
    for (Int n(1); n <= 64 && !dominated; ++n) {
      dominated = true;
      const LayeredIdeal& ideal = S.ideals[member.ideal];
      for (std::size_t t = 0; t < ideal.blocks.size(); ++t)
        dominated = dominated &&
                    n * unitMults[ideal.blocks[t]] >= member.mults[t] + 1;
    }
    if (!dominated)
      throw PrerequisiteFailed(
          "unit", "the unit does not dominate " + member_str(S, member));
  }
  gd.notes.push_back("the unit class is an order unit on the fragment");
  return gd;
}

bool hstar_recovers_kstar(const InductiveSystem& sys, int n,
                          std::string* detail) {
  auto failed = [&](const std::string& d) {
    if (detail) *detail = d;
    return false;
  };
  LayeredCu S;
  GrothendieckData gd;
  try {
    S = stage_layered_model(sys, n);
    gd = grothendieck_compacts(S);
  } catch (const PrerequisiteFailed& e) {
    return failed(e.what());
  }

  // Independent K-theory of the stage: one free generator per block and the
  // fold modulus of each fold block as torsion.
  const StageAlgebra& stage = system_stage(sys, n);
  std::vector<Int> torsion;
  for (const auto& fold : stage.foldBlocks) torsion.push_back(fold.q);
  const FgAbGroup expected =
      FgAbGroup::from_diagonal(stage.foldBlocks.size() +
                                   (stage.intervalBlock ? 1 : 0),
                               torsion);
  if (!(gd.group == expected))
    return failed("group mismatch: recovered " + gd.group.str() +
                  ", expected " + expected.str());

  // The class map identifies exactly what the multiplicity-and-class readout
  // identifies.
  const std::vector<FragmentMember> fragment =
      enumerate_fragment(S, Int(2), 30000);
  const std::size_t top = S.top();
  std::vector<std::string> gamma;
  std::vector<FragmentMember> nonzero;
  for (const auto& member : fragment) {
    if (member.ideal == S.bottom()) continue;
    nonzero.push_back(member);
    const LayeredIdeal& ideal = S.ideals[member.ideal];
    std::vector<Int> mults(S.blocks.size(), Int(0));
    for (std::size_t t = 0; t < ideal.blocks.size(); ++t)
      mults[ideal.blocks[t]] = member.mults[t];
    std::vector<Int> pushed(S.ideals[top].k1Moduli.size(), Int(0));
    const Matrix& d = S.delta.at({member.ideal, top});
    for (std::size_t r = 0; r < d.rows(); ++r) {
      Int acc(0);
      for (std::size_t c = 0; c < d.cols(); ++c)
        acc += d.at(r, c) * member.k[c];
      pushed[r] = mod_reduce(acc, S.ideals[top].k1Moduli[r]);
    }
    std::ostringstream os;
    for (const Int& v : mults) os << v.str() << ",";
    os << ";";
    for (const Int& v : pushed) os << v.str() << ",";
    gamma.push_back(os.str());
  }
  if (nonzero.size() != gd.cone.size())
    return failed("cone size disagrees with the fragment");
  for (std::size_t a = 0; a < nonzero.size(); ++a)
    for (std::size_t b = a + 1; b < nonzero.size(); ++b)
      if ((gd.cone[a] == gd.cone[b]) != (gamma[a] == gamma[b]))
        return failed("class map differs from the readout on " +
                      gd.coneLabels[a] + " vs " + gd.coneLabels[b]);

  // The cone meets its negative only in zero.
  std::set<std::vector<Int>> coneSet(gd.cone.begin(), gd.cone.end());
  const std::size_t freeCount = gd.group.free_rank();
  const auto& invs = gd.group.invariant_factors();
  for (const auto& c : gd.cone) {
    std::vector<Int> neg = c;
    for (std::size_t i = 0; i < freeCount; ++i) neg[i] = -neg[i];
    for (std::size_t i = 0; i < invs.size(); ++i)
      neg[freeCount + i] = mod_reduce(-neg[freeCount + i], invs[i]);
    const bool zeroClass =
        std::all_of(c.begin(), c.end(), [](const Int& v) { return v == 0; });
    if (!zeroClass && coneSet.count(neg))
      return failed("the cone meets its negative in a nonzero class");
  }

  if (detail) detail->clear();
  return true;
}

}  // namespace cuntzlab
