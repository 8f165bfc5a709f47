#include "cuntzlab/abgroups.hpp"

#include <algorithm>
#include <sstream>

#include "cuntzlab/errors.hpp"

namespace cuntzlab {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

Matrix mat_mul(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.rows()) throw InvalidParams("matrix shape mismatch");
  Matrix out(x.rows(), y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const Int& xik = x.at(i, k);
      if (xik == 0) continue;
      for (std::size_t j = 0; j < y.cols(); ++j)
        out.at(i, j) += xik * y.at(k, j);
    }
  return out;
}

Int determinant(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidParams("determinant of non-square");
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  // Bareiss fraction-free elimination: exact over the integers.
  Matrix a = m;
  Int prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a.at(k, k) == 0) {
      std::size_t swapRow = k + 1;
      while (swapRow < n && a.at(swapRow, k) == 0) ++swapRow;
      if (swapRow == n) return 0;
      for (std::size_t c = 0; c < n; ++c)
        std::swap(a.at(k, c), a.at(swapRow, c));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        a.at(i, j) = (a.at(i, j) * a.at(k, k) - a.at(i, k) * a.at(k, j)) / prev;
    prev = a.at(k, k);
  }
  return sign > 0 ? a.at(n - 1, n - 1) : Int(-a.at(n - 1, n - 1));
}

namespace {

struct SnfWork {
  Matrix d, u, v;

  void row_swap(std::size_t r1, std::size_t r2) {
    if (r1 == r2) return;
    for (std::size_t c = 0; c < d.cols(); ++c) std::swap(d.at(r1, c), d.at(r2, c));
    for (std::size_t c = 0; c < u.cols(); ++c) std::swap(u.at(r1, c), u.at(r2, c));
  }
  void col_swap(std::size_t c1, std::size_t c2) {
    if (c1 == c2) return;
    for (std::size_t r = 0; r < d.rows(); ++r) std::swap(d.at(r, c1), d.at(r, c2));
    for (std::size_t r = 0; r < v.rows(); ++r) std::swap(v.at(r, c1), v.at(r, c2));
  }
  // row r1 += k * row r2
  void row_add(std::size_t r1, std::size_t r2, const Int& k) {
    for (std::size_t c = 0; c < d.cols(); ++c) d.at(r1, c) += k * d.at(r2, c);
    for (std::size_t c = 0; c < u.cols(); ++c) u.at(r1, c) += k * u.at(r2, c);
  }
  // col c1 += k * col c2
  void col_add(std::size_t c1, std::size_t c2, const Int& k) {
    for (std::size_t r = 0; r < d.rows(); ++r) d.at(r, c1) += k * d.at(r, c2);
    for (std::size_t r = 0; r < v.rows(); ++r) v.at(r, c1) += k * v.at(r, c2);
  }
  void row_negate(std::size_t r) {
    for (std::size_t c = 0; c < d.cols(); ++c) d.at(r, c) = -d.at(r, c);
    for (std::size_t c = 0; c < u.cols(); ++c) u.at(r, c) = -u.at(r, c);
  }
};

Int int_abs(const Int& x) { return x < 0 ? Int(-x) : x; }

}  // namespace

SnfResult smith_normal_form(const Matrix& m) {
  SnfWork w{m, Matrix::identity(m.rows()), Matrix::identity(m.cols())};
  const std::size_t R = m.rows(), C = m.cols();
  std::size_t t = 0;
  while (t < R && t < C) {
    // Pick the smallest nonzero entry of the working submatrix as pivot.
    std::size_t pr = R, pc = C;
    for (std::size_t r = t; r < R; ++r)
      for (std::size_t c = t; c < C; ++c)
        if (w.d.at(r, c) != 0 &&
            (pr == R || int_abs(w.d.at(r, c)) < int_abs(w.d.at(pr, pc)))) {
          pr = r;
          pc = c;
        }
    if (pr == R) break;  // submatrix is zero
    w.row_swap(t, pr);
    w.col_swap(t, pc);

    bool remainder = false;
    for (std::size_t r = t + 1; r < R; ++r)
      if (w.d.at(r, t) != 0) {
        const Int q = w.d.at(r, t) / w.d.at(t, t);
        if (q != 0) w.row_add(r, t, -q);
        remainder = remainder || w.d.at(r, t) != 0;
      }
    for (std::size_t c = t + 1; c < C; ++c)
      if (w.d.at(t, c) != 0) {
        const Int q = w.d.at(t, c) / w.d.at(t, t);
        if (q != 0) w.col_add(c, t, -q);
        remainder = remainder || w.d.at(t, c) != 0;
      }
    if (remainder) continue;  // a smaller entry appeared; repick the pivot

    // Pivot must divide the rest of the submatrix for the invariant chain.
    bool fixed = false;
    for (std::size_t r = t + 1; r < R && !fixed; ++r)
      for (std::size_t c = t + 1; c < C && !fixed; ++c)
        if (w.d.at(r, c) % w.d.at(t, t) != 0) {
          w.row_add(t, r, Int(1));
          fixed = true;
        }
    if (fixed) continue;

    if (w.d.at(t, t) < 0) w.row_negate(t);
    ++t;
  }
  return SnfResult{w.d, w.u, w.v};
}

FgAbGroup::FgAbGroup(std::size_t freeRank, std::vector<Int> invariantFactors)
    : freeRank_(freeRank), invs_(std::move(invariantFactors)) {
  for (std::size_t i = 0; i < invs_.size(); ++i) {
    if (invs_[i] < 2)
      throw InvalidParams("invariant factor below 2: " + invs_[i].str());
    if (i > 0 && invs_[i] % invs_[i - 1] != 0)
      throw InvalidParams("invariant factors do not form a divisor chain");
  }
}

FgAbGroup FgAbGroup::from_diagonal(std::size_t freeRank,
                                   const std::vector<Int>& factors) {
  std::vector<Int> ds;
  for (const Int& f : factors) {
    const Int v = int_abs(f);
    if (v == 0)
      ++freeRank;
    else if (v > 1)
      ds.push_back(v);
  }
  // Repair the divisor chain with pairwise gcd/lcm passes.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i + 1 < ds.size(); ++i)
      for (std::size_t j = i + 1; j < ds.size(); ++j)
        if (ds[j] % ds[i] != 0) {
          const Int g = boost::multiprecision::gcd(ds[i], ds[j]);
          const Int l = ds[i] / g * ds[j];
          ds[i] = g;
          ds[j] = l;
          changed = true;
        }
    ds.erase(std::remove(ds.begin(), ds.end(), Int(1)), ds.end());
  }
  std::sort(ds.begin(), ds.end());
  return FgAbGroup(freeRank, std::move(ds));
}

FgAbGroup FgAbGroup::cyclic(const Int& d) {
  if (d < 1) throw InvalidParams("cyclic group order must be positive");
  return from_diagonal(0, {d});
}

Int FgAbGroup::order() const {
  if (freeRank_ > 0) throw InvalidParams("order of an infinite group");
  Int o = 1;
  for (const Int& d : invs_) o *= d;
  return o;
}

std::string FgAbGroup::str() const {
  if (is_trivial()) return "0";
  std::ostringstream os;
  bool first = true;
  if (freeRank_ == 1) {
    os << "Z";
    first = false;
  } else if (freeRank_ > 1) {
    os << "Z^" << freeRank_;
    first = false;
  }
  for (const Int& d : invs_) {
    if (!first) os << " + ";
    os << "Z/" << d.str();
    first = false;
  }
  return os.str();
}

GroupMorphism::GroupMorphism(FgAbGroup src, FgAbGroup tgt, Matrix m)
    : source(std::move(src)), target(std::move(tgt)), matrix(std::move(m)) {
  if (matrix.rows() != target.generator_count() ||
      matrix.cols() != source.generator_count())
    throw InvalidParams("morphism matrix shape mismatch");
  // A source generator of order d must map to an element killed by d.
  for (std::size_t j = 0; j < source.generator_count(); ++j) {
    if (j < source.free_rank()) continue;
    const Int& d = source.invariant_factors()[j - source.free_rank()];
    for (std::size_t i = 0; i < target.generator_count(); ++i) {
      const Int img = d * matrix.at(i, j);
      if (i < target.free_rank()) {
        if (img != 0)
          throw InvalidParams("morphism does not respect torsion (free image)");
      } else if (img % target.invariant_factors()[i - target.free_rank()] != 0) {
        throw InvalidParams("morphism does not respect torsion");
      }
    }
  }
}

GroupMorphism GroupMorphism::cyclic_mult(const Int& d, const Int& k) {
  const FgAbGroup g = FgAbGroup::cyclic(d);
  Matrix m(g.generator_count(), g.generator_count());
  if (g.generator_count() == 1) m.at(0, 0) = k % d;
  return GroupMorphism(g, g, std::move(m));
}

FgAbGroup image_subgroup(const FgAbGroup& g, const Matrix& m) {
  if (!g.is_finite())
    throw InvalidParams("image_subgroup needs a finite ambient group");
  const std::size_t k = g.generator_count();
  if (m.rows() != k) throw InvalidParams("generator coordinates shape mismatch");
  if (k == 0) return FgAbGroup();

  // The subgroup is L/D Z^k where L is the lattice spanned by the columns of
  // [m | D] and D = diag(invariant factors).
  Matrix full(k, m.cols() + k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) full.at(r, c) = m.at(r, c);
  for (std::size_t r = 0; r < k; ++r)
    full.at(r, m.cols() + r) = g.invariant_factors()[r];

  const SnfResult snf = smith_normal_form(full);
  // L has basis U^{-1} * diag(d'_i); D's columns expressed in that basis are
  // C = diag(d'_i)^{-1} * U * D, integral because D Z^k lies inside L.
  Matrix ud(k, k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c)
      ud.at(r, c) = snf.u.at(r, c) * g.invariant_factors()[c];
  Matrix cmat(k, k);
  for (std::size_t r = 0; r < k; ++r) {
    const Int& dr = snf.d.at(r, r);
    if (dr == 0) throw Error("image_subgroup: lattice lost full rank");
    for (std::size_t c = 0; c < k; ++c) {
      if (ud.at(r, c) % dr != 0)
        throw Error("image_subgroup: non-integral change of basis");
      cmat.at(r, c) = ud.at(r, c) / dr;
    }
  }
  const SnfResult quot = smith_normal_form(cmat);
  std::vector<Int> diag;
  for (std::size_t i = 0; i < k; ++i) diag.push_back(quot.d.at(i, i));
  return FgAbGroup::from_diagonal(0, diag);
}

FgAbGroup colim_finite(const FgAbGroup& g, const GroupMorphism& phi) {
  if (!g.is_finite()) throw InvalidParams("colim_finite needs a finite group");
  if (!(phi.source == g) || !(phi.target == g))
    throw InvalidParams("colim_finite needs an endomorphism of the group");
  Matrix cur = phi.matrix;
  FgAbGroup image = image_subgroup(g, cur);
  for (int guard = 0; guard < 4096; ++guard) {
    const Matrix next = mat_mul(phi.matrix, cur);
    const FgAbGroup nextImage = image_subgroup(g, next);
    // The image chain is decreasing; equal invariants mean it has stabilized
    // and phi restricts to a bijection of the stable image.
    if (nextImage == image) return image;
    cur = next;
    image = nextImage;
  }
  throw Error("colim_finite: image chain failed to stabilize");
}

LocalizedClass colim_rank_one(const std::vector<Int>& multipliers,
                              const Int& smoothLimit) {
  LocalizedClass out;
  for (const Int& m : multipliers) {
    if (m <= 0) throw InvalidParams("multipliers must be positive");
    if (m == 1) continue;
    for (const auto& [p, e] : smooth_factor(m, smoothLimit))
      out.primeSupport.insert(p);
  }
  return out;
}

namespace {

std::string atom_str(const AtomClass& a) {
  if (const auto* f = std::get_if<FgAbGroup>(&a)) return f->str();
  return std::get<LocalizedClass>(a).str();
}

IndexRule rule_normalize(IndexRule r) {
  // Torsion terms at negative sequence indices are trivial (Z modulo the
  // padding value 1), so a negative offset only skips trivial summands.  A
  // localized term at a negative index would be a copy of Z, not trivial, so
  // those offsets are left alone and comparisons stay undecidable.
  if (r.kind == IndexRule::Kind::TorsionPrimeSeq && r.offset < 0) r.offset = 0;
  return r;
}

}  // namespace

GroupClass class_normalize(const GroupClass& c) {
  if (const auto* f = std::get_if<FgAbGroup>(&c)) return *f;
  if (const auto* l = std::get_if<LocalizedClass>(&c)) {
    // An empty localization is the integers; fold it into the canonical form.
    if (l->primeSupport.empty()) return FgAbGroup(1, {});
    return *l;
  }
  const auto& sum = std::get<FormalSumClass>(c);

  // Merge every finitely generated part (and every copy of Z, i.e. an empty
  // localization) into one canonical group; keep proper localizations as a
  // sorted multiset.
  std::size_t freeRank = 0;
  std::vector<Int> torsion;
  std::vector<AtomClass> localized;
  for (const AtomClass& part : sum.parts) {
    if (const auto* f = std::get_if<FgAbGroup>(&part)) {
      freeRank += f->free_rank();
      for (const Int& d : f->invariant_factors()) torsion.push_back(d);
    } else {
      const auto& loc = std::get<LocalizedClass>(part);
      if (loc.primeSupport.empty())
        ++freeRank;
      else
        localized.push_back(loc);
    }
  }
  const FgAbGroup merged = FgAbGroup::from_diagonal(freeRank, torsion);
  std::sort(localized.begin(), localized.end(),
            [](const AtomClass& x, const AtomClass& y) {
              return std::get<LocalizedClass>(x).primeSupport <
                     std::get<LocalizedClass>(y).primeSupport;
            });

  FormalSumClass out;
  if (!merged.is_trivial()) out.parts.push_back(merged);
  for (auto& l : localized) out.parts.push_back(std::move(l));
  if (sum.rule) out.rule = rule_normalize(*sum.rule);

  if (!out.rule) {
    if (out.parts.empty()) return FgAbGroup();
    if (out.parts.size() == 1) {
      if (const auto* f = std::get_if<FgAbGroup>(&out.parts[0])) return *f;
      return std::get<LocalizedClass>(out.parts[0]);
    }
  }
  return out;
}

bool class_iso(const GroupClass& a, const GroupClass& b) {
  const GroupClass na = class_normalize(a);
  const GroupClass nb = class_normalize(b);
  if (na.index() != nb.index()) return false;
  if (const auto* f = std::get_if<FgAbGroup>(&na))
    return *f == std::get<FgAbGroup>(nb);
  if (const auto* l = std::get_if<LocalizedClass>(&na))
    return *l == std::get<LocalizedClass>(nb);
  const auto& sa = std::get<FormalSumClass>(na);
  const auto& sb = std::get<FormalSumClass>(nb);
  if (sa.rule.has_value() != sb.rule.has_value()) return false;
  if (sa.rule) {
    if (sa.rule->kind != sb.rule->kind) return false;
    if (sa.rule->seq != sb.rule->seq)
      throw UndecidableComparison(
          "symbolic sums over different parameter sequences");
    if (sa.rule->offset != sb.rule->offset)
      throw UndecidableComparison(
          "symbolic sums with misaligned index offsets");
  }
  if (sa.parts.size() != sb.parts.size()) return false;
  for (std::size_t i = 0; i < sa.parts.size(); ++i)
    if (!(sa.parts[i] == sb.parts[i])) return false;
  return true;
}

GroupClass class_direct_sum(const GroupClass& a, const GroupClass& b) {
  FormalSumClass out;
  auto absorb = [&out](const GroupClass& c) {
    if (const auto* f = std::get_if<FgAbGroup>(&c)) {
      out.parts.push_back(*f);
    } else if (const auto* l = std::get_if<LocalizedClass>(&c)) {
      out.parts.push_back(*l);
    } else {
      const auto& s = std::get<FormalSumClass>(c);
      for (const AtomClass& p : s.parts) out.parts.push_back(p);
      if (s.rule) {
        if (out.rule)
          throw InvalidParams("direct sum of two symbolic infinite sums");
        out.rule = s.rule;
      }
    }
  };
  absorb(a);
  absorb(b);
  return class_normalize(out);
}

std::string class_str(const GroupClass& c) {
  const GroupClass n = class_normalize(c);
  if (const auto* f = std::get_if<FgAbGroup>(&n)) return f->str();
  if (const auto* l = std::get_if<LocalizedClass>(&n)) return l->str();
  const auto& sum = std::get<FormalSumClass>(n);
  std::ostringstream os;
  bool first = true;
  for (const AtomClass& p : sum.parts) {
    if (!first) os << " + ";
    os << atom_str(p);
    first = false;
  }
  if (sum.rule) {
    if (!first) os << " + ";
    const char* base =
        sum.rule->kind == IndexRule::Kind::TorsionPrimeSeq ? "Z/p(i" : "Z[1/q(i";
    os << "sum_{i>=0} " << base;
    if (sum.rule->offset > 0) os << "+" << sum.rule->offset;
    if (sum.rule->offset < 0) os << sum.rule->offset;
    os << (sum.rule->kind == IndexRule::Kind::TorsionPrimeSeq ? ")" : ")]");
  }
  return os.str();
}

std::pair<GroupClass, GroupClass> six_term_assemble(const GroupClass& idealK0,
                                                    const GroupClass& idealK1) {
  // The quotient is the complex numbers: K0(C) = Z splits off freely and the
  // index map vanishes, so K1 passes through unchanged.
  return {class_direct_sum(idealK0, LocalizedClass{}),
          class_normalize(idealK1)};
}

}  // namespace cuntzlab
