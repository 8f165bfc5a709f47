#include "cuntzlab/cumorph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "cuntzlab/errors.hpp"

namespace cuntzlab {

namespace {

bool term_less(const MorphTerm& a, const MorphTerm& b) {
  if (a.index() != b.index()) return a.index() < b.index();  // folds first
  if (const auto* fa = std::get_if<FoldTerm>(&a)) {
    const auto& fb = std::get<FoldTerm>(b);
    if (fa->p != fb.p) return fa->p < fb.p;
    return fa->q < fb.q;
  }
  if (const auto* na = std::get_if<NodeFamilyTerm>(&a)) {
    const auto& nb = std::get<NodeFamilyTerm>(b);
    if (na->denom != nb.denom) return na->denom < nb.denom;
    return na->mult < nb.mult;
  }
  const auto& ea = std::get<PointEvalTerm>(a);
  const auto& eb = std::get<PointEvalTerm>(b);
  if (ea.t != eb.t) return ea.t < eb.t;
  return ea.mult < eb.mult;
}

}  // namespace

CuMorphism::CuMorphism(BlockObject domain, BlockObject codomain,
                       std::vector<MorphTerm> terms)
    : domain_(std::move(domain)), codomain_(std::move(codomain)) {
  std::map<Rational, Int> evals;
  std::map<Int, Int> families;
  for (const MorphTerm& term : terms) {
    if (const auto* fold = std::get_if<FoldTerm>(&term)) {
      if (fold->q < 1 || fold->p < 0 || fold->p > fold->q)
        throw InvalidParams("fold term needs 0 <= p <= q with q >= 1");
      terms_.push_back(*fold);
    } else if (const auto* fam = std::get_if<NodeFamilyTerm>(&term)) {
      if (fam->denom < 2)
        throw InvalidParams("node family needs a grid denominator >= 2");
      if (fam->mult < 1) throw InvalidParams("node family multiplicity below 1");
      families[fam->denom] += fam->mult;
    } else {
      const auto& pe = std::get<PointEvalTerm>(term);
      if (pe.t < 0 || pe.t > 1)
        throw InvalidParams("evaluation point outside [0,1]");
      if (pe.mult < 1) throw InvalidParams("evaluation multiplicity below 1");
      evals[pe.t] += pe.mult;
    }
  }
  for (const auto& [t, mult] : evals) terms_.push_back(PointEvalTerm{t, mult});
  for (const auto& [d, mult] : families)
    terms_.push_back(NodeFamilyTerm{d, mult});
  std::sort(terms_.begin(), terms_.end(), term_less);
}

CuMorphism CuMorphism::zero(BlockObject domain, BlockObject codomain) {
  return CuMorphism(std::move(domain), std::move(codomain), {});
}

std::string CuMorphism::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const MorphTerm& term : terms_) {
    if (!first) os << " + ";
    if (const auto* fold = std::get_if<FoldTerm>(&term))
      os << "Fold(p=" << fold->p.str() << ",q=" << fold->q.str() << ")";
    else if (const auto* fam = std::get_if<NodeFamilyTerm>(&term))
      os << "Eval(k/" << fam->denom.str() << ": 0<k<" << fam->denom.str()
         << ")x" << fam->mult.str();
    else {
      const auto& pe = std::get<PointEvalTerm>(term);
      os << "Eval(" << rational_str(pe.t) << ")x" << pe.mult.str();
    }
    first = false;
  }
  return os.str();
}

namespace {

bool is_integral(const Rational& x) {
  return boost::multiprecision::denominator(x) == 1;
}

// Sum of h over the interior grid nodes {k/denom : 0 < k < denom}, computed
// per cell of h: an open cell contributes its value times the number of
// nodes strictly inside, a breakpoint that is itself a node contributes its
// point value.  Node counts reach the billions, so nodes are never visited
// one by one.
ExtNat node_grid_sum(const StepFn& h, const Int& denom) {
  std::vector<Rational> bounds;
  bounds.push_back(Rational(0));
  for (const Rational& b : h.partition().breakpoints()) bounds.push_back(b);
  bounds.push_back(Rational(1));

  ExtNat total(0);
  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    if (j > 0 && is_integral(bounds[j] * denom))
      total += h.value_at(bounds[j]);
    const ExtNat v = h.value_at((bounds[j] + bounds[j + 1]) / 2);
    if (v.is_zero()) continue;
    const Int kmin = rational_floor(bounds[j] * denom) + 1;
    const Rational hi = bounds[j + 1] * denom;
    const Int kmax = is_integral(hi) ? Int(rational_floor(hi) - 1)
                                     : rational_floor(hi);
    if (kmax >= kmin) total += v.scaled(kmax - kmin + 1);
  }
  return total;
}

ExtNat image_value_at(const std::vector<MorphTerm>& terms, const StepFn& h,
                      const Rational& x) {
  ExtNat out(0);
  for (const MorphTerm& term : terms) {
    if (const auto* fold = std::get_if<FoldTerm>(&term)) {
      out += h.value_at(x / 2).scaled(fold->p) +
             h.value_at(Rational(1) - x / 2).scaled(fold->q - fold->p);
    } else if (const auto* fam = std::get_if<NodeFamilyTerm>(&term)) {
      out += node_grid_sum(h, fam->denom).scaled(fam->mult);
    } else {
      const auto& pe = std::get<PointEvalTerm>(term);
      out += h.value_at(pe.t).scaled(pe.mult);
    }
  }
  return out;
}

}  // namespace

StepFn apply(const CuMorphism& m, const StepFn& h) {
  if (!member(m.domain(), h))
    throw DomainMismatch("apply: input is not a member of the domain");

  // A fold reads h along t/2 and 1 - t/2, so its image can only jump where
  // some breakpoint x of h pulls back: at 2x (x below 1/2) or 2 - 2x (x
  // above 1/2).  Point evaluations contribute constants.
  std::set<Rational> cuts;
  const bool hasFold =
      std::any_of(m.terms().begin(), m.terms().end(), [](const MorphTerm& t) {
        return std::holds_alternative<FoldTerm>(t);
      });
  if (hasFold)
    for (const Rational& x : h.partition().breakpoints()) {
      if (x < Rational(1, 2)) cuts.insert(Rational(2) * x);
      if (x > Rational(1, 2)) cuts.insert(Rational(2) * (Rational(1) - x));
    }

  const Partition part{std::vector<Rational>(cuts.begin(), cuts.end())};
  std::vector<Rational> nodes;
  nodes.push_back(Rational(0));
  for (const Rational& b : part.breakpoints()) nodes.push_back(b);
  nodes.push_back(Rational(1));

  std::vector<ExtNat> pvals, ivals;
  for (const Rational& x : nodes)
    pvals.push_back(image_value_at(m.terms(), h, x));
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j)
    ivals.push_back(
        image_value_at(m.terms(), h, (nodes[j] + nodes[j + 1]) / 2));

  const StepFn image =
      StepFn(part, std::move(ivals), std::move(pvals)).canonical();
  if (!member(m.codomain(), image))
    throw DomainMismatch("apply: image leaves the codomain");
  return image;
}

CuMorphism compose(const CuMorphism& m2, const CuMorphism& m1) {
  if (!(m1.codomain() == m2.domain()))
    throw DomainMismatch("compose: codomain of the first map must be the "
                         "domain of the second");
  std::vector<MorphTerm> out;
  for (const MorphTerm& t2 : m2.terms())
    for (const MorphTerm& t1 : m1.terms()) {
      if (const auto* pe2 = std::get_if<PointEvalTerm>(&t2)) {
        if (const auto* pe1 = std::get_if<PointEvalTerm>(&t1)) {
          // mult2 * (mult1 * h(t1)) evaluated anywhere is constant.
          out.push_back(PointEvalTerm{pe1->t, pe2->mult * pe1->mult});
        } else if (const auto* fam1 = std::get_if<NodeFamilyTerm>(&t1)) {
          // The family image is already a constant; evaluation rescales it.
          out.push_back(NodeFamilyTerm{fam1->denom, pe2->mult * fam1->mult});
        } else {
          // Evaluating a folded h at t reads h at t/2 and 1 - t/2.
          const auto& f1 = std::get<FoldTerm>(t1);
          if (f1.p > 0)
            out.push_back(PointEvalTerm{pe2->t / 2, pe2->mult * f1.p});
          if (f1.q - f1.p > 0)
            out.push_back(PointEvalTerm{Rational(1) - pe2->t / 2,
                                        pe2->mult * (f1.q - f1.p)});
        }
      } else if (const auto* fam2 = std::get_if<NodeFamilyTerm>(&t2)) {
        // The outer family reads a constant at denom - 1 nodes.
        const Int reps = fam2->denom - 1;
        if (const auto* pe1 = std::get_if<PointEvalTerm>(&t1)) {
          out.push_back(PointEvalTerm{pe1->t, reps * fam2->mult * pe1->mult});
        } else if (const auto* fam1 = std::get_if<NodeFamilyTerm>(&t1)) {
          out.push_back(
              NodeFamilyTerm{fam1->denom, reps * fam2->mult * fam1->mult});
        } else {
          throw UnsupportedComposition(
              "a node family after a fold leaves the primitive family");
        }
      } else {
        const auto& f2 = std::get<FoldTerm>(t2);
        if (const auto* pe1 = std::get_if<PointEvalTerm>(&t1)) {
          // Folding a constant multiplies it by p + (q - p) = q.
          out.push_back(PointEvalTerm{pe1->t, f2.q * pe1->mult});
        } else if (const auto* fam1 = std::get_if<NodeFamilyTerm>(&t1)) {
          out.push_back(NodeFamilyTerm{fam1->denom, f2.q * fam1->mult});
        } else {
          throw UnsupportedComposition(
              "a fold after a fold leaves the primitive family");
        }
      }
    }
  return CuMorphism(m1.domain(), m2.codomain(), std::move(out));
}

Int induced_k0(const CuMorphism& m) {
  Int total = 0;
  for (const MorphTerm& term : m.terms()) {
    if (const auto* fold = std::get_if<FoldTerm>(&term))
      total += fold->q;
    else if (const auto* fam = std::get_if<NodeFamilyTerm>(&term))
      total += (fam->denom - 1) * fam->mult;
    else
      total += std::get<PointEvalTerm>(term).mult;
  }
  return total;
}

Int induced_k1(const CuMorphism& m) {
  const auto* fold = std::get_if<FoldingCu>(&m.codomain());
  if (!fold) return 0;  // plain interval blocks have trivial K1
  Int total = 0;
  for (const MorphTerm& term : m.terms())
    if (const auto* f = std::get_if<FoldTerm>(&term)) total += f->p;
  return total % fold->q;
}

std::optional<EquivWitness> equiv_witness(const CuMorphism& a,
                                          const CuMorphism& b, int n,
                                          const Int& lambdaCeiling) {
  if (!(a.domain() == b.domain()) || !(a.codomain() == b.codomain()))
    throw DomainMismatch("level comparison needs shared domain and codomain");
  const auto* dom = std::get_if<FoldingCu>(&a.domain());
  if (!dom)
    throw DomainMismatch("level comparison enumerates a fold-type domain");

  const std::vector<StepFn> slice = enumerate_lambda(*dom, n, lambdaCeiling);
  std::vector<StepFn> imA, imB;
  imA.reserve(slice.size());
  imB.reserve(slice.size());
  for (const StepFn& h : slice) {
    imA.push_back(apply(a, h));
    imB.push_back(apply(b, h));
  }
  for (std::size_t i = 0; i < slice.size(); ++i)
    for (std::size_t j = 0; j < slice.size(); ++j) {
      if (!leq(slice[j], slice[i])) continue;
      if (!way_below(slice[j], slice[i])) continue;
      if (!leq(imA[j], imB[i]))
        return EquivWitness{slice[i], slice[j], "a(h') <= b(h) fails"};
      if (!leq(imB[j], imA[i]))
        return EquivWitness{slice[i], slice[j], "b(h') <= a(h) fails"};
    }
  return std::nullopt;
}

bool equiv_at_level(const CuMorphism& a, const CuMorphism& b, int n,
                    const Int& lambdaCeiling) {
  return !equiv_witness(a, b, n, lambdaCeiling).has_value();
}

DdResult dd_distance(const CuMorphism& a, const CuMorphism& b, int nMax,
                     const Int& lambdaCeiling) {
  if (nMax < 0) throw InvalidParams("dd_distance: negative level bound");
  DdResult out;
  out.testedMax = nMax;
  bool anyFailBelow = false;
  for (int n = 0; n <= nMax; ++n) {
    auto w = equiv_witness(a, b, n, lambdaCeiling);
    if (!w) {
      out.passedLevels.push_back(n);
      if (anyFailBelow) out.anomalies.push_back(n);
    } else {
      anyFailBelow = true;
      if (!out.witness) out.witness = std::move(w);
    }
  }
  if (!out.passedLevels.empty()) {
    out.bestLevel = out.passedLevels.back();
    out.bound = Rational(1, pow_int(2, *out.bestLevel));
  }
  out.allLevelsPass =
      static_cast<int>(out.passedLevels.size()) == nMax + 1;
  return out;
}

BlockMorphism::BlockMorphism(DirectSum source, DirectSum target,
                             Entries entries)
    : source_(std::move(source)),
      target_(std::move(target)),
      entries_(std::move(entries)) {
  if (entries_.size() != target_.components.size())
    throw InvalidParams("block morphism row count must match the target");
  for (std::size_t r = 0; r < entries_.size(); ++r) {
    if (entries_[r].size() != source_.components.size())
      throw InvalidParams("block morphism column count must match the source");
    for (std::size_t c = 0; c < entries_[r].size(); ++c) {
      const auto& e = entries_[r][c];
      if (!e) continue;
      if (!(e->domain() == source_.components[c]) ||
          !(e->codomain() == target_.components[r]))
        throw InvalidParams("block entry domain or codomain mismatch");
    }
  }
}

const std::optional<CuMorphism>& BlockMorphism::entry(std::size_t row,
                                                      std::size_t col) const {
  if (row >= rows() || col >= cols())
    throw InvalidParams("block entry index out of range");
  return entries_[row][col];
}

std::vector<StepFn> apply_block(const BlockMorphism& m,
                                const std::vector<StepFn>& hs) {
  if (hs.size() != m.cols())
    throw DomainMismatch("member tuple arity must match the source");
  for (std::size_t c = 0; c < m.cols(); ++c)
    if (!member(m.source().components[c], hs[c]))
      throw DomainMismatch("tuple component is not a member of its block");
  std::vector<StepFn> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (const auto& e = m.entry(r, c)) out[r] = add(out[r], apply(*e, hs[c]));
  return out;
}

BlockDdResult dd_distance_block(const BlockMorphism& a, const BlockMorphism& b,
                                int nMax, const Int& lambdaCeiling) {
  if (!(a.source() == b.source()) || !(a.target() == b.target()))
    throw DomainMismatch("block distance needs identical shapes");
  if (nMax < 0) throw InvalidParams("dd_distance_block: negative level bound");

  BlockDdResult out;
  out.dd.testedMax = nMax;
  std::vector<bool> passes(static_cast<std::size_t>(nMax) + 1, true);
  std::optional<int> worstScore;  // smallest per-entry best level, -1 = none

  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) {
      const CuMorphism ea =
          a.entry(r, c) ? *a.entry(r, c)
                        : CuMorphism::zero(a.source().components[c],
                                           a.target().components[r]);
      const CuMorphism eb =
          b.entry(r, c) ? *b.entry(r, c)
                        : CuMorphism::zero(b.source().components[c],
                                           b.target().components[r]);
      // Equal entries are at distance zero: images coincide, and a(h') <=
      // a(h) holds for h' way below h by monotonicity of application.
      if (ea == eb) continue;
      const DdResult d = dd_distance(ea, eb, nMax, lambdaCeiling);
      for (int n = 0; n <= nMax; ++n)
        if (std::find(d.passedLevels.begin(), d.passedLevels.end(), n) ==
            d.passedLevels.end())
          passes[static_cast<std::size_t>(n)] = false;
      const int score = d.bestLevel.has_value() ? *d.bestLevel : -1;
      if (!worstScore.has_value() || score < *worstScore) {
        worstScore = score;
        out.limitingEntry = std::make_pair(r, c);
        if (d.witness) out.dd.witness = d.witness;
      }
      for (int n : d.anomalies) out.dd.anomalies.push_back(n);
    }

  bool anyFailBelow = false;
  for (int n = 0; n <= nMax; ++n) {
    if (passes[static_cast<std::size_t>(n)]) {
      out.dd.passedLevels.push_back(n);
      if (anyFailBelow &&
          std::find(out.dd.anomalies.begin(), out.dd.anomalies.end(), n) ==
              out.dd.anomalies.end())
        out.dd.anomalies.push_back(n);
    } else {
      anyFailBelow = true;
    }
  }
  if (!out.dd.passedLevels.empty()) {
    out.dd.bestLevel = out.dd.passedLevels.back();
    out.dd.bound = Rational(1, pow_int(2, *out.dd.bestLevel));
  }
  out.dd.allLevelsPass =
      static_cast<int>(out.dd.passedLevels.size()) == nMax + 1;
  return out;
}

int criterion_level(const SystemParams& params, int n, int i) {
  if (i < 0 || i > n - 1)
    throw InvalidParams("criterion level needs 0 <= i <= n-1");
  const Int qi = params.q(i);
  const int rn = params.r(n);
  const Int nodes = pow_int(qi, rn);
  const int l = floor_log2(nodes / qi);
  const Int cells = pow_int(2, l);
  // Count of the interior evaluation nodes {j/N : 0 < j < N} inside the
  // closed cover cell [(k-1)/2^l, k/2^l], with N = q_i^{r_n} and s = N/2^l:
  // cell 1 holds exactly floor(s) of them (node 0 is excluded), every
  // interior cell holds floor(ks) - ceil((k-1)s) + 1 >= floor(s) in both
  // integrality cases, and the last cell holds N - ceil(N - s) >= floor(s).
  // The minimum over the cover is therefore floor(s), attained at the first
  // cell -- except for the single-cell cover, which holds all N - 1 nodes.
  // The cell count reaches 2^25 at the larger parameter sets, so the cells
  // are never scanned one by one.
  const Int minCount = cells == 1 ? Int(nodes - 1) : Int(nodes / cells);
  if (minCount < qi)
    throw ConditionFailed("cover cell 1 holds " + minCount.str() +
                          " evaluation nodes, fewer than q=" + qi.str());
  return l;
}

Rational criterion_bound(const SystemParams& params, int n, int i) {
  return Rational(1, pow_int(2, criterion_level(params, n, i)));
}

bool basis_containment(const CuMorphism& m, int j, std::optional<Int> cap,
                       const Int& ceiling) {
  if (j < 1) throw InvalidParams("basis containment needs level j >= 1");
  const BasisLevel slice{m.domain(), j, std::move(cap)};
  // Image values never exceed the total multiplicity times the slice cap, so
  // this cap never binds: the membership test below is structural (grid
  // constancy, finiteness, endpoint divisibility).
  const Int wide = induced_k0(m) * slice.effective_cap() + 1;
  const BasisLevel target{m.codomain(), j - 1, wide};
  for (const StepFn& f : enumerate_basis(slice, ceiling))
    if (!basis_member(target, apply(m, f))) return false;
  return true;
}

}  // namespace cuntzlab
