#ifndef CUNTZLAB_CUMORPH_HPP
#define CUNTZLAB_CUMORPH_HPP

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cuntzlab/cusemi.hpp"
#include "cuntzlab/params.hpp"

namespace cuntzlab {

// h |-> (t |-> p*h(t/2) + (q-p)*h(1-t/2)): the interval fold with a rank-p
// twisting projection inside a size-q fiber.
struct FoldTerm {
  Int p, q;

  friend bool operator==(const FoldTerm& a, const FoldTerm& b) {
    return a.p == b.p && a.q == b.q;
  }
};

// h |-> mult * h(t) * 1: point evaluation smeared to a constant.
struct PointEvalTerm {
  Rational t;
  Int mult;

  friend bool operator==(const PointEvalTerm& a, const PointEvalTerm& b) {
    return a.t == b.t && a.mult == b.mult;
  }
};

// h |-> mult * (sum of h(k/denom) over 0 < k < denom) * 1: the point
// evaluations at every interior node of a uniform grid, stored run-length.
// The stage maps evaluate at q^r - 1 nodes, which reaches the billions, so
// the family is applied by counting nodes per cell, never node by node.
struct NodeFamilyTerm {
  Int denom;  // >= 2
  Int mult;

  friend bool operator==(const NodeFamilyTerm& a, const NodeFamilyTerm& b) {
    return a.denom == b.denom && a.mult == b.mult;
  }
};

using MorphTerm = std::variant<FoldTerm, PointEvalTerm, NodeFamilyTerm>;

// A semigroup morphism between two blocks given as a formal sum of primitive
// terms; the empty sum is the zero morphism.  Terms are normalized on
// construction: point evaluations at the same point merge, node families
// over the same grid merge, and the list is sorted (folds first).  All maps
// of the two inductive systems have this shape.
class CuMorphism {
 public:
  CuMorphism(BlockObject domain, BlockObject codomain,
             std::vector<MorphTerm> terms);
  static CuMorphism zero(BlockObject domain, BlockObject codomain);

  const BlockObject& domain() const { return domain_; }
  const BlockObject& codomain() const { return codomain_; }
  const std::vector<MorphTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::string str() const;

  friend bool operator==(const CuMorphism& a, const CuMorphism& b) {
    return a.domain_ == b.domain_ && a.codomain_ == b.codomain_ &&
           a.terms_ == b.terms_;
  }

 private:
  BlockObject domain_, codomain_;
  std::vector<MorphTerm> terms_;
};

// Image of a domain member, with exact rational breakpoints.  Throws
// DomainMismatch if h is not a member of the domain or the image fails to be
// a member of the codomain.
StepFn apply(const CuMorphism& m, const StepFn& h);

// Formal composite m2 after m1.  Point evaluations compose with everything;
// a fold or node family after a fold leaves the primitive term grammar and
// throws UnsupportedComposition (the pipeline only ever chains maps
// stepwise).
CuMorphism compose(const CuMorphism& m2, const CuMorphism& m1);

// Multiplier on the K0 generator: folds contribute q, point evaluations
// contribute mult, node families contribute (denom - 1) * mult.
Int induced_k0(const CuMorphism& m);

// Multiplier on the K1 generator of the codomain, reduced mod its fold
// parameter: folds contribute p, point evaluations contribute 0.  A plain
// interval codomain has trivial K1, so the result is 0 there.
Int induced_k1(const CuMorphism& m);

struct EquivWitness {
  StepFn h, hPrime;
  std::string side;  // the inequality that failed
};

// Exhaustive level-n comparison over the Lambda slice of the shared domain:
// passes iff a(h') <= b(h) and b(h') <= a(h) for every pair h' way below h
// in the slice.  equiv_witness returns the first failing pair instead.
bool equiv_at_level(const CuMorphism& a, const CuMorphism& b, int n,
                    const Int& lambdaCeiling = Int(2000000));
std::optional<EquivWitness> equiv_witness(
    const CuMorphism& a, const CuMorphism& b, int n,
    const Int& lambdaCeiling = Int(2000000));

// Level-by-level distance report.  Bounds are certified upper bounds at the
// tested levels, never a claim about the true infimum.  Because the slices
// are nested, passing is expected to be downward closed; any observed
// violation is recorded in `anomalies` rather than silently resolved.
struct DdResult {
  std::optional<int> bestLevel;          // largest tested passing level
  std::optional<Rational> bound;         // 1/2^bestLevel when one passed
  bool allLevelsPass = false;
  int testedMax = -1;
  std::vector<int> passedLevels;         // every tested level that passed
  std::vector<int> anomalies;            // passing levels above a failure
  std::optional<EquivWitness> witness;   // from the lowest failing level
};

DdResult dd_distance(const CuMorphism& a, const CuMorphism& b, int nMax,
                     const Int& lambdaCeiling = Int(2000000));

// Morphism between direct sums: one optional entry per (target block,
// source block) pair; a missing entry is the zero morphism.
class BlockMorphism {
 public:
  using Entries = std::vector<std::vector<std::optional<CuMorphism>>>;

  BlockMorphism(DirectSum source, DirectSum target, Entries entries);

  const DirectSum& source() const { return source_; }
  const DirectSum& target() const { return target_; }
  std::size_t rows() const { return entries_.size(); }
  std::size_t cols() const { return source_.components.size(); }
  const std::optional<CuMorphism>& entry(std::size_t row,
                                         std::size_t col) const;

 private:
  DirectSum source_, target_;
  Entries entries_;
};

// Componentwise image of a member tuple.
std::vector<StepFn> apply_block(const BlockMorphism& m,
                                const std::vector<StepFn>& hs);

// Distance between two block morphisms of identical shape: the maximum of
// the entrywise distances, i.e. a level passes iff it passes in every entry.
// Identical entries are at distance zero by monotonicity and are skipped;
// differing entries require a fold-type domain for slice enumeration.
struct BlockDdResult {
  DdResult dd;
  std::optional<std::pair<std::size_t, std::size_t>> limitingEntry;
};

BlockDdResult dd_distance_block(const BlockMorphism& a, const BlockMorphism& b,
                                int nMax,
                                const Int& lambdaCeiling = Int(2000000));

// Certified distance bound for the stage-n diagonal maps on block i, from
// the counting criterion: l = max{l : 2^l <= q_i^{r_n}/q_i} and every closed
// cell of the 2^l equidistant cover must contain at least q_i of the
// evaluation nodes {k/q_i^{r_n} : 0 < k < q_i^{r_n}}.  Returns 1/2^l.
// Throws ConditionFailed when a cell count falls below q_i (e.g. r_0 < 2).
Rational criterion_bound(const SystemParams& params, int n, int i);
int criterion_level(const SystemParams& params, int n, int i);

// Checks that the image of the level-j basis slice lands in the level-(j-1)
// basis of the codomain.  The slice is value-bounded by `cap` (default 2^j)
// for enumeration; image membership is tested structurally, with a value cap
// wide enough never to bind.
bool basis_containment(const CuMorphism& m, int j,
                       std::optional<Int> cap = std::nullopt,
                       const Int& ceiling = Int(2000000));

}  // namespace cuntzlab

#endif
