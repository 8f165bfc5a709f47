#ifndef CUNTZLAB_CUSEMI_HPP
#define CUNTZLAB_CUSEMI_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cuntzlab/stepfn.hpp"

namespace cuntzlab {

// Cuntz-semigroup picture of one building block, in the unscaled integer-rank
// presentation: a folding interval algebra of parameter q at depth `level`
// has semigroup {f : f(0), f(1) in qN-bar}; the plain interval algebra allows
// every lower semicontinuous step function.
struct FoldingCu {
  Int q;
  int level = 1;

  friend bool operator==(const FoldingCu& a, const FoldingCu& b) {
    return a.q == b.q && a.level == b.level;
  }
};

struct PlainLsc {
  friend bool operator==(PlainLsc, PlainLsc) { return true; }
};

using BlockObject = std::variant<FoldingCu, PlainLsc>;

struct DirectSum {
  std::vector<BlockObject> components;

  friend bool operator==(const DirectSum& a, const DirectSum& b) {
    return a.components == b.components;
  }
};

using CuObject = std::variant<FoldingCu, PlainLsc, DirectSum>;

bool member(const BlockObject& obj, const StepFn& f);
bool member(const CuObject& obj, const StepFn& f);  // rejects DirectSum
bool member_tuple(const DirectSum& obj, const std::vector<StepFn>& fs);

std::string object_str(const BlockObject& obj);

// Uniform basis M'_n inside an object: step functions constant on each open
// cell of the equidistant 2^n partition, finite, with all values capped
// (cap = 2^n unless overridden) and subject to the object's endpoint
// divisibility.  Point values at grid points are free below the adjacent
// interval values.
struct BasisLevel {
  BlockObject object;
  int n = 0;
  std::optional<Int> cap;  // default 2^n

  Int effective_cap() const { return cap ? *cap : pow_int(2, n); }
};

bool basis_member(const BasisLevel& level, const StepFn& f);

// Every member of the level's slice, in deterministic lexicographic order.
// Throws ResourceLimit when the slice would exceed `ceiling` elements.
std::vector<StepFn> enumerate_basis(const BasisLevel& level,
                                    const Int& ceiling = Int(2000000));
Int basis_count(const BasisLevel& level);

// Greatest element of M'_n way below f.  The per-cell upper bound is the
// minimum of f over the cell's closure neighborhood in the common refinement;
// point values are additionally clamped by the candidate's own semicontinuity
// and the endpoints floored to multiples of q.
StepFn basis_project(const BlockObject& obj, const StepFn& f, int n,
                     std::optional<Int> cap = std::nullopt);

// Lambda slice at level n: basis functions with all values in {0..q} and
// endpoint values in {0, q}.  Deterministic lexicographic order.  Throws
// ResourceLimit when the slice would exceed `ceiling` elements.
std::vector<StepFn> enumerate_lambda(const FoldingCu& obj, int n,
                                     const Int& ceiling = Int(2000000));
Int lambda_count(const FoldingCu& obj, int n);

// Least dyadic exponent r with every breakpoint a multiple of 1/2^r, when one
// exists.
std::optional<int> resolution_exponent(const StepFn& f);

// Largest finite value (pre: finite_valued).
Int max_value(const StepFn& f);

// Least level m <= nMax with basis_project(obj, f, m) equal to f at x, i.e.
// the pointwise recovery level of the basis chain at x.
std::optional<int> basis_recovery_level(const BlockObject& obj, const StepFn& f,
                                        const Rational& x, int nMax);

struct AxiomCheck {
  std::string axiom;
  bool ok = false;
  std::string detail;
};

struct AxiomsReport {
  bool allPassed = true;
  std::vector<AxiomCheck> checks;
};

// Spot check of the semigroup laws on sampled members: zero is way below
// itself and neutral, increasing chains have suprema, the basis chain
// recovers each sample pointwise, way-below is additive, and suprema respect
// addition.
AxiomsReport axioms_spot_check(const BlockObject& obj,
                               const std::vector<StepFn>& samples);

}  // namespace cuntzlab

#endif
