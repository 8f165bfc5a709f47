#ifndef CUNTZLAB_UNITARY_HPP
#define CUNTZLAB_UNITARY_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cuntzlab/abgroups.hpp"
#include "cuntzlab/cumorph.hpp"
#include "cuntzlab/cusemi.hpp"
#include "cuntzlab/systems.hpp"

namespace cuntzlab {

// ---------------------------------------------------------------------------
// Layered model of the unitary Cuntz semigroup
//
// The unitary semigroup of a block algebra is modeled as the disjoint union,
// over a finite ideal lattice, of the full positive elements of each ideal
// paired with a K1 class of that ideal.  Order and addition push K1 classes
// forward along the connecting maps delta of the lattice.
// ---------------------------------------------------------------------------

// One node of the ideal lattice.  The concrete positive layer is the direct
// sum of the named blocks of the ambient model; K1 is a declared diagonal
// presentation, one slot per cyclic summand (modulus 0 encodes a free
// summand, modulus 1 a trivial one).  The declaration is model data: it is
// not recomputed from the blocks, so synthetic lattices can exercise the
// order rules with arbitrary K1 layers.
struct LayeredIdeal {
  std::string name;
  std::vector<std::size_t> blocks;  // strictly increasing block indices
  std::vector<Int> k1Moduli;        // K1 = sum of Z/m_s over the slots

  FgAbGroup k1_group() const;  // canonical form of the declared presentation
};

// Finite layered model: the block list of the top algebra, the ideal poset
// (bottom = zero ideal, top = everything), and a connecting map for every
// comparable pair.  Delta matrices act on the slot presentations: rows index
// target slots, columns source slots, and entries are read modulo the target
// modulus.  The struct is an open aggregate; layered_validate checks the
// laws, and the checks that consume a model gate on it first.
struct LayeredCu {
  std::vector<BlockObject> blocks;
  std::vector<LayeredIdeal> ideals;
  std::vector<std::vector<bool>> leq;  // leq[i][j]: ideal i contained in j
  std::map<std::pair<std::size_t, std::size_t>, Matrix> delta;
  // Unit constants per block of the top layer (the class of the algebra
  // unit), the order unit consumed by the compact-element functor.
  std::vector<StepFn> unitValues;

  std::size_t bottom() const;  // unique least ideal; throws if absent
  std::size_t top() const;     // unique greatest ideal; throws if absent
  // Least upper bound when it exists and is unique.
  std::optional<std::size_t> join(std::size_t i, std::size_t j) const;
};

struct LayeredValidation {
  bool ok = true;
  std::string detail;  // first violated law, empty when ok
};

// Checks, in order: leq is a partial order with a unique bottom and top; the
// bottom ideal has no blocks and no K1 slots; containment of ideals implies
// containment of block sets; every pair has a unique join whose block set is
// the union; a delta map of the right shape exists for every comparable
// pair; delta on (I, I) is the identity; and delta composes functorially
// along every chain I <= J <= K.
LayeredValidation layered_validate(const LayeredCu& S);

// Element of a layered model: a full positive element of one ideal (one step
// function per block of that ideal, all nonzero) and a K1 class (one residue
// per slot).  Constructed through make_cu1, which checks membership and
// fullness concretely and reduces residues.
struct Cu1Element {
  std::size_t ideal = 0;
  std::vector<StepFn> x;
  std::vector<Int> k;

  friend bool operator==(const Cu1Element& a, const Cu1Element& b) {
    return a.ideal == b.ideal && a.x == b.x && a.k == b.k;
  }
  friend bool operator!=(const Cu1Element& a, const Cu1Element& b) {
    return !(a == b);
  }
};

Cu1Element make_cu1(const LayeredCu& S, std::size_t ideal,
                    std::vector<StepFn> x, std::vector<Int> k);
Cu1Element cu1_zero(const LayeredCu& S);
// The full infinite element of the top ideal paired with the given class;
// its translates are exactly the maximal elements.
Cu1Element cu1_top_infinity(const LayeredCu& S, std::vector<Int> k);
std::string cu1_str(const LayeredCu& S, const Cu1Element& a);

// Order rule: (x, k) <= (y, l) iff the ideal of x is contained in the ideal
// of y, x <= y on the common blocks, and the delta-pushforward of k equals l.
bool cu1_leq(const LayeredCu& S, const Cu1Element& a, const Cu1Element& b);

// Addition rule: the sum lives in the join ideal, the positive parts add
// blockwise, and both K1 classes are pushed forward into the join.
Cu1Element cu1_add(const LayeredCu& S, const Cu1Element& a,
                   const Cu1Element& b);

// The positive part of x is compact in every block (finite constants).
bool cu1_is_compact(const LayeredCu& S, const Cu1Element& a);

// The positive cone {(x, 0)}: as a Cu-semigroup it is the top layer, since
// every positive element is full in the ideal it generates.
CuObject positive_cone(const LayeredCu& S);

// The maximal elements (infinite full top element, any class) form a group
// isomorphic to the top ideal's K1.
FgAbGroup maximal_elements(const LayeredCu& S);

// Split-exactness of  0 -> positives -> model -> K1(top) -> 0  at sample
// scale: the structural laws are gated first (an inconsistent delta table
// fails there), then the positives embed order-compatibly, the kernel of
// the quotient is exactly the positive cone on the samples (a class-killing
// delta table fails here), the quotient onto the top K1 is additive on
// sample pairs, and the compact section k |-> (top infinity, k) splits it.
// On failure, `gate` (when non-null) receives the first failed gate.
bool split_exact_check(const LayeredCu& S,
                       const std::vector<Cu1Element>& samples,
                       std::string* gate = nullptr);

// ---------------------------------------------------------------------------
// Morphisms of layered models and their restriction to an ideal
// ---------------------------------------------------------------------------

// Morphism data between layered models: a monotone ideal map (each source
// ideal to the target ideal generated by its image), the concrete action on
// the top layers, and one K1 matrix per source ideal into the mapped ideal's
// presentation.
struct LayeredMorphism {
  std::vector<std::size_t> idealMap;
  // Concrete action on the top layers; absent means the identity action
  // (source and target must then share the block list).
  std::optional<BlockMorphism> cu;
  std::vector<Matrix> k1;
};

// The identity morphism of S.
LayeredMorphism layered_identity(const LayeredCu& S);

// Image of an element: apply the block action, locate the generated ideal,
// and push the class through the ideal's K1 matrix.  Throws InvalidParams
// when the image support does not match an ideal below idealMap.
Cu1Element layered_apply(const LayeredCu& S, const LayeredCu& T,
                         const LayeredMorphism& g, const Cu1Element& a);

// Restriction of g to the ideal I, per the exact-rows transpose: the
// restricted morphism maps the sub-model under I into the sub-model under
// J = idealMap[I], its positive component is the block action and its
// maximal component the K1 matrix.  diagramOk verifies, on the supplied
// samples from ideals below I, that both squares of the two-row exact
// diagram commute: the positive square (images of positives are positive
// with the expected support) and the quotient square (pushing to K1(J)
// commutes with delta).  The first violation is reported as a witness.
struct RestrictionReport {
  std::size_t image = 0;  // J
  Matrix k1Component;     // K1(I) -> K1(J)
  bool diagramOk = true;
  std::string witness;
};

RestrictionReport restrict_morphism(const LayeredCu& S, const LayeredCu& T,
                                    const LayeredMorphism& g, std::size_t I,
                                    const std::vector<Cu1Element>& samples);

// Two-ideal model ({0} below one simple layer) over a single block with a
// declared K1; the concrete form of the simple-algebra picture
// {0} united with (layer minus 0) x K1.
LayeredCu simple_layer_model(BlockObject block, std::vector<Int> k1Moduli);

// Layered model of a finite-stage algebra of a built system: ideals are the
// subsets of blocks, K1 slots are the fold moduli of the member blocks, and
// the connecting maps are the slot inclusions.
LayeredCu stage_layered_model(const InductiveSystem& sys, int n);

// ---------------------------------------------------------------------------
// The matching obstruction on classification tables
// ---------------------------------------------------------------------------

// Classification rows for a family of simple ideals: row i holds the (K0,
// K1) classes of the i-th ideal.  Rows are classification data only; the
// matching below consumes nothing else.
struct InvariantTable {
  std::vector<std::pair<GroupClass, GroupClass>> rows;
};

// The table of a built system's simple ideals, rows 0..count-1.
InvariantTable simple_ideal_table(const InductiveSystem& sys, int count);

struct MatchRow {
  std::size_t i = 0;
  std::vector<std::size_t> candidates;   // j with K0 and K1 both isomorphic
  std::optional<std::size_t> k0ForcedJ;  // unique j matching on K0 alone
  std::optional<std::size_t> k1ForcedJ;  // unique j matching on K1 alone
  std::vector<std::string> warnings;     // undecidable comparisons
};

struct MatchReport {
  bool feasible = false;
  std::vector<std::size_t> matching;  // row i -> matching[i], when feasible
  std::vector<MatchRow> rows;
  bool anyUndecidable = false;
  std::string note;
};

// For each row i of the first table, the candidate set of second-table rows
// isomorphic in both K0 and K1; feasible iff a perfect matching exists
// (exact search over the candidate sets).  A row-local empty candidate set
// certifies infeasibility regardless of rows outside the table, so
// truncating an infinite family cannot create spurious feasibility; the
// note records this.  Undecidable class comparisons are excluded from the
// candidate set and surface as row warnings.
MatchReport obstruction_match(const InvariantTable& a, const InvariantTable& b);

// ---------------------------------------------------------------------------
// Abstract ordered-monoid models and the axiomatics
// ---------------------------------------------------------------------------

// Finite model given by total tables on its fragment.  Axiom checks read the
// tables literally, with the finite-model conventions documented at
// axiom_check.  Synthetic models carry a "synthetic-" name prefix.
struct FiniteCuModel {
  std::string name;
  std::vector<std::string> labels;
  std::size_t zero = 0;
  std::optional<std::size_t> unit;
  std::vector<std::vector<std::size_t>> add;
  std::vector<std::vector<bool>> leq;
  std::vector<std::vector<bool>> wayBelow;
};

// Element of the symbolic pair model: an extended natural paired with an
// integer.
struct PairElem {
  ExtNat g;
  Int k;

  friend bool operator==(const PairElem& a, const PairElem& b) {
    return a.g == b.g && a.k == b.k;
  }
};

// The symbolic pair model: extended naturals times the integers under the
// componentwise sum, ordered by (g, k) <= (h, l) iff g <= h and k = l.  Its
// positive cone is the extended naturals paired with zero; way-below
// additionally requires the left first coordinate to be finite.  Arithmetic
// and predicates are exact and closed-form; exhaustive axiom sweeps run over
// the finite window {0..gMax, infinity} x {-kMax..kMax}.
struct PairCuModel {
  Int gMax = Int(4);
  Int kMax = Int(3);
};

using AbstractCuModel = std::variant<FiniteCuModel, PairCuModel>;

std::string model_name(const AbstractCuModel& m);

// Exact operations of the pair model.
PairElem pair_add(const PairElem& a, const PairElem& b);
bool pair_leq(const PairElem& a, const PairElem& b);
bool pair_way_below(const PairElem& a, const PairElem& b);
std::vector<PairElem> pair_window(const PairCuModel& m);  // deterministic
std::string pair_str(const PairElem& a);

// Structural laws of an abstract model on its fragment: commutative monoid
// with neutral zero, partial order, order compatible with addition, and
// way-below an auxiliary relation inside the order.  Returns the first
// violated law.
LayeredValidation abstract_validate(const AbstractCuModel& m);

enum class CuAxiom { PD, PC, PWC, PCC, O0, O1, O2, O3, O4 };
std::string axiom_str(CuAxiom a);

struct AxiomVerdict {
  CuAxiom axiom = CuAxiom::PD;
  bool holds = false;
  std::string witness;  // witness of the check, or the first counterexample
};

// Exhaustive check of one axiom on the model's fragment.
//
// Pair-model readings are closed-form: positive directedness is witnessed
// by (g, k) + (0, -k) >= 0; suprema of increasing sequences exist because
// the integer coordinate is constant along them.
//
// Finite-table readings: increasing sequences in a finite poset stabilize,
// so suprema exist whenever the order is a valid partial order (O1), every
// element must be its own compact approximation (O2 forces the way-below
// table to be reflexive), and compatibility of addition with suprema
// reduces to monotonicity of addition (O4).
AxiomVerdict axiom_check(const AbstractCuModel& m, CuAxiom axiom);
std::vector<AxiomVerdict> axiom_check_all(const AbstractCuModel& m);

// The ideal generated by a positive element.  Positively ordered fragments
// use the downward set of infinity times x; otherwise positive directedness
// and convexity are checked on the fragment first and the two-sided formula
// {y : exists y' with 0 <= y + y' <= infinity x} is used.  Throws
// ConditionFailed when x is not positive or the prerequisites fail.
std::vector<std::size_t> ideal_generated(const FiniteCuModel& m,
                                         std::size_t x);
// Window members of the generated ideal, plus a closed-form descriptor
// ("{0} x Z" for the zero element, "the whole model" for full elements).
std::vector<PairElem> ideal_generated(const PairCuModel& m, const PairElem& x);
std::string ideal_descriptor(const PairCuModel& m, const PairElem& x);

// Shipped models for the axiom suite, keyed by name: "trivial", "nbar-z",
// and "synthetic-pwc-violation" (a three-element fragment violating
// positive weak cancellation; synthetic by label, no algebra behind it).
std::vector<std::pair<std::string, AbstractCuModel>> shipped_models();
FiniteCuModel synthetic_pwc_violation();
PairCuModel nbar_z_model();

// ---------------------------------------------------------------------------
// Grothendieck group of the compact submonoid
// ---------------------------------------------------------------------------

struct GrothendieckData {
  FgAbGroup group;  // canonical form of the Grothendieck group of compacts
  // Image coordinates (over the canonical generators: free first, then one
  // per invariant factor) of each compact fragment member.
  std::vector<std::vector<Int>> cone;
  std::vector<std::string> coneLabels;
  std::vector<Int> unit;  // coordinates of the unit's class
  std::vector<std::string> notes;  // prerequisite confirmations, bounds
};

// The compact-element functor: Grothendieck group of the compact submonoid
// with positive cone the image of the compacts and the unit's class as
// order unit.  Prerequisites are checked and reported before construction:
// positive convexity, positive cancellation of compacts, and triviality of
// the ideal generated by zero; a violation raises PrerequisiteFailed naming
// the failed one.  The pair model fails the last prerequisite (its zero
// generates the zero-times-integers line).
GrothendieckData grothendieck_compacts(const FiniteCuModel& m);
GrothendieckData grothendieck_compacts(const PairCuModel& m);
GrothendieckData grothendieck_compacts(const LayeredCu& S);

// Desk-scale check of the recovery theorem on one stage algebra: the
// Grothendieck data of the stage's layered model must agree with the
// independently assembled K-theory (free part one generator per block,
// torsion the fold moduli), the class map must identify exactly the pairs
// identified by the block-multiplicity-and-class readout, the cone must
// meet its negative only in zero, and the unit class must be an order unit
// on the fragment.  `detail` (when non-null) receives the first mismatch.
bool hstar_recovers_kstar(const InductiveSystem& sys, int n,
                          std::string* detail = nullptr);

}  // namespace cuntzlab

#endif
