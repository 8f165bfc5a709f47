#ifndef CUNTZLAB_SYSTEMS_HPP
#define CUNTZLAB_SYSTEMS_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cuntzlab/abgroups.hpp"
#include "cuntzlab/cumorph.hpp"

namespace cuntzlab {

// The two inductive systems differ in a single number per fold block: the
// rank of the twisting projection.  Variant A uses p_{i-1}, variant B uses
// p_i.  Everything else is built by the same code so the two towers cannot
// drift apart structurally.
enum class Variant { A, B };

std::string variant_str(Variant v);

// One matrix-amplified folding block of a stage algebra.  The semigroup
// picture forgets the amplification `order` except through the unit, which
// is the constant order * q^level.
struct FoldBlockInfo {
  Int q;
  int level = 1;  // stage index minus block index
  Int order;      // matrix amplification [n,i]
  Int rankE;      // twisting rank: p_{i-1} (variant A) or p_i (variant B)

  FoldingCu object() const { return FoldingCu{q, level}; }
  StepFn unit() const;  // constant order * q^level

  friend bool operator==(const FoldBlockInfo& a, const FoldBlockInfo& b) {
    return a.q == b.q && a.level == b.level && a.order == b.order &&
           a.rankE == b.rankE;
  }
};

// Stage n of a system: fold blocks 0..n-1 plus one interval block in the
// full systems.  Simple-ideal subsystems keep a single fold block and no
// interval block.
struct StageAlgebra {
  int index = 0;
  std::vector<FoldBlockInfo> foldBlocks;
  bool intervalBlock = true;

  DirectSum block_sum() const;        // components in block order
  std::vector<StepFn> units() const;  // unit constant of every block
};

// A finite tower of stage algebras with one block morphism per consecutive
// pair.  `stages` holds consecutive indices first_stage()..last_stage();
// full systems start at stage 0, a simple-ideal subsystem starts at stage
// idealBlock+1 and records which block of the parent it keeps.
struct InductiveSystem {
  Variant variant = Variant::A;
  SystemParams params;
  std::vector<StageAlgebra> stages;
  std::vector<BlockMorphism> morphisms;  // stage k -> k+1, one per pair
  std::optional<int> idealBlock;

  int first_stage() const { return stages.empty() ? 0 : stages.front().index; }
  int last_stage() const { return stages.empty() ? -1 : stages.back().index; }
};

// Builds stages 0..params.stage_count() and the connecting morphisms.  The
// stage map out of stage n has n+2 partial morphisms: for each fold block
// i < n the diagonal Fold{rankE, q_i} plus the node family over the grid
// q_i^{r_n}, the interval block feeding the new fold block through an
// endpoint evaluation of multiplicity q_n^{r_n + 1}, and the interval block
// mapping to itself by evaluation at the dense point d_n.  Construction
// asserts that every stage map is unital and that the induced K-theory
// multipliers of each diagonal match q_i^{r_n + 1} and rankE.
InductiveSystem build_system(const SystemParams& params, Variant variant);

const StageAlgebra& system_stage(const InductiveSystem& sys, int n);

// Semigroup object of stage n: the direct sum of its blocks, or the bare
// block when the stage has only one.
CuObject stage_cu(const InductiveSystem& sys, int n);

// Morphism from stage n to stage n+1 (n must not be the last stage).
const BlockMorphism& stage_cu_morphism(const InductiveSystem& sys, int n);

std::vector<StepFn> stage_units(const InductiveSystem& sys, int n);

// Restriction of a full system to its i-th fold blocks with the diagonal
// partial maps only.  Requires i < stage_count() - 1 so that the subsystem
// carries at least one connecting map.
InductiveSystem simple_ideal_subsystem(const InductiveSystem& sys, int i);

// (K0, K1) of the i-th simple ideal of a full system: K0 is the colimit of
// rank-one groups along the induced K0 multipliers of the diagonal maps, K1
// the stable image of multiplication by rankE on Z/q_i.
std::pair<GroupClass, GroupClass> ideal_invariants(const InductiveSystem& sys,
                                                   int i);

// (K0, K1) of the limit algebra: the extension of the interval quotient by
// the direct sum of all simple ideals, assembled by six_term_assemble over
// symbolic formal sums indexed by the parameter sequences.  A system with no
// fold blocks yields (Z, 0).
std::pair<GroupClass, GroupClass> algebra_k_theory(const InductiveSystem& sys);

// Witness that a nonzero element of a fold block eventually covers an
// evaluation node of the stage map: the first stage m >= n at which some
// node k/q_i^{r_m} carries a positive value of the element's image.  When
// the finite tower ends before that happens, the result reports exhaustion
// instead of failing (truncation, not refutation).
struct SimplicityWitness {
  std::optional<int> m;
  std::optional<Rational> point;
  bool stageExhausted = false;
};

SimplicityWitness simplicity_witness(const InductiveSystem& sys, int i,
                                     const StepFn& g, int n);

// How the two conditions of the approximate-intertwining theorem are
// checked per stage: ExhaustiveFirst enumerates comparison slices wherever
// they fit the budgets and falls back to the counting-criterion certificate
// beyond; CriterionOnly uses certificates everywhere.
enum class IntertwineMode { ExhaustiveFirst, CriterionOnly };

// One checked condition.  `mode` is "exhaustive" (slice enumerated),
// "criterion" (counting certificate), "identical" (the two systems' partial
// maps coincide, distance zero), or "structural" (containment that holds
// because folds halve breakpoint grids and point evaluations land on
// compact constants).  `resourceLimited` marks entries where the caller's
// ceiling blocked an enumeration the built-in sweep budget would have run;
// slices beyond the built-in budget fall back to certificates silently, as
// scale policy rather than a resource failure.
struct IntertwineEntry {
  int stage = 0;
  std::optional<int> block;
  std::string mode;
  std::optional<int> level;
  std::optional<Rational> bound;
  bool pass = false;
  bool resourceLimited = false;
  std::string note;
  std::optional<EquivWitness> witness;
};

struct IntertwineReport {
  std::vector<int> jSeq;
  int nMax = 0;
  std::vector<IntertwineEntry> distance;     // per-stage distance condition
  std::vector<IntertwineEntry> containment;  // per-stage basis containment
  bool allPass = false;
  bool anyResourceLimited = false;
  std::string verdict;
};

// Checks, for every stage n <= nMax, the two sufficient conditions for the
// stage maps of the two systems to intertwine approximately: (i) the level-
// j_n basis slice maps into the level-(j_n - 1) basis, and (ii) the distance
// between the stage maps is strictly below 1/2^{j_n}.  Condition (ii) is
// certified by the counting criterion (strict) and confirmed by slice
// enumeration at level j_n + 1 where that fits the budgets.  Failures are
// report entries, never exceptions.
IntertwineReport intertwining_check(
    const InductiveSystem& sysA, const InductiveSystem& sysB,
    const std::vector<int>& jSeq, int nMax,
    IntertwineMode mode = IntertwineMode::ExhaustiveFirst,
    const Int& lambdaCeiling = Int(2000000));

}  // namespace cuntzlab

#endif
