#include "cuntzlab/systems.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cuntzlab/errors.hpp"

namespace cuntzlab {

namespace {

// Quadratic pair sweeps stay below this slice size; linear membership sweeps
// below the second one.  Larger slices fall back to certificates.  These are
// scale policy, not caller resources: only the lambda ceiling sets the
// resource-limited flag.
const Int kPairSweepLimit(2000);
const Int kContainmentSweepLimit(200000);

Int rank_e(const SystemParams& params, Variant variant, int i) {
  return variant == Variant::A ? params.p(i - 1) : params.p(i);
}

bool is_integral(const Rational& x) {
  return boost::multiprecision::denominator(x) == 1;
}

// Outcome of sizing a comparison slice before enumerating it.  The interval
// tuple count (cap+1)^(2^level) is a lower bound for the slice size (every
// tuple extends to at least one member, taking all point values zero), so
// slices far beyond the sweep budget are rejected without running the
// counting odometer, whose cost is itself of tuple-count order.  The sweep
// budget is scale policy and binds silently; the caller's ceiling sets the
// resource-limited flag when it blocks an enumeration the policy would have
// run.
struct SlicePlan {
  bool fits = false;         // enumerable within ceiling and sweep budget
  bool overCeiling = false;  // the ceiling blocked a within-budget sweep
  std::optional<Int> count;  // exact size when it was computed
  std::optional<Int> lowerBound;  // interval-tuple lower bound when computed
};

SlicePlan plan_slice(const Int& valueChoices, int level, const Int& ceiling,
                     const Int& sweepLimit,
                     const std::function<Int()>& exactCount) {
  SlicePlan plan;
  if (level > 12) return plan;  // beyond any enumeration this tool attempts
  plan.lowerBound = pow_int(valueChoices, 1 << level);
  if (*plan.lowerBound > sweepLimit) return plan;
  plan.count = exactCount();
  if (*plan.count > sweepLimit) return plan;
  if (*plan.count > ceiling) {
    plan.overCeiling = true;
    return plan;
  }
  plan.fits = true;
  return plan;
}

// One distance-condition entry for the stage-n diagonal on fold block i.
IntertwineEntry distance_entry(const SystemParams& params, int n, int i,
                               int jn, const CuMorphism& da,
                               const CuMorphism& db, IntertwineMode mode,
                               const Int& ceiling) {
  IntertwineEntry e;
  e.stage = n;
  e.block = i;
  if (da == db) {
    e.mode = "identical";
    e.pass = true;
    e.bound = Rational(0);
    e.note = "the diagonal maps coincide; distance 0";
    return e;
  }
  std::string skipNote;
  if (mode == IntertwineMode::ExhaustiveFirst) {
    const auto* dom = std::get_if<FoldingCu>(&da.domain());
    const int level = jn + 1;
    if (dom != nullptr) {
      const SlicePlan plan =
          plan_slice(dom->q + 1, level, ceiling, kPairSweepLimit,
                     [&] { return lambda_count(*dom, level); });
      if (plan.fits) {
        auto witness = equiv_witness(da, db, level, ceiling);
        e.mode = "exhaustive";
        e.level = level;
        e.pass = !witness.has_value();
        if (e.pass) {
          e.bound = Rational(1, pow_int(2, level));
          e.note = "slice of " + plan.count->str() +
                   " functions enumerated; distance at most 1/2^" +
                   std::to_string(level) + ", strictly below 1/2^" +
                   std::to_string(jn);
        } else {
          e.witness = std::move(witness);
          e.note = "enumeration found a violating pair at level " +
                   std::to_string(level);
          try {
            const int l = criterion_level(params, n, i);
            if (l > jn)
              e.note += "; inconsistent with the counting certificate at "
                        "level " +
                        std::to_string(l);
          } catch (const Error&) {
          }
        }
        return e;
      }
      e.resourceLimited = plan.overCeiling;
      skipNote = plan.overCeiling
                     ? "the ceiling blocks the level-" + std::to_string(level) +
                           " sweep of " + plan.count->str() + " functions; "
                     : "level-" + std::to_string(level) + " slice holds " +
                           (plan.count ? plan.count->str()
                                       : "at least " + plan.lowerBound->str()) +
                           " functions, beyond the pair-sweep budget; ";
    }
  }
  e.mode = "criterion";
  try {
    const int l = criterion_level(params, n, i);
    e.level = l;
    e.bound = Rational(1, pow_int(2, l));
    e.pass = l > jn;
    if (e.pass) {
      e.note = skipNote + "certified distance at most 1/2^" +
               std::to_string(l) + ", strictly below 1/2^" +
               std::to_string(jn);
    } else {
      e.note = skipNote + "ConditionFailed: certified level " +
               std::to_string(l) + " does not exceed j(" + std::to_string(n) +
               ") = " + std::to_string(jn) +
               " (with j(n) = n the strict bound needs r_0 >= 2)";
    }
  } catch (const ConditionFailed& ex) {
    e.pass = false;
    e.note = skipNote + "ConditionFailed: " + ex.what();
  }
  return e;
}

// One containment-condition entry for the stage-n diagonal on fold block i.
IntertwineEntry containment_entry(const SystemParams& params, int n, int i,
                                  int jn, const CuMorphism& da,
                                  const CuMorphism& db, IntertwineMode mode,
                                  const Int& ceiling) {
  IntertwineEntry e;
  e.stage = n;
  e.block = i;
  e.level = jn;
  if (jn < 1) {
    e.mode = "structural";
    e.pass = true;
    e.note = "level-0 slices hold compact constants only; containment is "
             "immediate";
    return e;
  }
  const std::string lemma =
      "folds halve dyadic breakpoint grids and node evaluations add compact "
      "constants, so level-j images lie in the level-(j-1) basis";
  if (mode == IntertwineMode::CriterionOnly) {
    e.mode = "structural";
    e.pass = true;
    e.note = lemma;
    return e;
  }
  const Int qi = params.q(i);
  const auto* dom = std::get_if<FoldingCu>(&da.domain());
  if (dom == nullptr) {
    e.mode = "structural";
    e.pass = true;
    e.note = lemma;
    return e;
  }
  const BasisLevel slice{*dom, jn, qi};
  const SlicePlan plan =
      plan_slice(qi + 1, jn, ceiling, kContainmentSweepLimit,
                 [&] { return basis_count(slice); });
  if (!plan.fits) {
    e.mode = "structural";
    e.pass = true;
    e.resourceLimited = plan.overCeiling;
    e.note = lemma + (plan.overCeiling
                          ? "; the ceiling blocks the level-" +
                                std::to_string(jn) + " sweep"
                          : "; the level-" + std::to_string(jn) +
                                " slice is beyond the enumeration budget");
    return e;
  }
  const bool okA = basis_containment(da, jn, qi, ceiling);
  const bool okB = basis_containment(db, jn, qi, ceiling);
  e.mode = "exhaustive";
  e.pass = okA && okB;
  if (e.pass) {
    e.note = "slice of " + plan.count->str() +
             " functions (value cap q = " + qi.str() +
             ") maps into the level-" + std::to_string(jn - 1) +
             " basis under both systems' maps";
  } else {
    e.note = std::string(okA ? "second" : "first") +
             " system's images leave the level-" + std::to_string(jn - 1) +
             " basis";
  }
  return e;
}

}  // namespace

std::string variant_str(Variant v) { return v == Variant::A ? "A" : "B"; }

StepFn FoldBlockInfo::unit() const {
  return StepFn::constant(ExtNat(order * pow_int(q, level)));
}

DirectSum StageAlgebra::block_sum() const {
  DirectSum sum;
  for (const FoldBlockInfo& b : foldBlocks) sum.components.push_back(b.object());
  if (intervalBlock) sum.components.push_back(PlainLsc{});
  return sum;
}

std::vector<StepFn> StageAlgebra::units() const {
  std::vector<StepFn> us;
  for (const FoldBlockInfo& b : foldBlocks) us.push_back(b.unit());
  if (intervalBlock) us.push_back(StepFn::constant(ExtNat(1)));
  return us;
}

InductiveSystem build_system(const SystemParams& params, Variant variant) {
  const int stageMax = params.stage_count();
  std::vector<StageAlgebra> stages;
  for (int n = 0; n <= stageMax; ++n) {
    StageAlgebra st;
    st.index = n;
    for (int i = 0; i < n; ++i)
      st.foldBlocks.push_back(FoldBlockInfo{params.q(i), n - i,
                                            params.order(n, i),
                                            rank_e(params, variant, i)});
    stages.push_back(std::move(st));
  }

  std::vector<BlockMorphism> morphisms;
  for (int n = 0; n < stageMax; ++n) {
    const DirectSum src = stages[n].block_sum();
    const DirectSum tgt = stages[n + 1].block_sum();
    BlockMorphism::Entries entries(
        tgt.components.size(),
        std::vector<std::optional<CuMorphism>>(src.components.size()));
    for (int i = 0; i < n; ++i) {
      const Int qi = params.q(i);
      const Int grid = pow_int(qi, params.r(n));
      entries[i][i] = CuMorphism(
          FoldingCu{qi, n - i}, FoldingCu{qi, n + 1 - i},
          {FoldTerm{rank_e(params, variant, i), qi}, NodeFamilyTerm{grid, qi}});
    }
    const Int qn = params.q(n);
    entries[n][n] =
        CuMorphism(PlainLsc{}, FoldingCu{qn, 1},
                   {PointEvalTerm{Rational(0), pow_int(qn, params.r(n) + 1)}});
    entries[n + 1][n] =
        CuMorphism(PlainLsc{}, PlainLsc{}, {PointEvalTerm{params.d(n), Int(1)}});
    BlockMorphism m(src, tgt, std::move(entries));

    if (apply_block(m, stages[n].units()) != stages[n + 1].units())
      throw ConditionFailed("stage map out of stage " + std::to_string(n) +
                            " is not unital");
    for (int i = 0; i < n; ++i) {
      const CuMorphism& diag = *m.entry(i, i);
      if (induced_k0(diag) != pow_int(params.q(i), params.r(n) + 1))
        throw ConditionFailed("diagonal K0 multiplier drifts from q^(r+1)");
      if (induced_k1(diag) != rank_e(params, variant, i) % params.q(i))
        throw ConditionFailed("diagonal K1 multiplier drifts from rankE");
    }
    morphisms.push_back(std::move(m));
  }

  return InductiveSystem{variant, params, std::move(stages),
                         std::move(morphisms), std::nullopt};
}

const StageAlgebra& system_stage(const InductiveSystem& sys, int n) {
  const int pos = n - sys.first_stage();
  if (pos < 0 || pos >= static_cast<int>(sys.stages.size()))
    throw InvalidParams("stage " + std::to_string(n) +
                        " is outside the built tower");
  return sys.stages[pos];
}

CuObject stage_cu(const InductiveSystem& sys, int n) {
  const DirectSum sum = system_stage(sys, n).block_sum();
  if (sum.components.size() == 1) {
    if (const auto* f = std::get_if<FoldingCu>(&sum.components[0])) return *f;
    return PlainLsc{};
  }
  return sum;
}

const BlockMorphism& stage_cu_morphism(const InductiveSystem& sys, int n) {
  const int pos = n - sys.first_stage();
  if (pos < 0 || pos >= static_cast<int>(sys.morphisms.size()))
    throw InvalidParams("no stage map out of stage " + std::to_string(n));
  return sys.morphisms[pos];
}

std::vector<StepFn> stage_units(const InductiveSystem& sys, int n) {
  return system_stage(sys, n).units();
}

InductiveSystem simple_ideal_subsystem(const InductiveSystem& sys, int i) {
  if (sys.idealBlock)
    throw InvalidParams("simple ideals are cut from the full system only");
  const int stageMax = sys.params.stage_count();
  if (i < 0 || i >= stageMax - 1)
    throw InvalidParams("ideal index needs 0 <= i < stage_count() - 1");

  std::vector<StageAlgebra> stages;
  for (int n = i + 1; n <= stageMax; ++n) {
    StageAlgebra st;
    st.index = n;
    st.foldBlocks.push_back(system_stage(sys, n).foldBlocks[i]);
    st.intervalBlock = false;
    stages.push_back(std::move(st));
  }
  std::vector<BlockMorphism> morphisms;
  for (int n = i + 1; n < stageMax; ++n) {
    const CuMorphism diag = *stage_cu_morphism(sys, n).entry(i, i);
    BlockMorphism::Entries entries{{diag}};
    morphisms.push_back(BlockMorphism(stages[n - i - 1].block_sum(),
                                      stages[n - i].block_sum(),
                                      std::move(entries)));
  }
  return InductiveSystem{sys.variant, sys.params, std::move(stages),
                         std::move(morphisms), i};
}

std::pair<GroupClass, GroupClass> ideal_invariants(const InductiveSystem& sys,
                                                   int i) {
  if (sys.idealBlock)
    throw InvalidParams("ideal invariants are computed from the full system");
  const int stageMax = sys.params.stage_count();
  if (i < 0 || i >= stageMax - 1)
    throw InvalidParams("ideal index needs 0 <= i < stage_count() - 1");

  const Int qi = sys.params.q(i);
  std::vector<Int> k0Multipliers;
  std::optional<Int> k1Multiplier;
  for (int n = i + 1; n < stageMax; ++n) {
    const CuMorphism& diag = *stage_cu_morphism(sys, n).entry(i, i);
    k0Multipliers.push_back(induced_k0(diag));
    const Int k1 = induced_k1(diag);
    if (k1Multiplier && *k1Multiplier != k1)
      throw UnsupportedSystem("stage maps disagree on the K1 multiplier");
    k1Multiplier = k1;
  }
  const LocalizedClass k0 = colim_rank_one(k0Multipliers);
  const FgAbGroup k1 = colim_finite(
      FgAbGroup::cyclic(qi), GroupMorphism::cyclic_mult(qi, *k1Multiplier));
  return {class_normalize(GroupClass(k0)), class_normalize(GroupClass(k1))};
}

std::pair<GroupClass, GroupClass> algebra_k_theory(const InductiveSystem& sys) {
  if (sys.idealBlock)
    throw InvalidParams("limit K-theory is computed from the full system");
  if (sys.params.stage_count() == 0) {
    // A tower with no fold blocks is the interval algebra alone.
    return {GroupClass(FgAbGroup(1, {})), GroupClass(FgAbGroup())};
  }
  const std::vector<Int>& primes = sys.params.primes();
  std::vector<Int> qSeq;
  for (int k = 0; k < static_cast<int>(primes.size()); ++k)
    qSeq.push_back(sys.params.q(k));
  const int offset = sys.variant == Variant::A ? 0 : -1;
  const GroupClass idealK0 = FormalSumClass{
      {}, IndexRule{IndexRule::Kind::LocalizedQSeq, 0, qSeq}};
  const GroupClass idealK1 = FormalSumClass{
      {}, IndexRule{IndexRule::Kind::TorsionPrimeSeq, offset, primes}};
  return six_term_assemble(idealK0, idealK1);
}

namespace {

// Smallest grid node k/D (0 < k < D) carrying a positive value of h,
// scanning cells left to right; nullopt when no node does.
std::optional<Rational> first_positive_node(const StepFn& h, const Int& D) {
  std::vector<Rational> bounds;
  bounds.push_back(Rational(0));
  for (const Rational& b : h.partition().breakpoints()) bounds.push_back(b);
  bounds.push_back(Rational(1));
  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    if (j > 0 && is_integral(bounds[j] * D) && !h.value_at(bounds[j]).is_zero())
      return bounds[j];
    const Rational mid = (bounds[j] + bounds[j + 1]) / 2;
    if (h.value_at(mid).is_zero()) continue;
    const Int kmin = rational_floor(bounds[j] * D) + 1;
    const Rational node(kmin, D);
    if (node < bounds[j + 1]) return node;
  }
  return std::nullopt;
}

}  // namespace

SimplicityWitness simplicity_witness(const InductiveSystem& sys, int i,
                                     const StepFn& g, int n) {
  if (sys.idealBlock)
    throw InvalidParams("the simplicity probe walks the full system");
  const int stageMax = sys.params.stage_count();
  if (i < 0 || i >= stageMax)
    throw InvalidParams("fold block index out of range");
  if (n < i + 1 || n > stageMax)
    throw InvalidParams("fold block " + std::to_string(i) +
                        " exists at stages " + std::to_string(i + 1) +
                        " and later");
  const Int qi = sys.params.q(i);
  if (!member(BlockObject(FoldingCu{qi, n - i}), g))
    throw DomainMismatch("the element does not belong to fold block " +
                         std::to_string(i) + " at stage " + std::to_string(n));
  if (leq(g, StepFn()))
    throw InvalidParams("the simplicity probe needs a nonzero element");

  StepFn h = g.canonical();
  for (int m = n; m < stageMax; ++m) {
    const Int grid = pow_int(qi, sys.params.r(m));
    if (auto node = first_positive_node(h, grid))
      return SimplicityWitness{m, node, false};
    if (m + 1 < stageMax)
      h = apply(*stage_cu_morphism(sys, m).entry(i, i), h);
  }
  return SimplicityWitness{std::nullopt, std::nullopt, true};
}

IntertwineReport intertwining_check(const InductiveSystem& sysA,
                                    const InductiveSystem& sysB,
                                    const std::vector<int>& jSeq, int nMax,
                                    IntertwineMode mode,
                                    const Int& lambdaCeiling) {
  if (sysA.idealBlock || sysB.idealBlock)
    throw InvalidParams("the intertwining check compares full systems");
  if (sysA.params != sysB.params)
    throw InvalidParams("the two systems must share one parameter set");
  if (sysA.variant == sysB.variant)
    throw InvalidParams("the intertwining check compares the two variants");
  const int stageMax = sysA.params.stage_count();
  if (nMax < 0 || nMax > stageMax - 1)
    throw InvalidParams("nMax must index a built stage map: 0 <= nMax <= "
                        "stage_count() - 1");
  if (static_cast<int>(jSeq.size()) < nMax + 1)
    throw InvalidParams("the level sequence must cover stages 0..nMax");
  for (int n = 0; n <= nMax; ++n)
    if (jSeq[n] < 0) throw InvalidParams("levels must be non-negative");

  IntertwineReport rep;
  rep.jSeq.assign(jSeq.begin(), jSeq.begin() + nMax + 1);
  rep.nMax = nMax;

  for (int n = 0; n <= nMax; ++n) {
    const int jn = jSeq[n];
    const BlockMorphism& a = stage_cu_morphism(sysA, n);
    const BlockMorphism& b = stage_cu_morphism(sysB, n);

    // Everything off the fold diagonals is built identically in the two
    // systems; one entry records that those parts are at distance zero.
    bool identicalRest = true;
    for (std::size_t row = 0; row < a.rows(); ++row)
      for (std::size_t col = 0; col < a.cols(); ++col) {
        const bool diagonal = row == col && static_cast<int>(row) < n;
        if (!diagonal && !(a.entry(row, col) == b.entry(row, col)))
          identicalRest = false;
      }
    IntertwineEntry ident;
    ident.stage = n;
    ident.mode = "identical";
    ident.pass = identicalRest;
    ident.bound = Rational(0);
    ident.note = identicalRest
                     ? (n == 0 ? "the stage-0 maps coincide entirely"
                               : "interval-column maps coincide; distance 0")
                     : "unexpected asymmetry off the fold diagonals";
    rep.distance.push_back(std::move(ident));

    for (int i = 0; i < n; ++i) {
      const CuMorphism& da = *a.entry(i, i);
      const CuMorphism& db = *b.entry(i, i);
      rep.distance.push_back(distance_entry(sysA.params, n, i, jn, da, db,
                                            mode, lambdaCeiling));
      rep.containment.push_back(containment_entry(sysA.params, n, i, jn, da,
                                                  db, mode, lambdaCeiling));
    }

    IntertwineEntry column;
    column.stage = n;
    column.mode = "structural";
    column.pass = true;
    column.note = "interval-column images are compact constants, members of "
                  "every basis level";
    rep.containment.push_back(std::move(column));

    if (n < nMax && jSeq[n] - 1 > jSeq[n + 1]) {
      IntertwineEntry nest;
      nest.stage = n;
      nest.mode = "structural";
      nest.pass = false;
      nest.note = "level sequence is not nested: j(n) - 1 exceeds j(n+1)";
      rep.containment.push_back(std::move(nest));
    }
  }

  rep.allPass = true;
  rep.anyResourceLimited = false;
  for (const auto* list : {&rep.distance, &rep.containment})
    for (const IntertwineEntry& e : *list) {
      rep.allPass = rep.allPass && e.pass;
      rep.anyResourceLimited = rep.anyResourceLimited || e.resourceLimited;
    }
  bool identityLevels = true;
  for (int n = 0; n <= nMax; ++n)
    identityLevels = identityLevels && jSeq[n] == n;
  if (rep.allPass && identityLevels) {
    rep.verdict = "Cu(A) ≅ Cu(B) certified at desk scale (n ≤ " +
                  std::to_string(nMax) + ")";
  } else if (rep.allPass) {
    rep.verdict = "all checked conditions hold for the supplied level "
                  "sequence (n ≤ " +
                  std::to_string(nMax) + ")";
  } else {
    rep.verdict =
        "not certified: a checked condition fails; see the report entries";
  }
  return rep;
}

}  // namespace cuntzlab
