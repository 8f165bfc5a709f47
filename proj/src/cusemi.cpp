#include "cuntzlab/cusemi.hpp"

#include <algorithm>
#include <sstream>

#include "cuntzlab/errors.hpp"

namespace cuntzlab {

namespace {

// Per-cell upper bound for way-below candidates against f (given refined to
// partition R): the minimum of f over the cell's closure neighborhood.
std::vector<ExtNat> neighborhood_bounds(const StepFn& rf) {
  const std::size_t cc = rf.partition().cell_count();
  std::vector<ExtNat> out(cc, ExtNat::infinity());
  for (std::size_t c = 0; c < cc; ++c)
    for (const std::size_t cn : cell_neighbors(c, cc))
      out[c] = min(out[c], rf.cell_value(cn));
  return out;
}

// Index of the point of p sitting at position x, if any.
std::optional<std::size_t> point_index_at(const Partition& p,
                                          const Rational& x) {
  for (std::size_t j = 0; j < p.point_count(); ++j)
    if (p.point(j) == x) return j;
  return std::nullopt;
}

bool is_integer(const Rational& x) {
  return boost::multiprecision::denominator(x) == 1;
}

}  // namespace

bool member(const BlockObject& obj, const StepFn& f) {
  if (std::holds_alternative<PlainLsc>(obj)) return true;
  const auto& fc = std::get<FoldingCu>(obj);
  return f.value_at(Rational(0)).divisible_by(fc.q) &&
         f.value_at(Rational(1)).divisible_by(fc.q);
}

bool member(const CuObject& obj, const StepFn& f) {
  if (std::holds_alternative<DirectSum>(obj))
    throw DomainMismatch("member: direct sum takes a tuple, not one function");
  if (std::holds_alternative<FoldingCu>(obj))
    return member(BlockObject(std::get<FoldingCu>(obj)), f);
  return true;
}

bool member_tuple(const DirectSum& obj, const std::vector<StepFn>& fs) {
  if (obj.components.size() != fs.size())
    throw DomainMismatch("member_tuple: arity mismatch");
  for (std::size_t i = 0; i < fs.size(); ++i)
    if (!member(obj.components[i], fs[i])) return false;
  return true;
}

std::string object_str(const BlockObject& obj) {
  if (std::holds_alternative<PlainLsc>(obj)) return "Lsc";
  const auto& fc = std::get<FoldingCu>(obj);
  std::ostringstream os;
  os << "Fold(q=" << fc.q << ",level=" << fc.level << ")";
  return os.str();
}

bool basis_member(const BasisLevel& level, const StepFn& f) {
  if (level.n < 0) throw InvalidParams("basis_member: negative level");
  if (!f.finite_valued()) return false;
  if (!member(level.object, f)) return false;
  const Int cap = level.effective_cap();
  const unsigned G = 1u << static_cast<unsigned>(level.n);
  const Partition grid = Partition::equidistant(G);
  const Partition R = Partition::merge(grid, f.partition());
  const StepFn rf = f.refine(R);
  // Every cell of R strictly inside one grid cell must carry that grid cell's
  // single value; grid point values are free below cap.
  const std::size_t pc = R.point_count();
  std::vector<bool> isGridPoint(pc, false);
  for (std::size_t j = 0; j < pc; ++j)
    isGridPoint[j] = is_integer(R.point(j) * G);
  for (std::size_t j = 0; j + 1 < pc; ++j) {
    // Interval j of R lies in grid cell floor(left * G).
    const ExtNat& iv = rf.interval_values()[j];
    if (!(iv <= ExtNat(cap))) return false;
    if (!isGridPoint[j + 1]) {
      // Interior point and the following interval must match this value.
      if (!(rf.point_values()[j + 1] == iv)) return false;
      if (!(rf.interval_values()[j + 1] == iv)) return false;
    }
  }
  for (std::size_t j = 0; j < pc; ++j)
    if (isGridPoint[j] && !(rf.point_values()[j] <= ExtNat(cap))) return false;
  return true;
}

StepFn basis_project(const BlockObject& obj, const StepFn& f, int n,
                     std::optional<Int> cap) {
  if (n < 0) throw InvalidParams("basis_project: negative level");
  if (!member(obj, f))
    throw DomainMismatch("basis_project: function outside the object");
  const Int capV = cap ? *cap : pow_int(2, n);
  if (capV < 0) throw InvalidParams("basis_project: negative cap");
  const unsigned G = 1u << static_cast<unsigned>(n);
  const Partition grid = Partition::equidistant(G);
  const Partition R = Partition::merge(grid, f.partition());
  const StepFn rf = f.refine(R);
  const std::vector<ExtNat> bound = neighborhood_bounds(rf);

  // Interval value per grid cell: minimum bound over the sub-cells strictly
  // inside it (its own sub-intervals and any interior points of f).
  std::vector<ExtNat> ivals(G, ExtNat::infinity());
  const std::size_t pc = R.point_count();
  std::vector<std::size_t> gridIndexOfPoint(pc, 0);
  for (std::size_t j = 0; j + 1 < pc; ++j) {
    const Rational scaled = R.point(j) * G;
    const std::size_t cell = rational_floor(scaled).convert_to<std::size_t>();
    ivals[cell] = min(ivals[cell], bound[2 * j + 1]);          // sub-interval
    if (!is_integer(scaled)) ivals[cell] = min(ivals[cell], bound[2 * j]);
  }
  for (auto& v : ivals) v = min(v, ExtNat(capV));

  std::vector<ExtNat> pvals(G + 1, ExtNat(0));
  for (unsigned j = 0; j <= G; ++j) {
    const Rational x{Int(j), Int(G)};
    const auto pj = point_index_at(R, x);
    if (!pj) throw Error("basis_project: grid point missing from refinement");
    ExtNat w = min(bound[2 * *pj], ExtNat(capV));
    if (j > 0) w = min(w, ivals[j - 1]);
    if (j < G) w = min(w, ivals[j]);
    if (std::holds_alternative<FoldingCu>(obj) && (j == 0 || j == G))
      w = w.floor_to_multiple(std::get<FoldingCu>(obj).q);
    pvals[j] = w;
  }
  return StepFn(grid, std::move(ivals), std::move(pvals)).canonical();
}

namespace {

// Allowed value sets for the grid points given the interval tuple, in the
// Lambda slice of parameter q: endpoints from {0, q}, interior points any
// value up to the adjacent interval values.
std::vector<std::vector<Int>> lambda_point_choices(
    const std::vector<Int>& ivals, const Int& q) {
  const std::size_t G = ivals.size();
  std::vector<std::vector<Int>> out(G + 1);
  out[0].push_back(0);
  if (q <= ivals.front()) out[0].push_back(q);
  for (std::size_t j = 1; j < G; ++j) {
    const Int m = std::min(ivals[j - 1], ivals[j]);
    for (Int v = 0; v <= m; ++v) out[j].push_back(v);
  }
  out[G].push_back(0);
  if (q <= ivals.back()) out[G].push_back(q);
  return out;
}

bool next_tuple(std::vector<Int>& digits, const Int& radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (digits[i] + 1 < radix) {
      ++digits[i];
      std::fill(digits.begin() + static_cast<long>(i) + 1, digits.end(),
                Int(0));
      return true;
    }
  }
  return false;
}

}  // namespace

Int lambda_count(const FoldingCu& obj, int n) {
  if (n < 0) throw InvalidParams("lambda_count: negative level");
  if (obj.q <= 0) throw InvalidParams("lambda_count: q must be positive");
  const unsigned G = 1u << static_cast<unsigned>(n);
  std::vector<Int> ivals(G, 0);
  Int total = 0;
  do {
    Int ways = 1;
    for (const auto& choices : lambda_point_choices(ivals, obj.q))
      ways *= Int(choices.size());
    total += ways;
  } while (next_tuple(ivals, obj.q + 1));
  return total;
}

std::vector<StepFn> enumerate_lambda(const FoldingCu& obj, int n,
                                     const Int& ceiling) {
  const Int total = lambda_count(obj, n);
  if (total > ceiling)
    throw ResourceLimit("enumerate_lambda: slice of size " + total.str() +
                        " exceeds ceiling " + ceiling.str());
  const unsigned G = 1u << static_cast<unsigned>(n);
  const Partition grid = Partition::equidistant(G);
  std::vector<StepFn> out;
  out.reserve(total.convert_to<std::size_t>());
  std::vector<Int> ivals(G, 0);
  do {
    const auto choices = lambda_point_choices(ivals, obj.q);
    std::vector<std::size_t> pick(G + 1, 0);
    bool more = true;
    while (more) {
      std::vector<ExtNat> iv, pv;
      iv.reserve(G);
      pv.reserve(G + 1);
      for (const Int& v : ivals) iv.emplace_back(v);
      for (std::size_t j = 0; j <= G; ++j)
        pv.emplace_back(choices[j][pick[j]]);
      out.push_back(StepFn(grid, std::move(iv), std::move(pv)).canonical());
      more = false;
      for (std::size_t j = pick.size(); j-- > 0;) {
        if (pick[j] + 1 < choices[j].size()) {
          ++pick[j];
          std::fill(pick.begin() + static_cast<long>(j) + 1, pick.end(), 0u);
          more = true;
          break;
        }
      }
    }
  } while (next_tuple(ivals, obj.q + 1));
  return out;
}

namespace {

// Allowed grid-point values for the basis slice given the interval tuple:
// everything up to the adjacent interval values, with endpoint values
// additionally restricted to multiples of the fold parameter.
std::vector<std::vector<Int>> basis_point_choices(
    const std::vector<Int>& ivals, const std::optional<Int>& divisor) {
  const std::size_t G = ivals.size();
  std::vector<std::vector<Int>> out(G + 1);
  const Int step = divisor ? *divisor : Int(1);
  for (Int v = 0; v <= ivals.front(); v += step) out[0].push_back(v);
  for (std::size_t j = 1; j < G; ++j) {
    const Int m = std::min(ivals[j - 1], ivals[j]);
    for (Int v = 0; v <= m; ++v) out[j].push_back(v);
  }
  for (Int v = 0; v <= ivals.back(); v += step) out[G].push_back(v);
  return out;
}

std::optional<Int> endpoint_divisor(const BlockObject& obj) {
  if (const auto* fold = std::get_if<FoldingCu>(&obj)) return fold->q;
  return std::nullopt;
}

}  // namespace

Int basis_count(const BasisLevel& level) {
  if (level.n < 0) throw InvalidParams("basis_count: negative level");
  const Int cap = level.effective_cap();
  if (cap < 0) throw InvalidParams("basis_count: negative cap");
  const std::optional<Int> divisor = endpoint_divisor(level.object);
  const unsigned G = 1u << static_cast<unsigned>(level.n);
  std::vector<Int> ivals(G, 0);
  Int total = 0;
  do {
    Int ways = 1;
    for (const auto& choices : basis_point_choices(ivals, divisor))
      ways *= Int(choices.size());
    total += ways;
  } while (next_tuple(ivals, cap + 1));
  return total;
}

std::vector<StepFn> enumerate_basis(const BasisLevel& level,
                                    const Int& ceiling) {
  if (level.n < 0) throw InvalidParams("enumerate_basis: negative level");
  const Int cap = level.effective_cap();
  if (cap < 0) throw InvalidParams("enumerate_basis: negative cap");
  const std::optional<Int> divisor = endpoint_divisor(level.object);
  const unsigned G = 1u << static_cast<unsigned>(level.n);
  const Partition grid = Partition::equidistant(G);
  std::vector<StepFn> out;
  std::vector<Int> ivals(G, 0);
  do {
    const auto choices = basis_point_choices(ivals, divisor);
    std::vector<std::size_t> pick(G + 1, 0);
    bool more = true;
    while (more) {
      if (Int(out.size()) >= ceiling)
        throw ResourceLimit("enumerate_basis: slice exceeds ceiling " +
                            ceiling.str());
      std::vector<ExtNat> iv, pv;
      iv.reserve(G);
      pv.reserve(G + 1);
      for (const Int& v : ivals) iv.emplace_back(v);
      for (std::size_t j = 0; j <= G; ++j)
        pv.emplace_back(choices[j][pick[j]]);
      out.push_back(StepFn(grid, std::move(iv), std::move(pv)).canonical());
      more = false;
      for (std::size_t j = pick.size(); j-- > 0;) {
        if (pick[j] + 1 < choices[j].size()) {
          ++pick[j];
          std::fill(pick.begin() + static_cast<long>(j) + 1, pick.end(), 0u);
          more = true;
          break;
        }
      }
    }
  } while (next_tuple(ivals, cap + 1));
  return out;
}

std::optional<int> resolution_exponent(const StepFn& f) {
  int r = 0;
  const Partition& p = f.partition();
  for (std::size_t j = 1; j + 1 < p.point_count(); ++j) {
    Int d = boost::multiprecision::denominator(p.point(j));
    int e = 0;
    while (d % 2 == 0) {
      d /= 2;
      ++e;
    }
    if (d != 1) return std::nullopt;
    r = std::max(r, e);
  }
  return r;
}

Int max_value(const StepFn& f) {
  if (!f.finite_valued())
    throw InvalidParams("max_value: function takes infinite values");
  Int m = 0;
  for (const auto& v : f.interval_values()) m = std::max(m, v.finite_value());
  for (const auto& v : f.point_values()) m = std::max(m, v.finite_value());
  return m;
}

std::optional<int> basis_recovery_level(const BlockObject& obj,
                                        const StepFn& f, const Rational& x,
                                        int nMax) {
  const ExtNat target = f.value_at(x);
  if (target.is_infinite()) return std::nullopt;
  for (int m = 0; m <= nMax; ++m)
    if (basis_project(obj, f, m).value_at(x) == target) return m;
  return std::nullopt;
}

namespace {

std::vector<Rational> cell_representatives(const StepFn& f) {
  std::vector<Rational> xs;
  const Partition& p = f.partition();
  for (std::size_t j = 0; j < p.point_count(); ++j) xs.push_back(p.point(j));
  for (std::size_t j = 0; j < p.interval_count(); ++j) {
    const auto [a, b] = p.interval(j);
    xs.push_back((a + b) / 2);
  }
  return xs;
}

}  // namespace

AxiomsReport axioms_spot_check(const BlockObject& obj,
                               const std::vector<StepFn>& samples) {
  for (const StepFn& f : samples)
    if (!member(obj, f))
      throw DomainMismatch("axioms_spot_check: sample outside the object");
  AxiomsReport report;
  auto run = [&report](const std::string& axiom, const std::string& okDetail,
                       auto&& body) {
    bool ok = true;
    std::string detail = okDetail;
    try {
      body(ok, detail);
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    }
    report.checks.push_back({axiom, ok, std::move(detail)});
    report.allPassed = report.allPassed && ok;
  };

  const StepFn zero;  // constant 0
  run("O0", "zero is a compact neutral member",
      [&](bool& ok, std::string& detail) {
        ok = member(obj, zero) && way_below(zero, zero);
        for (const StepFn& f : samples)
          if (!(leq(zero, f) && add(zero, f) == f)) {
            ok = false;
            detail = "zero failed to be neutral below a sample";
            return;
          }
      });
  run("O1", "increasing approximant chains admit their suprema",
      [&](bool& ok, std::string& detail) {
        for (const StepFn& f : samples) {
          std::vector<StepFn> chain;
          for (int j = 0; j <= 6; ++j) chain.push_back(canonical_approx(f, j));
          const StepFn s = sup_chain(chain);
          if (!(s == chain.back() && leq(s, f))) {
            ok = false;
            detail = "supremum of a chain mismatched its stabilized tail";
            return;
          }
        }
      });
  run("O2", "basis chain recovers samples pointwise",
      [&](bool& ok, std::string& detail) {
        for (const StepFn& f : samples) {
          for (const Rational& x : cell_representatives(f)) {
            if (f.value_at(x).is_infinite()) {
              const ExtNat deep = basis_project(obj, f, 8).value_at(x);
              if (!(ExtNat(Int(128)) <= deep)) {
                ok = false;
                detail = "basis chain stalled below an infinite value";
                return;
              }
              continue;
            }
            if (!basis_recovery_level(obj, f, x, 12)) {
              ok = false;
              detail = "no recovery by level 12 at x=" + rational_str(x);
              return;
            }
          }
        }
      });
  run("O3", "way-below is additive on projected pairs",
      [&](bool& ok, std::string& detail) {
        if (samples.size() < 2) {
          detail = "skipped: needs at least two samples";
          return;
        }
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
          const StepFn& g1 = samples[i];
          const StepFn& g2 = samples[i + 1];
          const StepFn f1 = basis_project(obj, g1, 3);
          const StepFn f2 = basis_project(obj, g2, 3);
          if (!(way_below(f1, g1) && way_below(f2, g2) &&
                way_below(add(f1, f2), add(g1, g2)))) {
            ok = false;
            detail = "sum of approximants escaped way-below";
            return;
          }
        }
      });
  run("O4", "suprema commute with addition",
      [&](bool& ok, std::string& detail) {
        if (samples.size() < 2) {
          detail = "skipped: needs at least two samples";
          return;
        }
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
          const StepFn& g = samples[i];
          const StepFn& h = samples[i + 1];
          std::vector<StepFn> chain, shifted;
          for (int j = 0; j <= 5; ++j) {
            chain.push_back(basis_project(obj, g, j));
            shifted.push_back(add(chain.back(), h));
          }
          if (!(sup_chain(shifted) == add(sup_chain(chain), h))) {
            ok = false;
            detail = "supremum failed to commute with a translate";
            return;
          }
        }
      });
  return report;
}

}  // namespace cuntzlab
