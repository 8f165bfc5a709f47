#include "cuntzlab/stepfn.hpp"

#include <algorithm>

namespace cuntzlab {

namespace {

// ExtNat ordering key for lexicographic comparisons (infinity sorts last).
int ext_cmp(const ExtNat& a, const ExtNat& b) {
  if (a == b) return 0;
  return a <= b ? -1 : 1;
}

}  // namespace

Partition::Partition(std::vector<Rational> breakpoints) : bps_(std::move(breakpoints)) {
  for (std::size_t i = 0; i < bps_.size(); ++i) {
    if (bps_[i] <= 0 || bps_[i] >= 1)
      throw InvalidParams("breakpoint " + rational_str(bps_[i]) + " outside (0,1)");
    if (i > 0 && bps_[i - 1] >= bps_[i])
      throw InvalidParams("breakpoints not strictly increasing");
  }
}

Partition Partition::equidistant(unsigned cells) {
  if (cells == 0) throw InvalidParams("equidistant partition needs >= 1 cell");
  std::vector<Rational> bps;
  bps.reserve(cells - 1);
  for (unsigned k = 1; k < cells; ++k) bps.emplace_back(Int(k), Int(cells));
  return Partition(std::move(bps));
}

Rational Partition::point(std::size_t j) const {
  if (j == 0) return Rational(0);
  if (j == bps_.size() + 1) return Rational(1);
  return bps_[j - 1];
}

std::pair<Rational, Rational> Partition::interval(std::size_t j) const {
  return {point(j), point(j + 1)};
}

bool Partition::refines(const Partition& coarser) const {
  return std::includes(bps_.begin(), bps_.end(), coarser.bps_.begin(),
                       coarser.bps_.end());
}

Partition Partition::merge(const Partition& a, const Partition& b) {
  std::vector<Rational> out;
  std::set_union(a.bps_.begin(), a.bps_.end(), b.bps_.begin(), b.bps_.end(),
                 std::back_inserter(out));
  return Partition(std::move(out));
}

std::vector<std::size_t> cell_neighbors(std::size_t c, std::size_t cellCount) {
  std::vector<std::size_t> out;
  const bool interval = (c % 2) == 1;
  const std::size_t lo = interval ? (c >= 2 ? c - 2 : 0) : (c >= 1 ? c - 1 : 0);
  const std::size_t hi = interval ? c + 2 : c + 1;
  for (std::size_t k = lo; k <= hi && k < cellCount; ++k) out.push_back(k);
  return out;
}

StepFn::StepFn() : part_(), ivals_(1, ExtNat(0)), pvals_(2, ExtNat(0)) {}

StepFn::StepFn(Partition part, std::vector<ExtNat> intervalValues,
               std::vector<ExtNat> pointValues)
    : part_(std::move(part)), ivals_(std::move(intervalValues)),
      pvals_(std::move(pointValues)) {
  if (ivals_.size() != part_.interval_count() || pvals_.size() != part_.point_count())
    throw InvalidParams("cell value counts do not match partition");
  // Lower semicontinuity: every point value is at or below the neighboring
  // interval values.
  for (std::size_t j = 0; j < pvals_.size(); ++j) {
    ExtNat bound = ExtNat::infinity();
    if (j > 0) bound = min(bound, ivals_[j - 1]);
    if (j < ivals_.size()) bound = min(bound, ivals_[j]);
    if (!(pvals_[j] <= bound))
      throw NotLsc("point value " + pvals_[j].str() + " at " +
                   rational_str(part_.point(j)) + " exceeds adjacent interval value");
  }
}

StepFn StepFn::constant(const ExtNat& v) {
  return StepFn(Partition(), {v}, {v, v});
}

StepFn StepFn::indicator(const Rational& a, const Rational& b, const ExtNat& v) {
  if (!(0 <= a && a < b && b <= 1))
    throw InvalidParams("indicator needs 0 <= a < b <= 1");
  std::vector<Rational> bps;
  if (a > 0) bps.push_back(a);
  if (b < 1) bps.push_back(b);
  Partition part(std::move(bps));
  std::vector<ExtNat> ivals(part.interval_count(), ExtNat(0));
  std::vector<ExtNat> pvals(part.point_count(), ExtNat(0));
  ivals[a > 0 ? 1 : 0] = v;
  return StepFn(std::move(part), std::move(ivals), std::move(pvals)).canonical();
}

const ExtNat& StepFn::cell_value(std::size_t c) const {
  if (c % 2 == 0) return pvals_[c / 2];
  return ivals_[(c - 1) / 2];
}

ExtNat StepFn::value_at(const Rational& x) const {
  if (x < 0 || x > 1) throw InvalidParams("evaluation outside [0,1]");
  const auto& bps = part_.breakpoints();
  if (x == 0) return pvals_.front();
  if (x == 1) return pvals_.back();
  const auto it = std::lower_bound(bps.begin(), bps.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - bps.begin());
  if (it != bps.end() && *it == x) return pvals_[k + 1];
  return ivals_[k];
}

bool StepFn::finite_valued() const {
  for (const auto& v : ivals_)
    if (v.is_infinite()) return false;
  for (const auto& v : pvals_)
    if (v.is_infinite()) return false;
  return true;
}

bool StepFn::is_canonical() const {
  for (std::size_t j = 0; j + 1 < ivals_.size(); ++j)
    if (ivals_[j] == ivals_[j + 1] && pvals_[j + 1] == ivals_[j]) return false;
  return true;
}

StepFn StepFn::canonical() const {
  if (is_canonical()) return *this;
  std::vector<Rational> bps;
  std::vector<ExtNat> ivals{ivals_[0]};
  std::vector<ExtNat> pvals{pvals_[0]};
  for (std::size_t j = 0; j + 1 < ivals_.size(); ++j) {
    if (ivals_[j] == ivals_[j + 1] && pvals_[j + 1] == ivals_[j]) continue;
    bps.push_back(part_.breakpoints()[j]);
    pvals.push_back(pvals_[j + 1]);
    ivals.push_back(ivals_[j + 1]);
  }
  pvals.push_back(pvals_.back());
  return StepFn(Partition(std::move(bps)), std::move(ivals), std::move(pvals));
}

StepFn StepFn::refine(const Partition& p) const {
  if (!p.refines(part_))
    throw NotARefinement("target partition is missing breakpoints");
  const std::size_t m = p.breakpoints().size();
  std::vector<ExtNat> ivals(m + 1, ExtNat(0));
  std::vector<ExtNat> pvals(m + 2, ExtNat(0));
  const auto& oldBps = part_.breakpoints();
  // oi = index of the coarse interval containing the current fine position.
  std::size_t oi = 0;
  pvals[0] = pvals_[0];
  for (std::size_t j = 0; j <= m; ++j) {
    ivals[j] = ivals_[oi];
    const Rational right = p.point(j + 1);
    if (oi < oldBps.size() && oldBps[oi] == right) {
      pvals[j + 1] = pvals_[oi + 1];
      ++oi;
    } else if (j + 1 == m + 1) {
      pvals[j + 1] = pvals_.back();
    } else {
      pvals[j + 1] = ivals_[oi];  // new point inside a coarse interval
    }
  }
  return StepFn(p, std::move(ivals), std::move(pvals));
}

bool operator==(const StepFn& a, const StepFn& b) {
  const StepFn ca = a.canonical();
  const StepFn cb = b.canonical();
  return ca.part_ == cb.part_ && ca.ivals_ == cb.ivals_ && ca.pvals_ == cb.pvals_;
}

bool operator<(const StepFn& a, const StepFn& b) {
  const StepFn ca = a.canonical();
  const StepFn cb = b.canonical();
  const auto& ba = ca.part_.breakpoints();
  const auto& bb = cb.part_.breakpoints();
  if (ba != bb)
    return std::lexicographical_compare(ba.begin(), ba.end(), bb.begin(), bb.end());
  for (std::size_t i = 0; i < ca.ivals_.size(); ++i) {
    const int c = ext_cmp(ca.ivals_[i], cb.ivals_[i]);
    if (c != 0) return c < 0;
  }
  for (std::size_t i = 0; i < ca.pvals_.size(); ++i) {
    const int c = ext_cmp(ca.pvals_[i], cb.pvals_[i]);
    if (c != 0) return c < 0;
  }
  return false;
}

namespace {

std::pair<StepFn, StepFn> on_common(const StepFn& f, const StepFn& g) {
  const Partition p = Partition::merge(f.partition(), g.partition());
  return {f.refine(p), g.refine(p)};
}

}  // namespace

bool leq(const StepFn& f, const StepFn& g) {
  const auto [rf, rg] = on_common(f, g);
  for (std::size_t c = 0; c < rf.partition().cell_count(); ++c)
    if (!(rf.cell_value(c) <= rg.cell_value(c))) return false;
  return true;
}

StepFn add(const StepFn& f, const StepFn& g) {
  const auto [rf, rg] = on_common(f, g);
  std::vector<ExtNat> ivals(rf.interval_values());
  std::vector<ExtNat> pvals(rf.point_values());
  for (std::size_t i = 0; i < ivals.size(); ++i) ivals[i] += rg.interval_values()[i];
  for (std::size_t i = 0; i < pvals.size(); ++i) pvals[i] += rg.point_values()[i];
  return StepFn(rf.partition(), std::move(ivals), std::move(pvals)).canonical();
}

StepFn scale(const Int& k, const StepFn& f) {
  std::vector<ExtNat> ivals(f.interval_values());
  std::vector<ExtNat> pvals(f.point_values());
  for (auto& v : ivals) v = v.scaled(k);
  for (auto& v : pvals) v = v.scaled(k);
  return StepFn(f.partition(), std::move(ivals), std::move(pvals)).canonical();
}

StepFn sup_chain(const std::vector<StepFn>& chain) {
  if (chain.empty()) throw InvalidParams("sup of empty chain");
  for (std::size_t i = 0; i + 1 < chain.size(); ++i)
    if (!leq(chain[i], chain[i + 1]))
      throw NotIncreasing("element " + std::to_string(i) + " not below element " +
                          std::to_string(i + 1));
  Partition p = chain[0].partition();
  for (std::size_t i = 1; i < chain.size(); ++i)
    p = Partition::merge(p, chain[i].partition());
  std::vector<ExtNat> ivals(p.interval_count(), ExtNat(0));
  std::vector<ExtNat> pvals(p.point_count(), ExtNat(0));
  for (const auto& f : chain) {
    const StepFn rf = f.refine(p);
    for (std::size_t i = 0; i < ivals.size(); ++i)
      ivals[i] = max(ivals[i], rf.interval_values()[i]);
    for (std::size_t i = 0; i < pvals.size(); ++i)
      pvals[i] = max(pvals[i], rf.point_values()[i]);
  }
  return StepFn(std::move(p), std::move(ivals), std::move(pvals)).canonical();
}

bool way_below(const StepFn& f, const StepFn& g) {
  if (!f.finite_valued()) return false;
  const auto [rf, rg] = on_common(f, g);
  const std::size_t n = rf.partition().cell_count();
  for (std::size_t c = 0; c < n; ++c) {
    const ExtNat& fv = rf.cell_value(c);
    for (const std::size_t cn : cell_neighbors(c, n))
      if (!(fv <= rg.cell_value(cn))) return false;
  }
  return true;
}

namespace {

// Minimum of f over the closed window [lo, hi] intersected with [0,1].
ExtNat window_min(const StepFn& f, Rational lo, Rational hi) {
  if (lo < 0) lo = 0;
  if (hi > 1) hi = 1;
  ExtNat out = ExtNat::infinity();
  const Partition& p = f.partition();
  for (std::size_t j = 0; j < p.point_count(); ++j) {
    const Rational x = p.point(j);
    if (lo <= x && x <= hi) out = min(out, f.point_values()[j]);
  }
  for (std::size_t j = 0; j < p.interval_count(); ++j) {
    const auto [a, b] = p.interval(j);
    if (a < hi && b > lo) out = min(out, f.interval_values()[j]);
  }
  return out;
}

}  // namespace

StepFn canonical_approx(const StepFn& g, int n) {
  if (n < 0) throw InvalidParams("negative approximation level");
  // Cap the values at n, then take the closed-ball infimum of radius 1/2^n.
  // The result is lower semicontinuous (closed sublevel sets), sits way below
  // g by the cell criterion, and increases with n toward g.
  std::vector<ExtNat> ivals(g.interval_values());
  std::vector<ExtNat> pvals(g.point_values());
  const ExtNat cap{Int(n)};
  for (auto& v : ivals) v = min(v, cap);
  for (auto& v : pvals) v = min(v, cap);
  const StepFn capped(g.partition(), std::move(ivals), std::move(pvals));

  const Rational eps(Int(1), pow_int(2, n));
  std::vector<Rational> cand;
  const auto& gp = capped.partition();
  for (std::size_t j = 0; j < gp.point_count(); ++j) {
    const Rational x = gp.point(j);
    for (const Rational& y : {Rational(x - eps), Rational(x + eps)})
      if (y > 0 && y < 1) cand.push_back(y);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  Partition rp{std::move(cand)};

  std::vector<ExtNat> rIvals(rp.interval_count(), ExtNat(0));
  std::vector<ExtNat> rPvals(rp.point_count(), ExtNat(0));
  for (std::size_t j = 0; j < rp.point_count(); ++j) {
    const Rational x = rp.point(j);
    rPvals[j] = window_min(capped, x - eps, x + eps);
  }
  for (std::size_t j = 0; j < rp.interval_count(); ++j) {
    // The window pattern is constant on each open result cell; sample its
    // midpoint.
    const auto [a, b] = rp.interval(j);
    const Rational mid = (a + b) / 2;
    rIvals[j] = window_min(capped, mid - eps, mid + eps);
  }
  return StepFn(std::move(rp), std::move(rIvals), std::move(rPvals)).canonical();
}

bool is_compact(const StepFn& f) { return way_below(f, f); }

}  // namespace cuntzlab
