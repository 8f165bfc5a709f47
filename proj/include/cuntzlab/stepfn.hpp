#ifndef CUNTZLAB_STEPFN_HPP
#define CUNTZLAB_STEPFN_HPP

#include <cstddef>
#include <vector>

#include "cuntzlab/numbers.hpp"

namespace cuntzlab {

// Partition of [0,1] by finitely many rational breakpoints in the open
// interval.  It induces cells: point cells at 0, at each breakpoint and at 1,
// and open-interval cells between consecutive points.  Cells are addressed by
// a flat index: even index 2j is the j-th point, odd index 2j+1 the j-th open
// interval.  With m breakpoints there are 2m+3 cells.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<Rational> breakpoints);

  static Partition equidistant(unsigned cells);  // breakpoints k/cells

  const std::vector<Rational>& breakpoints() const { return bps_; }
  std::size_t interval_count() const { return bps_.size() + 1; }
  std::size_t point_count() const { return bps_.size() + 2; }
  std::size_t cell_count() const { return 2 * bps_.size() + 3; }

  // x-coordinate of point cell j (0-based; j = 0 is 0, last is 1).
  Rational point(std::size_t j) const;

  // Endpoints of open-interval cell j: (point(j), point(j+1)).
  std::pair<Rational, Rational> interval(std::size_t j) const;

  bool refines(const Partition& coarser) const;
  static Partition merge(const Partition& a, const Partition& b);

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.bps_ == b.bps_;
  }

 private:
  std::vector<Rational> bps_;  // strictly increasing, all in (0,1)
};

// Cells whose closures meet the closure of cell c, in the flat indexing
// above: an open interval sees itself, both bounding points and both
// neighboring intervals; a point sees itself and both adjacent intervals.
std::vector<std::size_t> cell_neighbors(std::size_t c, std::size_t cellCount);

// Exact lower semicontinuous step function [0,1] -> extended naturals.
// Holds one value per interval cell and one per point cell.  Lower
// semicontinuity pins every point value at or below the adjacent interval
// values.  Representations with mergeable breakpoints are legal (refinement
// produces them); canonical() removes them and equality compares canonical
// forms.
class StepFn {
 public:
  StepFn();  // constant zero
  StepFn(Partition part, std::vector<ExtNat> intervalValues,
         std::vector<ExtNat> pointValues);

  static StepFn constant(const ExtNat& v);
  // v on the open interval (a,b), zero elsewhere (including endpoints of the
  // domain and the points a, b themselves).
  static StepFn indicator(const Rational& a, const Rational& b, const ExtNat& v);

  const Partition& partition() const { return part_; }
  const std::vector<ExtNat>& interval_values() const { return ivals_; }
  const std::vector<ExtNat>& point_values() const { return pvals_; }

  const ExtNat& cell_value(std::size_t c) const;  // flat cell index
  ExtNat value_at(const Rational& x) const;

  bool finite_valued() const;
  bool is_canonical() const;
  StepFn canonical() const;

  // Same function on a finer partition.  Throws NotARefinement if p does not
  // contain every breakpoint of the current partition.
  StepFn refine(const Partition& p) const;

  friend bool operator==(const StepFn& a, const StepFn& b);
  friend bool operator!=(const StepFn& a, const StepFn& b) { return !(a == b); }
  // Total order on canonical forms; for deterministic containers.
  friend bool operator<(const StepFn& a, const StepFn& b);

 private:
  Partition part_;
  std::vector<ExtNat> ivals_;
  std::vector<ExtNat> pvals_;
};

// Pointwise order on the common refinement.
bool leq(const StepFn& f, const StepFn& g);

// Cellwise sum, canonicalized.
StepFn add(const StepFn& f, const StepFn& g);
StepFn scale(const Int& k, const StepFn& f);

// Supremum of an increasing chain (pointwise max on the common refinement).
// Throws NotIncreasing when the input is not a chain.
StepFn sup_chain(const std::vector<StepFn>& chain);

// Way-below (compact containment) f << g, decided by the cell criterion on
// the common refinement: f is finite-valued and on every cell c the value
// f(c) is at or below g on every cell whose closure meets the closure of c.
bool way_below(const StepFn& f, const StepFn& g);

// Greatest step function below g that is capped at n and flattened by the
// closed-ball infimum of radius 1/2^n.  The result is way below g, the
// sequence increases in n, and its supremum over all n recovers g; it is the
// independent reference approximant for way_below.
StepFn canonical_approx(const StepFn& g, int n);

// f << f, i.e. f is a finite constant.
bool is_compact(const StepFn& f);

}  // namespace cuntzlab

#endif
