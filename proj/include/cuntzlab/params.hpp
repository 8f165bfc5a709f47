#ifndef CUNTZLAB_PARAMS_HPP
#define CUNTZLAB_PARAMS_HPP

#include <vector>

#include "cuntzlab/numbers.hpp"

namespace cuntzlab {

// Parameters of the two inductive systems: a strictly increasing list of
// primes p_0 < p_1 < ... (with p_{-1} = 1 by convention), strictly increasing
// positive exponents r_0 < r_1 < ..., evaluation points d_0, d_1, ... in
// [0,1] for the interval column, and the largest stage index to build: a
// system built from these parameters has stages 0..stage_count() and one
// stage map out of each stage below stage_count().
//
// The fold parameters are q_k := p_k * p_{k-1}.  The certified-bound line
// additionally needs r_0 >= 2; that requirement is checked where it is used
// (criterion_bound reports ConditionFailed), not at construction, so that
// out-of-range parameter sets can be driven through the pipeline and fail
// visibly.
class SystemParams {
 public:
  SystemParams(std::vector<Int> primes, std::vector<int> exponents,
               std::vector<Rational> densePoints, int stageCount);

  int stage_count() const { return stageCount_; }
  const std::vector<Int>& primes() const { return primes_; }
  const std::vector<int>& exponents() const { return exponents_; }
  const std::vector<Rational>& dense_points() const { return densePoints_; }

  Int p(int k) const;       // k = -1 gives 1
  Int q(int k) const;       // p_k * p_{k-1}
  int r(int j) const;
  Rational d(int n) const;

  // Matrix order [n,i] = prod_{j=i}^{n-1} q_i^{r_j} (empty product = 1).
  Int order(int n, int i) const;

  friend bool operator==(const SystemParams& a, const SystemParams& b) {
    return a.stageCount_ == b.stageCount_ && a.primes_ == b.primes_ &&
           a.exponents_ == b.exponents_ && a.densePoints_ == b.densePoints_;
  }
  friend bool operator!=(const SystemParams& a, const SystemParams& b) {
    return !(a == b);
  }

 private:
  std::vector<Int> primes_;
  std::vector<int> exponents_;
  std::vector<Rational> densePoints_;
  int stageCount_ = 0;
};

// The default parameter set used by the examples: primes 2,3,5,7,...,
// exponents 2,3,4,5,..., dense points enumerating dyadic then triadic
// rationals.
SystemParams standard_params(int stageCount);

}  // namespace cuntzlab

#endif
