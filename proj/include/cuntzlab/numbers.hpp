#ifndef CUNTZLAB_NUMBERS_HPP
#define CUNTZLAB_NUMBERS_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cuntzlab/errors.hpp"

namespace cuntzlab {

// Stage multiplicities grow like q^(r+1) per step, so all integer arithmetic
// is arbitrary precision from the start.
using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Extended natural number: a value in {0, 1, 2, ...} or infinity.
// Addition saturates at infinity; scaling by zero yields zero even for
// infinity (scaling is repeated addition).
class ExtNat {
 public:
  ExtNat() : inf_(false), v_(0) {}
  ExtNat(const Int& v) : inf_(false), v_(v) {
    if (v < 0) throw InvalidParams("ExtNat from negative " + v.str());
  }
  ExtNat(long v) : ExtNat(Int(v)) {}
  ExtNat(int v) : ExtNat(Int(v)) {}

  static ExtNat infinity() {
    ExtNat e;
    e.inf_ = true;
    return e;
  }

  bool is_infinite() const { return inf_; }
  bool is_zero() const { return !inf_ && v_ == 0; }
  const Int& finite_value() const {
    if (inf_) throw Error("finite_value() on infinity");
    return v_;
  }

  friend ExtNat operator+(const ExtNat& a, const ExtNat& b) {
    if (a.inf_ || b.inf_) return infinity();
    return ExtNat(a.v_ + b.v_);
  }
  ExtNat& operator+=(const ExtNat& o) { return *this = *this + o; }

  // Scalar multiple; k must be non-negative.
  ExtNat scaled(const Int& k) const {
    if (k < 0) throw InvalidParams("negative scale " + k.str());
    if (k == 0) return ExtNat(0);
    if (inf_) return infinity();
    return ExtNat(v_ * k);
  }

  friend bool operator==(const ExtNat& a, const ExtNat& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
  }
  friend bool operator!=(const ExtNat& a, const ExtNat& b) { return !(a == b); }
  friend bool operator<=(const ExtNat& a, const ExtNat& b) {
    if (b.inf_) return true;
    if (a.inf_) return false;
    return a.v_ <= b.v_;
  }
  friend bool operator<(const ExtNat& a, const ExtNat& b) { return a <= b && a != b; }

  friend ExtNat min(const ExtNat& a, const ExtNat& b) { return a <= b ? a : b; }
  friend ExtNat max(const ExtNat& a, const ExtNat& b) { return a <= b ? b : a; }

  // True when this is a finite multiple of q (infinity counts as divisible:
  // it is a supremum of multiples).
  bool divisible_by(const Int& q) const { return inf_ || v_ % q == 0; }

  // Largest extended natural <= *this that is a multiple of q.
  ExtNat floor_to_multiple(const Int& q) const {
    if (inf_) return infinity();
    return ExtNat((v_ / q) * q);
  }

  std::string str() const { return inf_ ? "inf" : v_.str(); }
  static ExtNat parse(const std::string& s);

 private:
  bool inf_;
  Int v_;
};

// Exact rational helpers.  Serialized form is "p/q" (or "p" when integral);
// no floating point anywhere.
std::string rational_str(const Rational& r);
Rational parse_rational(const std::string& s);

// Floor/ceil of a rational as exact integers.
Int rational_floor(const Rational& r);
Int rational_ceil(const Rational& r);

// Isomorphism class of a localization Z[1/m]: determined by the set of
// primes inverted.  Empty support is Z itself.  Finite scaling is invisible
// at this level, which is exactly the invariance the colimits need.
struct LocalizedClass {
  std::set<Int> primeSupport;

  friend bool operator==(const LocalizedClass& a, const LocalizedClass& b) {
    return a.primeSupport == b.primeSupport;
  }
  std::string str() const;
};

// Factor n (> 0) by trial division.  Throws UnsupportedSystem when a
// cofactor above `limit` squared survives, i.e. the prime support cannot be
// certified with small primes.
std::map<Int, int> smooth_factor(const Int& n, const Int& limit = Int(100000));

bool is_prime_small(const Int& n);

// 2-adic helpers used by the level formulas: largest l with 2^l <= n (n >= 1).
int floor_log2(const Int& n);

Int pow_int(const Int& base, int exp);

}  // namespace cuntzlab

#endif
