#include "cuntzlab/numbers.hpp"

#include <boost/multiprecision/integer.hpp>

namespace cuntzlab {

ExtNat ExtNat::parse(const std::string& s) {
  if (s == "inf") return infinity();
  try {
    Int v(s);
    return ExtNat(v);
  } catch (const std::exception&) {
    throw ParseError("extended natural '" + s + "'");
  }
}

std::string rational_str(const Rational& r) {
  const Int num = boost::multiprecision::numerator(r);
  const Int den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational parse_rational(const std::string& s) {
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(Int(s));
    Int num(s.substr(0, slash));
    Int den(s.substr(slash + 1));
    if (den == 0) throw ParseError("zero denominator in '" + s + "'");
    return Rational(num, den);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("rational '" + s + "'");
  }
}

Int rational_floor(const Rational& r) {
  const Int num = boost::multiprecision::numerator(r);
  const Int den = boost::multiprecision::denominator(r);
  Int q = num / den;
  if (num < 0 && q * den != num) --q;
  return q;
}

Int rational_ceil(const Rational& r) { return -rational_floor(-r); }

std::string LocalizedClass::str() const {
  if (primeSupport.empty()) return "Z";
  std::string inv = "Z[1/(";
  bool first = true;
  for (const auto& p : primeSupport) {
    if (!first) inv += "*";
    inv += p.str();
    first = false;
  }
  return inv + ")]";
}

std::map<Int, int> smooth_factor(const Int& n, const Int& limit) {
  if (n <= 0) throw InvalidParams("factoring non-positive " + n.str());
  std::map<Int, int> out;
  Int m = n;
  for (Int p = 2; p <= limit && p * p <= m; ++p) {
    while (m % p == 0) {
      ++out[p];
      m /= p;
    }
  }
  if (m > 1) {
    if (m > limit * limit)
      throw UnsupportedSystem("prime support of " + n.str() + " not certified below " +
                              limit.str());
    ++out[m];
  }
  return out;
}

bool is_prime_small(const Int& n) {
  if (n < 2) return false;
  for (Int p = 2; p * p <= n; ++p)
    if (n % p == 0) return false;
  return true;
}

int floor_log2(const Int& n) {
  if (n < 1) throw InvalidParams("floor_log2 of " + n.str());
  return static_cast<int>(boost::multiprecision::msb(n));
}

Int pow_int(const Int& base, int exp) {
  if (exp < 0) throw InvalidParams("negative exponent");
  Int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace cuntzlab
