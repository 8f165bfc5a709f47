#include "cuntzlab/params.hpp"

#include "cuntzlab/errors.hpp"

namespace cuntzlab {

SystemParams::SystemParams(std::vector<Int> primes, std::vector<int> exponents,
                           std::vector<Rational> densePoints, int stageCount)
    : primes_(std::move(primes)),
      exponents_(std::move(exponents)),
      densePoints_(std::move(densePoints)),
      stageCount_(stageCount) {
  if (stageCount_ < 0) throw InvalidParams("negative stage count");
  const std::size_t need = static_cast<std::size_t>(stageCount_);
  if (primes_.size() < need || exponents_.size() < need ||
      densePoints_.size() < need)
    throw InvalidParams("need at least stageCount primes, exponents and "
                        "dense points");
  for (std::size_t k = 0; k < primes_.size(); ++k) {
    if (!is_prime_small(primes_[k]))
      throw InvalidParams("parameter " + primes_[k].str() + " is not prime");
    if (k > 0 && primes_[k] <= primes_[k - 1])
      throw InvalidParams("primes must be strictly increasing");
  }
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    if (exponents_[j] < 1) throw InvalidParams("exponents must be positive");
    if (j > 0 && exponents_[j] <= exponents_[j - 1])
      throw InvalidParams("exponents must be strictly increasing");
  }
  for (const Rational& d : densePoints_)
    if (d < 0 || d > 1)
      throw InvalidParams("evaluation points must lie in [0,1]");
}

Int SystemParams::p(int k) const {
  if (k == -1) return 1;
  if (k < 0 || static_cast<std::size_t>(k) >= primes_.size())
    throw InvalidParams("prime index out of range");
  return primes_[static_cast<std::size_t>(k)];
}

Int SystemParams::q(int k) const { return p(k) * p(k - 1); }

int SystemParams::r(int j) const {
  if (j < 0 || static_cast<std::size_t>(j) >= exponents_.size())
    throw InvalidParams("exponent index out of range");
  return exponents_[static_cast<std::size_t>(j)];
}

Rational SystemParams::d(int n) const {
  if (n < 0 || static_cast<std::size_t>(n) >= densePoints_.size())
    throw InvalidParams("evaluation point index out of range");
  return densePoints_[static_cast<std::size_t>(n)];
}

Int SystemParams::order(int n, int i) const {
  if (i < 0 || n < i) throw InvalidParams("order indices need 0 <= i <= n");
  Int out = 1;
  for (int j = i; j < n; ++j) out *= pow_int(q(i), r(j));
  return out;
}

SystemParams standard_params(int stageCount) {
  if (stageCount < 0) throw InvalidParams("negative stage count");
  std::vector<Int> primes;
  Int candidate = 2;
  while (static_cast<int>(primes.size()) < stageCount) {
    if (is_prime_small(candidate)) primes.push_back(candidate);
    ++candidate;
  }
  std::vector<int> exponents;
  for (int j = 0; j < stageCount; ++j) exponents.push_back(j + 2);

  // Alternate dyadic and triadic points: 1/2, 1/3, 1/4, 2/3, 3/4, 1/9, ...
  std::vector<Rational> dyadic, triadic;
  for (Int den = 2; static_cast<int>(dyadic.size()) < stageCount; den *= 2)
    for (Int num = 1; num < den; num += 2) dyadic.push_back(Rational(num, den));
  for (Int den = 3; static_cast<int>(triadic.size()) < stageCount; den *= 3)
    for (Int num = 1; num < den; ++num)
      if (num % 3 != 0) triadic.push_back(Rational(num, den));
  std::vector<Rational> points;
  for (int n = 0; n < stageCount; ++n)
    points.push_back(n % 2 == 0 ? dyadic[static_cast<std::size_t>(n) / 2]
                                : triadic[static_cast<std::size_t>(n) / 2]);
  return SystemParams(std::move(primes), std::move(exponents),
                      std::move(points), stageCount);
}

}  // namespace cuntzlab
