#ifndef CUNTZLAB_ABGROUPS_HPP
#define CUNTZLAB_ABGROUPS_HPP

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cuntzlab/numbers.hpp"

namespace cuntzlab {

// Dense integer matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, Int(0)) {}
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Int& at(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  const Int& at(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  friend bool operator==(const Matrix& x, const Matrix& y) {
    return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Int> a_;
};

Matrix mat_mul(const Matrix& x, const Matrix& y);
Int determinant(const Matrix& m);  // square; fraction-free elimination

// D = U * M * V with U, V unimodular and the diagonal of D a divisibility
// chain of non-negative integers.
struct SnfResult {
  Matrix d, u, v;
};
SnfResult smith_normal_form(const Matrix& m);

// Finitely generated abelian group in canonical form:
// Z^freeRank + sum of Z/d_i with 2 <= d_1 | d_2 | ...
class FgAbGroup {
 public:
  FgAbGroup() = default;  // trivial group
  FgAbGroup(std::size_t freeRank, std::vector<Int> invariantFactors);
  // Canonicalizes arbitrary diagonal factors: drops units, sorts into a
  // divisibility chain via repeated gcd/lcm, counts zeros as free rank.
  static FgAbGroup from_diagonal(std::size_t freeRank,
                                 const std::vector<Int>& factors);
  static FgAbGroup cyclic(const Int& d);

  std::size_t free_rank() const { return freeRank_; }
  const std::vector<Int>& invariant_factors() const { return invs_; }
  std::size_t generator_count() const { return freeRank_ + invs_.size(); }
  bool is_trivial() const { return freeRank_ == 0 && invs_.empty(); }
  bool is_finite() const { return freeRank_ == 0; }
  Int order() const;  // pre: finite
  std::string str() const;

  friend bool operator==(const FgAbGroup& a, const FgAbGroup& b) {
    return a.freeRank_ == b.freeRank_ && a.invs_ == b.invs_;
  }

 private:
  std::size_t freeRank_ = 0;
  std::vector<Int> invs_;
};

// Morphism between canonical-form groups: matrix over the generators, free
// generators first, then one generator per invariant factor.  Construction
// verifies the matrix respects the torsion relations.
struct GroupMorphism {
  FgAbGroup source, target;
  Matrix matrix;  // rows = target generators, cols = source generators

  GroupMorphism(FgAbGroup src, FgAbGroup tgt, Matrix m);
  static GroupMorphism cyclic_mult(const Int& d, const Int& k);  // x k on Z/d
};

// Subgroup of the finite group G generated by the columns of M (coordinates
// over G's generators), as an abstract group.
FgAbGroup image_subgroup(const FgAbGroup& g, const Matrix& m);

// Colimit of G -phi-> G -phi-> ... for finite G: the stable image, on which
// phi acts bijectively.
FgAbGroup colim_finite(const FgAbGroup& g, const GroupMorphism& phi);

// Colimit of Z -x m1-> Z -x m2-> ... : the localization of Z away from the
// prime support of the multipliers.
LocalizedClass colim_rank_one(const std::vector<Int>& multipliers,
                              const Int& smoothLimit = Int(100000));

// Symbolic rule for an infinite direct sum indexed by i >= 0 over a system's
// parameter sequence: term i is Z/p_{i+offset} (torsion kind) or
// Z[1/q_{i+offset}] (localized kind), where a negative index means the
// trivial group (the sequence is padded with 1 at the front).
struct IndexRule {
  enum class Kind { TorsionPrimeSeq, LocalizedQSeq };
  Kind kind = Kind::TorsionPrimeSeq;
  int offset = 0;
  std::vector<Int> seq;  // the parameter sequence the rule refers to

  friend bool operator==(const IndexRule& a, const IndexRule& b) {
    return a.kind == b.kind && a.offset == b.offset && a.seq == b.seq;
  }
};

using AtomClass = std::variant<FgAbGroup, LocalizedClass>;

// Direct sum of finitely many atoms plus at most one symbolic infinite sum.
struct FormalSumClass {
  std::vector<AtomClass> parts;
  std::optional<IndexRule> rule;
};

using GroupClass = std::variant<FgAbGroup, LocalizedClass, FormalSumClass>;

// Drops trivial summands, unwraps singleton sums, canonicalizes rule offsets
// (leading negative-index terms are trivial), and sorts parts.
GroupClass class_normalize(const GroupClass& c);

// Isomorphism test on normalized classes.  Throws UndecidableComparison for
// symbolic sums whose rules cannot be aligned.
bool class_iso(const GroupClass& a, const GroupClass& b);

GroupClass class_direct_sum(const GroupClass& a, const GroupClass& b);

std::string class_str(const GroupClass& c);

// Six-term assembly for an extension of the complex numbers by an ideal with
// the given K-theory: the quotient contributes one free generator to K0 and
// the index map vanishes, so k0 = idealK0 + Z and k1 = idealK1.
std::pair<GroupClass, GroupClass> six_term_assemble(const GroupClass& idealK0,
                                                    const GroupClass& idealK1);

}  // namespace cuntzlab

#endif
