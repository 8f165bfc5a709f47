#include "cuntzlab/unitary.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "cuntzlab/errors.hpp"

namespace cuntzlab {

namespace {

Int mod_reduce(const Int& v, const Int& m) {
  if (m == 0) return v;
  Int r = v % m;
  if (r < 0) r += m;
  return r;
}

std::vector<Int> reduce_class(std::vector<Int> k, const std::vector<Int>& moduli) {
  for (std::size_t s = 0; s < k.size(); ++s) k[s] = mod_reduce(k[s], moduli[s]);
  return k;
}

std::vector<Int> matrix_apply(const Matrix& m, const std::vector<Int>& v,
                              const std::vector<Int>& targetModuli) {
  std::vector<Int> out(m.rows(), Int(0));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Int acc(0);
    for (std::size_t c = 0; c < m.cols(); ++c) acc += m.at(r, c) * v[c];
    out[r] = mod_reduce(acc, targetModuli[r]);
  }
  return out;
}

bool matrices_congruent(const Matrix& a, const Matrix& b,
                        const std::vector<Int>& rowModuli) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (mod_reduce(a.at(r, c), rowModuli[r]) !=
          mod_reduce(b.at(r, c), rowModuli[r]))
        return false;
  return true;
}

Matrix identity_matrix(std::size_t n) { return Matrix::identity(n); }

bool all_zero(const std::vector<Int>& k) {
  return std::all_of(k.begin(), k.end(), [](const Int& v) { return v == 0; });
}

const StepFn& zero_fn() {
  static const StepFn z;
  return z;
}

std::string blocks_str(const std::vector<std::size_t>& blocks) {
  std::ostringstream os;
  os << "{";
  for (std::size_t t = 0; t < blocks.size(); ++t)
    os << (t ? "," : "") << blocks[t];
  os << "}";
  return os.str();
}

std::string step_summary(const StepFn& f) {
  if (f == zero_fn()) return "0";
  if (is_compact(f)) return f.value_at(Rational(1, 2)).str();
  std::ostringstream os;
  os << "lsc[" << f.canonical().partition().breakpoints().size() << "bp]";
  return os.str();
}

// Position of block `b` inside the ideal's block list.
std::optional<std::size_t> block_pos(const LayeredIdeal& ideal, std::size_t b) {
  for (std::size_t t = 0; t < ideal.blocks.size(); ++t)
    if (ideal.blocks[t] == b) return t;
  return std::nullopt;
}

Int fold_modulus(const BlockObject& b) {
  if (const auto* f = std::get_if<FoldingCu>(&b)) return f->q;
  return Int(0);  // interval blocks carry no K1 slot
}

}  // namespace

FgAbGroup LayeredIdeal::k1_group() const {
  return FgAbGroup::from_diagonal(0, k1Moduli);
}

std::size_t LayeredCu::bottom() const {
  for (std::size_t i = 0; i < ideals.size(); ++i) {
    bool least = true;
    for (std::size_t j = 0; j < ideals.size() && least; ++j)
      least = leq[i][j];
    if (least) return i;
  }
  throw InvalidParams("layered model has no bottom ideal");
}

std::size_t LayeredCu::top() const {
  for (std::size_t i = 0; i < ideals.size(); ++i) {
    bool greatest = true;
    for (std::size_t j = 0; j < ideals.size() && greatest; ++j)
      greatest = leq[j][i];
    if (greatest) return i;
  }
  throw InvalidParams("layered model has no top ideal");
}

std::optional<std::size_t> LayeredCu::join(std::size_t i, std::size_t j) const {
  std::vector<std::size_t> uppers;
  for (std::size_t u = 0; u < ideals.size(); ++u)
    if (leq[i][u] && leq[j][u]) uppers.push_back(u);
  for (std::size_t u : uppers) {
    bool least = true;
    for (std::size_t v : uppers)
      if (!leq[u][v]) {
        least = false;
        break;
      }
    if (least) return u;
  }
  return std::nullopt;
}

LayeredValidation layered_validate(const LayeredCu& S) {
  const std::size_t n = S.ideals.size();
  auto fail = [](std::string d) { return LayeredValidation{false, std::move(d)}; };
  if (n == 0) return fail("no ideals");
  if (S.leq.size() != n) return fail("containment table has wrong row count");
  for (std::size_t i = 0; i < n; ++i)
    if (S.leq[i].size() != n) return fail("containment table row has wrong size");

  for (const auto& ideal : S.ideals) {
    for (std::size_t t = 0; t < ideal.blocks.size(); ++t) {
      if (ideal.blocks[t] >= S.blocks.size())
        return fail("ideal " + ideal.name + " names a missing block");
      if (t > 0 && ideal.blocks[t - 1] >= ideal.blocks[t])
        return fail("ideal " + ideal.name + " block list is not increasing");
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    if (!S.leq[i][i]) return fail("containment is not reflexive");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && S.leq[i][j] && S.leq[j][i])
        return fail("containment is not antisymmetric");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (S.leq[i][j] && S.leq[j][k] && !S.leq[i][k])
          return fail("containment is not transitive");

  std::size_t bottomCount = 0, topCount = 0, bottom = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool least = true, greatest = true;
    for (std::size_t j = 0; j < n; ++j) {
      least = least && S.leq[i][j];
      greatest = greatest && S.leq[j][i];
    }
    if (least) {
      ++bottomCount;
      bottom = i;
    }
    if (greatest) ++topCount;
  }
  if (bottomCount != 1) return fail("bottom ideal is not unique");
  if (topCount != 1) return fail("top ideal is not unique");
  if (!S.ideals[bottom].blocks.empty() || !S.ideals[bottom].k1Moduli.empty())
    return fail("bottom ideal is not the zero ideal");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (S.leq[i][j])
        for (std::size_t b : S.ideals[i].blocks)
          if (!block_pos(S.ideals[j], b))
            return fail("containment does not respect block sets at (" +
                        S.ideals[i].name + ", " + S.ideals[j].name + ")");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto u = S.join(i, j);
      if (!u)
        return fail("ideals " + S.ideals[i].name + " and " + S.ideals[j].name +
                    " have no unique join");
      std::set<std::size_t> want(S.ideals[i].blocks.begin(),
                                 S.ideals[i].blocks.end());
      want.insert(S.ideals[j].blocks.begin(), S.ideals[j].blocks.end());
      const auto& got = S.ideals[*u].blocks;
      if (std::set<std::size_t>(got.begin(), got.end()) != want)
        return fail("join of " + S.ideals[i].name + " and " + S.ideals[j].name +
                    " does not carry the union of blocks");
    }

  for (const auto& [key, mat] : S.delta) {
    const auto [i, j] = key;
    if (i >= n || j >= n || !S.leq[i][j])
      return fail("delta map on a non-comparable pair");
    if (mat.rows() != S.ideals[j].k1Moduli.size() ||
        mat.cols() != S.ideals[i].k1Moduli.size())
      return fail("delta map (" + S.ideals[i].name + " -> " +
                  S.ideals[j].name + ") has the wrong shape");
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (S.leq[i][j] && !S.delta.count({i, j}))
        return fail("delta map missing for (" + S.ideals[i].name + " -> " +
                    S.ideals[j].name + ")");

  for (std::size_t i = 0; i < n; ++i)
    if (!matrices_congruent(S.delta.at({i, i}),
                            identity_matrix(S.ideals[i].k1Moduli.size()),
                            S.ideals[i].k1Moduli))
      return fail("delta on (" + S.ideals[i].name +
                  ") is not the identity");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (S.leq[i][j] && S.leq[j][k]) {
          const Matrix composed =
              mat_mul(S.delta.at({j, k}), S.delta.at({i, j}));
          if (!matrices_congruent(composed, S.delta.at({i, k}),
                                  S.ideals[k].k1Moduli))
            return fail("delta functoriality fails along " +
                        S.ideals[i].name + " -> " + S.ideals[j].name +
                        " -> " + S.ideals[k].name);
        }

  if (!S.unitValues.empty() && S.unitValues.size() != S.blocks.size())
    return fail("unit value list does not match the block list");

  return LayeredValidation{};
}

Cu1Element make_cu1(const LayeredCu& S, std::size_t ideal,
                    std::vector<StepFn> x, std::vector<Int> k) {
  if (ideal >= S.ideals.size())
    throw InvalidParams("no ideal with index " + std::to_string(ideal));
  const LayeredIdeal& id = S.ideals[ideal];
  if (x.size() != id.blocks.size())
    throw InvalidParams("element of " + id.name + " needs " +
                        std::to_string(id.blocks.size()) + " components");
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (!member(S.blocks[id.blocks[t]], x[t]))
      throw InvalidParams("component " + std::to_string(t) +
                          " is not a member of its block");
    if (x[t] == zero_fn())
      throw InvalidParams("component " + std::to_string(t) +
                          " vanishes: the element is not full in " + id.name);
  }
  if (k.size() != id.k1Moduli.size())
    throw InvalidParams("class of " + id.name + " needs " +
                        std::to_string(id.k1Moduli.size()) + " residues");
  return Cu1Element{ideal, std::move(x), reduce_class(std::move(k), id.k1Moduli)};
}

Cu1Element cu1_zero(const LayeredCu& S) { return Cu1Element{S.bottom(), {}, {}}; }

Cu1Element cu1_top_infinity(const LayeredCu& S, std::vector<Int> k) {
  const std::size_t t = S.top();
  std::vector<StepFn> x(S.ideals[t].blocks.size(),
                        StepFn::constant(ExtNat::infinity()));
  return make_cu1(S, t, std::move(x), std::move(k));
}

std::string cu1_str(const LayeredCu& S, const Cu1Element& a) {
  std::ostringstream os;
  os << "(" << S.ideals[a.ideal].name << "; x = [";
  for (std::size_t t = 0; t < a.x.size(); ++t)
    os << (t ? ", " : "") << step_summary(a.x[t]);
  os << "]; k = [";
  for (std::size_t s = 0; s < a.k.size(); ++s)
    os << (s ? ", " : "") << a.k[s].str();
  os << "])";
  return os.str();
}

bool cu1_leq(const LayeredCu& S, const Cu1Element& a, const Cu1Element& b) {
  if (!S.leq[a.ideal][b.ideal]) return false;
  const LayeredIdeal& ia = S.ideals[a.ideal];
  const LayeredIdeal& ib = S.ideals[b.ideal];
  for (std::size_t t = 0; t < ia.blocks.size(); ++t) {
    const auto pos = block_pos(ib, ia.blocks[t]);
    if (!pos || !leq(a.x[t], b.x[*pos])) return false;
  }
  const std::vector<Int> pushed =
      matrix_apply(S.delta.at({a.ideal, b.ideal}), a.k, ib.k1Moduli);
  return pushed == b.k;
}

Cu1Element cu1_add(const LayeredCu& S, const Cu1Element& a,
                   const Cu1Element& b) {
  const auto j = S.join(a.ideal, b.ideal);
  if (!j) throw InvalidParams("ideals have no join");
  const LayeredIdeal& ij = S.ideals[*j];
  std::vector<StepFn> x;
  x.reserve(ij.blocks.size());
  for (std::size_t blockId : ij.blocks) {
    StepFn sum;
    if (const auto pa = block_pos(S.ideals[a.ideal], blockId))
      sum = add(sum, a.x[*pa]);
    if (const auto pb = block_pos(S.ideals[b.ideal], blockId))
      sum = add(sum, b.x[*pb]);
    x.push_back(sum);
  }
  std::vector<Int> k =
      matrix_apply(S.delta.at({a.ideal, *j}), a.k, ij.k1Moduli);
  const std::vector<Int> kb =
      matrix_apply(S.delta.at({b.ideal, *j}), b.k, ij.k1Moduli);
  for (std::size_t s = 0; s < k.size(); ++s)
    k[s] = mod_reduce(k[s] + kb[s], ij.k1Moduli[s]);
  return Cu1Element{*j, std::move(x), std::move(k)};
}

bool cu1_is_compact(const LayeredCu& S, const Cu1Element& a) {
  (void)S;
  return std::all_of(a.x.begin(), a.x.end(),
                     [](const StepFn& f) { return is_compact(f); });
}

CuObject positive_cone(const LayeredCu& S) {
  const LayeredIdeal& t = S.ideals[S.top()];
  if (t.blocks.size() == 1) {
    const BlockObject& b = S.blocks[t.blocks.front()];
    if (const auto* f = std::get_if<FoldingCu>(&b)) return *f;
    return PlainLsc{};
  }
  DirectSum sum;
  for (std::size_t b : t.blocks) sum.components.push_back(S.blocks[b]);
  return sum;
}

FgAbGroup maximal_elements(const LayeredCu& S) {
  return S.ideals[S.top()].k1_group();
}

namespace {

// Enumerates the classes of the top ideal when the group is small, or a
// spanning sample otherwise.
std::vector<std::vector<Int>> top_class_samples(const LayeredCu& S) {
  const auto& moduli = S.ideals[S.top()].k1Moduli;
  Int combos(1);
  bool finite = true;
  for (const Int& m : moduli) {
    if (m == 0) finite = false;
    combos *= (m == 0 ? Int(3) : m);
  }
  std::vector<std::vector<Int>> out;
  if (finite && combos <= 64) {
    out.push_back(std::vector<Int>(moduli.size(), Int(0)));
    for (std::size_t s = 0; s < moduli.size(); ++s) {
      const std::size_t have = out.size();
      for (Int r(1); r < moduli[s]; ++r)
        for (std::size_t v = 0; v < have; ++v) {
          auto k = out[v];
          k[s] = r;
          out.push_back(std::move(k));
        }
    }
    return out;
  }
  out.push_back(std::vector<Int>(moduli.size(), Int(0)));
  for (std::size_t s = 0; s < moduli.size(); ++s) {
    std::vector<Int> k(moduli.size(), Int(0));
    k[s] = 1;
    out.push_back(std::move(k));
  }
  return out;
}

}  // namespace

bool split_exact_check(const LayeredCu& S,
                       const std::vector<Cu1Element>& samples,
                       std::string* gate) {
  auto failed = [&](const std::string& g) {
    if (gate) *gate = g;
    return false;
  };

  const LayeredValidation v = layered_validate(S);
  if (!v.ok) return failed(v.detail);

  const std::size_t topIdeal = S.top();
  const auto& topModuli = S.ideals[topIdeal].k1Moduli;
  auto quotient = [&](const Cu1Element& a) {
    return matrix_apply(S.delta.at({a.ideal, topIdeal}), a.k, topModuli);
  };

  // Positives embed as the Cu layer: comparison of (x, 0) pairs must agree
  // with the blockwise order, and their sums stay positive.
  std::vector<const Cu1Element*> positives;
  for (const auto& a : samples)
    if (all_zero(a.k)) positives.push_back(&a);
  for (const auto* a : positives)
    for (const auto* b : positives) {
      bool layerLeq = S.leq[a->ideal][b->ideal];
      if (layerLeq) {
        const LayeredIdeal& ia = S.ideals[a->ideal];
        const LayeredIdeal& ib = S.ideals[b->ideal];
        for (std::size_t t = 0; t < ia.blocks.size() && layerLeq; ++t)
          layerLeq = leq(a->x[t], b->x[*block_pos(ib, ia.blocks[t])]);
      }
      if (cu1_leq(S, *a, *b) != layerLeq)
        return failed("positive embedding disagrees with the layer order on " +
                      cu1_str(S, *a) + " vs " + cu1_str(S, *b));
      if (!all_zero(cu1_add(S, *a, *b).k))
        return failed("sum of positives leaves the positive cone");
    }

  // Exactness in the middle: on the samples, the kernel of the quotient is
  // exactly the positive cone.  (A class-killing delta table passes the
  // lattice laws but fails here.)
  for (const auto& a : samples) {
    const bool inKernel = all_zero(quotient(a));
    if (inKernel != all_zero(a.k))
      return failed("the kernel of the quotient differs from the positive "
                    "cone at " + cu1_str(S, a));
  }

  // The quotient onto the top K1 is additive.
  for (const auto& a : samples)
    for (const auto& b : samples) {
      const auto sum = quotient(cu1_add(S, a, b));
      auto expect = quotient(a);
      const auto qb = quotient(b);
      for (std::size_t s = 0; s < expect.size(); ++s)
        expect[s] = mod_reduce(expect[s] + qb[s], topModuli[s]);
      if (sum != expect)
        return failed("quotient is not additive on " + cu1_str(S, a) +
                      " + " + cu1_str(S, b));
    }

  // The compact section k |-> (top infinity, k) splits the quotient and
  // lands on maximal elements.
  const auto classes = top_class_samples(S);
  for (const auto& k : classes) {
    const Cu1Element s = cu1_top_infinity(S, k);
    if (quotient(s) != reduce_class(k, topModuli))
      return failed("section does not split the quotient");
    for (const auto& b : samples)
      if (cu1_leq(S, s, b) && !cu1_leq(S, b, s))
        return failed("section image is not maximal below " + cu1_str(S, b));
  }
  for (const auto& k : classes)
    for (const auto& l : classes) {
      auto kl = k;
      for (std::size_t s = 0; s < kl.size(); ++s)
        kl[s] = mod_reduce(kl[s] + l[s], topModuli[s]);
      if (cu1_add(S, cu1_top_infinity(S, k), cu1_top_infinity(S, l)) !=
          cu1_top_infinity(S, kl))
        return failed("section is not additive");
    }

  return true;
}

// ---------------------------------------------------------------------------
// Layered morphisms
// ---------------------------------------------------------------------------

LayeredMorphism layered_identity(const LayeredCu& S) {
  LayeredMorphism g;
  g.idealMap.resize(S.ideals.size());
  for (std::size_t i = 0; i < S.ideals.size(); ++i) {
    g.idealMap[i] = i;
    g.k1.push_back(identity_matrix(S.ideals[i].k1Moduli.size()));
  }
  return g;
}

Cu1Element layered_apply(const LayeredCu& S, const LayeredCu& T,
                         const LayeredMorphism& g, const Cu1Element& a) {
  if (g.idealMap.size() != S.ideals.size() || g.k1.size() != S.ideals.size())
    throw InvalidParams("morphism tables do not cover the source ideals");
  if (g.cu) {
    if (g.cu->cols() != S.blocks.size() || g.cu->rows() != T.blocks.size())
      throw InvalidParams("block action shape does not match the models");
  } else if (S.blocks.size() != T.blocks.size()) {
    throw InvalidParams("identity action needs matching block lists");
  }

  const LayeredIdeal& ia = S.ideals[a.ideal];
  std::vector<StepFn> padded(S.blocks.size());
  for (std::size_t t = 0; t < ia.blocks.size(); ++t)
    padded[ia.blocks[t]] = a.x[t];
  const std::vector<StepFn> image =
      g.cu ? apply_block(*g.cu, padded) : padded;

  std::vector<std::size_t> support;
  for (std::size_t b = 0; b < image.size(); ++b)
    if (!(image[b] == zero_fn())) support.push_back(b);

  const std::size_t target = g.idealMap[a.ideal];
  if (target >= T.ideals.size())
    throw InvalidParams("ideal map leaves the target lattice");
  const LayeredIdeal& it = T.ideals[target];
  if (support != it.blocks)
    throw InvalidParams("image of a full element of " + ia.name +
                        " is not full in the mapped ideal " + it.name);

  const Matrix& km = g.k1[a.ideal];
  if (km.rows() != it.k1Moduli.size() || km.cols() != ia.k1Moduli.size())
    throw InvalidParams("K1 matrix for " + ia.name + " has the wrong shape");
  std::vector<StepFn> x;
  for (std::size_t b : it.blocks) x.push_back(image[b]);
  return Cu1Element{target, std::move(x),
                    matrix_apply(km, a.k, it.k1Moduli)};
}

RestrictionReport restrict_morphism(const LayeredCu& S, const LayeredCu& T,
                                    const LayeredMorphism& g, std::size_t I,
                                    const std::vector<Cu1Element>& samples) {
  RestrictionReport report;
  auto failed = [&](const std::string& w) {
    report.diagramOk = false;
    report.witness = w;
    return report;
  };
  if (I >= S.ideals.size() || g.idealMap.size() != S.ideals.size() ||
      g.k1.size() != S.ideals.size())
    return failed("morphism tables do not cover the source ideals");
  report.image = g.idealMap[I];
  report.k1Component = g.k1[I];

  // The ideal map must stay monotone below I, so the restriction maps the
  // sub-lattice under I into the sub-lattice under the image.
  for (std::size_t k = 0; k < S.ideals.size(); ++k)
    for (std::size_t k2 = 0; k2 < S.ideals.size(); ++k2)
      if (S.leq[k][k2] && S.leq[k2][I] &&
          !T.leq[g.idealMap[k]][g.idealMap[k2]])
        return failed("ideal map is not monotone below " + S.ideals[I].name);

  for (const auto& a : samples) {
    if (!S.leq[a.ideal][I]) continue;
    Cu1Element image = cu1_zero(T);
    try {
      image = layered_apply(S, T, g, a);
    } catch (const InvalidParams& e) {
      return failed(std::string("image of ") + cu1_str(S, a) +
                    " is ill-formed: " + e.what());
    }
    // Positive square: positives map to positives inside the image ideal.
    if (all_zero(a.k)) {
      if (!all_zero(image.k))
        return failed("positive sample " + cu1_str(S, a) +
                      " maps outside the positive cone");
      if (!T.leq[image.ideal][report.image])
        return failed("positive sample " + cu1_str(S, a) +
                      " leaves the image ideal");
    }
    // Quotient square: pushing to K1 of the image ideal commutes with the
    // connecting maps.
    const auto lhs = matrix_apply(T.delta.at({image.ideal, report.image}),
                                  image.k, T.ideals[report.image].k1Moduli);
    const auto pushed =
        matrix_apply(S.delta.at({a.ideal, I}), a.k, S.ideals[I].k1Moduli);
    const auto rhs =
        matrix_apply(report.k1Component, pushed, T.ideals[report.image].k1Moduli);
    if (lhs != rhs)
      return failed("the K1 square fails on " + cu1_str(S, a));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Model builders
// ---------------------------------------------------------------------------

LayeredCu simple_layer_model(BlockObject block, std::vector<Int> k1Moduli) {
  LayeredCu S;
  S.blocks = {block};
  S.ideals.push_back(LayeredIdeal{"0", {}, {}});
  S.ideals.push_back(LayeredIdeal{"top", {0}, std::move(k1Moduli)});
  S.leq = {{true, true}, {false, true}};
  const std::size_t slots = S.ideals[1].k1Moduli.size();
  S.delta[{0, 0}] = Matrix(0, 0);
  S.delta[{0, 1}] = Matrix(slots, 0);
  S.delta[{1, 1}] = identity_matrix(slots);
  const Int unitValue = fold_modulus(block) == 0 ? Int(1) : fold_modulus(block);
  S.unitValues = {StepFn::constant(ExtNat(unitValue))};
  return S;
}

LayeredCu stage_layered_model(const InductiveSystem& sys, int n) {
  const StageAlgebra& stage = system_stage(sys, n);
  const DirectSum sum = stage.block_sum();
  const std::size_t B = sum.components.size();
  if (B > 12) throw ResourceLimit("too many blocks for a layered model");

  LayeredCu S;
  S.blocks = sum.components;
  const std::size_t count = std::size_t(1) << B;
  for (std::size_t mask = 0; mask < count; ++mask) {
    LayeredIdeal ideal;
    for (std::size_t b = 0; b < B; ++b)
      if (mask & (std::size_t(1) << b)) {
        ideal.blocks.push_back(b);
        const Int m = fold_modulus(S.blocks[b]);
        if (m != 0) ideal.k1Moduli.push_back(m);
      }
    ideal.name = blocks_str(ideal.blocks);
    S.ideals.push_back(std::move(ideal));
  }
  S.leq.assign(count, std::vector<bool>(count, false));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) S.leq[i][j] = (i & ~j) == 0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) {
      if ((i & ~j) != 0) continue;
      // Slot inclusion: source slots sit at the positions of their blocks.
      Matrix d(S.ideals[j].k1Moduli.size(), S.ideals[i].k1Moduli.size());
      std::size_t srcSlot = 0;
      for (std::size_t b = 0; b < B; ++b) {
        if (!(i & (std::size_t(1) << b)) || fold_modulus(S.blocks[b]) == 0)
          continue;
        std::size_t dstSlot = 0;
        for (std::size_t c = 0; c < b; ++c)
          if ((j & (std::size_t(1) << c)) && fold_modulus(S.blocks[c]) != 0)
            ++dstSlot;
        d.at(dstSlot, srcSlot) = 1;
        ++srcSlot;
      }
      S.delta[{i, j}] = std::move(d);
    }
  S.unitValues = stage.units();
  return S;
}

// ---------------------------------------------------------------------------
// The matching obstruction
// ---------------------------------------------------------------------------

InvariantTable simple_ideal_table(const InductiveSystem& sys, int count) {
  InvariantTable table;
  for (int i = 0; i < count; ++i) table.rows.push_back(ideal_invariants(sys, i));
  return table;
}

namespace {

bool extend_matching(const std::vector<MatchRow>& rows,
                     std::vector<bool>& used, std::size_t i,
                     std::vector<std::size_t>& out) {
  if (i == rows.size()) return true;
  for (std::size_t j : rows[i].candidates) {
    if (used[j]) continue;
    used[j] = true;
    out[i] = j;
    if (extend_matching(rows, used, i + 1, out)) return true;
    used[j] = false;
  }
  return false;
}

}  // namespace

MatchReport obstruction_match(const InvariantTable& a,
                              const InvariantTable& b) {
  MatchReport report;
  const std::size_t nA = a.rows.size(), nB = b.rows.size();
  for (std::size_t i = 0; i < nA; ++i) {
    MatchRow row;
    row.i = i;
    std::vector<std::size_t> k0cands, k1cands;
    for (std::size_t j = 0; j < nB; ++j) {
      bool k0 = false, k1 = false;
      try {
        k0 = class_iso(a.rows[i].first, b.rows[j].first);
      } catch (const UndecidableComparison& e) {
        row.warnings.push_back("K0 comparison with row " + std::to_string(j) +
                               " undecidable: " + e.what());
        report.anyUndecidable = true;
      }
      try {
        k1 = class_iso(a.rows[i].second, b.rows[j].second);
      } catch (const UndecidableComparison& e) {
        row.warnings.push_back("K1 comparison with row " + std::to_string(j) +
                               " undecidable: " + e.what());
        report.anyUndecidable = true;
      }
      if (k0) k0cands.push_back(j);
      if (k1) k1cands.push_back(j);
      if (k0 && k1) row.candidates.push_back(j);
    }
    if (k0cands.size() == 1) row.k0ForcedJ = k0cands.front();
    if (k1cands.size() == 1) row.k1ForcedJ = k1cands.front();
    report.rows.push_back(std::move(row));
  }

  bool emptyRow = false;
  for (const auto& row : report.rows) emptyRow = emptyRow || row.candidates.empty();
  if (nA == nB && !emptyRow) {
    std::vector<bool> used(nB, false);
    std::vector<std::size_t> matching(nA, 0);
    if (extend_matching(report.rows, used, 0, matching)) {
      report.feasible = true;
      report.matching = std::move(matching);
    }
  }
  if (!report.feasible) {
    report.note = emptyRow
                      ? "a row has an empty candidate set; candidates are "
                        "computed row-locally, so no extension of the tables "
                        "can repair the matching"
                      : (nA != nB ? "the tables have different row counts"
                                  : "no perfect matching over the candidate "
                                    "sets");
  } else {
    report.note = "a perfect matching exists";
  }
  return report;
}

}  // namespace cuntzlab
