#include "twoadic/matgrp.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

namespace twoadic::matgrp {

using ring2::mod2n;

static void check_level(uint8_t level) {
  if (level == 0 || level > ring2::max_level)
    throw precondition_failed("level out of range [1," +
                              std::to_string(int(ring2::max_level)) +
                              "]: " + std::to_string(int(level)));
}

Mat2 make_mat(int64_t a, int64_t b, int64_t c, int64_t d, uint8_t level) {
  check_level(level);
  return Mat2{mod2n(a, level), mod2n(b, level), mod2n(c, level),
              mod2n(d, level), level};
}

Mat2 identity(uint8_t level) { return make_mat(1, 0, 0, 1, level); }

Mat2 scalar_mat(int64_t s, uint8_t level) { return make_mat(s, 0, 0, s, level); }

Mat2 minus_identity(uint8_t level) { return scalar_mat(-1, level); }

Mat2 mul(const Mat2& m, const Mat2& n) {
  if (m.level != n.level)
    throw precondition_failed("matrix level mismatch in mul");
  uint32_t mask = uint32_t((uint64_t(1) << m.level) - 1);
  uint64_t a = uint64_t(m.a) * n.a + uint64_t(m.b) * n.c;
  uint64_t b = uint64_t(m.a) * n.b + uint64_t(m.b) * n.d;
  uint64_t c = uint64_t(m.c) * n.a + uint64_t(m.d) * n.c;
  uint64_t d = uint64_t(m.c) * n.b + uint64_t(m.d) * n.d;
  return Mat2{uint32_t(a) & mask, uint32_t(b) & mask, uint32_t(c) & mask,
              uint32_t(d) & mask, m.level};
}

uint32_t det(const Mat2& m) {
  return mod2n(int64_t(m.a) * m.d - int64_t(m.b) * m.c, m.level);
}

uint32_t trace(const Mat2& m) { return mod2n(int64_t(m.a) + m.d, m.level); }

bool invertible(const Mat2& m) { return (det(m) & 1) != 0; }

Mat2 inverse(const Mat2& m) {
  if (!invertible(m))
    throw not_invertible("matrix " + to_string(m) + " has even determinant");
  uint32_t di = ring2::inv_odd(det(m), m.level);
  return make_mat(int64_t(di) * m.d, -int64_t(di) * m.b, -int64_t(di) * m.c,
                  int64_t(di) * m.a, m.level);
}

Mat2 reduce(const Mat2& m, uint8_t level) {
  check_level(level);
  if (level > m.level)
    throw precondition_failed("cannot reduce to a higher level");
  uint32_t mask = uint32_t((uint64_t(1) << level) - 1);
  return Mat2{m.a & mask, m.b & mask, m.c & mask, m.d & mask, level};
}

Mat2 negate(const Mat2& m) {
  return make_mat(-int64_t(m.a), -int64_t(m.b), -int64_t(m.c), -int64_t(m.d),
                  m.level);
}

Vec2 apply(const Mat2& m, const Vec2& v) {
  if (m.level != v.level)
    throw precondition_failed("matrix/vector level mismatch in apply");
  return Vec2{mod2n(int64_t(m.a) * v.x + int64_t(m.b) * v.y, m.level),
              mod2n(int64_t(m.c) * v.x + int64_t(m.d) * v.y, m.level),
              m.level};
}

unsigned element_order(const Mat2& m) {
  if (!invertible(m))
    throw not_invertible("element order is defined for invertible matrices only");
  uint64_t id_key = identity(m.level).key();
  Mat2 p = m;
  unsigned ord = 1;
  while (p.key() != id_key) {
    p = mul(p, m);
    ++ord;
    if (ord > (1u << 24)) throw error("internal: runaway element order");
  }
  return ord;
}

std::string to_string(const Mat2& m) {
  std::ostringstream os;
  os << "[" << m.a << " " << m.b << "; " << m.c << " " << m.d << "]@"
     << int(m.level);
  return os.str();
}

bool FiniteMatGroup::same_elements(const FiniteMatGroup& o) const {
  if (level != o.level || elements.size() != o.elements.size()) return false;
  for (size_t i = 0; i < elements.size(); ++i)
    if (elements[i].key() != o.elements[i].key()) return false;
  return true;
}

static void sort_by_key(std::vector<Mat2>& v) {
  std::sort(v.begin(), v.end(),
            [](const Mat2& x, const Mat2& y) { return x.key() < y.key(); });
}

FiniteMatGroup group_from_elements(std::vector<Mat2> elems, uint8_t level) {
  check_level(level);
  FiniteMatGroup g;
  g.level = level;
  for (const Mat2& m : elems) {
    if (m.level != level)
      throw precondition_failed("element level mismatch in group_from_elements");
    if (g.keys.insert(m.key()).second) g.elements.push_back(m);
  }
  sort_by_key(g.elements);
  return g;
}

// Generators if present, otherwise the full element list: both generate.
static const std::vector<Mat2>& gen_list(const FiniteMatGroup& g) {
  return g.generators.empty() ? g.elements : g.generators;
}

FiniteMatGroup closure(const std::vector<Mat2>& gens, uint8_t level) {
  check_level(level);
  FiniteMatGroup g;
  g.level = level;
  std::vector<Mat2> reduced;
  for (const Mat2& m : gens) {
    if (m.level != level)
      throw precondition_failed("generator level mismatch in closure");
    if (!invertible(m))
      throw not_invertible("generator " + to_string(m) +
                           " has even determinant");
    reduced.push_back(m);
  }
  g.generators = reduced;

  std::vector<Mat2> work;
  work.push_back(identity(level));
  g.keys.insert(work[0].key());
  for (size_t i = 0; i < work.size(); ++i) {
    for (const Mat2& gen : reduced) {
      Mat2 p = mul(work[i], gen);
      if (g.keys.insert(p.key()).second) work.push_back(p);
    }
  }
  sort_by_key(work);
  g.elements = std::move(work);
  return g;
}

FiniteMatGroup closure(const ImageSpec& spec, uint8_t level) {
  std::vector<Mat2> gens;
  for (const auto& r : spec.int_generators)
    gens.push_back(make_mat(r[0], r[1], r[2], r[3], level));
  return closure(gens, level);
}

FiniteMatGroup reduce_group(const FiniteMatGroup& g, uint8_t level) {
  check_level(level);
  if (level > g.level)
    throw precondition_failed("cannot reduce a group to a higher level");
  FiniteMatGroup r;
  r.level = level;
  for (const Mat2& m : g.generators) r.generators.push_back(reduce(m, level));
  for (const Mat2& m : g.elements) {
    Mat2 q = reduce(m, level);
    if (r.keys.insert(q.key()).second) r.elements.push_back(q);
  }
  sort_by_key(r.elements);
  return r;
}

uint64_t gl2_order(uint8_t level) {
  check_level(level);
  uint64_t n = 6;
  for (int i = 1; i < int(level); ++i) n *= 16;
  return n;
}

std::pair<uint64_t, uint64_t> level_growth_ratios(const ImageSpec& spec, int k) {
  if (k < 1 || k + 2 > int(ring2::max_level))
    throw precondition_failed("stability level out of range");
  uint64_t o1 = closure(spec, uint8_t(k)).order();
  uint64_t o2 = closure(spec, uint8_t(k + 1)).order();
  uint64_t o3 = closure(spec, uint8_t(k + 2)).order();
  if (o2 % o1 != 0 || o3 % o2 != 0)
    throw error("internal: closure orders do not divide up the tower");
  return {o2 / o1, o3 / o2};
}

bool is_stable_level(const ImageSpec& spec, int k) {
  auto [r1, r2] = level_growth_ratios(spec, k);
  return r1 == r2;
}

bool contains_scalar(const FiniteMatGroup& g, int64_t s) {
  if ((mod2n(s, g.level) & 1) == 0)
    throw even_scalar("scalar " + std::to_string(s) + " is not a unit");
  return g.contains(scalar_mat(s, g.level));
}

bool contains_minus_id(const FiniteMatGroup& g) {
  return g.contains(minus_identity(g.level));
}

FiniteMatGroup join_minus_id(const FiniteMatGroup& g) {
  if (contains_minus_id(g)) {
    FiniteMatGroup copy = g;
    if (copy.generators.empty()) copy.generators = copy.elements;
    return copy;
  }
  std::vector<Mat2> gens = gen_list(g);
  gens.push_back(minus_identity(g.level));
  return closure(gens, g.level);
}

// ---------------------------------------------------------------------------
// Conjugacy sweeps.

namespace {

// Multiset of cheap conjugacy invariants for every element.
std::vector<std::tuple<uint32_t, uint32_t, unsigned>>
invariant_profile(const FiniteMatGroup& g) {
  std::vector<std::tuple<uint32_t, uint32_t, unsigned>> prof;
  prof.reserve(g.order());
  for (const Mat2& m : g.elements)
    prof.emplace_back(trace(m), det(m), element_order(m));
  std::sort(prof.begin(), prof.end());
  return prof;
}

Mat2 mat_from_linear_index(uint64_t idx, uint8_t level) {
  uint32_t n = uint32_t(1) << level;
  uint32_t d = uint32_t(idx % n); idx /= n;
  uint32_t c = uint32_t(idx % n); idx /= n;
  uint32_t b = uint32_t(idx % n); idx /= n;
  uint32_t a = uint32_t(idx % n);
  return Mat2{a, b, c, d, level};
}

// First matrix in lexicographic (a, b, c, d) order satisfying pred, or
// nullopt. pred is only called on invertible matrices. Parallel workers each
// scan a stripe of leading entries and reduce to the smallest linear index,
// so the result does not depend on the degree of parallelism.
template <typename Pred>
std::optional<Mat2> sweep_lex_first(uint8_t level, const Pred& pred) {
  uint64_t n = uint64_t(1) << level;
  unsigned threads = parallel_degree();

  auto scan_stripe = [&](uint64_t a_begin, uint64_t a_step,
                         std::atomic<uint64_t>& best) {
    uint32_t mask = uint32_t(n - 1);
    for (uint64_t a = a_begin; a < n; a += a_step) {
      if (a * n * n * n >= best.load(std::memory_order_relaxed)) return;
      for (uint64_t b = 0; b < n; ++b)
        for (uint64_t c = 0; c < n; ++c) {
          // det = a*d - b*c must be odd: pick d parity accordingly.
          if (!(a & 1) && !((b * c) & 1)) continue; // det even for every d
          uint64_t d0 = (a & 1) ? ((1 + b * c) & 1) : 0;
          uint64_t d_step = (a & 1) ? 2 : 1;
          for (uint64_t d = d0; d < n; d += d_step) {
            Mat2 m{uint32_t(a) & mask, uint32_t(b) & mask, uint32_t(c) & mask,
                   uint32_t(d) & mask, level};
            if (!invertible(m)) continue;
            if (pred(m)) {
              // Indices only grow from here within this stripe, so the first
              // hit is the stripe's best; record it and stop.
              uint64_t idx = ((a * n + b) * n + c) * n + d;
              uint64_t cur = best.load(std::memory_order_relaxed);
              while (idx < cur &&
                     !best.compare_exchange_weak(cur, idx,
                                                 std::memory_order_relaxed)) {
              }
              return;
            }
          }
        }
    }
  };

  std::atomic<uint64_t> best{UINT64_MAX};
  if (threads <= 1) {
    scan_stripe(0, 1, best);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] { scan_stripe(t, threads, best); });
    for (auto& th : pool) th.join();
  }
  uint64_t idx = best.load();
  if (idx == UINT64_MAX) return std::nullopt;
  return mat_from_linear_index(idx, level);
}

} // namespace

std::optional<Mat2> is_conjugate(const FiniteMatGroup& g,
                                 const FiniteMatGroup& h) {
  if (g.level != h.level)
    throw precondition_failed("conjugacy is tested at a common level");
  if (g.order() != h.order()) return std::nullopt;
  if (g.same_elements(h)) {
    // Still report the first conjugator for uniformity.
  } else if (invariant_profile(g) != invariant_profile(h)) {
    return std::nullopt;
  }
  const std::vector<Mat2>& gens = gen_list(g);
  return sweep_lex_first(g.level, [&](const Mat2& m) {
    Mat2 mi = inverse(m);
    for (const Mat2& x : gens)
      if (!h.contains(mul(mul(m, x), mi))) return false;
    return true;
  });
}

std::optional<Mat2> conjugate_into(const FiniteMatGroup& g,
                                   const FiniteMatGroup& big) {
  if (g.level != big.level)
    throw precondition_failed("conjugacy is tested at a common level");
  if (g.order() > big.order()) return std::nullopt;
  const std::vector<Mat2>& gens = gen_list(g);
  return sweep_lex_first(g.level, [&](const Mat2& m) {
    Mat2 mi = inverse(m);
    for (const Mat2& x : gens)
      if (!big.contains(mul(mul(m, x), mi))) return false;
    return true;
  });
}

FiniteMatGroup conjugated(const FiniteMatGroup& g, const Mat2& m) {
  if (m.level != g.level)
    throw precondition_failed("conjugator level mismatch");
  Mat2 mi = inverse(m);
  FiniteMatGroup r;
  r.level = g.level;
  for (const Mat2& x : g.generators) r.generators.push_back(mul(mul(m, x), mi));
  for (const Mat2& x : g.elements) {
    Mat2 y = mul(mul(m, x), mi);
    if (r.keys.insert(y.key()).second) r.elements.push_back(y);
  }
  sort_by_key(r.elements);
  return r;
}

// ---------------------------------------------------------------------------
// Exponent-2 abelianization: cosets of the subgroup generated by all squares.

namespace {

struct CosetSpace {
  FiniteMatGroup squares;                    // D = <g^2 : g in G>
  std::unordered_map<uint64_t, int> label;   // element key -> coset id
  std::vector<Mat2> reps;                    // one representative per coset
  std::vector<uint32_t> coords;              // F2 coordinates per coset
  int rank = 0;
};

CosetSpace coset_space(const FiniteMatGroup& g) {
  if (!g.contains(identity(g.level)))
    throw precondition_failed("group does not contain the identity");
  CosetSpace cs;
  std::vector<Mat2> sq;
  sq.reserve(g.order());
  for (const Mat2& m : g.elements) sq.push_back(mul(m, m));
  cs.squares = closure(group_from_elements(std::move(sq), g.level).elements,
                       g.level);

  // Enumerate cosets in element order; the first element seen in a coset is
  // its representative.
  for (const Mat2& e : g.elements) {
    if (cs.label.count(e.key())) continue;
    int id = int(cs.reps.size());
    cs.reps.push_back(e);
    for (const Mat2& d : cs.squares.elements) cs.label[mul(e, d).key()] = id;
  }
  if (cs.label.size() != g.order())
    throw error("internal: coset enumeration does not cover the group");

  size_t ncosets = cs.reps.size();
  // The quotient is elementary abelian, so ncosets is a power of two.
  if (ncosets == 0 || (ncosets & (ncosets - 1)) != 0)
    throw error("internal: square-quotient size is not a power of two");

  // Assign F2 coordinates by greedy span extension.
  cs.coords.assign(ncosets, 0);
  std::vector<bool> spanned(ncosets, false);
  int id_coset = cs.label.at(identity(g.level).key());
  spanned[size_t(id_coset)] = true;
  std::vector<int> span_ids{id_coset};
  for (size_t c = 0; c < ncosets; ++c) {
    if (spanned[c]) continue;
    int bit = cs.rank++;
    std::vector<int> snapshot = span_ids;
    for (int s : snapshot) {
      int t = cs.label.at(mul(cs.reps[size_t(s)], cs.reps[c]).key());
      if (spanned[size_t(t)])
        throw error("internal: square-quotient span collision");
      cs.coords[size_t(t)] = cs.coords[size_t(s)] | (uint32_t(1) << bit);
      spanned[size_t(t)] = true;
      span_ids.push_back(t);
    }
  }
  if ((size_t(1) << cs.rank) != ncosets)
    throw error("internal: square-quotient rank mismatch");
  return cs;
}

int parity(uint32_t x) { return __builtin_popcount(x) & 1; }

} // namespace

std::vector<FiniteMatGroup> index2_subgroups(const FiniteMatGroup& g) {
  if (g.order() == 0) throw precondition_failed("empty group");
  CosetSpace cs = coset_space(g);
  std::vector<FiniteMatGroup> out;
  for (uint32_t phi = 1; phi < (uint32_t(1) << cs.rank); ++phi) {
    std::vector<Mat2> elems;
    elems.reserve(g.order() / 2);
    for (const Mat2& e : g.elements)
      if (parity(cs.coords[size_t(cs.label.at(e.key()))] & phi) == 0)
        elems.push_back(e);
    FiniteMatGroup h = group_from_elements(std::move(elems), g.level);
    if (h.order() * 2 != g.order())
      throw error("internal: hyperplane subgroup has wrong index");
    out.push_back(std::move(h));
  }
  return out;
}

bool all_index2_contain_minus_id(const FiniteMatGroup& g) {
  Mat2 mid = minus_identity(g.level);
  for (const FiniteMatGroup& h : index2_subgroups(g))
    if (!h.contains(mid)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Characters and quadratic twists.

namespace {

// Propagate generator signs over the whole group; throws invalid_character
// if the assignment is inconsistent (i.e. does not define a homomorphism).
std::unordered_map<uint64_t, int> character_values(const FiniteMatGroup& g,
                                                   const Character& chi) {
  const std::vector<Mat2>& gens = gen_list(g);
  if (chi.signs.size() != gens.size())
    throw invalid_character("character has " + std::to_string(chi.signs.size()) +
                            " signs for " + std::to_string(gens.size()) +
                            " generators");
  for (int s : chi.signs)
    if (s != 1 && s != -1)
      throw invalid_character("character signs must be +1 or -1");

  std::unordered_map<uint64_t, int> value;
  std::vector<Mat2> work{identity(g.level)};
  if (!g.contains(work[0]))
    throw precondition_failed("group does not contain the identity");
  value[work[0].key()] = 1;
  for (size_t i = 0; i < work.size(); ++i) {
    int ve = value.at(work[i].key());
    for (size_t k = 0; k < gens.size(); ++k) {
      Mat2 p = mul(work[i], gens[k]);
      int vp = ve * chi.signs[k];
      auto it = value.find(p.key());
      if (it == value.end()) {
        value[p.key()] = vp;
        work.push_back(p);
      } else if (it->second != vp) {
        throw invalid_character("signs do not extend to a homomorphism");
      }
    }
  }
  if (value.size() != g.order())
    throw error("internal: character propagation missed elements");
  return value;
}

} // namespace

FiniteMatGroup twist_by_character(const FiniteMatGroup& g,
                                  const Character& chi) {
  auto value = character_values(g, chi);
  const std::vector<Mat2>& gens = gen_list(g);
  FiniteMatGroup t;
  t.level = g.level;
  for (size_t k = 0; k < gens.size(); ++k)
    t.generators.push_back(chi.signs[k] == 1 ? gens[k] : negate(gens[k]));
  for (const Mat2& e : g.elements) {
    Mat2 te = value.at(e.key()) == 1 ? e : negate(e);
    if (t.keys.insert(te.key()).second) t.elements.push_back(te);
  }
  sort_by_key(t.elements);
  return t;
}

std::vector<Character> characters(const FiniteMatGroup& g) {
  CosetSpace cs = coset_space(g);
  const std::vector<Mat2>& gens = gen_list(g);
  std::vector<uint32_t> gen_coords;
  for (const Mat2& gen : gens)
    gen_coords.push_back(cs.coords[size_t(cs.label.at(gen.key()))]);
  std::vector<Character> out;
  for (uint32_t phi = 0; phi < (uint32_t(1) << cs.rank); ++phi) {
    Character chi;
    for (uint32_t u : gen_coords) chi.signs.push_back(parity(u & phi) ? -1 : 1);
    out.push_back(std::move(chi));
  }
  return out;
}

std::vector<FiniteMatGroup> twist_class(const ImageSpec& spec, uint8_t level) {
  FiniteMatGroup g = closure(spec, level);
  FiniteMatGroup gbar = join_minus_id(g);
  std::vector<FiniteMatGroup> out;
  for (const Character& chi : characters(gbar)) {
    auto value = character_values(gbar, chi);
    FiniteMatGroup t;
    t.level = level;
    for (const Mat2& gen : g.generators)
      t.generators.push_back(value.at(gen.key()) == 1 ? gen : negate(gen));
    for (const Mat2& e : g.elements) {
      Mat2 te = value.at(e.key()) == 1 ? e : negate(e);
      if (t.keys.insert(te.key()).second) t.elements.push_back(te);
    }
    sort_by_key(t.elements);

    bool seen = false;
    for (const FiniteMatGroup& kept : out) {
      if (kept.same_elements(t) || is_conjugate(t, kept)) {
        seen = true;
        break;
      }
    }
    if (!seen) out.push_back(std::move(t));
  }
  return out;
}

std::vector<uint32_t> det_image(const FiniteMatGroup& g) {
  std::vector<uint32_t> dets;
  dets.reserve(g.order());
  for (const Mat2& m : g.elements) dets.push_back(det(m));
  std::sort(dets.begin(), dets.end());
  dets.erase(std::unique(dets.begin(), dets.end()), dets.end());
  return dets;
}

bool det_surjective(const FiniteMatGroup& g) {
  return det_image(g).size() == (size_t(1) << (g.level - 1));
}

unsigned parallel_degree() {
  const char* env = std::getenv("TWOADIC_PARALLEL");
  if (!env || !*env) return 1;
  char* end = nullptr;
  unsigned long v = std::strtoul(env, &end, 10);
  if (end == env || *end != '\0' || v == 0) return 1;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  return unsigned(std::min<unsigned long>(v, std::min(64u, std::max(1u, hw))));
}

} // namespace twoadic::matgrp
