#include "twoadic/galimg.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_set>

namespace twoadic::galimg {

using matgrp::FiniteMatGroup;
using matgrp::ImageSpec;
using matgrp::Mat2;
using matgrp::Vec2;

std::string TorsionType::str() const {
  if (n1 == 1) return "[" + std::to_string(n2) + "]";
  return "[" + std::to_string(n1) + "," + std::to_string(n2) + "]";
}

bool mazur_2primary(const TorsionType& t) {
  static const TorsionType allowed[] = {{1, 1}, {1, 2}, {1, 4}, {1, 8},
                                        {2, 2}, {2, 4}, {2, 8}};
  for (const TorsionType& a : allowed)
    if (t == a) return true;
  return false;
}

static const std::vector<Mat2>& gen_list(const FiniteMatGroup& g) {
  return g.generators.empty() ? g.elements : g.generators;
}

static unsigned vec_val2(uint32_t x, uint32_t y, uint8_t level) {
  if (x == 0 && y == 0) return level;
  unsigned v = unsigned(__builtin_ctz(x | y));
  return v < level ? v : level;
}

std::vector<Vec2> fixed_vectors(const FiniteMatGroup& g) {
  const std::vector<Mat2>& gens = gen_list(g);
  uint32_t n = uint32_t(1) << g.level;
  std::vector<Vec2> out;
  for (uint32_t x = 0; x < n; ++x)
    for (uint32_t y = 0; y < n; ++y) {
      Vec2 v{x, y, g.level};
      bool fixed = true;
      for (const Mat2& m : gens)
        if (!(apply(m, v) == v)) {
          fixed = false;
          break;
        }
      if (fixed) out.push_back(v);
    }
  return out;
}

static TorsionType raw_torsion(const FiniteMatGroup& g) {
  std::vector<Vec2> fix = fixed_vectors(g);
  unsigned max_ord_log = 0;
  for (const Vec2& v : fix) {
    unsigned ord_log = g.level - vec_val2(v.x, v.y, g.level);
    max_ord_log = std::max(max_ord_log, ord_log);
  }
  uint32_t n2 = uint32_t(1) << max_ord_log;
  if (fix.size() % n2 != 0)
    throw error("internal: fixed module size not divisible by max order");
  uint32_t n1 = uint32_t(fix.size() / n2);
  if (n2 % n1 != 0)
    throw error("internal: fixed module is not in invariant-factor form");
  return TorsionType{n1, n2};
}

TorsionType torsion_from_image(const FiniteMatGroup& g) {
  TorsionType t = raw_torsion(g);
  if (g.level >= 3) {
    TorsionType down = raw_torsion(matgrp::reduce_group(g, g.level - 1));
    if (!(down == t))
      throw not_stabilized("fixed module changes between level " +
                           std::to_string(g.level - 1) + " (" + down.str() +
                           ") and level " + std::to_string(g.level) + " (" +
                           t.str() + ")");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Stable cyclic subgroups.

namespace {

uint64_t pack_vec(uint32_t x, uint32_t y) {
  return uint64_t(x) | (uint64_t(y) << 32);
}

std::vector<RationalCyclic> cyclic_raw(const FiniteMatGroup& g,
                                       uint32_t max_order) {
  const std::vector<Mat2>& gens = gen_list(g);
  uint32_t n = uint32_t(1) << g.level;
  std::vector<RationalCyclic> out;
  out.push_back(RationalCyclic{Vec2{0, 0, g.level}, 1});

  for (uint32_t x = 0; x < n; ++x)
    for (uint32_t y = 0; y < n; ++y) {
      if (x == 0 && y == 0) continue;
      unsigned rho = g.level - vec_val2(x, y, g.level);
      uint32_t order = uint32_t(1) << rho;
      if (order > max_order) continue;

      // Keep only the lexicographically least generator of <v>.
      bool canonical = true;
      for (uint32_t u = 3; u < order && canonical; u += 2) {
        uint32_t ux = uint32_t((uint64_t(u) * x) & (n - 1));
        uint32_t uy = uint32_t((uint64_t(u) * y) & (n - 1));
        if (ux < x || (ux == x && uy < y)) canonical = false;
      }
      if (!canonical) continue;

      std::unordered_set<uint64_t> members;
      for (uint32_t u = 0; u < order; ++u)
        members.insert(pack_vec(uint32_t((uint64_t(u) * x) & (n - 1)),
                                uint32_t((uint64_t(u) * y) & (n - 1))));
      bool stable = true;
      Vec2 v{x, y, g.level};
      for (const Mat2& m : gens) {
        Vec2 w = apply(m, v);
        if (!members.count(pack_vec(w.x, w.y))) {
          stable = false;
          break;
        }
      }
      if (stable) out.push_back(RationalCyclic{v, order});
    }

  std::sort(out.begin(), out.end(),
            [](const RationalCyclic& a, const RationalCyclic& b) {
              return a.order != b.order ? a.order < b.order : a.gen < b.gen;
            });
  return out;
}

} // namespace

std::vector<RationalCyclic> rational_cyclic_subgroups(const FiniteMatGroup& g,
                                                      uint32_t max_order) {
  if (max_order == 0 || (max_order & (max_order - 1)) != 0)
    throw precondition_failed("max_order must be a power of two");
  if (max_order >= (uint32_t(1) << g.level))
    throw precondition_failed("max_order must be smaller than 2^level");

  std::vector<RationalCyclic> out = cyclic_raw(g, max_order);
  // Certify against one level down whenever the same search is valid there.
  if (g.level >= 2 && max_order < (uint32_t(1) << (g.level - 1))) {
    size_t down =
        cyclic_raw(matgrp::reduce_group(g, g.level - 1), max_order).size();
    if (down != out.size())
      throw not_stabilized(
          "stable cyclic subgroup count changes between level " +
          std::to_string(g.level - 1) + " (" + std::to_string(down) +
          ") and level " + std::to_string(g.level) + " (" +
          std::to_string(out.size()) + ")");
  }
  return out;
}

size_t c2_count(const FiniteMatGroup& g) {
  uint32_t max_order = g.level >= 2 ? (uint32_t(1) << (g.level - 2)) : 1;
  size_t count = rational_cyclic_subgroups(g, max_order).size();
  if (count > 8)
    throw kenku_violation("group admits " + std::to_string(count) +
                          " stable cyclic 2-power subgroups; at most 8 can "
                          "occur for a curve over Q");
  return count;
}

size_t c2_count(const ImageSpec& spec, uint8_t level) {
  if (int(level) < spec.stable_level + 2)
    throw precondition_failed("cyclic-subgroup census needs level >= " +
                              std::to_string(spec.stable_level + 2) +
                              " for this group");
  return c2_count(matgrp::closure(spec, level));
}

// ---------------------------------------------------------------------------
// Basis adaptation and pushforward.

Mat2 adapt_basis(const FiniteMatGroup& g, const RationalCyclic& k) {
  uint8_t N = g.level;
  uint32_t n = uint32_t(1) << N;
  if (k.gen.level != N)
    throw precondition_failed("kernel level mismatch");
  if (k.order > n)
    throw precondition_failed("kernel order exceeds the level");

  unsigned r = 0;
  while ((uint32_t(1) << r) < k.order) ++r;

  // Stability of <gen> under the group.
  {
    std::unordered_set<uint64_t> members;
    for (uint32_t u = 0; u < k.order; ++u)
      members.insert(pack_vec(uint32_t((uint64_t(u) * k.gen.x) & (n - 1)),
                              uint32_t((uint64_t(u) * k.gen.y) & (n - 1))));
    for (const Mat2& m : gen_list(g)) {
      Vec2 w = apply(m, k.gen);
      if (!members.count(pack_vec(w.x, w.y)))
        throw not_stable("kernel <(" + std::to_string(k.gen.x) + "," +
                         std::to_string(k.gen.y) + ")> is not stable under " +
                         "the group");
    }
  }

  unsigned m_shift = N - r;

  // Q: lexicographically least full-order vector with 2^m * Q generating K,
  // i.e. 2^m * Q an odd multiple of the kernel generator.
  std::unordered_set<uint64_t> odd_multiples;
  for (uint32_t u = 1; u < std::max<uint32_t>(k.order, 2); u += 2)
    odd_multiples.insert(pack_vec(uint32_t((uint64_t(u) * k.gen.x) & (n - 1)),
                                  uint32_t((uint64_t(u) * k.gen.y) & (n - 1))));
  std::optional<Vec2> q;
  for (uint32_t x = 0; x < n && !q; ++x)
    for (uint32_t y = 0; y < n; ++y) {
      if (((x | y) & 1) == 0) continue; // not full order
      uint64_t sx = (uint64_t(x) << m_shift) & (n - 1);
      uint64_t sy = (uint64_t(y) << m_shift) & (n - 1);
      bool hits = r == 0 ? (sx == 0 && sy == 0)
                         : odd_multiples.count(pack_vec(uint32_t(sx),
                                                        uint32_t(sy))) != 0;
      if (hits) {
        q = Vec2{x, y, N};
        break;
      }
    }
  if (!q) throw error("internal: no full-order lift of the kernel generator");

  // P: lexicographically least completion with odd determinant.
  for (uint32_t x = 0; x < n; ++x)
    for (uint32_t y = 0; y < n; ++y) {
      uint32_t d = ring2::mod2n(int64_t(x) * q->y - int64_t(q->x) * y, N);
      if (d & 1) return matgrp::make_mat(x, q->x, y, q->y, N);
    }
  throw error("internal: no basis completion found");
}

FiniteMatGroup pushforward(const FiniteMatGroup& g, const RationalCyclic& k) {
  if (k.order == 1) return g;
  unsigned r = 0;
  while ((uint32_t(1) << r) < k.order) ++r;
  if (r >= g.level)
    throw precondition_failed("kernel too large for the level: pushforward "
                              "would land below level 1");
  uint8_t child_level = uint8_t(g.level - r);

  Mat2 basis = adapt_basis(g, k);
  FiniteMatGroup conj = matgrp::conjugated(g, matgrp::inverse(basis));

  uint32_t rmask = (uint32_t(1) << r) - 1;
  for (const Mat2& e : conj.elements)
    if (e.b & rmask)
      throw error("internal: adapted frame lacks top-right divisibility");

  auto push_mat = [&](const Mat2& e) {
    return matgrp::make_mat(int64_t(e.a), int64_t(e.b >> r),
                            int64_t(e.c) << r, int64_t(e.d), child_level);
  };

  std::vector<Mat2> elems;
  elems.reserve(conj.order());
  for (const Mat2& e : conj.elements) elems.push_back(push_mat(e));
  FiniteMatGroup child = matgrp::group_from_elements(std::move(elems),
                                                     child_level);
  for (const Mat2& e : gen_list(conj)) child.generators.push_back(push_mat(e));
  return child;
}

// ---------------------------------------------------------------------------
// 2-primary isogeny graph.

size_t IsoGraph2::curve_count() const {
  size_t n = 0;
  for (const IsoVertex& v : vertices) n += size_t(v.multiplicity);
  return n;
}

std::vector<TorsionType> IsoGraph2::torsion_multiset() const {
  std::vector<TorsionType> out;
  for (const IsoVertex& v : vertices)
    for (int i = 0; i < v.multiplicity; ++i) out.push_back(v.torsion);
  std::sort(out.begin(), out.end());
  return out;
}

IsoGraph2 isogeny_graph2(const ImageSpec& root, uint8_t level) {
  if (level < 5)
    throw precondition_failed("isogeny graph needs level >= 5 so that "
                              "depth-2 vertices stay certifiable");

  IsoGraph2 graph;
  FiniteMatGroup g0 = matgrp::closure(root, level);

  struct Pending {
    int id;
    std::optional<Vec2> dual; // kernel to skip (the reverse isogeny)
  };
  std::deque<Pending> queue;

  graph.vertices.push_back(
      IsoVertex{0, g0, level, torsion_from_image(g0), 1});
  queue.push_back(Pending{0, std::nullopt});

  while (!queue.empty()) {
    Pending cur = queue.front();
    queue.pop_front();
    // Copy what we need: vertices may reallocate while we append children.
    FiniteMatGroup here = graph.vertices[size_t(cur.id)].group;
    uint8_t L = here.level;

    std::vector<RationalCyclic> kernels;
    for (const RationalCyclic& k : rational_cyclic_subgroups(here, 2))
      if (k.order == 2) kernels.push_back(k);

    bool dual_seen = !cur.dual.has_value();
    std::vector<RationalCyclic> outgoing;
    for (const RationalCyclic& k : kernels) {
      if (cur.dual && k.gen == *cur.dual) {
        dual_seen = true;
        continue;
      }
      outgoing.push_back(k);
    }
    if (!dual_seen)
      throw error("internal: reverse kernel missing from the child's census");

    if (outgoing.empty()) continue;
    if (L - 1 < 3)
      throw not_stabilized("graph continues below level 3; raise the level");

    // Conjugate children of the same vertex are the same curve class seen
    // through different kernels; merge those (and only those — a child
    // conjugate to some unrelated vertex is still a distinct curve, e.g.
    // both ends of an isogeny can carry the same image group).
    std::vector<int> siblings;
    for (const RationalCyclic& k : outgoing) {
      FiniteMatGroup child = pushforward(here, k);
      uint8_t cl = child.level;

      int match = -1;
      for (int sid : siblings) {
        const IsoVertex& v = graph.vertices[size_t(sid)];
        if (v.group.order() == child.order() &&
            matgrp::is_conjugate(child, v.group)) {
          match = sid;
          break;
        }
      }
      if (match >= 0) {
        graph.edges.emplace_back(cur.id, match);
      } else {
        int id = int(graph.vertices.size());
        graph.vertices.push_back(
            IsoVertex{id, child, cl, torsion_from_image(child), 1});
        graph.edges.emplace_back(cur.id, id);
        siblings.push_back(id);
        // The reverse isogeny's kernel in the child frame.
        Vec2 dual{uint32_t(1) << (cl - 1), 0, cl};
        queue.push_back(Pending{id, dual});
      }
    }
  }

  // Multiplicities: number of expanded-tree copies of each merged vertex.
  // Every edge points from an earlier id to a later one, and all of a
  // vertex's incoming edges are recorded before it expands, so one forward
  // pass in edge order is exact.
  std::vector<int> mult(graph.vertices.size(), 0);
  mult[0] = 1;
  for (const auto& [p, c] : graph.edges) mult[size_t(c)] += mult[size_t(p)];
  for (IsoVertex& v : graph.vertices) v.multiplicity = mult[size_t(v.id)];
  return graph;
}

std::string shape_name(GraphShape s) {
  switch (s) {
    case GraphShape::L1: return "L1";
    case GraphShape::L2: return "L2";
    case GraphShape::L3: return "L3";
    case GraphShape::T4: return "T4";
    case GraphShape::T6: return "T6";
    case GraphShape::T8: return "T8";
    default: return "UNRECOGNIZED";
  }
}

GraphShape classify_shape(const IsoGraph2& g) {
  // Expanded-tree degree multiset: every copy of a merged vertex has one
  // edge per outgoing kernel plus one to its parent (except the root).
  std::map<int, int> out_deg;
  for (const auto& [p, c] : g.edges) out_deg[p] += 1;

  size_t n = g.curve_count();
  std::vector<int> degrees;
  for (const IsoVertex& v : g.vertices) {
    int d = out_deg.count(v.id) ? out_deg.at(v.id) : 0;
    if (v.id != g.root) d += 1;
    for (int i = 0; i < v.multiplicity; ++i) degrees.push_back(d);
  }
  std::sort(degrees.begin(), degrees.end());

  auto is = [&](std::vector<int> want) {
    std::sort(want.begin(), want.end());
    return degrees == want;
  };
  if (n == 1 && is({0})) return GraphShape::L1;
  if (n == 2 && is({1, 1})) return GraphShape::L2;
  if (n == 3 && is({1, 2, 1})) return GraphShape::L3;
  if (n == 4 && is({3, 1, 1, 1})) return GraphShape::T4;
  if (n == 6 && is({3, 3, 1, 1, 1, 1})) return GraphShape::T6;
  if (n == 8 && is({3, 3, 3, 1, 1, 1, 1, 1})) return GraphShape::T8;
  return GraphShape::UNRECOGNIZED;
}

} // namespace twoadic::galimg
