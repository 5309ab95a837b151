#pragma once

#include "twoadic/matgrp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twoadic::galimg {

// Invariant-factor type (n1, n2), n1 | n2, of the fixed-point submodule of
// (Z/2^N)^2 under a matrix group; the 2-primary rational torsion of a curve
// whose image the group is.
struct TorsionType {
  uint32_t n1 = 1, n2 = 1;
  bool operator==(const TorsionType& o) const {
    return n1 == o.n1 && n2 == o.n2;
  }
  bool operator<(const TorsionType& o) const {
    return n1 != o.n1 ? n1 < o.n1 : n2 < o.n2;
  }
  std::string str() const;
};

// Types a 2-primary rational torsion subgroup can have over Q.
bool mazur_2primary(const TorsionType& t);

// Fixed-point submodule of the group action, in invariant-factor form. From
// level 3 on the value is certified by recomputing at level N-1 and throws
// not_stabilized on mismatch; below level 3 the raw module is returned.
TorsionType torsion_from_image(const matgrp::FiniteMatGroup& g);

// The raw fixed submodule (all fixed vectors), for inspection.
std::vector<matgrp::Vec2> fixed_vectors(const matgrp::FiniteMatGroup& g);

// A cyclic subgroup of (Z/2^N)^2 stable under the group, i.e. the kernel of a
// rational cyclic isogeny of 2-power degree.
struct RationalCyclic {
  matgrp::Vec2 gen;   // canonical generator (lexicographically least)
  uint32_t order = 1; // 2^r; the trivial subgroup has order 1
};

// All stable cyclic subgroups of order dividing max_order (a 2-power
// < 2^level), the trivial subgroup included, each by its canonical generator,
// sorted by (order, generator). The count is certified against level N-1 and
// throws not_stabilized on disagreement.
std::vector<RationalCyclic> rational_cyclic_subgroups(
    const matgrp::FiniteMatGroup& g, uint32_t max_order);

// Count of all stable cyclic 2-power subgroups (max order 2^(N-2), enough for
// any rational configuration): the number of vertices of the 2-primary
// isogeny subgraph reachable from a curve with this image. Requires
// level >= stable_level + 2 of headroom; throws kenku_violation if the count
// exceeds 8.
size_t c2_count(const matgrp::ImageSpec& spec, uint8_t level);
// Same count computed directly on a materialized group.
size_t c2_count(const matgrp::FiniteMatGroup& g);

// Basis change g = [P | Q] (columns) such that Q is a full-order lift of the
// kernel generator (2^m * Q generates K, m = level - log2(|K|)) and P is the
// lexicographically least completion with odd determinant. In the conjugated
// group m^-1 G m every element's top-right entry is divisible by |K|. Throws
// not_stable when K is not stable under G.
matgrp::Mat2 adapt_basis(const matgrp::FiniteMatGroup& g,
                         const RationalCyclic& k);

// Image of the isogenous curve with kernel K: conjugate by adapt_basis, then
// map each generator [a b; c d] to [a, b/2^r; 2^r c, d] mod 2^(N-r) and close.
// Scalars and -Id are carried along; the trivial kernel returns the group
// unchanged.
matgrp::FiniteMatGroup pushforward(const matgrp::FiniteMatGroup& g,
                                   const RationalCyclic& k);

// 2-primary isogeny graph grown from a root image by BFS over stable order-2
// kernels. Conjugate pushforward targets reached through different kernels
// are merged into one vertex with a multiplicity count; shape and torsion
// multiset are computed on the expanded tree (one node per kernel path, the
// true curve count). The back-kernel of each pushforward (the image of the
// parent's 2-torsion, <2^(m-1) e1> in the adapted frame) is skipped, so each
// undirected isogeny contributes one edge.
struct IsoVertex {
  int id = 0;
  matgrp::FiniteMatGroup group;
  uint8_t level = 1;
  TorsionType torsion;
  int multiplicity = 1;
};

struct IsoGraph2 {
  std::vector<IsoVertex> vertices;
  std::vector<std::pair<int, int>> edges; // one entry per isogeny (kernel path)
  int root = 0;

  size_t curve_count() const; // sum of multiplicities
  std::vector<TorsionType> torsion_multiset() const; // expanded, sorted
};

IsoGraph2 isogeny_graph2(const matgrp::ImageSpec& root, uint8_t level);

enum class GraphShape { L1, L2, L3, T4, T6, T8, UNRECOGNIZED };
std::string shape_name(GraphShape s);
GraphShape classify_shape(const IsoGraph2& g);

} // namespace twoadic::galimg
