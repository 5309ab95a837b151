#pragma once

#include "twoadic/errors.hpp"
#include "twoadic/ring2.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace twoadic::matgrp {

// 2x2 matrix over Z/2^level, row-major [a b; c d], entries canonical in
// [0, 2^level). Matrices act on column vectors: e1 -> (a, c), e2 -> (b, d).
struct Mat2 {
  uint32_t a = 1, b = 0, c = 0, d = 1;
  uint8_t level = 1;

  uint64_t key() const {
    return uint64_t(a) | (uint64_t(b) << 16) | (uint64_t(c) << 32) |
           (uint64_t(d) << 48);
  }
  bool operator==(const Mat2& o) const {
    return level == o.level && key() == o.key();
  }
};

struct Vec2 {
  uint32_t x = 0, y = 0;
  uint8_t level = 1;
  bool operator==(const Vec2& o) const {
    return x == o.x && y == o.y && level == o.level;
  }
  bool operator<(const Vec2& o) const {
    return x != o.x ? x < o.x : y < o.y;
  }
};

Mat2 make_mat(int64_t a, int64_t b, int64_t c, int64_t d, uint8_t level);
Mat2 identity(uint8_t level);
Mat2 scalar_mat(int64_t s, uint8_t level);
Mat2 minus_identity(uint8_t level);

Mat2 mul(const Mat2& m, const Mat2& n);
uint32_t det(const Mat2& m);
uint32_t trace(const Mat2& m);
bool invertible(const Mat2& m); // odd determinant
Mat2 inverse(const Mat2& m);    // throws not_invertible
Mat2 reduce(const Mat2& m, uint8_t level);
Mat2 negate(const Mat2& m);
Vec2 apply(const Mat2& m, const Vec2& v);
unsigned element_order(const Mat2& m);
std::string to_string(const Mat2& m);

// A fully materialized finite matrix group at one level. Elements are stored
// sorted by packed key so iteration order (and everything downstream of it)
// is deterministic.
struct FiniteMatGroup {
  uint8_t level = 1;
  std::vector<Mat2> generators;
  std::vector<Mat2> elements;
  std::unordered_set<uint64_t> keys;

  size_t order() const { return elements.size(); }
  bool contains(const Mat2& m) const { return keys.count(m.key()) != 0; }
  bool contains_key(uint64_t k) const { return keys.count(k) != 0; }
  bool same_elements(const FiniteMatGroup& o) const;
};

FiniteMatGroup group_from_elements(std::vector<Mat2> elems, uint8_t level);

// Generator list given over the integers; closure() reduces them mod 2^N.
struct ImageSpec {
  std::vector<std::array<int64_t, 4>> int_generators; // row-major
  int stable_level = 3;
  std::string name;
};

// Subgroup of GL(2, Z/2^N) generated by the reductions of the integer
// generators. Throws not_invertible if any generator has even determinant.
FiniteMatGroup closure(const ImageSpec& spec, uint8_t level);
FiniteMatGroup closure(const std::vector<Mat2>& gens, uint8_t level);

// Entrywise reduction mod 2^k; the image of a group under the reduction map.
FiniteMatGroup reduce_group(const FiniteMatGroup& g, uint8_t level);

// Number of elements of GL(2, Z/2^N): 6 * 16^(N-1).
uint64_t gl2_order(uint8_t level);

// Growth-stabilization test for the tower of closures of one generator list:
// true iff |H(2^(k+1))| / |H(2^k)| equals |H(2^(k+2))| / |H(2^(k+1))|, i.e.
// the mod-2^k group already lifts fully inside the closure one level up and
// the per-level growth factor has reached its limiting value (16 for open
// subgroups of the full group, 4 for Cartan-normalizer type groups, ...).
bool is_stable_level(const ImageSpec& spec, int k);
// The two ratios, for reporting.
std::pair<uint64_t, uint64_t> level_growth_ratios(const ImageSpec& spec, int k);

// Scalar membership; throws even_scalar for non-invertible scalar values.
bool contains_scalar(const FiniteMatGroup& g, int64_t s);
bool contains_minus_id(const FiniteMatGroup& g);

// Join <g, -Id>.
FiniteMatGroup join_minus_id(const FiniteMatGroup& g);

// Conjugacy of materialized subgroups at a common level by exhaustive search
// over GL(2, Z/2^N) in lexicographic (a,b,c,d) order; returns the first
// conjugator m with m G m^-1 = H, or nullopt. Cheap invariants (order, the
// multiset of (trace, det, element order)) reject most non-conjugate pairs
// before the sweep.
std::optional<Mat2> is_conjugate(const FiniteMatGroup& g,
                                 const FiniteMatGroup& h);

// First m (same enumeration order) with m g m^-1 a subgroup of big.
std::optional<Mat2> conjugate_into(const FiniteMatGroup& g,
                                   const FiniteMatGroup& big);

FiniteMatGroup conjugated(const FiniteMatGroup& g, const Mat2& m);

// All index-2 subgroups, via hyperplanes of the exponent-2 abelianization
// G / <squares>: the subgroup generated by all element squares already
// contains every commutator, the quotient V is elementary abelian of rank r,
// and index-2 subgroups correspond to the 2^r - 1 hyperplanes of V.
std::vector<FiniteMatGroup> index2_subgroups(const FiniteMatGroup& g);

bool all_index2_contain_minus_id(const FiniteMatGroup& g);

// A degree-two character: signs on g.generators that extend to a homomorphism
// G -> {+-1} (equivalently, a linear functional on the exponent-2
// abelianization). twist_by_character validates and throws invalid_character.
struct Character {
  std::vector<int> signs; // +1 / -1 per generator
};

// {chi(g) * g : g in G}. Always a group (sign twisting is multiplicative
// because -Id is central); satisfies <twist, -Id> = <G, -Id>. When -Id lies
// in G and chi(-Id) = -1 the map is two-to-one and the twist has half the
// order, otherwise the order is preserved.
FiniteMatGroup twist_by_character(const FiniteMatGroup& g, const Character& chi);

// All characters of g (2^rank of them, trivial first, deterministic order).
std::vector<Character> characters(const FiniteMatGroup& g);

// Quadratic twist class of the closure at the given level: characters of
// <G, -Id> applied to G's elements, deduplicated by conjugacy (first
// representative in character enumeration order is kept).
std::vector<FiniteMatGroup> twist_class(const ImageSpec& spec, uint8_t level);

// Sorted set of determinants.
std::vector<uint32_t> det_image(const FiniteMatGroup& g);
bool det_surjective(const FiniteMatGroup& g);

// Degree of parallelism for the exhaustive conjugator sweeps, read from the
// TWOADIC_PARALLEL environment variable (default 1 = sequential). Results are
// independent of the setting: workers reduce to the lexicographically first
// hit.
unsigned parallel_degree();

} // namespace twoadic::matgrp
