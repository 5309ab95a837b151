#pragma once

#include "twoadic/matgrp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twoadic::cmcat {

// Parameters (delta, phi) of a Cartan order at 2: the Cartan group consists of
// all matrices [a + b*phi, b; delta*b, a] with odd determinant
// a^2 + a*b*phi - delta*b^2.
struct CMParams {
  int64_t delta = -1;
  int64_t phi = 0;
  bool operator==(const CMParams& o) const {
    return delta == o.delta && phi == o.phi;
  }
};

// (disc_K, conductor) -> (delta, phi):
//   disc_K * f^2 = 0 mod 4  ->  delta = disc_K * f^2 / 4, phi = 0
//   disc_K * f^2 = 1 mod 4  ->  delta = ((disc_K - 1)/4) * f^2, phi = f
CMParams cm_params(int64_t disc_k, int64_t conductor);

// Order of the unit group of the order of discriminant disc_K * f^2:
// 6 for (-3, 1), 4 for (-4, 1), 2 otherwise.
int unit_group_order(int64_t disc_k, int64_t conductor);

// Direct enumeration over (a, b) pairs; not built by closure.
matgrp::FiniteMatGroup cartan(const CMParams& p, uint8_t level);

// <cartan, [-1 0; phi 1]>. Index 2 over the Cartan for level >= 2; at level 1
// with even phi the adjoined matrix reduces to the identity and the
// normalizer degenerates to the Cartan itself.
matgrp::FiniteMatGroup normalizer_cartan(const CMParams& p, uint8_t level);

// Independent oracle for |cartan|: counts pairs (a, b) in [0, 2^N)^2 with
// a^2 + a*b*phi - delta*b^2 odd, without constructing matrices.
uint64_t cartan_unit_count(const CMParams& p, uint8_t level);

// Named-group registry. Entries resolve either to explicit integer generator
// lists, to a Cartan/normalizer construction, or to another entry by alias.
struct CatalogEntry {
  std::string name;
  std::string kind;   // "ints" | "cartan" | "normalizer" | "alias"
  std::string source; // where in the bundled tables the group occurs
  std::vector<std::array<int64_t, 4>> generators; // kind == "ints"
  std::optional<CMParams> params;                 // kind == "cartan"/"normalizer"
  std::string target;                             // kind == "alias"
  int stable_level = 3;
};

struct Catalog {
  std::vector<CatalogEntry> entries;

  const CatalogEntry* find(const std::string& name) const;
  // Resolves aliases; throws unknown_group_name.
  const CatalogEntry& resolve(const std::string& name) const;
  matgrp::FiniteMatGroup group(const std::string& name, uint8_t level) const;
  // Integer-generator view for closure towers; Cartan/normalizer entries get
  // a generating set computed at max_level+... the requested working level.
  matgrp::ImageSpec spec(const std::string& name, uint8_t level) const;
  std::vector<std::string> names() const;
};

// Parses the registry JSON asset (throws parse_error / schema_error).
Catalog load_catalog(const std::string& path);
// The registry bundled at build time.
const Catalog& builtin_catalog();

// Group lookup with parametric fallback: names not present in the registry
// are recognized in the forms N_{d,p} / C_{d,p} (normalizer / Cartan with
// delta = d, phi = p) and J1(d) / J2(d) (<5*Id, +-[1 1; d 1]>).
matgrp::FiniteMatGroup catalog_group(const Catalog& cat, const std::string& name,
                                     uint8_t level);
matgrp::ImageSpec catalog_spec(const Catalog& cat, const std::string& name,
                               uint8_t level);

} // namespace twoadic::cmcat
