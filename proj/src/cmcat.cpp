#include "twoadic/cmcat.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>

#ifndef TWOADIC_REGISTRY_PATH
#define TWOADIC_REGISTRY_PATH "data/registry.json"
#endif

namespace twoadic::cmcat {

using matgrp::FiniteMatGroup;
using matgrp::ImageSpec;
using matgrp::Mat2;

CMParams cm_params(int64_t disc_k, int64_t conductor) {
  if (conductor < 1) throw precondition_failed("conductor must be >= 1");
  if (disc_k >= 0) throw precondition_failed("discriminant must be negative");
  int64_t d = disc_k * conductor * conductor;
  int64_t r = ((d % 4) + 4) % 4;
  if (r == 0) return CMParams{d / 4, 0};
  if (r == 1) return CMParams{((disc_k - 1) / 4) * conductor * conductor,
                              conductor};
  throw precondition_failed("not a discriminant: " + std::to_string(d) +
                            " is 2 or 3 mod 4");
}

int unit_group_order(int64_t disc_k, int64_t conductor) {
  if (conductor == 1 && disc_k == -3) return 6;
  if (conductor == 1 && disc_k == -4) return 4;
  return 2;
}

static bool det_form_odd(const CMParams& p, uint64_t a, uint64_t b) {
  // a^2 + a*b*phi - delta*b^2 mod 2; signs are irrelevant to parity.
  uint64_t v = a * a + a * b * uint64_t(p.phi & 1) + uint64_t(p.delta & 1) * b * b;
  return (v & 1) != 0;
}

FiniteMatGroup cartan(const CMParams& p, uint8_t level) {
  uint64_t n = uint64_t(1) << level;
  std::vector<Mat2> elems;
  elems.reserve(size_t(n * n / 2));
  for (uint64_t a = 0; a < n; ++a)
    for (uint64_t b = 0; b < n; ++b) {
      if (!det_form_odd(p, a, b)) continue;
      elems.push_back(matgrp::make_mat(int64_t(a) + int64_t(b) * p.phi,
                                       int64_t(b), p.delta * int64_t(b),
                                       int64_t(a), level));
    }
  return matgrp::group_from_elements(std::move(elems), level);
}

FiniteMatGroup normalizer_cartan(const CMParams& p, uint8_t level) {
  FiniteMatGroup c = cartan(p, level);
  Mat2 gamma = matgrp::make_mat(-1, 0, p.phi, 1, level);
  if (c.contains(gamma)) return c; // level-1 degeneracy for even phi

  // gamma has order 2; check it normalizes the Cartan, which makes
  // C \cup C*gamma a group without any further closure.
  if (mul(gamma, gamma).key() != matgrp::identity(level).key())
    throw error("internal: adjoined involution does not square to identity");
  for (const Mat2& x : c.elements)
    if (!c.contains(mul(mul(gamma, x), gamma)))
      throw error("internal: adjoined involution does not normalize the Cartan");

  std::vector<Mat2> elems = c.elements;
  for (const Mat2& x : c.elements) elems.push_back(mul(x, gamma));
  return matgrp::group_from_elements(std::move(elems), level);
}

uint64_t cartan_unit_count(const CMParams& p, uint8_t level) {
  uint64_t n = uint64_t(1) << level, count = 0;
  for (uint64_t a = 0; a < n; ++a)
    for (uint64_t b = 0; b < n; ++b)
      if (det_form_odd(p, a, b)) ++count;
  return count;
}

// ---------------------------------------------------------------------------
// Registry.

const CatalogEntry* Catalog::find(const std::string& name) const {
  for (const CatalogEntry& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

const CatalogEntry& Catalog::resolve(const std::string& name) const {
  const CatalogEntry* e = find(name);
  if (!e) throw unknown_group_name("no registry entry named '" + name + "'");
  int depth = 0;
  while (e->kind == "alias") {
    if (++depth > 32)
      throw schema_error("alias chain too deep at '" + name + "'");
    const CatalogEntry* t = find(e->target);
    if (!t)
      throw unknown_group_name("alias '" + e->name + "' targets missing '" +
                               e->target + "'");
    e = t;
  }
  return *e;
}

FiniteMatGroup Catalog::group(const std::string& name, uint8_t level) const {
  const CatalogEntry& e = resolve(name);
  if (e.kind == "ints") {
    ImageSpec s{e.generators, e.stable_level, e.name};
    return matgrp::closure(s, level);
  }
  if (e.kind == "cartan") return cartan(*e.params, level);
  if (e.kind == "normalizer") return normalizer_cartan(*e.params, level);
  throw schema_error("entry '" + e.name + "' has unknown kind '" + e.kind + "'");
}

// Small generating set extracted greedily from the sorted element list. The
// result generates the group at this level and at every lower level (the
// reduction of a generating set generates the reduced group), but not
// necessarily at higher ones.
static ImageSpec greedy_spec(const FiniteMatGroup& g, const std::string& name,
                             int stable_level) {
  ImageSpec s;
  s.name = name;
  s.stable_level = stable_level;
  std::vector<Mat2> gens;
  FiniteMatGroup have = matgrp::closure(gens, g.level);
  for (const Mat2& e : g.elements) {
    if (have.order() == g.order()) break;
    if (have.contains(e)) continue;
    gens.push_back(e);
    have = matgrp::closure(gens, g.level);
    s.int_generators.push_back({int64_t(e.a), int64_t(e.b), int64_t(e.c),
                                int64_t(e.d)});
  }
  if (have.order() != g.order())
    throw error("internal: greedy generating set does not close");
  return s;
}

ImageSpec Catalog::spec(const std::string& name, uint8_t level) const {
  const CatalogEntry& e = resolve(name);
  if (e.kind == "ints") return ImageSpec{e.generators, e.stable_level, e.name};
  return greedy_spec(group(name, level), e.name, e.stable_level);
}

std::vector<std::string> Catalog::names() const {
  std::vector<std::string> out;
  for (const CatalogEntry& e : entries) out.push_back(e.name);
  return out;
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open registry file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw parse_error("registry " + path + ": " + ex.what());
  }
  try {
    if (!j.is_object() || !j.contains("groups") || !j["groups"].is_array())
      throw schema_error("registry must be an object with a 'groups' array");
    Catalog cat;
    for (const auto& ge : j["groups"]) {
      CatalogEntry e;
      e.name = ge.at("name").get<std::string>();
      e.kind = ge.at("kind").get<std::string>();
      e.source = ge.value("source", std::string());
      e.stable_level = ge.value("stable_level", 3);
      if (e.kind == "ints") {
        for (const auto& m : ge.at("generators")) {
          if (!m.is_array() || m.size() != 2 || m[0].size() != 2 ||
              m[1].size() != 2)
            throw schema_error("generator of '" + e.name +
                               "' must be [[a,b],[c,d]]");
          e.generators.push_back({m[0][0].get<int64_t>(),
                                  m[0][1].get<int64_t>(),
                                  m[1][0].get<int64_t>(),
                                  m[1][1].get<int64_t>()});
        }
        if (e.generators.empty())
          throw schema_error("entry '" + e.name + "' has no generators");
      } else if (e.kind == "cartan" || e.kind == "normalizer") {
        e.params = CMParams{ge.at("delta").get<int64_t>(),
                            ge.at("phi").get<int64_t>()};
      } else if (e.kind == "alias") {
        e.target = ge.at("target").get<std::string>();
      } else {
        throw schema_error("entry '" + e.name + "' has unknown kind '" +
                           e.kind + "'");
      }
      if (cat.find(e.name))
        throw schema_error("duplicate registry entry '" + e.name + "'");
      cat.entries.push_back(std::move(e));
    }
    return cat;
  } catch (const nlohmann::json::exception& ex) {
    throw schema_error("registry " + path + ": " + ex.what());
  }
}

const Catalog& builtin_catalog() {
  static Catalog cat = [] {
    const char* env = std::getenv("TWOADIC_REGISTRY");
    return load_catalog(env && *env ? env : TWOADIC_REGISTRY_PATH);
  }();
  return cat;
}

// ---------------------------------------------------------------------------
// Parametric fallback names.

namespace {

// Parses "<head>_{d,p}" -> (d, p).
std::optional<CMParams> parse_braced(const std::string& name, char head) {
  if (name.size() < 6 || name[0] != head || name[1] != '_' || name[2] != '{' ||
      name.back() != '}')
    return std::nullopt;
  std::string body = name.substr(3, name.size() - 4);
  size_t comma = body.find(',');
  if (comma == std::string::npos) return std::nullopt;
  try {
    size_t used = 0;
    int64_t d = std::stoll(body.substr(0, comma), &used);
    if (used != comma) return std::nullopt;
    std::string rest = body.substr(comma + 1);
    int64_t p = std::stoll(rest, &used);
    if (used != rest.size()) return std::nullopt;
    return CMParams{d, p};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Parses "J1(d)" / "J2(d)" -> generator list.
std::optional<std::vector<std::array<int64_t, 4>>>
parse_j(const std::string& name) {
  if (name.size() < 5 || name[0] != 'J' || name[2] != '(' || name.back() != ')')
    return std::nullopt;
  if (name[1] != '1' && name[1] != '2') return std::nullopt;
  try {
    std::string body = name.substr(3, name.size() - 4);
    size_t used = 0;
    int64_t d = std::stoll(body, &used);
    if (used != body.size()) return std::nullopt;
    std::vector<std::array<int64_t, 4>> gens;
    gens.push_back({5, 0, 0, 5});
    if (name[1] == '1')
      gens.push_back({1, 1, d, 1});
    else
      gens.push_back({-1, -1, -d, -1});
    return gens;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

} // namespace

FiniteMatGroup catalog_group(const Catalog& cat, const std::string& name,
                             uint8_t level) {
  if (cat.find(name)) return cat.group(name, level);
  if (auto p = parse_braced(name, 'N')) return normalizer_cartan(*p, level);
  if (auto p = parse_braced(name, 'C')) return cartan(*p, level);
  if (auto g = parse_j(name)) {
    ImageSpec s{*g, 3, name};
    return matgrp::closure(s, level);
  }
  throw unknown_group_name("'" + name +
                           "' is not in the registry and does not match "
                           "N_{d,p}, C_{d,p}, J1(d) or J2(d)");
}

ImageSpec catalog_spec(const Catalog& cat, const std::string& name,
                       uint8_t level) {
  if (cat.find(name)) return cat.spec(name, level);
  if (auto g = parse_j(name)) return ImageSpec{*g, 3, name};
  // Parametric Cartan/normalizer: extract a generating set at this level.
  return greedy_spec(catalog_group(cat, name, level), name, 3);
}

} // namespace twoadic::cmcat
