#include "twoadic/tables.hpp"

#include "twoadic/json_io.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace twoadic::tables {

using matgrp::FiniteMatGroup;
using matgrp::ImageSpec;

bool RowReport::pass() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Fixture parsing.

namespace {

// 2-primary part of a printed invariant factor ([6] is Z/6, whose 2-part
// is Z/2).
uint32_t two_part(int v) { return uint32_t(v & -v); }

galimg::TorsionType config_torsion(const std::vector<int>& c) {
  if (c.empty()) return galimg::TorsionType{1, 1};
  if (c.size() == 1) return galimg::TorsionType{1, two_part(c[0])};
  return galimg::TorsionType{two_part(c[0]), two_part(c[1])};
}

void validate_torsion_entry(const std::vector<int>& c,
                            const std::string& where) {
  if (c.size() > 2)
    throw schema_error(where + ": torsion entry has more than two factors");
  for (int v : c)
    if (v < 1)
      throw schema_error(where + ": torsion factors must be positive");
  if (c.size() == 2 && c[1] % c[0] != 0)
    throw schema_error(where + ": torsion factors must divide in order");
}

} // namespace

Fixture fixture_from_json(const nlohmann::json& j, const cmcat::Catalog& cat) {
  try {
    if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
      throw schema_error("fixture must be an object with a 'rows' array");
    Fixture fx;
    fx.version = j.value("version", 1);
    for (const auto& rj : j["rows"]) {
      TableRow row;
      row.row_id = rj.at("row_id").get<std::string>();
      const std::string where = "row " + row.row_id;
      for (const TableRow& prev : fx.rows)
        if (prev.row_id == row.row_id)
          throw schema_error("duplicate row id '" + row.row_id + "'");
      row.graph_type = rj.at("graph_type").get<std::string>();

      for (const auto& tj : rj.at("torsion_config")) {
        std::vector<int> entry = tj.get<std::vector<int>>();
        validate_torsion_entry(entry, where);
        row.torsion_config.push_back(std::move(entry));
      }

      for (const auto& vj : rj.at("vertices")) {
        TableVertex v;
        v.id = vj.at("id").get<std::string>();
        bool named = vj.contains("group");
        bool inlined = vj.contains("group_inline");
        if (named == inlined)
          throw schema_error(where + " vertex " + v.id +
                             ": exactly one of 'group' and 'group_inline' is "
                             "required");
        if (named) {
          v.group_name = vj["group"].get<std::string>();
          // Resolve now so bad names fail at load time.
          cmcat::catalog_group(cat, v.group_name, 1);
        } else {
          ImageSpec spec;
          spec.name = row.row_id + "." + v.id;
          spec.stable_level = vj["group_inline"].value("stable_level", 3);
          for (const auto& m : vj["group_inline"].at("generators")) {
            if (!m.is_array() || m.size() != 2 || m[0].size() != 2 ||
                m[1].size() != 2)
              throw schema_error(where + " vertex " + v.id +
                                 ": generators must be [[a,b],[c,d]]");
            spec.int_generators.push_back(
                {m[0][0].get<int64_t>(), m[0][1].get<int64_t>(),
                 m[1][0].get<int64_t>(), m[1][1].get<int64_t>()});
          }
          if (spec.int_generators.empty())
            throw schema_error(where + " vertex " + v.id +
                               ": inline group has no generators");
          v.group_inline = std::move(spec);
        }
        if (vj.contains("cm")) {
          auto cm = vj["cm"].get<std::vector<int64_t>>();
          if (cm.size() != 2)
            throw schema_error(where + " vertex " + v.id +
                               ": cm must be [disc_K, conductor]");
          v.cm = std::make_pair(cm[0], cm[1]);
        }
        v.j_invariant = vj.value("j", std::string());
        v.lmfdb = vj.value("lmfdb", std::string());
        v.minus_id = vj.value("minus_id", false);
        v.full_normalizer = vj.value("full_normalizer", false);
        v.twist_rigid = vj.value("twist_rigid", false);
        row.vertices.push_back(std::move(v));
      }

      if (row.torsion_config.size() != row.vertices.size())
        throw schema_error(where + ": torsion_config and vertices differ in "
                           "length");
      int n = int(row.vertices.size());

      size_t want = 0;
      if (row.graph_type == "L4" || row.graph_type == "T4" ||
          row.graph_type.rfind("R4(", 0) == 0)
        want = 4;
      else if (row.graph_type.rfind("L2(", 0) == 0)
        want = 2;
      else if (row.graph_type == "L1")
        want = 1;
      else
        throw schema_error(where + ": unrecognized graph_type '" +
                           row.graph_type + "'");
      if (row.vertices.size() != want)
        throw schema_error(where + ": graph_type " + row.graph_type +
                           " requires " + std::to_string(want) +
                           " vertices, got " +
                           std::to_string(row.vertices.size()));

      if (rj.contains("edges_2"))
        for (const auto& ej : rj["edges_2"]) {
          auto e = ej.get<std::vector<int>>();
          if (e.size() != 2 || e[0] < 0 || e[1] < 0 || e[0] >= n ||
              e[1] >= n || e[0] == e[1])
            throw schema_error(where + ": bad 2-edge");
          row.edges_2.emplace_back(e[0], e[1]);
        }
      if (rj.contains("edges_odd"))
        for (const auto& ej : rj["edges_odd"]) {
          OddEdge e;
          e.u = ej.at("u").get<int>();
          e.v = ej.at("v").get<int>();
          e.degree = ej.at("degree").get<int>();
          if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n || e.u == e.v ||
              e.degree < 3 || e.degree % 2 == 0)
            throw schema_error(where + ": bad odd edge");
          row.edges_odd.push_back(e);
        }
      fx.rows.push_back(std::move(row));
    }
    return fx;
  } catch (const nlohmann::json::exception& ex) {
    throw schema_error(std::string("fixture: ") + ex.what());
  }
}

Fixture load_fixture(const std::string& path, const cmcat::Catalog& cat) {
  return fixture_from_json(json_io::parse_file(path), cat);
}

// ---------------------------------------------------------------------------
// Row verification.

namespace {

struct RowCtx {
  const TableRow& row;
  uint8_t level;
  const cmcat::Catalog& cat;
  std::vector<FiniteMatGroup> groups;          // at the working level
  std::vector<ImageSpec> specs;                // valid for closures <= 6
  std::vector<std::vector<galimg::RationalCyclic>> kernels2; // per vertex
};

std::vector<galimg::RationalCyclic> order2_kernels(const FiniteMatGroup& g) {
  std::vector<galimg::RationalCyclic> out;
  for (const galimg::RationalCyclic& k :
       galimg::rational_cyclic_subgroups(g, 2))
    if (k.order == 2) out.push_back(k);
  return out;
}

std::string torsion_line(const RowCtx& ctx,
                         const std::vector<galimg::TorsionType>& got) {
  std::string s;
  for (size_t i = 0; i < got.size(); ++i) {
    if (i) s += " ";
    s += ctx.row.vertices[i].id + "=" + got[i].str();
  }
  return s;
}

CheckResult check_torsion(RowCtx& ctx) {
  std::vector<galimg::TorsionType> got, want;
  for (const FiniteMatGroup& g : ctx.groups)
    got.push_back(galimg::torsion_from_image(g));
  for (const auto& c : ctx.row.torsion_config)
    want.push_back(config_torsion(c));

  if (got == want)
    return {"TORSION", true, torsion_line(ctx, got)};

  // Fall back to a symmetry of the printed graph: a relabeling that fixes
  // the 2-edge and odd-edge structure and matches the printed torsions.
  size_t n = got.size();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto edge_set = [&](const std::vector<int>& p) {
    std::vector<std::pair<int, int>> e2;
    for (auto [u, v] : ctx.row.edges_2)
      e2.emplace_back(std::min(p[size_t(u)], p[size_t(v)]),
                      std::max(p[size_t(u)], p[size_t(v)]));
    std::sort(e2.begin(), e2.end());
    std::vector<std::tuple<int, int, int>> eo;
    for (const OddEdge& e : ctx.row.edges_odd)
      eo.emplace_back(std::min(p[size_t(e.u)], p[size_t(e.v)]),
                      std::max(p[size_t(e.u)], p[size_t(e.v)]), e.degree);
    std::sort(eo.begin(), eo.end());
    return std::make_pair(e2, eo);
  };
  std::vector<int> ident(n);
  std::iota(ident.begin(), ident.end(), 0);
  auto base = edge_set(ident);
  do {
    bool ok = true;
    for (size_t i = 0; i < n && ok; ++i)
      if (!(got[i] == want[size_t(perm[i])])) ok = false;
    if (ok && edge_set(perm) == base) {
      std::string as;
      for (size_t i = 0; i < n; ++i) {
        if (i) as += " ";
        as += ctx.row.vertices[i].id + "->slot" + std::to_string(perm[i] + 1);
      }
      return {"TORSION", true,
              torsion_line(ctx, got) + " (up to graph symmetry: " + as + ")"};
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::string wl;
  for (size_t i = 0; i < n; ++i) {
    if (i) wl += " ";
    wl += want[i].str();
  }
  return {"TORSION", false,
          "computed " + torsion_line(ctx, got) + " but the row prints " + wl};
}

CheckResult check_edges(RowCtx& ctx) {
  size_t n = ctx.groups.size();
  ctx.kernels2.clear();
  for (const FiniteMatGroup& g : ctx.groups)
    ctx.kernels2.push_back(order2_kernels(g));

  std::vector<int> degree(n, 0);
  for (auto [u, v] : ctx.row.edges_2) {
    degree[size_t(u)]++;
    degree[size_t(v)]++;
  }
  std::string census;
  for (size_t i = 0; i < n; ++i) {
    if (i) census += ",";
    census += std::to_string(ctx.kernels2[i].size());
    if (ctx.kernels2[i].size() != size_t(degree[i]))
      return {"EDGES", false,
              "vertex " + ctx.row.vertices[i].id + " admits " +
                  std::to_string(ctx.kernels2[i].size()) +
                  " degree-2 kernels but the row draws " +
                  std::to_string(degree[i]) + " 2-isogenies"};
  }

  uint8_t down = uint8_t(ctx.level - 1);
  std::vector<FiniteMatGroup> reduced;
  for (const FiniteMatGroup& g : ctx.groups)
    reduced.push_back(matgrp::reduce_group(g, down));

  auto realized = [&](size_t from, size_t to) {
    for (const galimg::RationalCyclic& k : ctx.kernels2[from]) {
      FiniteMatGroup child = galimg::pushforward(ctx.groups[from], k);
      if (child.order() == reduced[to].order() &&
          matgrp::is_conjugate(child, reduced[to]))
        return true;
    }
    return false;
  };
  for (auto [u, v] : ctx.row.edges_2) {
    if (!realized(size_t(u), size_t(v)))
      return {"EDGES", false,
              "no degree-2 kernel of " + ctx.row.vertices[size_t(u)].id +
                  " pushes to the image at " + ctx.row.vertices[size_t(v)].id};
    if (!realized(size_t(v), size_t(u)))
      return {"EDGES", false,
              "no degree-2 kernel of " + ctx.row.vertices[size_t(v)].id +
                  " pushes to the image at " + ctx.row.vertices[size_t(u)].id};
  }
  return {"EDGES", true,
          "kernel census [" + census + "] matches the drawn degrees; " +
              std::to_string(ctx.row.edges_2.size()) +
              " 2-isogenies realized in both directions"};
}

CheckResult check_det(RowCtx& ctx) {
  for (size_t i = 0; i < ctx.groups.size(); ++i)
    if (!matgrp::det_surjective(ctx.groups[i]))
      return {"DET", false,
              "vertex " + ctx.row.vertices[i].id + " has determinant image " +
                  std::to_string(matgrp::det_image(ctx.groups[i]).size()) +
                  " of " + std::to_string(size_t(1) << (ctx.level - 1)) +
                  " odd classes"};
  return {"DET", true, "determinants cover all odd classes at every vertex"};
}

CheckResult check_cm(RowCtx& ctx) {
  int checked = 0;
  for (size_t i = 0; i < ctx.groups.size(); ++i) {
    const TableVertex& v = ctx.row.vertices[i];
    if (!v.cm) continue;
    ++checked;
    cmcat::CMParams p = cmcat::cm_params(v.cm->first, v.cm->second);
    FiniteMatGroup nrm = cmcat::normalizer_cartan(p, ctx.level);

    bool inside = true;
    for (const matgrp::Mat2& e : ctx.groups[i].elements)
      if (!nrm.contains(e)) {
        inside = false;
        break;
      }
    if (!inside && !matgrp::conjugate_into(ctx.groups[i], nrm))
      return {"CM", false,
              "vertex " + v.id + " does not embed in the normalizer for "
                  "discriminant " + std::to_string(v.cm->first * v.cm->second *
                                                   v.cm->second)};
    if (nrm.order() % ctx.groups[i].order() != 0)
      return {"CM", false, "vertex " + v.id + ": order does not divide the "
                           "normalizer order"};
    uint64_t index = nrm.order() / ctx.groups[i].order();
    int units = cmcat::unit_group_order(v.cm->first, v.cm->second);
    if (uint64_t(units) % index != 0)
      return {"CM", false,
              "vertex " + v.id + " sits at index " + std::to_string(index) +
                  " in the normalizer; only divisors of " +
                  std::to_string(units) + " can occur"};
    if (v.full_normalizer && index != 1)
      return {"CM", false,
              "vertex " + v.id + " is marked as the full normalizer but has "
                  "index " + std::to_string(index)};
  }
  return {"CM", true,
          std::to_string(checked) + " vertex images embed in their Cartan "
          "normalizers with admissible index"};
}

CheckResult check_minus_id(RowCtx& ctx) {
  for (size_t i = 0; i < ctx.groups.size(); ++i) {
    const TableVertex& v = ctx.row.vertices[i];
    bool has = matgrp::contains_minus_id(ctx.groups[i]);
    if (has != v.minus_id)
      return {"MINUSID", false,
              "vertex " + v.id + (has ? " contains" : " lacks") +
                  " -Id, contrary to the row"};
    if (v.twist_rigid && !matgrp::all_index2_contain_minus_id(ctx.groups[i]))
      return {"MINUSID", false,
              "vertex " + v.id + " is marked twist-rigid but has an index-2 "
                  "subgroup without -Id"};
  }
  return {"MINUSID", true, "-Id membership and twist rigidity as printed"};
}

CheckResult check_stable(RowCtx& ctx) {
  for (size_t i = 0; i < ctx.groups.size(); ++i)
    for (int k : {3, 4}) {
      auto [r1, r2] = matgrp::level_growth_ratios(ctx.specs[i], k);
      if (r1 != r2)
        return {"STABLE", false,
                "vertex " + ctx.row.vertices[i].id + " grows by " +
                    std::to_string(r1) + " then " + std::to_string(r2) +
                    " above level " + std::to_string(k)};
    }
  return {"STABLE", true, "growth ratio is constant above levels 3 and 4 at "
                          "every vertex"};
}

CheckResult check_kenku(RowCtx& ctx) {
  std::string counts;
  for (size_t i = 0; i < ctx.groups.size(); ++i) {
    size_t c = galimg::c2_count(ctx.groups[i]); // throws above 8
    if (i) counts += ",";
    counts += std::to_string(c);
  }
  return {"KENKU", true,
          "cyclic 2-power census [" + counts + "] within the bound of 8"};
}

} // namespace

RowReport verify_row(const TableRow& row, uint8_t level,
                     const cmcat::Catalog& cat) {
  if (level < 4 || level > ring2::max_level)
    throw precondition_failed("table verification needs level in [4," +
                              std::to_string(int(ring2::max_level)) + "]");
  RowReport rep;
  rep.row_id = row.row_id;

  RowCtx ctx{row, level, cat, {}, {}, {}};
  std::string mat_err;
  try {
    uint8_t spec_level = std::max<uint8_t>(level, 6);
    for (const TableVertex& v : row.vertices) {
      if (v.group_inline) {
        ctx.specs.push_back(*v.group_inline);
        ctx.groups.push_back(matgrp::closure(*v.group_inline, level));
      } else {
        ctx.specs.push_back(cmcat::catalog_spec(cat, v.group_name, spec_level));
        ctx.groups.push_back(cmcat::catalog_group(cat, v.group_name, level));
      }
    }
  } catch (const error& e) {
    mat_err = e.what();
  }

  auto run = [&](const char* name, CheckResult (*fn)(RowCtx&)) {
    if (!mat_err.empty()) {
      rep.checks.push_back(
          {name, false, "group materialization failed: " + mat_err});
      return;
    }
    try {
      rep.checks.push_back(fn(ctx));
    } catch (const error& e) {
      rep.checks.push_back({name, false, e.what()});
    }
  };
  run("TORSION", check_torsion);
  run("EDGES", check_edges);
  run("DET", check_det);
  run("CM", check_cm);
  run("MINUSID", check_minus_id);
  run("STABLE", check_stable);
  run("KENKU", check_kenku);
  return rep;
}

VerifyReport verify_all(const Fixture& fx, uint8_t level,
                        const cmcat::Catalog& cat,
                        const std::string& only_row) {
  VerifyReport rep;
  rep.level = level;
  for (const TableRow& row : fx.rows) {
    if (!only_row.empty() && row.row_id != only_row) continue;
    rep.rows.push_back(verify_row(row, level, cat));
    if (rep.rows.back().pass())
      ++rep.passed;
    else
      ++rep.failed;
  }
  return rep;
}

nlohmann::ordered_json report_to_json(const VerifyReport& rep) {
  nlohmann::ordered_json j;
  j["level"] = int(rep.level);
  j["passed"] = rep.passed;
  j["failed"] = rep.failed;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const RowReport& r : rep.rows) {
    nlohmann::ordered_json rj;
    rj["row_id"] = r.row_id;
    rj["pass"] = r.pass();
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const CheckResult& c : r.checks) {
      nlohmann::ordered_json cj;
      cj["name"] = c.name;
      cj["pass"] = c.pass;
      cj["detail"] = c.detail;
      checks.push_back(cj);
    }
    rj["checks"] = checks;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  return j;
}

std::string report_to_table(const VerifyReport& rep) {
  static const char* names[] = {"TORSION", "EDGES",  "DET",  "CM",
                                "MINUSID", "STABLE", "KENKU"};
  size_t idw = 10;
  for (const RowReport& r : rep.rows) idw = std::max(idw, r.row_id.size() + 2);
  std::ostringstream os;
  os << std::left << std::setw(int(idw)) << "row" << std::setw(8) << "result";
  for (const char* n : names) os << std::setw(9) << n;
  os << "\n";
  for (const RowReport& r : rep.rows) {
    os << std::left << std::setw(int(idw)) << r.row_id << std::setw(8)
       << (r.pass() ? "PASS" : "FAIL");
    for (const char* n : names) {
      std::string cell = "-";
      for (const CheckResult& c : r.checks)
        if (c.name == n) cell = c.pass ? "ok" : "FAIL";
      os << std::setw(9) << cell;
    }
    os << "\n";
  }
  os << rep.passed << " of " << rep.passed + rep.failed
     << " rows pass at level " << int(rep.level) << "\n";
  return os.str();
}

} // namespace twoadic::tables
