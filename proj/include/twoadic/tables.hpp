#pragma once

#include "twoadic/cmcat.hpp"
#include "twoadic/galimg.hpp"
#include "twoadic/matgrp.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twoadic::tables {

struct TableVertex {
  std::string id;                 // "E1", ...
  std::string group_name;         // registry name, or empty when inline
  std::optional<matgrp::ImageSpec> group_inline;
  std::optional<std::pair<int64_t, int64_t>> cm; // (disc_K, conductor)
  std::string j_invariant;        // opaque metadata
  std::string lmfdb;              // opaque metadata
  bool minus_id = false;          // expected -Id membership
  bool full_normalizer = false;   // expect index 1 in the Cartan normalizer
  bool twist_rigid = false;       // every index-2 subgroup must contain -Id
};

struct OddEdge {
  int u = 0, v = 0;
  int degree = 0;
};

struct TableRow {
  std::string row_id;      // isogeny class label, e.g. "49.a"
  std::string graph_type;  // "L4" | "L2(2)" | "L2(3)" | "L2(11)" | ... | "R4(6)" | "R4(14)" | "T4"
  std::vector<std::vector<int>> torsion_config; // printed invariant factors per vertex
  std::vector<TableVertex> vertices;
  std::vector<std::pair<int, int>> edges_2;     // vertex indices, 2-isogenies
  std::vector<OddEdge> edges_odd;               // metadata only
};

struct Fixture {
  int version = 1;
  std::vector<TableRow> rows;
};

// Parses and validates a fixture file. Throws parse_error for malformed JSON,
// schema_error for structural problems, unknown_group_name for unresolvable
// vertex group names.
Fixture load_fixture(const std::string& path, const cmcat::Catalog& cat);
Fixture fixture_from_json(const nlohmann::json& j, const cmcat::Catalog& cat);

struct CheckResult {
  std::string name; // TORSION | EDGES | DET | CM | MINUSID | STABLE | KENKU
  bool pass = false;
  std::string detail;
};

struct RowReport {
  std::string row_id;
  std::vector<CheckResult> checks;
  bool pass() const;
};

struct VerifyReport {
  uint8_t level = 5;
  std::vector<RowReport> rows;
  size_t passed = 0, failed = 0;
};

// Runs every check of one row at the working level.
RowReport verify_row(const TableRow& row, uint8_t level,
                     const cmcat::Catalog& cat);

// All rows (or one selected row id). Deterministic: two runs over the same
// fixture and level produce byte-identical JSON.
VerifyReport verify_all(const Fixture& fx, uint8_t level,
                        const cmcat::Catalog& cat,
                        const std::string& only_row = "");

nlohmann::ordered_json report_to_json(const VerifyReport& rep);
std::string report_to_table(const VerifyReport& rep); // human-readable

} // namespace twoadic::tables
