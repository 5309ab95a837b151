// twoadic: command-line frontend for the 2-adic Galois image toolkit.
//
// Conventions shared by every subcommand:
//   - machine-readable output (JSON) goes to standard output, or to the file
//     named by --out when given; --dot files are the one non-JSON artifact;
//   - diagnostics, warnings and human-readable tables go to standard error;
//   - exit status 0 = success, 1 = a mathematical check failed (verification
//     failure, unliftable seed, unstable kernel, ...), 2 = usage or input
//     error (bad flags, malformed JSON, unknown group name, level out of
//     range).
//
// Group arguments accept either a registry name (e.g. "N_{-7,0}") or a path
// to a JSON file {"name": ..., "level": N, "generators": [[[a,b],[c,d]], ...]}.
// Working levels are capped at 8 (a level-8 group can already hold ~10^9
// matrices); groups whose closure is all of GL2 are refused above level 6.

#include "twoadic/cmcat.hpp"
#include "twoadic/galimg.hpp"
#include "twoadic/json_io.hpp"
#include "twoadic/matgrp.hpp"
#include "twoadic/ring2.hpp"
#include "twoadic/tables.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/stat.h>
#include <vector>

#ifndef TWOADIC_DATA_DIR
#define TWOADIC_DATA_DIR "data"
#endif

namespace {

using nlohmann::ordered_json;
using namespace twoadic;

// Thrown for problems that are the caller's fault; mapped to exit status 2.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kLevelCap = 8;       // hard cap for group materialization
constexpr int kFullGroupCap = 6;   // cap when the closure is all of GL2

bool file_exists(const std::string& path) {
  struct stat st;
  return stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode);
}

bool looks_like_file(const std::string& arg) {
  if (file_exists(arg)) return true;
  return arg.size() > 5 && arg.compare(arg.size() - 5, 5, ".json") == 0;
}

// Writes `j` to --out (if set) or stdout, with a trailing newline.
void emit(const ordered_json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw usage_error("cannot open output file: " + out_path);
  f << j.dump(2) << "\n";
  if (!f) throw usage_error("cannot write output file: " + out_path);
  std::cerr << "wrote " << out_path << "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw usage_error("cannot open output file: " + path);
  f << text;
  if (!f) throw usage_error("cannot write output file: " + path);
  std::cerr << "wrote " << path << "\n";
}

std::vector<mpz_class> parse_int_list(const std::string& csv,
                                      const std::string& what) {
  std::vector<mpz_class> out;
  std::string tok;
  std::istringstream is(csv);
  while (std::getline(is, tok, ',')) {
    size_t b = tok.find_first_not_of(" \t");
    size_t e = tok.find_last_not_of(" \t");
    if (b == std::string::npos)
      throw usage_error(what + ": empty entry in '" + csv + "'");
    tok = tok.substr(b, e - b + 1);
    try {
      out.emplace_back(tok);
    } catch (const std::invalid_argument&) {
      throw usage_error(what + ": '" + tok + "' is not an integer");
    }
  }
  if (out.empty()) throw usage_error(what + ": no entries in '" + csv + "'");
  return out;
}

void check_level_range(int level) {
  if (level < 1) throw usage_error("--level must be at least 1");
  if (level > kLevelCap)
    throw usage_error("--level " + std::to_string(level) +
                      " exceeds the hard cap " + std::to_string(kLevelCap) +
                      ": a group at that level may not fit in memory");
  if (level >= 7)
    std::cerr << "warning: materializing at level " << level
              << " may take minutes and significant memory\n";
}

// A spec that closes to all of GL2 at level 3 stays full at every higher
// level, and the full group is far too large above level 6 — refuse early.
void refuse_full_group(const matgrp::FiniteMatGroup& probe) {
  if (probe.order() == matgrp::gl2_order(probe.level))
    throw usage_error("group closes to all of GL2; refusing levels above " +
                      std::to_string(kFullGroupCap));
}

struct ResolvedGroup {
  matgrp::ImageSpec spec;       // integer description; closures at any level
                                // <= max(working level, 6) are faithful
  matgrp::FiniteMatGroup group; // materialized at the working level
};

// Resolves a --group argument (registry name or JSON file), enforcing the
// level policy. Catalog names are materialized by their exact construction at
// the working level; the spec is extracted high enough that stability checks
// (closures up to level 6) see the true tower.
ResolvedGroup materialize_group(const std::string& arg, int level) {
  if (arg.empty()) throw usage_error("--group is required");
  check_level_range(level);
  if (looks_like_file(arg)) {
    auto [spec, file_level] = json_io::spec_from_json(json_io::parse_file(arg));
    (void)file_level; // generators are exact integers; --level picks the level
    if (spec.name.empty()) spec.name = arg;
    if (level > kFullGroupCap) refuse_full_group(matgrp::closure(spec, 3));
    return {spec, matgrp::closure(spec, uint8_t(level))};
  }
  const cmcat::Catalog& cat = cmcat::builtin_catalog();
  try {
    if (level > kFullGroupCap)
      refuse_full_group(cmcat::catalog_group(cat, arg, 3));
    matgrp::ImageSpec spec =
        cmcat::catalog_spec(cat, arg, uint8_t(std::max(level, 6)));
    return {spec, cmcat::catalog_group(cat, arg, uint8_t(level))};
  } catch (const unknown_group_name& ex) {
    throw usage_error(ex.what());
  }
}

std::string display_name(const matgrp::ImageSpec& spec) {
  return spec.name.empty() ? std::string("(inline group)") : spec.name;
}

// ---------------------------------------------------------------------------
// hensel

struct HenselOpts {
  std::string poly;
  std::string seed;
  std::string prime = "2";
  int level = 5;
  std::string out;
};

int run_hensel(const HenselOpts& o) {
  if (o.level < 1 || o.level > 100000)
    throw usage_error("--level out of range [1, 100000]");
  ring2::IntPoly f;
  f.coeffs = parse_int_list(o.poly, "--poly");
  mpz_class seed;
  try {
    seed = mpz_class(o.seed);
  } catch (const std::invalid_argument&) {
    throw usage_error("--seed: '" + o.seed + "' is not an integer");
  }
  mpz_class p;
  try {
    p = mpz_class(o.prime);
  } catch (const std::invalid_argument&) {
    throw usage_error("--prime: '" + o.prime + "' is not an integer");
  }
  if (p < 2) throw usage_error("--prime must be at least 2");

  ring2::HenselResult res =
      ring2::hensel_solve(f, seed, (unsigned long)o.level, p);

  mpz_class mod;
  mpz_pow_ui(mod.get_mpz_t(), p.get_mpz_t(), (unsigned long)o.level);
  mpz_class residue = f.eval(res.root) % mod;
  if (residue < 0) residue += mod;

  ordered_json j;
  j["poly"] = o.poly;
  j["prime"] = p.get_str();
  j["level"] = o.level;
  j["seed"] = seed.get_str();
  j["root"] = res.root.get_str();
  j["tau"] = res.tau;
  j["start_level"] = res.start_level;
  j["chain"] = res.chain;
  j["residue"] = residue.get_str();
  emit(j, o.out);
  if (residue != 0) {
    std::cerr << "residue is nonzero: lift failed self-check\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// catalog

struct CatalogOpts {
  bool list = false;
  std::string name;
  int level = 5;
  std::string out;
};

int run_catalog(const CatalogOpts& o) {
  const cmcat::Catalog& cat = cmcat::builtin_catalog();
  if (o.list == !o.name.empty())
    throw usage_error("catalog needs exactly one of --list or --name");
  if (o.list) {
    ordered_json arr = ordered_json::array();
    for (const cmcat::CatalogEntry& e : cat.entries) {
      ordered_json ej;
      ej["name"] = e.name;
      ej["kind"] = e.kind;
      if (!e.source.empty()) ej["source"] = e.source;
      if (e.kind == "alias") ej["target"] = e.target;
      if (e.params)
        ej["params"] = {{"delta", e.params->delta}, {"phi", e.params->phi}};
      ej["stable_level"] = e.stable_level;
      arr.push_back(ej);
    }
    emit(arr, o.out);
    return 0;
  }
  check_level_range(o.level);
  try {
    if (o.level > kFullGroupCap)
      refuse_full_group(cmcat::catalog_group(cat, o.name, 3));
    matgrp::FiniteMatGroup g =
        cmcat::catalog_group(cat, o.name, uint8_t(o.level));
    emit(json_io::group_to_json(g, o.name), o.out);
  } catch (const unknown_group_name& ex) {
    throw usage_error(ex.what());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  std::string group;
  int level = 5;
  std::string out;
};

int run_analyze(const AnalyzeOpts& o) {
  if (o.level < 3)
    throw usage_error("analyze needs --level at least 3 for the cyclic-"
                      "subgroup census");
  auto [spec, g] = materialize_group(o.group, o.level);

  galimg::TorsionType tors = galimg::torsion_from_image(g);
  uint32_t max_order = uint32_t(1) << (o.level - 2);
  std::vector<galimg::RationalCyclic> cyc =
      galimg::rational_cyclic_subgroups(g, max_order);
  if (cyc.size() > 8)
    throw kenku_violation("group admits " + std::to_string(cyc.size()) +
                          " stable cyclic 2-power subgroups; at most 8 can "
                          "occur for a curve over Q");

  ordered_json j;
  j["name"] = display_name(spec);
  j["level"] = o.level;
  j["order"] = g.order();
  j["level_stable"] = matgrp::is_stable_level(spec, spec.stable_level);
  j["minus_id"] = matgrp::contains_minus_id(g);
  j["det_surjective"] = matgrp::det_surjective(g);
  j["torsion"] = tors.str();
  j["c2_count"] = cyc.size();
  ordered_json cj = ordered_json::array();
  for (const galimg::RationalCyclic& k : cyc) {
    ordered_json kj;
    kj["order"] = k.order;
    kj["generator"] = {k.gen.x, k.gen.y};
    cj.push_back(kj);
  }
  j["cyclic_subgroups"] = cj;
  emit(j, o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// push

struct PushOpts {
  std::string group;
  std::string kernel;
  unsigned order = 2;
  int level = 5;
  std::string out;
};

int run_push(const PushOpts& o) {
  if (o.order < 1 || (o.order & (o.order - 1)) != 0)
    throw usage_error("--order must be a power of 2");
  if (o.level < 1 || o.order >= (1u << std::min(o.level, 30)))
    throw usage_error("--order must be below 2^level");
  std::vector<mpz_class> xy = parse_int_list(o.kernel, "--kernel");
  if (xy.size() != 2) throw usage_error("--kernel must be 'x,y'");

  auto [spec, g] = materialize_group(o.group, o.level);
  galimg::RationalCyclic k;
  k.gen = matgrp::Vec2{ring2::mod2n(xy[0].get_si(), g.level),
                       ring2::mod2n(xy[1].get_si(), g.level), g.level};
  k.order = o.order;
  matgrp::FiniteMatGroup pushed = galimg::pushforward(g, k);
  emit(json_io::group_to_json(pushed, display_name(spec) + ".push"), o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// graph

struct GraphOpts {
  std::string group;
  int level = 5;
  std::string dot;
  std::string out;
};

int run_graph(const GraphOpts& o) {
  auto [spec, mat] = materialize_group(o.group, o.level);
  (void)mat; // the graph is grown from the spec; materialization validated it
  galimg::IsoGraph2 g = galimg::isogeny_graph2(spec, uint8_t(o.level));
  ordered_json j = json_io::graph_to_json(g);
  j["root_group"] = display_name(spec);
  emit(j, o.out);
  if (!o.dot.empty()) write_text_file(o.dot, json_io::graph_to_dot(g));
  return 0;
}

// ---------------------------------------------------------------------------
// verify-tables

struct VerifyOpts {
  std::string fixtures = std::string(TWOADIC_DATA_DIR) + "/tables_ab.json";
  int level = 5;
  std::string row;
  std::string json_out;
};

int run_verify(const VerifyOpts& o) {
  if (o.level < 4 || o.level > kLevelCap)
    throw usage_error("verify-tables needs --level in [4, " +
                      std::to_string(kLevelCap) + "]");
  if (o.level >= 7)
    std::cerr << "warning: verifying at level " << o.level
              << " may take minutes and significant memory\n";
  const cmcat::Catalog& cat = cmcat::builtin_catalog();
  tables::Fixture fx = tables::load_fixture(o.fixtures, cat);
  if (!o.row.empty()) {
    bool found = false;
    for (const tables::TableRow& r : fx.rows) found |= (r.row_id == o.row);
    if (!found)
      throw usage_error("row '" + o.row + "' not present in " + o.fixtures);
  }
  tables::VerifyReport rep =
      tables::verify_all(fx, uint8_t(o.level), cat, o.row);
  std::cerr << tables::report_to_table(rep);
  ordered_json j = tables::report_to_json(rep);
  std::cout << j.dump(2) << "\n";
  if (!o.json_out.empty()) {
    std::ofstream f(o.json_out);
    if (!f) throw usage_error("cannot open output file: " + o.json_out);
    f << j.dump(2) << "\n";
    std::cerr << "wrote " << o.json_out << "\n";
  }
  return rep.failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"2-adic Galois image toolkit: Hensel lifting, Cartan "
               "normalizers, mod-2^N image analysis, 2-isogeny graphs, and "
               "table verification"};
  app.require_subcommand(1);

  HenselOpts ho;
  CLI::App* hensel = app.add_subcommand(
      "hensel", "Lift a root of an integer polynomial to a prime-power level");
  hensel->add_option("--poly", ho.poly,
                     "comma-separated coefficients c0,c1,...,cK "
                     "(constant term first)")->required();
  hensel->add_option("--seed", ho.seed, "integer seed to lift")->required();
  hensel->add_option("--level", ho.level, "target level N (root mod p^N)")
      ->capture_default_str();
  hensel->add_option("--prime", ho.prime, "prime p")->capture_default_str();
  hensel->add_option("--out", ho.out, "write JSON here instead of stdout");

  CatalogOpts co;
  CLI::App* cata = app.add_subcommand(
      "catalog", "List the built-in group registry or materialize one entry");
  cata->add_flag("--list", co.list, "list every registry entry");
  cata->add_option("--name", co.name, "registry entry to materialize");
  cata->add_option("--level", co.level, "working level")->capture_default_str();
  cata->add_option("--out", co.out, "write JSON here instead of stdout");

  AnalyzeOpts ao;
  CLI::App* ana = app.add_subcommand(
      "analyze", "Invariants of one group: order, stability, -Id, "
                 "determinant image, torsion, cyclic-subgroup census");
  ana->add_option("--group", ao.group, "registry name or group JSON file")
      ->required();
  ana->add_option("--level", ao.level, "working level")->capture_default_str();
  ana->add_option("--out", ao.out, "write JSON here instead of stdout");

  PushOpts po;
  CLI::App* push = app.add_subcommand(
      "push", "Pushforward of a group through a stable cyclic 2-power kernel");
  push->add_option("--group", po.group, "registry name or group JSON file")
      ->required();
  push->add_option("--kernel", po.kernel, "kernel generator 'x,y'")
      ->required();
  push->add_option("--order", po.order, "kernel order (a power of 2)")
      ->capture_default_str();
  push->add_option("--level", po.level, "working level")->capture_default_str();
  push->add_option("--out", po.out, "write JSON here instead of stdout");

  GraphOpts go;
  CLI::App* graph = app.add_subcommand(
      "graph", "2-primary isogeny graph grown from a root image");
  graph->add_option("--group", go.group, "registry name or group JSON file")
      ->required();
  graph->add_option("--level", go.level, "working level")
      ->capture_default_str();
  graph->add_option("--dot", go.dot, "also write a Graphviz DOT file here");
  graph->add_option("--out", go.out, "write JSON here instead of stdout");

  VerifyOpts vo;
  CLI::App* ver = app.add_subcommand(
      "verify-tables", "Run every check of a table fixture and report");
  ver->add_option("--fixtures", vo.fixtures, "fixture JSON path")
      ->capture_default_str();
  ver->add_option("--level", vo.level, "working level")->capture_default_str();
  ver->add_option("--row", vo.row, "verify only this row id");
  ver->add_option("--json", vo.json_out, "also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (hensel->parsed()) return run_hensel(ho);
    if (cata->parsed()) return run_catalog(co);
    if (ana->parsed()) return run_analyze(ao);
    if (push->parsed()) return run_push(po);
    if (graph->parsed()) return run_graph(go);
    if (ver->parsed()) return run_verify(vo);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const usage_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const parse_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const schema_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const unknown_group_name& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const no_progress& ex) {
    std::cerr << "lift failed: " << ex.what() << "\n";
    return 1;
  } catch (const precondition_failed& ex) {
    std::cerr << "check failed: " << ex.what() << "\n";
    return 1;
  } catch (const not_stable& ex) {
    std::cerr << "check failed: " << ex.what() << "\n";
    return 1;
  } catch (const not_stabilized& ex) {
    std::cerr << "check failed: " << ex.what() << "\n";
    return 1;
  } catch (const kenku_violation& ex) {
    std::cerr << "check failed: " << ex.what() << "\n";
    return 1;
  } catch (const twoadic::error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return 1;
  }
}
