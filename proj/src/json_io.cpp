#include "twoadic/json_io.hpp"

#include <fstream>
#include <sstream>

namespace twoadic::json_io {

using nlohmann::json;
using nlohmann::ordered_json;

static ordered_json gens_to_json(const std::vector<matgrp::Mat2>& gens) {
  ordered_json arr = ordered_json::array();
  for (const matgrp::Mat2& m : gens)
    arr.push_back({{m.a, m.b}, {m.c, m.d}});
  return arr;
}

ordered_json group_to_json(const matgrp::FiniteMatGroup& g,
                           const std::string& name) {
  ordered_json j;
  if (!name.empty()) j["name"] = name;
  j["level"] = int(g.level);
  j["generators"] =
      gens_to_json(g.generators.empty() ? g.elements : g.generators);
  return j;
}

ordered_json spec_to_json(const matgrp::ImageSpec& spec, uint8_t level) {
  ordered_json j;
  if (!spec.name.empty()) j["name"] = spec.name;
  j["level"] = int(level);
  ordered_json arr = ordered_json::array();
  for (const auto& r : spec.int_generators) {
    matgrp::Mat2 m = matgrp::make_mat(r[0], r[1], r[2], r[3], level);
    arr.push_back({{m.a, m.b}, {m.c, m.d}});
  }
  j["generators"] = arr;
  return j;
}

std::pair<matgrp::ImageSpec, uint8_t> spec_from_json(const json& j) {
  try {
    if (!j.is_object())
      throw schema_error("group description must be a JSON object");
    if (!j.contains("level") || !j["level"].is_number_integer())
      throw schema_error("group description needs an integer 'level'");
    int level = j["level"].get<int>();
    if (level < 1 || level > int(ring2::max_level))
      throw schema_error("level out of range [1," +
                         std::to_string(int(ring2::max_level)) + "]");
    if (!j.contains("generators") || !j["generators"].is_array() ||
        j["generators"].empty())
      throw schema_error("group description needs a non-empty 'generators' "
                         "array");
    matgrp::ImageSpec spec;
    if (j.contains("name")) spec.name = j["name"].get<std::string>();
    if (j.contains("stable_level"))
      spec.stable_level = j["stable_level"].get<int>();
    for (const auto& m : j["generators"]) {
      if (!m.is_array() || m.size() != 2 || !m[0].is_array() ||
          m[0].size() != 2 || !m[1].is_array() || m[1].size() != 2)
        throw schema_error("each generator must be [[a,b],[c,d]]");
      spec.int_generators.push_back(
          {m[0][0].get<int64_t>(), m[0][1].get<int64_t>(),
           m[1][0].get<int64_t>(), m[1][1].get<int64_t>()});
    }
    return {spec, uint8_t(level)};
  } catch (const json::exception& ex) {
    throw schema_error(std::string("bad group description: ") + ex.what());
  }
}

ordered_json graph_to_json(const galimg::IsoGraph2& g) {
  ordered_json j;
  j["shape"] = galimg::shape_name(galimg::classify_shape(g));
  j["curve_count"] = g.curve_count();
  ordered_json tors = ordered_json::array();
  for (const galimg::TorsionType& t : g.torsion_multiset())
    tors.push_back(t.str());
  j["torsion_multiset"] = tors;
  j["root"] = g.root;
  ordered_json verts = ordered_json::array();
  for (const galimg::IsoVertex& v : g.vertices) {
    ordered_json vj;
    vj["id"] = v.id;
    vj["level"] = int(v.level);
    vj["order"] = v.group.order();
    vj["torsion"] = v.torsion.str();
    vj["multiplicity"] = v.multiplicity;
    verts.push_back(vj);
  }
  j["vertices"] = verts;
  ordered_json edges = ordered_json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  j["edges"] = edges;
  return j;
}

std::string graph_to_dot(const galimg::IsoGraph2& g) {
  std::ostringstream os;
  os << "graph isogeny2 {\n";
  for (const galimg::IsoVertex& v : g.vertices) {
    os << "  v" << v.id << " [label=\"" << v.id << ": " << v.torsion.str()
       << "\"";
    if (v.multiplicity > 1) os << " peripheries=" << v.multiplicity;
    os << "];\n";
  }
  for (const auto& [a, b] : g.edges)
    os << "  v" << a << " -- v" << b << " [label=\"2\"];\n";
  os << "}\n";
  return os.str();
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& ex) {
    throw parse_error(path + ": " + ex.what());
  }
}

} // namespace twoadic::json_io
