#pragma once

#include "twoadic/galimg.hpp"
#include "twoadic/matgrp.hpp"

#include "json.hpp"

#include <string>

namespace twoadic::json_io {

// Group JSON schema used on every CLI surface:
//   {"name": <string, optional>, "level": N,
//    "generators": [[[a, b], [c, d]], ...]}
// Input generators may be arbitrary integers; output is canonical in
// [0, 2^N).
nlohmann::ordered_json group_to_json(const matgrp::FiniteMatGroup& g,
                                     const std::string& name = "");
nlohmann::ordered_json spec_to_json(const matgrp::ImageSpec& spec,
                                    uint8_t level);

// Parses the schema above into a spec + level. Throws schema_error.
std::pair<matgrp::ImageSpec, uint8_t> spec_from_json(const nlohmann::json& j);

nlohmann::ordered_json graph_to_json(const galimg::IsoGraph2& g);
std::string graph_to_dot(const galimg::IsoGraph2& g);

nlohmann::json parse_file(const std::string& path); // throws parse_error

} // namespace twoadic::json_io
