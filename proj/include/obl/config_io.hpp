// JSON configuration loading:
//   {"dimension": 2, "obstacles": [{"kind": "disc", "center": [x,y], "radius": r},
//                                  {"kind": "ellipse", "center": [x,y],
//                                   "semi_axes": [a,b], "angle": psi}, ...]}
// Validates on load; the returned configuration caches d0 and the no-eclipse
// verdict. Potentials are stored as {"k0":., "memory":., "table": {"a,b,..": v}}.
#pragma once

#include <string>

#include "obl/geometry.hpp"
#include "obl/symbolic.hpp"

namespace obl {

ObstacleConfiguration<double> load_configuration(const std::string& path);
ObstacleConfiguration<double> parse_configuration(const std::string& json_text);
std::string configuration_to_json(const ObstacleConfiguration<double>& cfg);

Potential load_potential(const std::string& path);
std::string potential_to_json(const Potential& pot);

std::string word_to_string(const SymbolWord& w);
SymbolWord parse_word(const std::string& text);

}  // namespace obl
