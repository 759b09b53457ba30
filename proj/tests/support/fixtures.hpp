#pragma once

#include <sstream>
#include <string>

#include "color/color.hpp"

namespace fixtures {

inline color::PropertyGraph graph_from(const std::string& text, color::DataGraphOptions opts = {}) {
  std::istringstream in(text);
  return color::parse_data_graph(in, opts);
}

inline color::QueryGraph query_from(const std::string& text, const color::LabelDictionary& dict = {}) {
  std::istringstream in(text);
  return color::parse_query_graph(in, dict);
}

// Two colors: {center} and {leaves}.
inline color::Coloring star_split(std::size_t leaves) {
  color::Coloring c;
  c.assignment.assign(leaves + 1, 1);
  c.assignment[0] = 0;
  c.num_colors = 2;
  return c;
}

}  // namespace fixtures
