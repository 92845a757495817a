#pragma once

#include <map>
#include <optional>
#include <string>

#include "att/topology.hpp"

namespace att {

struct LeafLabel {
  std::string text;
  std::string color;  // any Graphviz color; empty leaves the node unfilled
};

// Graphviz DOT rendering of a topology. Edges carry a `bmi=` attribute and
// a color on a linear blue-to-red ramp between the smallest and largest BMI
// supplied; edges missing from `bmi` are drawn gray.
std::string to_dot(const TreeTopology& t, const std::map<Edge, double>& bmi,
                   const std::map<std::size_t, LeafLabel>& labels = {});

// "#rrggbb" for position x in [0, 1] of the ramp.
std::string bmi_ramp_color(double x);

}  // namespace att
