#include "att/dot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "att/errors.hpp"

namespace att {
namespace {

std::string node_name(const TreeTopology& t, NodeId x) {
  return (t.is_leaf(x) ? "x" : "t") + std::to_string(x);
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string bmi_ramp_color(double x) {
  x = std::clamp(x, 0.0, 1.0);
  const int red = static_cast<int>(std::lround(255.0 * x));
  const int blue = 255 - red;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x00%02x", red, blue);
  return buf;
}

std::string to_dot(const TreeTopology& t, const std::map<Edge, double>& bmi,
                   const std::map<std::size_t, LeafLabel>& labels) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& [e, value] : bmi) {
    if (!t.has_edge(e)) throw TopologyError("BMI supplied for an edge not in the topology");
    lo = first ? value : std::min(lo, value);
    hi = first ? value : std::max(hi, value);
    first = false;
  }

  std::ostringstream out;
  out << "graph tensor_tree {\n";
  out << "  node [shape=circle, fontsize=10];\n";
  for (NodeId x = 0; x < t.num_nodes(); ++x) {
    out << "  " << node_name(t, x);
    if (t.is_leaf(x)) {
      auto it = labels.find(x);
      const std::string text = it != labels.end() ? it->second.text : std::to_string(x);
      out << " [label=" << quoted(text);
      if (it != labels.end() && !it->second.color.empty()) {
        out << ", style=filled, fillcolor=" << quoted(it->second.color);
      }
      out << "];\n";
    } else {
      out << " [shape=point, width=0.08];\n";
    }
  }
  for (Edge e : t.edges()) {
    out << "  " << node_name(t, e.a) << " -- " << node_name(t, e.b);
    auto it = bmi.find(e);
    if (it == bmi.end()) {
      out << " [color=\"#808080\"];\n";
      continue;
    }
    const double pos = hi > lo ? (it->second - lo) / (hi - lo) : 0.0;
    char value[32];
    std::snprintf(value, sizeof value, "%.6g", it->second);
    out << " [color=" << quoted(bmi_ramp_color(pos)) << ", bmi=" << value << ", penwidth=2];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace att
