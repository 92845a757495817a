#include "att/consistency.hpp"

#include <algorithm>
#include <stdexcept>

namespace att {

ConsistencyReport check_topology_consistency(const TreeTopology& result, const BayesPolytree& reference) {
  if (result.num_variables() != reference.n) {
    throw std::invalid_argument("topology and reference polytree have different variable counts");
  }
  reference.validate();
  ConsistencyReport report;
  for (Edge bond : result.virtual_bonds()) {
    const auto [a, b] = bipartition(result, bond);
    std::vector<bool> side(reference.n, false);
    for (std::size_t v : a) side[v] = true;

    std::vector<std::size_t> counts(reference.n, 0);
    std::size_t crossing = 0;
    for (auto [p, c] : reference.edges) {
      if (side[p] == side[c]) continue;
      ++crossing;
      ++counts[p];
      ++counts[c];
    }
    // A disconnected reference may leave a cut with nothing crossing it.
    const bool ok = crossing == 0 || std::any_of(counts.begin(), counts.end(),
                                                 [&](std::size_t k) { return k == crossing; });
    if (!ok) {
      report.consistent = false;
      report.violations.push_back(bond);
    }
  }
  return report;
}

bool topology_consistency(const TreeTopology& result, const BayesPolytree& reference) {
  return check_topology_consistency(result, reference).consistent;
}

bool isolates_group(const TreeTopology& t, std::vector<std::size_t> group) {
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());
  for (Edge bond : t.virtual_bonds()) {
    const auto [a, b] = bipartition(t, bond);
    if (a == group || b == group) return true;
  }
  return false;
}

}  // namespace att
