#pragma once

#include <cstddef>
#include <vector>

#include "att/datasets.hpp"
#include "att/topology.hpp"

namespace att {

struct ConsistencyReport {
  bool consistent = true;
  std::vector<Edge> violations;  // virtual bonds whose cut fails the check
};

// A virtual bond is consistent with the reference when every reference edge
// crossing its cut shares one common endpoint. A single crossing edge is the
// plain edge-removal case; several edges through one variable place a
// branching variable next to the bond.
ConsistencyReport check_topology_consistency(const TreeTopology& result, const BayesPolytree& reference);
bool topology_consistency(const TreeTopology& result, const BayesPolytree& reference);

// True iff some virtual bond has exactly `group` on one side.
bool isolates_group(const TreeTopology& t, std::vector<std::size_t> group);

}  // namespace att
