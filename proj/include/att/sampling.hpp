#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "att/data_batch.hpp"
#include "att/model.hpp"

namespace att {

// One exact draw from p(x), sampled subtree by subtree outward from the
// root. The model must be in canonical form.
std::vector<std::uint8_t> sample(const TensorTreeModel& m, std::mt19937_64& rng);

DataBatch sample_batch(const TensorTreeModel& m, std::size_t count, std::uint64_t seed);

}  // namespace att
