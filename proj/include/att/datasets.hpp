#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "att/data_batch.hpp"

namespace att {

struct PatternSpec {
  std::size_t total_bits = 128;
  std::size_t left_random = 32;
  std::size_t right_random = 32;
  std::size_t num_patterns = 10;
};

// num_patterns distinct rows: random outer bits, zero middle bits.
DataBatch gen_random_patterns(const PatternSpec& spec, std::uint64_t seed);

// Directed edges (parent, child) over variables 0..n-1.
struct BayesPolytree {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  double r = 0.8;

  // Throws FormatError unless the edges form a polytree and r is in (0.5, 1].
  void validate() const;
  std::vector<std::size_t> topological_order() const;
  std::vector<std::vector<std::size_t>> parents() const;
};

BayesPolytree make_chain_polytree(std::size_t n, double r);
// 17-variable networks used by the topology recovery runs: "chain",
// "branching" and "collision".
BayesPolytree make_designed_polytree(std::string_view name, double r = 0.8);

// Ancestral sampling: parentless variables are fair coins, a child copies
// the XOR of its parents with probability r and its complement otherwise.
DataBatch sample_polytree(const BayesPolytree& bn, std::size_t count, std::uint64_t seed);

// IDX image container (magic 0x00000803), binarized with value > threshold
// and centred in a pad_to x pad_to frame (pad_to = 0 keeps the original size).
DataBatch parse_idx_images(std::span<const std::uint8_t> bytes, int threshold = 127, std::size_t pad_to = 32,
                           std::size_t limit = 0);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes, std::size_t limit = 0);
DataBatch load_idx_binarized(const std::string& images_path, const std::string& labels_path = {},
                             int threshold = 127, std::size_t pad_to = 32, std::size_t limit = 0);

struct ReturnsTable {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;  // empty when the file has no date column
  std::vector<std::vector<double>> values;
};

// CSV with a header row of tickers; a leading column that the header does
// not name is read as the date.
ReturnsTable read_returns_csv(const std::string& path);
ReturnsTable parse_returns_csv(std::string_view text);

// Per day, bit = 1 iff the stock's change rate is strictly above the
// cross-sectional mean.
DataBatch binarize_returns(const std::vector<std::vector<double>>& matrix);

// Seeded shuffle; the first part gets ceil(fraction * rows) rows.
std::pair<DataBatch, DataBatch> split_train_test(const DataBatch& b, double fraction, std::uint64_t seed);

// Mini-batches drawn without replacement from a fixed source.
class MinibatchStream {
 public:
  MinibatchStream(const DataBatch& source, std::size_t size, std::uint64_t seed);

  const DataBatch& current() const { return current_; }
  const DataBatch& refresh();
  std::size_t refreshes() const { return refreshes_; }

 private:
  const DataBatch* source_;
  std::size_t size_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> pool_;
  DataBatch current_;
  std::size_t refreshes_ = 0;
};

}  // namespace att
