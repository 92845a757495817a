#include "att/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "att/errors.hpp"

namespace att {

DataBatch gen_random_patterns(const PatternSpec& spec, std::uint64_t seed) {
  const std::size_t outer = spec.left_random + spec.right_random;
  if (spec.total_bits == 0 || outer > spec.total_bits) throw std::invalid_argument("pattern layout does not fit");
  if (spec.num_patterns == 0) throw std::invalid_argument("need at least one pattern");
  if (outer < 63 && spec.num_patterns > (std::uint64_t{1} << outer)) {
    throw std::invalid_argument("more patterns requested than distinct outer bit settings");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<std::uint8_t> values;
  while (seen.size() < spec.num_patterns) {
    std::vector<std::uint8_t> row(spec.total_bits, 0);
    for (std::size_t i = 0; i < spec.left_random; ++i) row[i] = coin(rng);
    for (std::size_t i = spec.total_bits - spec.right_random; i < spec.total_bits; ++i) row[i] = coin(rng);
    if (seen.insert(row).second) values.insert(values.end(), row.begin(), row.end());
  }
  return DataBatch(spec.total_bits, std::move(values));
}

void BayesPolytree::validate() const {
  if (n == 0) throw FormatError("polytree needs at least one variable");
  if (!(r > 0.5 && r <= 1.0)) throw FormatError("correlation rate must lie in (0.5, 1]");
  std::vector<std::size_t> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](std::size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (auto [p, c] : edges) {
    if (p >= n || c >= n) throw FormatError("polytree edge refers to an unknown variable");
    if (p == c) throw FormatError("polytree edge is a self-loop");
    const std::size_t rp = find(p), rc = find(c);
    if (rp == rc) throw FormatError("polytree edges contain a cycle");
    root[rp] = rc;
  }
}

std::vector<std::vector<std::size_t>> BayesPolytree::parents() const {
  std::vector<std::vector<std::size_t>> out(n);
  for (auto [p, c] : edges) out.at(c).push_back(p);
  return out;
}

std::vector<std::size_t> BayesPolytree::topological_order() const {
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (auto [p, c] : edges) {
    ++indegree.at(c);
    children.at(p).push_back(c);
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) order.push_back(i);
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (std::size_t c : children[order[head]]) {
      if (--indegree[c] == 0) order.push_back(c);
    }
  }
  if (order.size() != n) throw FormatError("polytree has a directed cycle");
  return order;
}

BayesPolytree make_chain_polytree(std::size_t n, double r) {
  BayesPolytree bn{n, {}, r};
  for (std::size_t i = 0; i + 1 < n; ++i) bn.edges.emplace_back(i, i + 1);
  bn.validate();
  return bn;
}

BayesPolytree make_designed_polytree(std::string_view name, double r) {
  BayesPolytree bn{17, {}, r};
  auto path = [&](std::initializer_list<std::size_t> nodes) {
    const std::vector<std::size_t> v(nodes);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) bn.edges.emplace_back(v[i], v[i + 1]);
  };
  if (name == "chain") {
    for (std::size_t i = 0; i < 16; ++i) bn.edges.emplace_back(i, i + 1);
  } else if (name == "branching") {
    path({0, 1, 2, 3, 4, 5, 6, 7, 8});
    path({4, 9, 10, 11, 12, 13, 14, 15, 16});
  } else if (name == "collision") {
    bn.edges.emplace_back(7, 16);
    bn.edges.emplace_back(15, 16);
    // One descendant chain below the collider; with two the grouping of 16
    // would tie between the XOR pair and either chain.
    path({16, 0, 1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13, 14});
  } else {
    throw std::invalid_argument("unknown polytree name: " + std::string(name));
  }
  bn.validate();
  return bn;
}

DataBatch sample_polytree(const BayesPolytree& bn, std::size_t count, std::uint64_t seed) {
  bn.validate();
  if (count == 0) throw std::invalid_argument("sample count must be positive");
  const auto order = bn.topological_order();
  const auto parents = bn.parents();
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5), keep(bn.r);
  std::vector<std::uint8_t> values(count * bn.n);
  for (std::size_t s = 0; s < count; ++s) {
    std::uint8_t* row = values.data() + s * bn.n;
    for (std::size_t v : order) {
      if (parents[v].empty()) {
        row[v] = coin(rng);
        continue;
      }
      std::uint8_t x = 0;
      for (std::size_t p : parents[v]) x ^= row[p];
      row[v] = keep(rng) ? x : static_cast<std::uint8_t>(1 - x);
    }
  }
  return DataBatch(bn.n, std::move(values));
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t off) {
  if (off + 4 > bytes.size()) throw FormatError("IDX header truncated");
  return (std::uint32_t{bytes[off]} << 24) | (std::uint32_t{bytes[off + 1]} << 16) |
         (std::uint32_t{bytes[off + 2]} << 8) | std::uint32_t{bytes[off + 3]};
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

DataBatch parse_idx_images(std::span<const std::uint8_t> bytes, int threshold, std::size_t pad_to,
                           std::size_t limit) {
  if (read_be32(bytes, 0) != 0x00000803) throw FormatError("bad IDX image magic");
  const std::size_t count = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  if (count == 0 || rows == 0 || cols == 0) throw FormatError("IDX image file has an empty dimension");
  if (bytes.size() - 16 < count * rows * cols) throw FormatError("IDX image data truncated");
  const std::size_t side_r = pad_to == 0 ? rows : pad_to;
  const std::size_t side_c = pad_to == 0 ? cols : pad_to;
  if (side_r < rows || side_c < cols) throw FormatError("IDX images larger than the padded frame");
  const std::size_t off_r = (side_r - rows) / 2, off_c = (side_c - cols) / 2;
  const std::size_t take = limit == 0 ? count : std::min(limit, count);

  std::vector<std::uint8_t> values(take * side_r * side_c, 0);
  for (std::size_t img = 0; img < take; ++img) {
    const std::uint8_t* src = bytes.data() + 16 + img * rows * cols;
    std::uint8_t* dst = values.data() + img * side_r * side_c;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        dst[(i + off_r) * side_c + j + off_c] = src[i * cols + j] > threshold ? 1 : 0;
      }
    }
  }
  return DataBatch(side_r * side_c, std::move(values));
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes, std::size_t limit) {
  if (read_be32(bytes, 0) != 0x00000801) throw FormatError("bad IDX label magic");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) throw FormatError("IDX label data truncated");
  const std::size_t take = limit == 0 ? count : std::min(limit, count);
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(take)};
}

DataBatch load_idx_binarized(const std::string& images_path, const std::string& labels_path, int threshold,
                             std::size_t pad_to, std::size_t limit) {
  const auto images = read_file(images_path);
  DataBatch out = parse_idx_images(images, threshold, pad_to, limit);
  if (!labels_path.empty()) {
    const auto label_bytes = read_file(labels_path);
    if (read_be32(label_bytes, 4) != read_be32(images, 4)) {
      throw FormatError("IDX image and label counts differ");
    }
    parse_idx_labels(label_bytes, limit);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

ReturnsTable parse_returns_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  ReturnsTable table;
  if (!std::getline(in, line)) throw FormatError("returns CSV is empty");
  table.tickers = split_csv_line(line);
  // A header that starts with an empty or "date" cell names a date column.
  bool dated = table.tickers.front().empty() || table.tickers.front() == "date" || table.tickers.front() == "Date";
  if (dated) table.tickers.erase(table.tickers.begin());
  if (table.tickers.empty()) throw FormatError("returns CSV header names no tickers");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (table.values.empty() && !dated && fields.size() == table.tickers.size() + 1) dated = true;
    if (fields.size() != table.tickers.size() + (dated ? 1 : 0)) {
      throw FormatError("returns CSV line " + std::to_string(line_no) + " has the wrong number of fields");
    }
    std::vector<double> row;
    for (std::size_t k = dated ? 1 : 0; k < fields.size(); ++k) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[k], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != fields[k].size() || !std::isfinite(v)) {
        throw FormatError("returns CSV line " + std::to_string(line_no) + " has a non-numeric value");
      }
      row.push_back(v);
    }
    if (dated) table.dates.push_back(fields.front());
    table.values.push_back(std::move(row));
  }
  if (table.values.empty()) throw FormatError("returns CSV has no data rows");
  return table;
}

ReturnsTable read_returns_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_returns_csv(buf.str());
}

DataBatch binarize_returns(const std::vector<std::vector<double>>& matrix) {
  if (matrix.empty() || matrix.front().empty()) throw FormatError("returns matrix is empty");
  const std::size_t n = matrix.front().size();
  std::vector<std::uint8_t> values;
  values.reserve(matrix.size() * n);
  for (const auto& row : matrix) {
    if (row.size() != n) throw FormatError("returns matrix rows differ in length");
    double mean = 0.0;
    for (double v : row) {
      if (!std::isfinite(v)) throw FormatError("returns matrix has a non-finite value");
      mean += v;
    }
    mean /= static_cast<double>(n);
    for (double v : row) values.push_back(v > mean ? 1 : 0);
  }
  return DataBatch(n, std::move(values));
}

std::pair<DataBatch, DataBatch> split_train_test(const DataBatch& b, double fraction, std::uint64_t seed) {
  const std::size_t rows = b.num_samples();
  if (rows < 2) throw std::invalid_argument("splitting needs at least two rows");
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t first = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(rows)));
  first = std::clamp<std::size_t>(first, 1, rows - 1);
  const std::span<const std::size_t> all(idx);
  return {b.select(all.first(first)), b.select(all.subspan(first))};
}

MinibatchStream::MinibatchStream(const DataBatch& source, std::size_t size, std::uint64_t seed)
    : source_(&source), size_(size), rng_(seed), pool_(source.num_samples()) {
  if (size == 0 || size > source.num_samples()) {
    throw std::invalid_argument("mini-batch size must lie in [1, " + std::to_string(source.num_samples()) + "]");
  }
  std::iota(pool_.begin(), pool_.end(), 0);
  refresh();
  refreshes_ = 0;  // the initial draw is not a refresh
}

const DataBatch& MinibatchStream::refresh() {
  ++refreshes_;
  if (size_ == source_->num_samples()) {
    if (current_.empty()) current_ = *source_;
    return current_;
  }
  // Partial Fisher-Yates over the persistent index pool.
  for (std::size_t i = 0; i < size_; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool_.size() - 1);
    std::swap(pool_[i], pool_[pick(rng_)]);
  }
  std::vector<std::size_t> rows(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(size_));
  std::sort(rows.begin(), rows.end());
  current_ = source_->select(rows);
  return current_;
}

}  // namespace att
