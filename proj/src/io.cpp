#include "att/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "att/errors.hpp"

namespace att {
namespace {

class Writer {
 public:
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> out;

 private:
  void put(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() {
    const double v = std::bit_cast<double>(get(8));
    if (!std::isfinite(v)) throw FormatError("non-finite value at byte " + std::to_string(pos_ - 8));
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("model file truncated at byte " + std::to_string(pos_));
  }
  std::uint64_t get(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{b_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::vector<std::string_view> tokens_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t parse_count(std::string_view tok, const std::string& what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw FormatError(what + ": expected a non-negative integer, got '" + std::string(tok) + "'");
  }
  return v;
}

double parse_real(std::string_view tok, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw FormatError(what + ": expected a number, got '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError("write failed for " + path);
}

std::vector<std::uint8_t> serialize_model(const TensorTreeModel& m) {
  const TreeTopology& t = m.topology();
  const std::size_t n = t.num_variables();
  Writer w;
  w.raw("ATTB");
  w.u16(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(m.chi()));
  w.u32(t.root_edge().a);
  w.u32(t.root_edge().b);
  for (NodeId x = static_cast<NodeId>(n); x < t.num_nodes(); ++x) {
    for (NodeId y : t.neighbors(x)) w.u32(y);
  }
  const auto edges = t.edges();
  w.u32(static_cast<std::uint32_t>(edges.size()));
  for (Edge e : edges) {
    w.u32(e.a);
    w.u32(e.b);
    w.i64(t.edge_age(e));
  }
  w.u32(static_cast<std::uint32_t>(m.lambda().size()));
  for (double l : m.lambda()) w.f64(l);
  for (NodeId x = static_cast<NodeId>(n); x < t.num_nodes(); ++x) {
    const DenseTensor& tx = m.tensor(x);
    w.u32(static_cast<std::uint32_t>(tx.rank()));
    for (std::size_t e : tx.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (double v : tx.data()) w.f64(v);
  }
  return std::move(w.out);
}

TensorTreeModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.raw(4) != "ATTB") throw FormatError("not a model file (bad magic)");
  const std::uint16_t version = r.u16();
  if (version != kModelFormatVersion) throw FormatError("unsupported model format version " + std::to_string(version));
  const std::size_t n = r.u32();
  const std::size_t chi = r.u32();
  const Edge root = Edge::of(r.u32(), r.u32());
  if (n < 3 || n > (1u << 24)) throw FormatError("implausible variable count " + std::to_string(n));
  const std::size_t nodes = 2 * n - 2;
  if (r.remaining() < (nodes - n) * 12) throw FormatError("model file truncated in adjacency");

  std::vector<std::vector<NodeId>> adj(nodes);
  for (std::size_t x = n; x < nodes; ++x) {
    for (int s = 0; s < 3; ++s) {
      const NodeId y = r.u32();
      if (y >= nodes) throw FormatError("adjacency refers to unknown node " + std::to_string(y));
      adj[x].push_back(y);
      if (y < n) adj[y].push_back(static_cast<NodeId>(x));
    }
  }
  try {
    TreeTopology t(n, std::move(adj), root);
    const std::size_t edge_count = r.u32();
    if (edge_count != nodes - 1) throw FormatError("edge list length does not match the tree");
    std::set<Edge> seen;
    for (std::size_t i = 0; i < edge_count; ++i) {
      const NodeId a = r.u32(), b = r.u32();
      const std::int64_t age = r.i64();
      const Edge e{a, b};
      if (a >= b || !t.has_edge(e) || !seen.insert(e).second) throw FormatError("invalid edge in edge list");
      t.touch(e, age);
    }
    const std::size_t lambda_len = r.u32();
    if (lambda_len == 0 || lambda_len > r.remaining() / 8) throw FormatError("invalid central weight length");
    std::vector<double> lambda(lambda_len);
    for (double& l : lambda) l = r.f64();

    std::vector<DenseTensor> tensors(nodes);
    for (std::size_t x = n; x < nodes; ++x) {
      const std::size_t rank = r.u32();
      if (rank != 3) throw FormatError("node tensor must have rank 3");
      std::vector<std::size_t> shape(rank);
      std::size_t size = 1;
      for (std::size_t& e : shape) {
        e = r.u32();
        if (e == 0 || e > 4096) throw FormatError("invalid tensor extent");
        size *= e;
      }
      if (size > r.remaining() / 8) throw FormatError("model file truncated in tensor data");
      std::vector<double> data(size);
      for (double& v : data) v = r.f64();
      tensors[x] = DenseTensor(std::move(shape), std::move(data));
    }
    if (!r.done()) throw FormatError("trailing bytes after model data");
    return TensorTreeModel(std::move(t), std::move(tensors), std::move(lambda), chi);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model file: ") + e.what());
  }
}

void save_model(const TensorTreeModel& m, const std::string& path) {
  const auto bytes = serialize_model(m);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

TensorTreeModel load_model(const std::string& path) { return deserialize_model(read_bytes(path)); }

DataBatch parse_batch_text(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw FormatError("batch file is empty");
  const auto head = tokens_of(lines[0]);
  if (head.size() != 2) throw FormatError("batch header must be 'n m'");
  const std::size_t n = parse_count(head[0], "batch header");
  const std::size_t m = parse_count(head[1], "batch header");
  if (n == 0 || m == 0) throw FormatError("batch header needs positive n and m");
  if (lines.size() - 1 != m) {
    throw FormatError("batch header promises " + std::to_string(m) + " rows, file has " +
                      std::to_string(lines.size() - 1));
  }
  std::vector<std::uint8_t> values;
  values.reserve(n * m);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto toks = tokens_of(lines[i]);
    if (toks.size() != n) {
      throw FormatError("batch line " + std::to_string(i + 1) + " has " + std::to_string(toks.size()) +
                        " values, expected " + std::to_string(n));
    }
    for (auto tok : toks) {
      if (tok != "0" && tok != "1") {
        throw FormatError("batch line " + std::to_string(i + 1) + " has non-binary value '" + std::string(tok) + "'");
      }
      values.push_back(tok == "1" ? 1 : 0);
    }
  }
  return DataBatch(n, std::move(values));
}

std::string format_batch_text(const DataBatch& b) {
  std::string out = std::to_string(b.num_variables()) + " " + std::to_string(b.num_samples()) + "\n";
  out.reserve(out.size() + b.values().size() * 2);
  for (std::size_t r = 0; r < b.num_samples(); ++r) {
    const auto row = b.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += ' ';
      out += row[c] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

DataBatch read_batch(const std::string& path) { return parse_batch_text(read_text_file(path)); }

void write_batch(const DataBatch& b, const std::string& path) { write_text_file(path, format_batch_text(b)); }

BayesPolytree parse_polytree_spec(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto line : lines_of(text)) {
    if (!tokens_of(line).empty()) lines.push_back(line);
  }
  if (lines.size() < 2) throw FormatError("polytree spec needs a variable count and an r line");
  const auto head = tokens_of(lines.front());
  if (head.size() != 1) throw FormatError("polytree spec must start with the variable count");
  BayesPolytree bn;
  bn.n = parse_count(head[0], "polytree variable count");
  const auto last = tokens_of(lines.back());
  if (last.size() != 2 || last[0] != "r") throw FormatError("polytree spec must end with 'r <value>'");
  bn.r = parse_real(last[1], "polytree r");
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    const auto toks = tokens_of(lines[i]);
    if (toks.size() != 2) throw FormatError("polytree edge lines must be 'parent child'");
    bn.edges.emplace_back(parse_count(toks[0], "polytree parent"), parse_count(toks[1], "polytree child"));
  }
  bn.validate();
  bn.topological_order();
  return bn;
}

std::string format_polytree_spec(const BayesPolytree& bn) {
  std::ostringstream out;
  out << bn.n << "\n";
  for (auto [p, c] : bn.edges) out << p << " " << c << "\n";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, bn.r);
  out << "r " << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << "\n";
  return out.str();
}

BayesPolytree read_polytree_spec(const std::string& path) { return parse_polytree_spec(read_text_file(path)); }

std::string format_report_csv(const TrainReport& r) {
  std::string out = "iter,train_nll,test_nll\n";
  char buf[64];
  for (std::size_t i = 0; i < r.nll_history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,", i + 1, r.nll_history[i]);
    out += buf;
    if (i < r.test_nll_history.size() && r.test_nll_history[i]) {
      std::snprintf(buf, sizeof buf, "%.10g", *r.test_nll_history[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::map<std::size_t, LeafLabel> parse_labels_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw FormatError("labels file is empty");
  std::map<std::size_t, LeafLabel> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : lines[i]) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() < 2 || f.size() > 3) throw FormatError("labels line " + std::to_string(i + 1) + " malformed");
    out[parse_count(f[0], "labels variable")] = {f[1], f.size() == 3 ? f[2] : std::string{}};
  }
  return out;
}

std::map<std::size_t, LeafLabel> read_labels_csv(const std::string& path) {
  return parse_labels_csv(read_text_file(path));
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  return {
      {"chi", cfg.chi},
      {"learning_rate", cfg.learning_rate},
      {"combined_updates", cfg.combined_updates},
      {"candidate_updates", cfg.candidate_updates},
      {"max_iterations", cfg.max_iterations},
      {"batch_size", cfg.batch_size},
      {"batch_refresh", to_string(cfg.batch_refresh)},
      {"refresh_interval", cfg.refresh_interval},
      {"seed", cfg.seed},
      {"structure_fixed", cfg.structure_fixed},
      {"initial_topology", to_string(cfg.initial_topology)},
      {"test_interval", cfg.test_interval},
      {"clamp_zero", cfg.clamp_zero},
  };
}

nlohmann::json edge_bmi_to_json(const std::map<Edge, double>& bmi) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [e, v] : bmi) arr.push_back({{"a", e.a}, {"b", e.b}, {"bmi", v}});
  return arr;
}

std::map<Edge, double> edge_bmi_from_json(const nlohmann::json& j) {
  std::map<Edge, double> out;
  if (!j.is_array()) throw FormatError("edge_bmi: expected an array");
  try {
    for (const auto& item : j) {
      out[Edge::of(item.at("a").get<NodeId>(), item.at("b").get<NodeId>())] = item.at("bmi").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("edge_bmi: ") + e.what());
  }
  return out;
}

}  // namespace att
