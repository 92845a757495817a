#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "att/data_batch.hpp"
#include "att/datasets.hpp"
#include "att/dot.hpp"
#include "att/model.hpp"
#include "att/train.hpp"

namespace att {

inline constexpr std::uint16_t kModelFormatVersion = 1;

// Binary model file, little-endian:
//   "ATTB" | u16 version | u32 n | u32 chi | u32 root.a | u32 root.b
//   per internal node (ids n..2n-3): 3 x u32 neighbours in slot order
//   u32 edge count, then per edge: u32 a | u32 b | i64 age
//   u32 lambda length, f64 values
//   per internal node: u32 rank | rank x u32 extents | f64 entries (row-major)
std::vector<std::uint8_t> serialize_model(const TensorTreeModel& m);
TensorTreeModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const TensorTreeModel& m, const std::string& path);
TensorTreeModel load_model(const std::string& path);

// Text batch: "n m", then m lines of n space-separated 0/1 digits.
DataBatch parse_batch_text(std::string_view text);
std::string format_batch_text(const DataBatch& b);
DataBatch read_batch(const std::string& path);
void write_batch(const DataBatch& b, const std::string& path);

// Polytree spec: line "n", then "parent child" lines, then "r <value>".
BayesPolytree parse_polytree_spec(std::string_view text);
std::string format_polytree_spec(const BayesPolytree& bn);
BayesPolytree read_polytree_spec(const std::string& path);

// "iter,train_nll,test_nll"; iterations counted from 1, missing test NLL
// left empty.
std::string format_report_csv(const TrainReport& r);

// "variable,label,color" with a header row; color may be empty.
std::map<std::size_t, LeafLabel> parse_labels_csv(std::string_view text);
std::map<std::size_t, LeafLabel> read_labels_csv(const std::string& path);

nlohmann::json config_to_json(const TrainConfig& cfg);
nlohmann::json edge_bmi_to_json(const std::map<Edge, double>& bmi);
std::map<Edge, double> edge_bmi_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace att
