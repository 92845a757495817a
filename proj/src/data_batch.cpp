#include "att/data_batch.hpp"

#include <string>

#include "att/errors.hpp"

namespace att {

DataBatch::DataBatch(std::size_t num_variables, std::vector<std::uint8_t> values)
    : n_(num_variables), values_(std::move(values)) {
  if (n_ == 0) throw FormatError("a batch needs at least one variable");
  if (values_.empty() || values_.size() % n_ != 0) {
    throw FormatError("batch values do not form whole rows of " + std::to_string(n_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] > 1) throw FormatError("non-binary value in row " + std::to_string(i / n_));
  }
}

DataBatch DataBatch::from_rows(const std::vector<std::vector<std::uint8_t>>& rows) {
  if (rows.empty()) throw FormatError("a batch needs at least one row");
  std::vector<std::uint8_t> values;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw FormatError("ragged batch rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return DataBatch(rows.front().size(), std::move(values));
}

DataBatch DataBatch::select(std::span<const std::size_t> rows) const {
  std::vector<std::uint8_t> values;
  values.reserve(rows.size() * n_);
  for (std::size_t r : rows) {
    auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
  }
  return DataBatch(n_, std::move(values));
}

}  // namespace att
