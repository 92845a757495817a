#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace att {

// |M| binary samples over n variables, stored row-major.
class DataBatch {
 public:
  DataBatch() = default;
  DataBatch(std::size_t num_variables, std::vector<std::uint8_t> values);
  static DataBatch from_rows(const std::vector<std::vector<std::uint8_t>>& rows);

  std::size_t num_variables() const { return n_; }
  std::size_t num_samples() const { return n_ == 0 ? 0 : values_.size() / n_; }
  bool empty() const { return values_.empty(); }

  std::span<const std::uint8_t> row(std::size_t r) const { return {values_.data() + r * n_, n_}; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return values_[r * n_ + c]; }
  std::span<const std::uint8_t> values() const { return values_; }

  DataBatch select(std::span<const std::size_t> rows) const;

  friend bool operator==(const DataBatch&, const DataBatch&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> values_;
};

}  // namespace att
