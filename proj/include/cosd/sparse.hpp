#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "cosd/tensor.hpp"

namespace cosd {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed sparse rows. Column indices are sorted within each row and
// unique; every stored weight is finite.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::size_t rows, std::size_t cols);

  // Throws on out-of-range indices, duplicate (row, col) pairs or non-finite
  // weights. Entries may come in any order.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix from_dense(const Tensor& dense, double drop_below = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> col_index() const { return col_; }
  std::span<const double> values() const { return values_; }

  double at(std::size_t r, std::size_t c) const;
  std::vector<Triplet> triplets() const;
  SparseMatrix transposed() const;
  Tensor to_dense() const;
  double row_sum(std::size_t r) const;

  // y += A * x for dense x (cols x k), y (rows x k).
  void multiply_add(const Tensor& x, Tensor& y) const;
  Tensor multiply(const Tensor& x) const;

  // One "row col weight" line per stored entry.
  void write_coordinate(const std::filesystem::path& path) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> values_;
};

}  // namespace cosd
