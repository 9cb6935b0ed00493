#include "cosd/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cosd/kernels.hpp"

namespace cosd {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) throw ShapeError("sparse entry index out of range");
    if (!std::isfinite(t.value)) throw NumericError("sparse entry weight is not finite");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  m.col_.reserve(entries.size());
  m.values_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col) {
      throw ShapeError("duplicate sparse entry (" + std::to_string(entries[i].row) + ", " +
                       std::to_string(entries[i].col) + ")");
    }
    m.col_.push_back(entries[i].col);
    m.values_.push_back(entries[i].value);
    ++m.row_ptr_[entries[i].row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

SparseMatrix SparseMatrix::from_dense(const Tensor& dense, double drop_below) {
  std::vector<Triplet> entries;
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      const double v = dense(r, c);
      if (v != 0.0 && std::abs(v) >= drop_below) entries.push_back({r, c, v});
    }
  }
  return from_triplets(dense.rows(), dense.cols(), std::move(entries));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto begin = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto end = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(it - col_.begin())];
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) out.push_back({r, col_[i], values_[i]});
  }
  return out;
}

SparseMatrix SparseMatrix::transposed() const {
  auto entries = triplets();
  for (auto& t : entries) std::swap(t.row, t.col);
  return from_triplets(cols_, rows_, std::move(entries));
}

Tensor SparseMatrix::to_dense() const {
  Tensor d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) d(r, col_[i]) = values_[i];
  }
  return d;
}

double SparseMatrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (std::size_t i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) s += values_[i];
  return s;
}

void SparseMatrix::multiply_add(const Tensor& x, Tensor& y) const {
  if (x.rows() != cols_ || y.rows() != rows_ || x.cols() != y.cols()) {
    throw ShapeError("spmm " + std::to_string(rows_) + "x" + std::to_string(cols_) + " * " +
                     x.shape_string() + " -> " + y.shape_string());
  }
  const auto& k = kernels::active();
  const std::size_t width = x.cols();
  for (std::size_t r = 0; r < rows_; ++r) {
    double* yrow = y.row(r).data();
    for (std::size_t i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) {
      k.axpy(values_[i], x.row(col_[i]).data(), yrow, width);
    }
  }
}

Tensor SparseMatrix::multiply(const Tensor& x) const {
  Tensor y(rows_, x.cols());
  multiply_add(x, y);
  return y;
}

void SparseMatrix::write_coordinate(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  char buf[96];
  for (const auto& t : triplets()) {
    std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", t.row, t.col, t.value);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cosd
