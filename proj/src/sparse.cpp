#include "vemlump/sparse.hpp"

#include <algorithm>

#include "vemlump/error.hpp"

namespace vemlump {

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const Triplet& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw Error("sparse triplet index out of range");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  for (std::size_t i = 0; i < triplets.size();) {
    const std::size_t r = triplets[i].row, c = triplets[i].col;
    double sum = 0.0;
    for (; i < triplets.size() && triplets[i].row == r && triplets[i].col == c; ++i) sum += triplets[i].value;
    m.col_indices_.push_back(c);
    m.values_.push_back(sum);
    ++m.row_offsets_[r + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
  return m;
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> diag) {
  std::vector<Triplet> t;
  t.reserve(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) t.push_back({i, i, diag[i]});
  return from_triplets(diag.size(), diag.size(), std::move(t));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto begin = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_.at(i));
  const auto end = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_.at(i + 1));
  const auto it = std::lower_bound(begin, end, j);
  return it != end && *it == j ? values_[static_cast<std::size_t>(it - col_indices_.begin())] : 0.0;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw Error("sparse multiply dimension mismatch");
  for (std::size_t r = 0; r < rows_; ++r) {
    double sum = 0.0;
    for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) sum += values_[p] * x[col_indices_[p]];
    y[r] = sum;
  }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) t.push_back({col_indices_[p], r, values_[p]});
  }
  return from_triplets(cols_, rows_, std::move(t));
}

}  // namespace vemlump
