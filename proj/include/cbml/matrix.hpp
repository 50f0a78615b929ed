#pragma once

#include <cstddef>
#include <vector>

namespace cbml {

/// Dense row-major matrix of doubles. Batches here are desk scale, so the
/// arithmetic stays as plain loops with a fixed evaluation order.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// Extracts the given rows, in order, into a new matrix.
Matrix take_rows(const Matrix& m, const std::vector<int>& indices);

double dot(const double* a, const double* b, std::size_t n);

bool all_finite(const Matrix& m);

}  // namespace cbml
