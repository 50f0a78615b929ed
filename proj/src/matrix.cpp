#include "cbml/matrix.hpp"

#include <cmath>

#include "cbml/errors.hpp"

namespace cbml {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw DimMismatch("matmul: inner dimensions disagree");
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols; ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      out(j, i) = m(i, j);
    }
  }
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<int>& indices) {
  Matrix out(indices.size(), m.cols);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int src = indices[r];
    if (src < 0 || static_cast<std::size_t>(src) >= m.rows) {
      throw DimMismatch("take_rows: row index out of range");
    }
    const double* in = m.row(static_cast<std::size_t>(src));
    double* dst = out.row(r);
    for (std::size_t j = 0; j < m.cols; ++j) dst[j] = in[j];
  }
  return out;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(const Matrix& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace cbml
