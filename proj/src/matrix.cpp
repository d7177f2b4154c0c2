#include "parskit/matrix.hpp"

#include <cmath>

#include "parskit/error.hpp"

namespace parskit {

Matrix::Matrix(size_t rows, size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix& Matrix::scale(double factor) {
  for (double& v : data_) v *= factor;
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    raise(errc::shape_mismatch,
          "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
              " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  Matrix out(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t k = 0; k < a.cols(); ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (size_t j = 0; j < b.cols(); ++j) out.at(i, j) += aik * b.at(k, j);
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    raise(errc::shape_mismatch, "add requires equal shapes");
  Matrix out = a;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size())
    raise(errc::shape_mismatch, "matvec " + std::to_string(a.cols()) + " cols vs vector of " +
                                    std::to_string(x.size()));
  std::vector<double> out(a.rows(), 0.0);
  for (size_t i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (size_t j = 0; j < a.cols(); ++j) sum += a.at(i, j) * x[j];
    out[i] = sum;
  }
  return out;
}

size_t numeric_rank(Matrix m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  if (tol <= 0.0) {
    double max_abs = 0.0;
    for (double v : m.data()) max_abs = std::max(max_abs, std::fabs(v));
    if (max_abs == 0.0) return 0;
    tol = max_abs * 1e-12 * static_cast<double>(std::max(m.rows(), m.cols()));
  }

  size_t rank = 0;
  size_t row = 0;
  for (size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
    size_t pivot = row;
    for (size_t r = row + 1; r < m.rows(); ++r)
      if (std::fabs(m.at(r, col)) > std::fabs(m.at(pivot, col))) pivot = r;
    if (std::fabs(m.at(pivot, col)) <= tol) continue;
    if (pivot != row)
      for (size_t c = 0; c < m.cols(); ++c) std::swap(m.at(pivot, c), m.at(row, c));
    for (size_t r = row + 1; r < m.rows(); ++r) {
      double f = m.at(r, col) / m.at(row, col);
      if (f == 0.0) continue;
      for (size_t c = col; c < m.cols(); ++c) m.at(r, c) -= f * m.at(row, c);
    }
    ++row;
    ++rank;
  }
  return rank;
}

}  // namespace parskit
