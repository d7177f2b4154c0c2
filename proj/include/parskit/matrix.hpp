#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace parskit {

// Minimal dense row-major matrix over double.  The adapter math needs only
// multiply, add and scale on modest shapes; keeping this in-tree avoids an
// external linear algebra dependency for three operations.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix& scale(double factor);

  bool operator==(const Matrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// All throw errc::shape_mismatch on incompatible dimensions.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

// Numerical rank via Gaussian elimination with partial pivoting.  `tol`
// scales with the largest absolute entry when left at 0.
size_t numeric_rank(Matrix m, double tol = 0.0);

}  // namespace parskit
