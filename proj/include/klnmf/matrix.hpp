#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace klnmf {

/// Dense row-major matrix of doubles.
///
/// General-purpose container used for gradients, cached products and the
/// solver-internal factor storage. Entries carry no sign restriction; see
/// NonnegMatrix for the validated variant that crosses API boundaries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  Matrix transpose() const;
  double sum() const;
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Product a * b. Each output entry is accumulated over the inner index in
/// increasing order, so results do not depend on how callers partition work.
Matrix multiply(const Matrix& a, const Matrix& b);

/// Largest absolute entrywise difference; matrices must share a shape.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Matrix whose entries are all finite and nonnegative.
///
/// Validation happens once, at construction. Converts implicitly to
/// `const Matrix&` so it can be handed to any numeric routine.
class NonnegMatrix {
 public:
  NonnegMatrix() = default;
  explicit NonnegMatrix(Matrix m);
  NonnegMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return m_.rows(); }
  std::size_t cols() const { return m_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  std::span<const double> values() const { return m_.values(); }

  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }  // NOLINT(google-explicit-constructor)

  friend bool operator==(const NonnegMatrix&, const NonnegMatrix&) = default;

 private:
  Matrix m_;
};

}  // namespace klnmf
