#pragma once

// KL objective, gradients, scaling and optimality measures.
//
// Every function here is pure over its inputs and safe to call from any
// number of threads. Logarithms are natural; terms with V_ij = 0 follow the
// 0 * log 0 = 0 convention.

#include <compare>
#include <cstddef>
#include <limits>

#include "klnmf/matrix.hpp"

namespace klnmf {

/// Value in [0, +inf]. Infinity is an explicit state, never an IEEE inf
/// stored in `value_`; it orders above every finite value.
class Objective {
 public:
  static Objective finite(double v) { return Objective(v, false); }
  static Objective infinite() { return Objective(0.0, true); }

  bool is_finite() const { return !infinite_; }
  bool is_infinite() const { return infinite_; }
  /// Throws std::logic_error when infinite.
  double value() const;
  /// Finite value, or +inf as an IEEE double for formatting/plotting.
  double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend bool operator==(const Objective& a, const Objective& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend std::partial_ordering operator<=>(const Objective& a, const Objective& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ <=> b.infinite_;
    return a.value_ <=> b.value_;
  }

 private:
  Objective(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

struct ProblemInstance {
  NonnegMatrix V;
  std::size_t rank = 1;
  double epsilon = 0.0;

  /// Throws DimensionError / std::invalid_argument on a bad rank or epsilon.
  void validate() const;
};

struct Factorization {
  NonnegMatrix W;  // m x r
  NonnegMatrix H;  // r x n
};

/// D(V | WH) = sum_ij (WH)_ij - V_ij log (WH)_ij + V_ij log V_ij - V_ij.
///
/// Each term is evaluated as V * (x - log1p(x)) with x = ((WH) - V) / V, which
/// keeps the result accurate near an exact fit where the textbook form
/// cancels. Infinite if some V_ij > 0 meets (WH)_ij = 0.
Objective kl_divergence(const Matrix& V, const Matrix& W, const Matrix& H);

/// Same as kl_divergence but with the product WH already formed.
Objective kl_divergence_of_product(const Matrix& V, const Matrix& WH);

/// sum_ij V_ij log(V_ij / mean_i), mean_i the mean of row i. Always >= 0: row
/// i contributes its row sum times the KL divergence of the normalized row
/// from the uniform distribution.
double relative_error_denominator(const Matrix& V);

struct RelativeError {
  Objective value;
  /// Set when the denominator was below 1e-12 and `value` holds the raw
  /// objective instead of the ratio.
  bool degenerate = false;
};

inline constexpr double kDegenerateDenominator = 1e-12;

RelativeError relative_error(const Matrix& V, const Matrix& W, const Matrix& H);
/// Divide an already computed objective by a precomputed denominator.
RelativeError relative_error_from(Objective objective, double denominator);

/// alpha* = sum(V) / sum(WH), the minimizer of alpha -> D(V | alpha WH).
/// Throws std::domain_error if sum(WH) = 0.
double optimal_scale(const Matrix& V, const Matrix& W, const Matrix& H);

/// Partial derivatives of D(V|WH) with respect to W (m x r) and H (r x n).
/// Throw SolverError at a non-differentiable point.
Matrix grad_W(const Matrix& V, const Matrix& W, const Matrix& H);
Matrix grad_H(const Matrix& V, const Matrix& W, const Matrix& H);

/// max over every entry x of W and H of max(-g, |(x - eps) g|), g the partial
/// derivative at x. Zero exactly at a KKT point of the eps-constrained
/// problem; +inf at a non-differentiable point.
double kkt_residual(const Matrix& V, const Matrix& W, const Matrix& H, double epsilon);

/// (min{n + m r, m + n r} sqrt(nu) + m n eps) eps with nu = sum(V): how much
/// the optimum of the eps-constrained problem may exceed the unconstrained
/// one.
double perturbation_bound(const Matrix& V, std::size_t m, std::size_t n, std::size_t r,
                          double epsilon);

}  // namespace klnmf
