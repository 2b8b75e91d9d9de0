// MU and BMD: column-block updates and the sweeps built from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "klnmf/errors.hpp"
#include "klnmf/solvers.hpp"

namespace klnmf {

namespace {

void check_block_shapes(std::span<const double> v, const Matrix& B, std::size_t h_len) {
  if (B.rows() != v.size() || B.cols() != h_len)
    throw DimensionError("column problem: B must be " + std::to_string(v.size()) + "x" +
                         std::to_string(h_len));
}

// (B h)_i for every i, summed over l in increasing order.
std::vector<double> apply(const Matrix& B, std::span<const double> h) {
  std::vector<double> out(B.rows(), 0.0);
  for (std::size_t i = 0; i < B.rows(); ++i) {
    double s = 0.0;
    auto b = B.row(i);
    for (std::size_t l = 0; l < h.size(); ++l) s += b[l] * h[l];
    out[i] = s;
  }
  return out;
}

// ratio_i = v_i / (Bh)_i, with 0 where v_i = 0.
std::vector<double> data_ratio(std::span<const double> v, std::span<const double> Bh) {
  std::vector<double> ratio(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    if (Bh[i] <= 0.0) {
      throw SolverError("model entry " + std::to_string(i + 1) +
                        " is zero where the data is positive");
    }
    ratio[i] = v[i] / Bh[i];
  }
  return ratio;
}

}  // namespace

double mu_majorizer(std::span<const double> h, std::span<const double> h_ref,
                    std::span<const double> v, const Matrix& B) {
  check_block_shapes(v, B, h.size());
  if (h_ref.size() != h.size()) throw DimensionError("mu_majorizer: h and h_ref differ in length");
  const auto Bh = apply(B, h);
  const auto Bh_ref = apply(B, h_ref);
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double term = Bh[i];
    if (v[i] > 0.0) {
      if (Bh_ref[i] <= 0.0) throw std::domain_error("mu_majorizer: (B h_ref)_i = 0 with v_i > 0");
      double inner = 0.0;
      for (std::size_t l = 0; l < h.size(); ++l) {
        const double a = B(i, l) * h_ref[l] / Bh_ref[i];
        if (a == 0.0) continue;
        const double bh = B(i, l) * h[l];
        if (bh <= 0.0) throw std::domain_error("mu_majorizer: log of a nonpositive argument");
        inner += a * (std::log(bh) - std::log(a));
      }
      term += -v[i] * inner + v[i] * std::log(v[i]) - v[i];
    }
    total += term;
  }
  return total;
}

std::vector<double> mu_update_column(std::span<const double> v, const Matrix& B,
                                     std::span<const double> h, double epsilon) {
  check_block_shapes(v, B, h.size());
  const auto ratio = data_ratio(v, apply(B, h));
  std::vector<double> out(h.size());
  for (std::size_t l = 0; l < h.size(); ++l) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      num += B(i, l) * ratio[i];
      den += B(i, l);
    }
    if (den <= 0.0)
      throw SolverError("basis column " + std::to_string(l + 1) + " is zero (zero locking)");
    out[l] = std::max(epsilon, h[l] * (num / den));
  }
  return out;
}

std::vector<double> bmd_update_column(std::span<const double> v, const Matrix& B,
                                      std::span<const double> h, double L, double epsilon) {
  check_block_shapes(v, B, h.size());
  if (!(L > 0.0)) throw std::invalid_argument("bmd_update_column: L must be positive");
  const auto ratio = data_ratio(v, apply(B, h));
  std::vector<double> out(h.size());
  for (std::size_t l = 0; l < h.size(); ++l) {
    double col = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      col += B(i, l);
      weighted += B(i, l) * ratio[i];
    }
    const double g = col - weighted;
    const double denom = 1.0 + h[l] * g / L;
    // With L = ||v||_1 the denominator is >= h_l * col / L > 0 whenever the
    // basis column is nonzero, and exactly 1 when it is zero.
    if (!(denom > 0.0)) {
      throw std::logic_error("bmd_update_column: nonpositive denominator " +
                             std::to_string(denom) + " at entry " + std::to_string(l + 1));
    }
    out[l] = std::max(h[l] / denom, epsilon);
  }
  return out;
}

namespace {

enum class BlockRule { MU, BMD };

// Update every column of H (if `columns_of_H`) or every row of W, reading the
// opposite factor from `state` and writing the block back. Each block only
// reads data that no other block in this half-sweep writes.
void update_H_blocks(const Matrix& Vt, SolverState& state, double epsilon, BlockRule rule) {
  const Matrix& W = state.W;
  if (rule == BlockRule::MU) {
    for (std::size_t k = 0; k < W.cols(); ++k)
      if (state.col_sums_W[k] <= 0.0)
        throw SolverError("column " + std::to_string(k + 1) + " of W is zero (zero locking)");
  }
  const std::size_t r = state.H.rows();
  std::vector<double> h(r);
  for (std::size_t j = 0; j < Vt.rows(); ++j) {
    auto v = Vt.row(j);
    for (std::size_t k = 0; k < r; ++k) h[k] = state.H(k, j);
    std::vector<double> next;
    if (rule == BlockRule::MU) {
      next = mu_update_column(v, W, h, epsilon);
    } else {
      double L = 0.0;
      for (double x : v) L += x;
      if (L == 0.0)
        next.assign(r, epsilon);
      else
        next = bmd_update_column(v, W, h, L, epsilon);
    }
    for (std::size_t k = 0; k < r; ++k) state.H(k, j) = next[k];
  }
  state.resync();
}

void update_W_blocks(const Matrix& V, SolverState& state, double epsilon, BlockRule rule) {
  if (rule == BlockRule::MU) {
    for (std::size_t k = 0; k < state.H.rows(); ++k)
      if (state.row_sums_H[k] <= 0.0)
        throw SolverError("row " + std::to_string(k + 1) + " of H is zero (zero locking)");
  }
  const Matrix Ht = state.H.transpose();
  const std::size_t r = state.W.cols();
  for (std::size_t i = 0; i < V.rows(); ++i) {
    auto v = V.row(i);
    auto w = state.W.row(i);
    std::vector<double> next;
    if (rule == BlockRule::MU) {
      next = mu_update_column(v, Ht, w, epsilon);
    } else {
      double L = 0.0;
      for (double x : v) L += x;
      if (L == 0.0)
        next.assign(r, epsilon);
      else
        next = bmd_update_column(v, Ht, w, L, epsilon);
    }
    std::copy(next.begin(), next.end(), w.begin());
  }
  state.resync();
}

void block_sweep(const Matrix& V, SolverState& state, double epsilon, UpdateOrder order,
                 BlockRule rule) {
  const Matrix Vt = V.transpose();
  if (order == UpdateOrder::HFirst) {
    update_H_blocks(Vt, state, epsilon, rule);
    update_W_blocks(V, state, epsilon, rule);
  } else {
    update_W_blocks(V, state, epsilon, rule);
    update_H_blocks(Vt, state, epsilon, rule);
  }
}

}  // namespace

void mu_step(const Matrix& V, SolverState& state, double epsilon, UpdateOrder order) {
  block_sweep(V, state, epsilon, order, BlockRule::MU);
}

void bmd_step(const Matrix& V, SolverState& state, double epsilon, UpdateOrder order) {
  block_sweep(V, state, epsilon, order, BlockRule::BMD);
}

}  // namespace klnmf
