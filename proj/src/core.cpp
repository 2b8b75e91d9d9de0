#include "klnmf/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "klnmf/errors.hpp"

namespace klnmf {

double Objective::value() const {
  if (infinite_) throw std::logic_error("value() called on an infinite objective");
  return value_;
}

void ProblemInstance::validate() const {
  const std::size_t m = V.rows(), n = V.cols();
  if (m == 0 || n == 0) throw DimensionError("data matrix is empty");
  if (rank == 0 || rank > std::min(m, n)) {
    throw std::invalid_argument("rank " + std::to_string(rank) + " must lie in [1, " +
                                std::to_string(std::min(m, n)) + "]");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be finite and >= 0");
}

namespace {

void check_conforming(const Matrix& V, const Matrix& W, const Matrix& H) {
  if (W.cols() != H.rows() || W.rows() != V.rows() || H.cols() != V.cols()) {
    throw DimensionError("shapes do not conform: V " + std::to_string(V.rows()) + "x" +
                         std::to_string(V.cols()) + ", W " + std::to_string(W.rows()) + "x" +
                         std::to_string(W.cols()) + ", H " + std::to_string(H.rows()) + "x" +
                         std::to_string(H.cols()));
  }
}

void check_no_nan(const Matrix& M, const char* name) {
  for (double x : M.values())
    if (std::isnan(x)) throw std::invalid_argument(std::string("NaN entry in ") + name);
}

// x - log(1 + x) for x > -1, without cancellation near 0.
double x_minus_log1p(double x) {
  if (std::abs(x) < 1e-2) {
    // Alternating series x^2/2 - x^3/3 + x^4/4 - ...; 12 terms reach
    // round-off for |x| < 1e-2.
    double term = x * x;
    double s = 0.0;
    for (int k = 2; k < 14; ++k) {
      s += ((k % 2 == 0) ? 1.0 : -1.0) * term / k;
      term *= x;
    }
    return s;
  }
  return x - std::log1p(x);
}

// Neumaier compensated summation.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double total() const { return sum + comp; }
};

}  // namespace

Objective kl_divergence_of_product(const Matrix& V, const Matrix& WH) {
  if (V.rows() != WH.rows() || V.cols() != WH.cols())
    throw DimensionError("kl_divergence: product shape does not match data");
  Accumulator acc;
  auto vv = V.values();
  auto pv = WH.values();
  for (std::size_t t = 0; t < vv.size(); ++t) {
    const double v = vv[t];
    const double p = pv[t];
    if (std::isnan(p) || std::isnan(v)) throw std::invalid_argument("NaN in kl_divergence input");
    if (v == 0.0) {
      acc.add(p);
      continue;
    }
    if (p <= 0.0) return Objective::infinite();
    // v * (p/v - 1 - log(p/v)).
    acc.add(v * x_minus_log1p((p - v) / v));
  }
  return Objective::finite(acc.total());
}

Objective kl_divergence(const Matrix& V, const Matrix& W, const Matrix& H) {
  check_conforming(V, W, H);
  check_no_nan(V, "V");
  check_no_nan(W, "W");
  check_no_nan(H, "H");
  return kl_divergence_of_product(V, multiply(W, H));
}

double relative_error_denominator(const Matrix& V) {
  Accumulator acc;
  const auto n = static_cast<double>(V.cols());
  for (std::size_t i = 0; i < V.rows(); ++i) {
    double row_sum = 0.0;
    for (double v : V.row(i)) row_sum += v;
    if (row_sum == 0.0) continue;
    const double mean = row_sum / n;
    for (double v : V.row(i))
      if (v > 0.0) acc.add(v * std::log(v / mean));
  }
  return acc.total();
}

RelativeError relative_error_from(Objective objective, double denominator) {
  if (std::abs(denominator) < kDegenerateDenominator) return {objective, true};
  if (objective.is_infinite()) return {objective, false};
  return {Objective::finite(objective.value() / denominator), false};
}

RelativeError relative_error(const Matrix& V, const Matrix& W, const Matrix& H) {
  return relative_error_from(kl_divergence(V, W, H), relative_error_denominator(V));
}

double optimal_scale(const Matrix& V, const Matrix& W, const Matrix& H) {
  check_conforming(V, W, H);
  const double model = multiply(W, H).sum();
  if (model == 0.0) throw std::domain_error("optimal_scale: sum(WH) is zero");
  return V.sum() / model;
}

Matrix grad_W(const Matrix& V, const Matrix& W, const Matrix& H) {
  check_conforming(V, W, H);
  const Matrix WH = multiply(W, H);
  const std::size_t m = W.rows(), r = W.cols(), n = H.cols();
  const std::vector<double> h_row_sums = H.row_sums();
  Matrix G(m, r);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < r; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = V(i, j);
        if (v == 0.0) continue;
        const double p = WH(i, j);
        if (p <= 0.0) {
          throw SolverError("objective not differentiable: (WH)(" + std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + ") = 0 with positive data");
        }
        s += v * H(k, j) / p;
      }
      G(i, k) = h_row_sums[k] - s;
    }
  }
  return G;
}

Matrix grad_H(const Matrix& V, const Matrix& W, const Matrix& H) {
  // D(V | WH) = D(V^T | H^T W^T).
  return grad_W(V.transpose(), H.transpose(), W.transpose()).transpose();
}

double kkt_residual(const Matrix& V, const Matrix& W, const Matrix& H, double epsilon) {
  Matrix gw, gh;
  try {
    gw = grad_W(V, W, H);
    gh = grad_H(V, W, H);
  } catch (const SolverError&) {
    return std::numeric_limits<double>::infinity();
  }
  double res = 0.0;
  auto fold = [&](const Matrix& X, const Matrix& G) {
    for (std::size_t t = 0; t < X.size(); ++t) {
      const double g = G.values()[t];
      const double x = X.values()[t];
      res = std::max({res, -g, std::abs((x - epsilon) * g)});
    }
  };
  fold(W, gw);
  fold(H, gh);
  return res;
}

double perturbation_bound(const Matrix& V, std::size_t m, std::size_t n, std::size_t r,
                          double epsilon) {
  const double nu = V.sum();
  const auto md = static_cast<double>(m), nd = static_cast<double>(n),
             rd = static_cast<double>(r);
  const double lead = std::min(nd + md * rd, md + nd * rd);
  return (lead * std::sqrt(nu) + md * nd * epsilon) * epsilon;
}

}  // namespace klnmf
