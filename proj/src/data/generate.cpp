#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "klnmf/data.hpp"
#include "klnmf/errors.hpp"

namespace klnmf {

namespace {

// Independent streams per purpose.
enum Stream : std::uint64_t {
  kFactorWValues = 1,
  kFactorWPositions = 2,
  kFactorHValues = 3,
  kFactorHPositions = 4,
  kFullRankValues = 5,
  kPoissonDraws = 6,
  kInitW = 7,
  kInitH = 8,
  kNoiseSeed = 9,
};

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Unbiased enough for any n << 2^64: the bias is at most n / 2^64.
std::uint64_t below(std::uint64_t word, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(word) * n) >> 64);
}

Matrix sparse_uniform(const CounterRng& rng, std::size_t rows, std::size_t cols, double density,
                      std::uint64_t value_stream, std::uint64_t position_stream) {
  const std::size_t total = rows * cols;
  const auto nnz = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(total), std::ceil(density * static_cast<double>(total))));
  Matrix M(rows, cols, 0.0);
  if (nnz == total) {
    for (std::size_t t = 0; t < total; ++t) M.values()[t] = rng.uniform(value_stream, t);
    return M;
  }
  // Partial Fisher-Yates: the first nnz slots become the chosen positions.
  std::vector<std::size_t> slots(total);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t t = 0; t < nnz; ++t) {
    const std::size_t pick = t + below(rng.bits(position_stream, t), total - t);
    std::swap(slots[t], slots[pick]);
  }
  for (std::size_t t = 0; t < nnz; ++t)
    M.values()[slots[t]] = rng.uniform(value_stream, slots[t]);
  return M;
}

double poisson_inversion(double lambda, const CounterRng& rng, std::uint64_t stream,
                         std::uint64_t index) {
  const double u = rng.uniform(stream, index, 0);
  double p = std::exp(-lambda);
  double cdf = p;
  double k = 0.0;
  // For lambda < 10 the tail beyond 200 is far below 2^-53.
  while (u > cdf && k < 200.0) {
    k += 1.0;
    p *= lambda / k;
    cdf += p;
  }
  return k;
}

// Hormann's PTRS (transformed rejection with squeeze), valid for lambda >= 10.
double poisson_ptrs(double lambda, const CounterRng& rng, std::uint64_t stream,
                    std::uint64_t index) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (std::uint64_t draw = 0;; draw += 2) {
    const double U = rng.uniform(stream, index, draw) - 0.5;
    const double V = rng.uniform(stream, index, draw + 1);
    const double us = 0.5 - std::abs(U);
    const double k = std::floor((2.0 * a / us + b) * U + lambda + 0.43);
    if (us >= 0.07 && V <= vr) return k;
    if (k < 0.0 || (us < 0.013 && V > us)) continue;
    if (std::log(V) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0))
      return k;
  }
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t index,
                               std::uint64_t draw) const {
  std::uint64_t h = mix64(seed_);
  h = mix64(h ^ stream);
  h = mix64(h ^ index);
  return mix64(h ^ draw);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t index, std::uint64_t draw) const {
  return (static_cast<double>(bits(stream, index, draw) >> 11) + 0.5) * 0x1.0p-53;
}

void SyntheticSpec::validate() const {
  if (m == 0 || n == 0) throw std::invalid_argument("synthetic spec: dimensions must be positive");
  if (!(density > 0.0 && density <= 1.0))
    throw std::invalid_argument("synthetic spec: density must lie in (0, 1]");
  if (kind == SyntheticKind::LowRank && (r_true == 0 || r_true > std::min(m, n)))
    throw std::invalid_argument("synthetic spec: r_true must lie in [1, min(m, n)]");
}

LowRankInstance gen_low_rank(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.kind != SyntheticKind::LowRank)
    throw std::invalid_argument("gen_low_rank: spec is not LowRank");
  const CounterRng rng(spec.seed);
  Matrix W = sparse_uniform(rng, spec.m, spec.r_true, spec.density, kFactorWValues,
                            kFactorWPositions);
  Matrix H = sparse_uniform(rng, spec.r_true, spec.n, spec.density, kFactorHValues,
                            kFactorHPositions);
  Matrix V = multiply(W, H);
  return {NonnegMatrix(std::move(W)), NonnegMatrix(std::move(H)), NonnegMatrix(std::move(V))};
}

NonnegMatrix gen_full_rank(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.kind != SyntheticKind::FullRank)
    throw std::invalid_argument("gen_full_rank: spec is not FullRank");
  const CounterRng rng(spec.seed);
  Matrix V(spec.m, spec.n);
  for (std::size_t t = 0; t < V.size(); ++t) V.values()[t] = rng.uniform(kFullRankValues, t);
  return NonnegMatrix(std::move(V));
}

double poisson_sample(double lambda, const CounterRng& rng, std::uint64_t stream,
                      std::uint64_t index) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("poisson_sample: mean must be finite and >= 0");
  if (lambda == 0.0) return 0.0;
  return lambda < 10.0 ? poisson_inversion(lambda, rng, stream, index)
                       : poisson_ptrs(lambda, rng, stream, index);
}

NonnegMatrix poissonize(const Matrix& V, std::uint64_t seed) {
  const CounterRng rng(seed);
  Matrix out(V.rows(), V.cols());
  for (std::size_t t = 0; t < V.size(); ++t)
    out.values()[t] = poisson_sample(V.values()[t], rng, kPoissonDraws, t);
  return NonnegMatrix(std::move(out));
}

NonnegMatrix generate(const SyntheticSpec& spec) {
  NonnegMatrix V = spec.kind == SyntheticKind::LowRank ? gen_low_rank(spec).V : gen_full_rank(spec);
  if (spec.noise == NoiseKind::Poisson)
    return poissonize(V, CounterRng(spec.seed).bits(kNoiseSeed, 0));
  return V;
}

Factorization init_random_scaled(std::size_t m, std::size_t n, std::size_t r, const Matrix& V,
                                 std::uint64_t seed) {
  if (V.rows() != m || V.cols() != n)
    throw DimensionError("init_random_scaled: V must be " + std::to_string(m) + "x" +
                         std::to_string(n));
  if (r == 0) throw std::invalid_argument("init_random_scaled: rank must be positive");
  const double data_sum = V.sum();
  if (!(data_sum > 0.0)) throw std::invalid_argument("init_random_scaled: V is zero");
  for (std::uint64_t attempt = 0;; ++attempt) {
    const CounterRng rng(seed + attempt * kGolden);
    Matrix W(m, r), H(r, n);
    for (std::size_t t = 0; t < W.size(); ++t) W.values()[t] = rng.uniform(kInitW, t);
    for (std::size_t t = 0; t < H.size(); ++t) H.values()[t] = rng.uniform(kInitH, t);
    const double model_sum = multiply(W, H).sum();
    if (!(model_sum > 0.0)) continue;
    const double s = std::sqrt(data_sum / model_sum);
    for (auto& x : W.values()) x *= s;
    for (auto& x : H.values()) x *= s;
    return {NonnegMatrix(std::move(W)), NonnegMatrix(std::move(H))};
  }
}

}  // namespace klnmf
