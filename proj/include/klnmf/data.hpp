#pragma once

// Synthetic instances, Poisson noising, random initialization and matrix
// files.
//
// All randomness is counter based: an entry's value is a function of
// (seed, stream, entry index, draw index) only, so every generator gives
// the same bits regardless of traversal order, thread count or platform.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "klnmf/core.hpp"
#include "klnmf/matrix.hpp"

namespace klnmf {

/// Stateless generator of 64-bit words keyed by (seed, stream, index, draw).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t index, std::uint64_t draw = 0) const;
  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t index, std::uint64_t draw = 0) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// The SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

enum class NoiseKind { None, Poisson };
enum class SyntheticKind { LowRank, FullRank };

struct SyntheticSpec {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t r_true = 1;   // LowRank only
  double density = 1.0;     // fraction of nonzeros in each factor, in (0, 1]
  NoiseKind noise = NoiseKind::None;
  SyntheticKind kind = SyntheticKind::LowRank;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on bad dimensions, density or rank.
  void validate() const;
};

struct LowRankInstance {
  NonnegMatrix W;  // m x r_true
  NonnegMatrix H;  // r_true x n
  NonnegMatrix V;  // W H
};

/// Sparse uniform factors with exactly ceil(density * rows * cols) nonzeros
/// each (positions drawn without replacement, values uniform on (0, 1)) and
/// V = W H. Noise in `spec` is ignored here; see generate().
LowRankInstance gen_low_rank(const SyntheticSpec& spec);

/// I.i.d. uniform (0, 1) entries.
NonnegMatrix gen_full_rank(const SyntheticSpec& spec);

/// Replace every entry by an independent Poisson draw with that mean.
/// Inversion for means below 10, transformed rejection (PTRS) above.
NonnegMatrix poissonize(const Matrix& V, std::uint64_t seed);

/// Single Poisson draw with mean `lambda` from the draw sequence at
/// (stream, index) of `rng`.
double poisson_sample(double lambda, const CounterRng& rng, std::uint64_t stream,
                      std::uint64_t index);

/// V for `spec`, with Poisson noise applied when requested.
NonnegMatrix generate(const SyntheticSpec& spec);

/// W (m x r) and H (r x n) uniform on (0, 1), both multiplied by sqrt(alpha)
/// with alpha = sum V / sum WH, so the pair is optimally scaled.
/// Throws std::invalid_argument when V is zero.
Factorization init_random_scaled(std::size_t m, std::size_t n, std::size_t r, const Matrix& V,
                                 std::uint64_t seed);

/// MatrixMarket is written in coordinate layout, MatrixMarketArray in the
/// dense column-major array layout. Both are read back by either value.
enum class MatrixFormat { MatrixMarket, MatrixMarketArray, CSV };

/// ".mtx" -> MatrixMarket, anything else -> CSV.
MatrixFormat format_from_path(const std::filesystem::path& path);
std::optional<MatrixFormat> parse_matrix_format(std::string_view name);

/// Throws DataError naming the line for malformed content and the (row, col)
/// for negative or non-finite entries.
NonnegMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
NonnegMatrix load_matrix(const std::filesystem::path& path);

/// Values are written with 17 significant digits, so load(save(M)) == M.
void save_matrix(const Matrix& M, const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const Matrix& M, const std::filesystem::path& path);

}  // namespace klnmf
