#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "klnmf/core.hpp"
#include "klnmf/data.hpp"
#include "klnmf/errors.hpp"
#include "oracles.hpp"

using namespace klnmf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("klnmf_data_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::size_t count_nonzero(const NonnegMatrix& M) {
  std::size_t c = 0;
  for (double x : M.values()) c += x != 0.0;
  return c;
}

}  // namespace

TEST_CASE("CounterRng is a pure function of its key") {
  CounterRng a(42), b(42), c(43);
  CHECK(a.bits(1, 7, 3) == b.bits(1, 7, 3));
  CHECK(a.bits(1, 7, 3) != c.bits(1, 7, 3));
  CHECK(a.bits(1, 7, 3) != a.bits(1, 7, 4));
  CHECK(a.bits(1, 7, 0) != a.bits(2, 7, 0));
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = a.uniform(5, i);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("gen_low_rank") {
  SyntheticSpec spec{.m = 12, .n = 9, .r_true = 4, .density = 0.3, .seed = 5};
  const auto a = gen_low_rank(spec);
  SUBCASE("exact nonzero counts") {
    CHECK(count_nonzero(a.W) == static_cast<std::size_t>(std::ceil(0.3 * 12 * 4)));
    CHECK(count_nonzero(a.H) == static_cast<std::size_t>(std::ceil(0.3 * 4 * 9)));
    for (double x : a.W.values()) CHECK((x == 0.0 || (x > 0.0 && x < 1.0)));
  }
  SUBCASE("V is the product and has zero objective") {
    CHECK(a.V.matrix() == oracle::product(a.W, a.H));
    CHECK(kl_divergence(a.V, a.W, a.H) == Objective::finite(0.0));
  }
  SUBCASE("bitwise reproducible; seed matters") {
    const auto b = gen_low_rank(spec);
    CHECK(a.W == b.W);
    CHECK(a.H == b.H);
    CHECK(a.V == b.V);
    spec.seed = 6;
    CHECK_FALSE(gen_low_rank(spec).W == a.W);
  }
  SUBCASE("density 1 gives strictly positive factors") {
    spec.density = 1.0;
    const auto d = gen_low_rank(spec);
    for (double x : d.W.values()) CHECK(x > 0.0);
    for (double x : d.H.values()) CHECK(x > 0.0);
  }
  SUBCASE("nonzero positions are spread over the matrix") {
    // Over many seeds every position of a 5x5 factor gets picked at density 0.2.
    SyntheticSpec s{.m = 5, .n = 5, .r_true = 5, .density = 0.2};
    std::set<std::size_t> seen;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      s.seed = seed;
      const auto inst = gen_low_rank(s);
      for (std::size_t t = 0; t < 25; ++t)
        if (inst.W.values()[t] != 0.0) seen.insert(t);
    }
    CHECK(seen.size() == 25);
  }
  SUBCASE("invalid specs") {
    spec.density = 0.0;
    CHECK_THROWS_AS(gen_low_rank(spec), std::invalid_argument);
    spec.density = 0.5;
    spec.r_true = 10;
    CHECK_THROWS_AS(gen_low_rank(spec), std::invalid_argument);
  }
}

TEST_CASE("gen_full_rank") {
  SyntheticSpec spec{.m = 100, .n = 100, .kind = SyntheticKind::FullRank, .seed = 11};
  const auto V = gen_full_rank(spec);
  double mean = 0.0;
  for (double x : V.values()) {
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
    mean += x;
  }
  mean /= 1e4;
  // Uniform(0,1) has sd sqrt(1/12); the sample mean of 1e4 draws has sd sqrt(1/12/1e4).
  CHECK(std::abs(mean - 0.5) <= 3.0 * std::sqrt(1.0 / 12.0 / 1e4));
  CHECK(gen_full_rank(spec) == V);
}

TEST_CASE("poisson sampling") {
  SUBCASE("zero mean gives zero") {
    const auto out = poissonize(Matrix{{0, 0}, {0, 0}}, 1);
    CHECK(out.matrix() == Matrix{{0, 0}, {0, 0}});
  }
  auto moments = [](double lambda, std::uint64_t seed) {
    const CounterRng rng(seed);
    const int N = 100000;
    double s = 0.0, s2 = 0.0;
    for (int t = 0; t < N; ++t) {
      const double k = poisson_sample(lambda, rng, 1, static_cast<std::uint64_t>(t));
      REQUIRE(k == std::floor(k));
      REQUIRE(k >= 0.0);
      s += k;
      s2 += k * k;
    }
    const double mean = s / N;
    return std::pair{mean, (s2 - N * mean * mean) / (N - 1)};
  };
  SUBCASE("lambda = 3 (inversion)") {
    auto [mean, var] = moments(3.0, 2024);
    CHECK(std::abs(mean - 3.0) <= 3.0 * std::sqrt(3.0 / 1e5));
    CHECK(std::abs(var - 3.0) <= 0.3);
  }
  SUBCASE("lambda = 37.5 (transformed rejection)") {
    auto [mean, var] = moments(37.5, 7);
    CHECK(std::abs(mean - 37.5) <= 3.0 * std::sqrt(37.5 / 1e5));
    CHECK(std::abs(var - 37.5) <= 0.1 * 37.5);
  }
  SUBCASE("probability mass at small counts matches the pmf") {
    const CounterRng rng(99);
    const int N = 200000;
    std::vector<int> hist(8, 0);
    for (int t = 0; t < N; ++t) {
      const auto k = static_cast<std::size_t>(poisson_sample(1.5, rng, 2, t));
      if (k < hist.size()) ++hist[k];
    }
    double pmf = std::exp(-1.5);
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const double sd = std::sqrt(pmf * (1 - pmf) / N);
      CHECK(std::abs(hist[k] / double(N) - pmf) <= 4 * sd);
      pmf *= 1.5 / double(k + 1);
    }
  }
  SUBCASE("poissonize is reproducible and integer valued") {
    SyntheticSpec spec{.m = 20, .n = 15, .r_true = 3, .density = 0.9, .seed = 3};
    const auto V = gen_low_rank(spec).V;
    const auto A = poissonize(V, 77), B = poissonize(V, 77);
    CHECK(A == B);
    for (std::size_t t = 0; t < A.values().size(); ++t) {
      CHECK(A.values()[t] == std::floor(A.values()[t]));
      if (V.values()[t] == 0.0) CHECK(A.values()[t] == 0.0);
    }
  }
  SUBCASE("generate applies noise only when asked") {
    SyntheticSpec spec{.m = 6, .n = 6, .r_true = 2, .density = 1.0, .seed = 8};
    CHECK(generate(spec) == gen_low_rank(spec).V);
    spec.noise = NoiseKind::Poisson;
    CHECK(generate(spec) == generate(spec));
    CHECK_FALSE(generate(spec) == gen_low_rank(spec).V);
  }
}

TEST_CASE("init_random_scaled") {
  SyntheticSpec spec{.m = 15, .n = 10, .r_true = 3, .density = 0.7, .seed = 4};
  const auto V = gen_low_rank(spec).V;
  const auto init = init_random_scaled(15, 10, 4, V, 123);
  CHECK(init.W.rows() == 15);
  CHECK(init.H.cols() == 10);
  const double model_sum = oracle::product(init.W, init.H).sum();
  CHECK(model_sum == doctest::Approx(V.matrix().sum()).epsilon(1e-12));
  CHECK(optimal_scale(V, init.W, init.H) == doctest::Approx(1.0).epsilon(1e-12));
  const auto again = init_random_scaled(15, 10, 4, V, 123);
  CHECK(again.W == init.W);
  CHECK(again.H == init.H);
  CHECK_THROWS_AS(init_random_scaled(2, 2, 1, Matrix(2, 2, 0.0), 1), std::invalid_argument);
  CHECK_THROWS_AS(init_random_scaled(3, 2, 1, Matrix(2, 2, 1.0), 1), DimensionError);
}

TEST_CASE("matrix files") {
  TempDir dir;
  SUBCASE("identity round-trips in both formats") {
    const Matrix I{{1, 0}, {0, 1}};
    for (auto f : {MatrixFormat::CSV, MatrixFormat::MatrixMarket}) {
      const auto p = dir.file(f == MatrixFormat::CSV ? "i.csv" : "i.mtx");
      save_matrix(I, p, f);
      CHECK(load_matrix(p, f).matrix() == I);
      CHECK(load_matrix(p).matrix() == I);  // format from the extension
    }
  }
  SUBCASE("random doubles round-trip bit-exactly") {
    std::mt19937_64 rng(1);
    auto M = oracle::random_sparse_matrix(rng, 7, 5, 0.3, 1e3);
    M(0, 0) = 1e-300;
    M(1, 1) = 0.1;
    for (auto name : {"r.csv", "r.mtx"}) {
      save_matrix(M, dir.file(name));
      CHECK(load_matrix(dir.file(name)).matrix() == M);
    }
    save_matrix(M, dir.file("a.mtx"), MatrixFormat::MatrixMarketArray);
    CHECK(load_matrix(dir.file("a.mtx")).matrix() == M);
  }
  SUBCASE("coordinate file is densified") {
    write_text(dir.file("c.mtx"),
               "%%MatrixMarket matrix coordinate real general\n% a comment\n2 2 1\n1 1 5.0\n");
    CHECK(load_matrix(dir.file("c.mtx")).matrix() == Matrix{{5, 0}, {0, 0}});
  }
  SUBCASE("array file is column major") {
    write_text(dir.file("a.mtx"), "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
    CHECK(load_matrix(dir.file("a.mtx")).matrix() == Matrix{{1, 3}, {2, 4}});
  }
  SUBCASE("negative entries name the entry") {
    write_text(dir.file("n.csv"), "1,2\n3,-1\n");
    CHECK_THROWS_WITH_AS(load_matrix(dir.file("n.csv")), doctest::Contains("entry (2,2)"),
                         DataError);
    write_text(dir.file("n.mtx"),
               "%%MatrixMarket matrix coordinate real general\n3 3 1\n2 3 -1\n");
    CHECK_THROWS_WITH_AS(load_matrix(dir.file("n.mtx")), doctest::Contains("entry (2,3)"),
                         DataError);
  }
  SUBCASE("malformed content names the line") {
    write_text(dir.file("h.mtx"), "%%MatrixMarket matrix banana real general\n1 1 0\n");
    CHECK_THROWS_WITH_AS(load_matrix(dir.file("h.mtx")), doctest::Contains("h.mtx:1:"),
                         DataError);
    write_text(dir.file("r.csv"), "1,2\n3\n");
    CHECK_THROWS_WITH_AS(load_matrix(dir.file("r.csv")), doctest::Contains("r.csv:2:"),
                         DataError);
    write_text(dir.file("x.csv"), "1,abc\n");
    CHECK_THROWS_WITH_AS(load_matrix(dir.file("x.csv")), doctest::Contains("x.csv:1:"),
                         DataError);
    write_text(dir.file("s.mtx"), "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n");
    CHECK_THROWS_WITH_AS(load_matrix(dir.file("s.mtx")), doctest::Contains("expected 2 entries"),
                         DataError);
    write_text(dir.file("o.mtx"), "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
    CHECK_THROWS_WITH_AS(load_matrix(dir.file("o.mtx")), doctest::Contains("out of range"),
                         DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_matrix(dir.file("nope.csv")), DataError);
  }
}
