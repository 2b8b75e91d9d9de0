#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "klnmf/core.hpp"
#include "klnmf/errors.hpp"
#include "klnmf/solvers.hpp"
#include "oracles.hpp"

using namespace klnmf;

namespace {

std::vector<double> column(const Matrix& M, std::size_t j) {
  std::vector<double> c(M.rows());
  for (std::size_t i = 0; i < M.rows(); ++i) c[i] = M(i, j);
  return c;
}

// Direct transcription of the scalar MU formula, used as an oracle.
Matrix mu_H_scalar_formula(const Matrix& V, const Matrix& W, const Matrix& H) {
  auto P = oracle::product(W, H);
  Matrix out = H;
  for (std::size_t k = 0; k < H.rows(); ++k)
    for (std::size_t j = 0; j < H.cols(); ++j) {
      double num = 0.0, den = 0.0;
      for (std::size_t l = 0; l < W.rows(); ++l) {
        if (V(l, j) > 0) num += W(l, k) * V(l, j) / P(l, j);
        den += W(l, k);
      }
      out(k, j) = H(k, j) * num / den;
    }
  return out;
}

struct RandomInstance {
  Matrix V, W, H;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t m, std::size_t n,
                               std::size_t r) {
  return {oracle::random_sparse_matrix(rng, m, n, 0.2, 5.0), oracle::random_matrix(rng, m, r, 0.05, 1.5),
          oracle::random_matrix(rng, r, n, 0.05, 1.5)};
}

}  // namespace

TEST_CASE("solver names round-trip and reject unknown names") {
  for (auto k : {SolverKind::MU, SolverKind::BMD, SolverKind::SN, SolverKind::SNMU,
                 SolverKind::CCD})
    CHECK(parse_solver_kind(solver_name(k)) == k);
  CHECK_THROWS_WITH_AS(parse_solver_kind("admm"), doctest::Contains("mu, bmd, sn, snmu, ccd"),
                       std::invalid_argument);
}

TEST_CASE("SolverConfig validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.inner_repeats = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.snmu_cycle.mu_steps = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.epsilon = -1.0;
  CHECK_THROWS(c.validate());
  CHECK(default_epsilon(SolverKind::MU) == std::numeric_limits<double>::epsilon());
  CHECK(default_epsilon(SolverKind::SN) == 0.0);
  CHECK(default_epsilon(SolverKind::CCD) == std::numeric_limits<double>::epsilon());
}

TEST_CASE("mu_step") {
  SUBCASE("exact fit is a fixed point") {
    Matrix W{{1, 2}, {0.5, 1}, {2, 0.25}};
    Matrix H{{1, 0.5, 2}, {0.3, 1, 1}};
    SolverState s(W, H);
    auto V = s.WH;
    mu_step(V, s, 0.0);
    CHECK(max_abs_diff(s.W, W) <= 1e-14);
    CHECK(max_abs_diff(s.H, H) <= 1e-14);
  }
  SUBCASE("hand example") {
    Matrix V{{2, 0}, {0, 2}};
    SolverState s(Matrix{{1}, {1}}, Matrix{{1, 1}});
    const auto oracle_H = mu_H_scalar_formula(V, s.W, s.H);
    CHECK(oracle_H == Matrix{{1, 1}});
    mu_step(V, s, 0.0);
    CHECK(s.H == Matrix{{1, 1}});
    CHECK(s.W == Matrix{{1}, {1}});
  }
  SUBCASE("H half matches the scalar formula") {
    std::mt19937_64 rng(3);
    auto inst = random_instance(rng, 6, 5, 3);
    auto expected = mu_H_scalar_formula(inst.V, inst.W, inst.H);
    for (std::size_t j = 0; j < inst.V.cols(); ++j) {
      auto h = mu_update_column(column(inst.V, j), inst.W, column(inst.H, j), 0.0);
      for (std::size_t k = 0; k < h.size(); ++k)
        CHECK(h[k] == doctest::Approx(expected(k, j)).epsilon(1e-13));
    }
  }
  SUBCASE("column sums preserved after the H update, row sums after the W update") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 10; ++t) {
      auto inst = random_instance(rng, 7, 6, 3);
      Matrix Hn = inst.H;
      for (std::size_t j = 0; j < inst.V.cols(); ++j) {
        auto h = mu_update_column(column(inst.V, j), inst.W, column(inst.H, j), 0.0);
        for (std::size_t k = 0; k < h.size(); ++k) Hn(k, j) = h[k];
      }
      auto cs_model = multiply(inst.W, Hn).col_sums();
      auto cs_data = inst.V.col_sums();
      for (std::size_t j = 0; j < cs_data.size(); ++j)
        CHECK(cs_model[j] == doctest::Approx(cs_data[j]).epsilon(1e-10));

      SolverState s(inst.W, inst.H);
      mu_step(inst.V, s, 0.0);  // W is updated last
      auto rs_model = s.WH.row_sums();
      auto rs_data = inst.V.row_sums();
      for (std::size_t i = 0; i < rs_data.size(); ++i)
        CHECK(rs_model[i] == doctest::Approx(rs_data[i]).epsilon(1e-10));
    }
  }
  SUBCASE("zero column of W is reported by index") {
    SolverState s(Matrix{{1, 0}, {1, 0}}, Matrix{{1, 1}, {1, 1}});
    CHECK_THROWS_WITH_AS(mu_step(Matrix{{1, 1}, {1, 1}}, s, 0.0),
                         doctest::Contains("column 2 of W"), SolverError);
  }
  SUBCASE("zero data column sets the H column to eps") {
    Matrix V{{1, 0}, {2, 0}};
    SolverState s(Matrix{{1}, {1}}, Matrix{{1, 1}});
    mu_step(V, s, 1e-3);
    CHECK(s.H(0, 1) == 1e-3);
  }
}

TEST_CASE("mu_majorizer") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = dim(rng), r = dim(rng);
    auto B = oracle::random_matrix(rng, m, r, 0.0, 2.0);
    const auto vm = oracle::random_sparse_matrix(rng, 1, m, 0.2, 4.0);
    std::vector<double> v(vm.values().begin(), vm.values().end());
    auto h = oracle::random_matrix(rng, 1, r, 0.1, 2.0);
    std::vector<double> hv(h.values().begin(), h.values().end());
    const double d = oracle::kl_column(v, B, hv);
    CHECK(mu_majorizer(hv, hv, v, B) == doctest::Approx(d).epsilon(1e-12));
    for (int q = 0; q < 5; ++q) {
      auto hp = oracle::random_matrix(rng, 1, r, 0.01, 3.0);
      std::vector<double> hpv(hp.values().begin(), hp.values().end());
      CHECK(mu_majorizer(hpv, hv, v, B) >= oracle::kl_column(v, B, hpv) - 1e-12);
    }
    bool any_basis_zero = false;
    for (std::size_t l = 0; l < r; ++l) {
      double s = 0;
      for (std::size_t i = 0; i < m; ++i) s += B(i, l);
      any_basis_zero |= s == 0.0;
    }
    if (any_basis_zero) continue;
    auto next = mu_update_column(v, B, hv, 0.0);
    CHECK(mu_majorizer(next, hv, v, B) <= mu_majorizer(hv, hv, v, B) + 1e-12);
  }
}

TEST_CASE("bmd_update_column") {
  SUBCASE("exact fit is a fixed point") {
    Matrix B{{1, 2}, {3, 1}};
    std::vector<double> h{0.5, 2.0};
    std::vector<double> v{1 * 0.5 + 2 * 2.0, 3 * 0.5 + 1 * 2.0};
    auto next = bmd_update_column(v, B, h, 4.5 + 3.5, 0.0);
    CHECK(next[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(next[1] == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("scalar hand example reaches the exact fit in one step") {
    std::vector<double> v{4}, h{1};
    auto next = bmd_update_column(v, Matrix{{2}}, h, 4.0, 0.0);
    CHECK(next[0] == doctest::Approx(2.0));
    // Cross-check with golden-section on the mirror subproblem.
    const double g = -2.0, L = 4.0, href = 1.0;
    auto mirror = [&](double x) { return g * (x - href) + L * (x / href - std::log(x / href) - 1); };
    CHECK(oracle::golden_section(mirror, 1e-6, 50.0) == doctest::Approx(2.0).epsilon(1e-7));
  }
  SUBCASE("L must be positive") {
    std::vector<double> v{0}, h{1};
    CHECK_THROWS_AS(bmd_update_column(v, Matrix{{1}}, h, 0.0, 0.0), std::invalid_argument);
  }
  SUBCASE("eps clamp") {
    // g large and positive drives the entry down; the clamp keeps it >= eps.
    std::vector<double> v{1e-3}, h{5};
    auto next = bmd_update_column(v, Matrix{{1}}, h, 1e-3, 0.5);
    CHECK(next[0] == 0.5);
  }
}

TEST_CASE("bmd_update_column minimizes the mirror subproblem") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 4, r = 3;
    auto B = oracle::random_matrix(rng, m, r, 0.1, 2.0);
    const auto vm = oracle::random_matrix(rng, 1, m, 0.5, 4.0);
    std::vector<double> v(vm.values().begin(), vm.values().end());
    const auto hm = oracle::random_matrix(rng, 1, r, 0.2, 2.0);
    std::vector<double> h(hm.values().begin(), hm.values().end());
    double L = 0.0;
    for (double x : v) L += x;
    // Gradient of D(v | Bh) written out directly.
    std::vector<double> g(r, 0.0);
    for (std::size_t l = 0; l < r; ++l)
      for (std::size_t i = 0; i < m; ++i) {
        double p = 0.0;
        for (std::size_t q = 0; q < r; ++q) p += B(i, q) * h[q];
        g[l] += B(i, l) * (1.0 - v[i] / p);
      }
    const double eps = 1e-6;
    auto objective = [&](const std::vector<double>& x) {
      double s = 0.0;
      for (std::size_t l = 0; l < r; ++l) {
        const double q = x[l] / h[l];
        s += g[l] * (x[l] - h[l]) + L * (q - std::log(q) - 1.0);
      }
      return s;
    };
    auto expected = oracle::grid_refine_minimize(objective, h, eps);
    auto got = bmd_update_column(v, B, h, L, eps);
    for (std::size_t l = 0; l < r; ++l)
      CHECK(got[l] == doctest::Approx(expected[l]).epsilon(1e-6));
  }
}

TEST_CASE("bmd_step is monotone and settles") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    auto inst = random_instance(rng, 8, 7, 3);
    SolverState s(inst.W, inst.H);
    double prev = kl_divergence(inst.V, s.W, s.H).value();
    for (int it = 0; it < 30; ++it) {
      bmd_step(inst.V, s, 1e-8);
      const double cur = kl_divergence_of_product(inst.V, s.WH).value();
      CHECK(cur <= prev * (1 + 1e-12));
      prev = cur;
    }
    for (double x : s.W.values()) CHECK(x >= 1e-8);
    for (double x : s.H.values()) CHECK(x >= 1e-8);
  }
}

TEST_CASE("bmd_step: zero data row sets the W row to eps") {
  Matrix V{{0, 0}, {1, 2}};
  SolverState s(Matrix{{1}, {1}}, Matrix{{1, 1}});
  bmd_step(V, s, 1e-4);
  CHECK(s.W(0, 0) == 1e-4);
}

TEST_CASE("sn_update_scalar") {
  SUBCASE("stationary scalar does not move") {
    auto st = sn_update_scalar(1.7, 0.0, 3.0, 0.5, 0.0);
    CHECK(st.value == 1.7);
  }
  SUBCASE("scalar problem V=4, H=2, W0=1") {
    // f1 = 2 - 4*2/2 = -2, f2 = 4*4/4 = 4, s = 1.5.
    auto st = sn_update_scalar(1.0, -2.0, 4.0, 0.5, 0.0);
    CHECK(st.full_step);
    CHECK(st.value == doctest::Approx(1.5));
    double w = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double p = w * 2.0;
      const double f1 = 2.0 - 4.0 * 2.0 / p;
      const double f2 = 4.0 * 4.0 / (p * p);
      w = sn_update_scalar(w, f1, f2, 0.5, 0.0).value;
    }
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("threshold sanity") {
    auto margin = [](double l) { return l * l + l + std::log(1 - l); };
    CHECK(margin(kFullStepLambda) > 0.0);
    CHECK(margin(0.69) < 0.0);
  }
  SUBCASE("damped step when lambda is large and f1 > 0") {
    // x = 10, f1 = 5, f2 = 1 -> s = 5, d = -5, lambda = c*1*5 = 5 with c = 1.
    auto st = sn_update_scalar(10.0, 5.0, 1.0, 1.0, 0.0);
    CHECK_FALSE(st.full_step);
    CHECK(st.value == doctest::Approx(10.0 - 5.0 / 6.0));
  }
  SUBCASE("linear restriction") {
    CHECK(sn_update_scalar(3.0, 2.0, 0.0, 1.0, 0.1).value == 0.1);
    CHECK(sn_update_scalar(3.0, 0.0, 0.0, 1.0, 0.1).value == 3.0);
  }
  SUBCASE("NaN derivatives") {
    CHECK_THROWS_AS(sn_update_scalar(1.0, NAN, 1.0, 1.0, 0.0), SolverError);
  }
}

TEST_CASE("self-concordant constants") {
  Matrix V{{0, 4, 0}, {9, 0, 0}, {1, 16, 0}};
  auto cr = sn_row_constants(V);
  auto cc = sn_col_constants(V);
  CHECK(cr[0] == doctest::Approx(0.5));
  CHECK(cr[1] == doctest::Approx(1.0 / 3.0));
  CHECK(cr[2] == doctest::Approx(1.0));
  CHECK(cc[0] == doctest::Approx(1.0));
  CHECK(cc[1] == doctest::Approx(0.5));
  CHECK(cc[2] == 0.0);
}

TEST_CASE("sn_sweep") {
  SUBCASE("exact interior fit does not move") {
    Matrix W{{1, 2}, {0.5, 1}, {2, 0.25}};
    Matrix H{{1, 0.5, 2}, {0.3, 1, 1}};
    SolverState s(W, H);
    auto V = s.WH;
    sn_sweep(V, s, 0.0, 3);
    CHECK(max_abs_diff(s.W, W) <= 1e-12);
    CHECK(max_abs_diff(s.H, H) <= 1e-12);
  }
  SUBCASE("1x1 instance reproduces the scalar trajectory in W") {
    Matrix V{{4}};
    ScalarNewtonContext ctx(V);
    SolverState s(Matrix{{1}}, Matrix{{2}});
    sn_update_W(V, ctx, s, 0.0, 1);
    CHECK(s.W(0, 0) == doctest::Approx(1.5));
    sn_update_W(V, ctx, s, 0.0, 1);
    CHECK(s.W(0, 0) == doctest::Approx(1.875));
    for (int it = 0; it < 60; ++it) sn_update_W(V, ctx, s, 0.0, 1);
    CHECK(s.W(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("monotone on random instances; full steps with f1 > 0 are safe") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> dim(2, 9);
    for (int t = 0; t < 50; ++t) {
      const std::size_t m = dim(rng), n = dim(rng);
      const std::size_t r = std::min<std::size_t>(std::min(m, n), 1 + rng() % 4);
      auto inst = random_instance(rng, m, n, r);
      ScalarNewtonContext ctx(inst.V);
      SolverState s(inst.W, inst.H);
      SweepStats stats;
      double prev = kl_divergence_of_product(inst.V, s.WH).value();
      for (int it = 0; it < 10; ++it) {
        sn_sweep(inst.V, ctx, s, t % 2 == 0 ? 0.0 : 1e-6, 3, UpdateOrder::WFirst, &stats);
        const double cur = kl_divergence_of_product(inst.V, s.WH).value();
        CHECK(cur <= prev * (1 + 1e-10) + 1e-12);
        prev = cur;
      }
      CHECK(stats.min_full_step_margin > 0.0);
    }
  }
}

TEST_CASE("ccd_sweep") {
  SUBCASE("exact interior fit is a fixed point") {
    Matrix W{{1, 2}, {0.5, 1}};
    Matrix H{{1, 0.5}, {0.3, 1}};
    SolverState s(W, H);
    auto V = s.WH;
    ccd_sweep(V, s, 0.0, 3);
    CHECK(max_abs_diff(s.W, W) <= 1e-12);
  }
  SUBCASE("first step on the scalar instance matches SN") {
    Matrix V{{4}};
    ScalarNewtonContext ctx(V);
    SolverState s(Matrix{{1}}, Matrix{{2}});
    ccd_sweep(V, ctx, s, 0.0, 1, UpdateOrder::WFirst);
    // W moved 1 -> 1.5 before H was touched.
    SolverState t(Matrix{{1}}, Matrix{{2}});
    sn_update_W(V, ctx, t, 0.0, 1);
    CHECK(t.W(0, 0) == doctest::Approx(1.5));
    CHECK(s.W(0, 0) == doctest::Approx(1.5));
  }
  SUBCASE("overshooting step lands on the clamp") {
    // f(w) = w - log w from w = 3: the Newton point 2w - w^2 = -3 is clamped.
    Matrix V{{1}};
    ScalarNewtonContext ctx(V);
    SolverState at_zero(Matrix{{3}}, Matrix{{1}});
    ccd_sweep(V, ctx, at_zero, 0.0, 1, UpdateOrder::WFirst);
    CHECK(at_zero.W(0, 0) == 0.0);
    CHECK_FALSE(kl_divergence_of_product(V, at_zero.WH).is_finite());

    const double eps = default_epsilon(SolverKind::CCD);
    SolverState clamped(Matrix{{3}}, Matrix{{1}});
    ccd_sweep(V, ctx, clamped, eps, 1, UpdateOrder::WFirst);
    CHECK(clamped.W(0, 0) == eps);
    CHECK(kl_divergence_of_product(V, clamped.WH).is_finite());
  }
  SUBCASE("agrees with SN under an equal iteration budget") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 3; ++t) {
      auto truth_W = oracle::random_matrix(rng, 20, 3, 0.0, 1.0);
      auto truth_H = oracle::random_matrix(rng, 3, 20, 0.0, 1.0);
      auto V = multiply(truth_W, truth_H);
      auto W0 = oracle::random_matrix(rng, 20, 3, 0.1, 1.0);
      auto H0 = oracle::random_matrix(rng, 3, 20, 0.1, 1.0);
      SolverState sn(W0, H0), ccd(W0, H0);
      ScalarNewtonContext ctx(V);
      for (int it = 0; it < 300; ++it) {
        sn_sweep(V, ctx, sn, 0.0, 3);
        ccd_sweep(V, ctx, ccd, 0.0, 3);
      }
      const double denom = relative_error_denominator(V);
      const double e_sn = kl_divergence_of_product(V, sn.WH).value() / denom;
      const double e_ccd = kl_divergence_of_product(V, ccd.WH).value() / denom;
      // Both should fit an exact rank-3 matrix well; compare on the relative
      // error scale with a floor so two near-zero errors count as agreeing.
      CHECK(std::abs(e_sn - e_ccd) <= 0.01 * std::max({e_sn, e_ccd, 1e-2}));
    }
  }
}

TEST_CASE("snmu_step") {
  SUBCASE("exact fit is a fixed point") {
    Matrix W{{1, 2}, {0.5, 1}, {2, 0.25}};
    Matrix H{{1, 0.5, 2}, {0.3, 1, 1}};
    SolverState s(W, H);
    auto V = s.WH;
    ScalarNewtonContext ctx(V);
    snmu_step(V, ctx, s, 0.0, 3, {});
    CHECK(max_abs_diff(s.W, W) <= 1e-12);
  }
  SUBCASE("scaled after the MU portion at eps = 0") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
      auto inst = random_instance(rng, 6, 8, 2);
      ScalarNewtonContext ctx(inst.V);
      SolverState s(inst.W, inst.H);
      snmu_step(inst.V, ctx, s, 0.0, 3, {});
      CHECK(s.WH.sum() == doctest::Approx(inst.V.sum()).epsilon(1e-10));
    }
  }
}

TEST_CASE("run") {
  std::mt19937_64 rng(10);
  auto inst = random_instance(rng, 10, 9, 3);
  ProblemInstance problem{NonnegMatrix(inst.V), 3, 0.0};
  Factorization init{NonnegMatrix(inst.W), NonnegMatrix(inst.H)};

  SUBCASE("zero time budget returns the initialization") {
    SolverConfig cfg;
    cfg.time_budget = 0.0;
    auto res = run(problem, init, cfg);
    CHECK(res.samples.size() == 1);
    CHECK(res.best.W == init.W);
    CHECK(res.best.H == init.H);
  }
  SUBCASE("monotone traces with strictly increasing timestamps") {
    for (auto kind : {SolverKind::MU, SolverKind::BMD, SolverKind::SN, SolverKind::SNMU}) {
      SolverConfig cfg;
      cfg.kind = kind;
      cfg.max_outer_iters = 40;
      auto res = run(problem, init, cfg);
      REQUIRE(res.samples.size() == 41);
      for (std::size_t t = 1; t < res.samples.size(); ++t) {
        CHECK(res.samples[t].elapsed > res.samples[t - 1].elapsed);
        CHECK(res.samples[t].objective.value() <=
              res.samples[t - 1].objective.value() * (1 + 1e-12));
      }
      CHECK(res.best_objective == res.samples.back().objective);
    }
  }
  SUBCASE("record_every keeps the final point") {
    SolverConfig cfg;
    cfg.kind = SolverKind::CCD;
    cfg.max_outer_iters = 7;
    cfg.record_every = 3;
    auto res = run(problem, init, cfg);
    CHECK(res.samples.size() == 4);  // 0, 3, 6, 7
    CHECK(res.outer_iters == 7);
  }
  SUBCASE("init below eps is clamped with a warning") {
    Matrix W = inst.W;
    W(0, 0) = 0.0;
    SolverConfig cfg;
    cfg.kind = SolverKind::BMD;
    cfg.epsilon = 1e-3;
    cfg.max_outer_iters = 2;
    auto res = run(problem, {NonnegMatrix(W), init.H}, cfg);
    CHECK(res.warnings.size() == 1);
    for (double x : res.best.W.values()) CHECK(x >= 1e-3);
  }
  SUBCASE("strictly positive init with eps = 0 raises no warnings") {
    SolverConfig cfg;
    cfg.epsilon = 0.0;
    cfg.max_outer_iters = 2;
    CHECK(run(problem, init, cfg).warnings.empty());
  }
  SUBCASE("infinite initial objective is rejected") {
    Matrix W(10, 3, 0.0);
    SolverConfig cfg;
    cfg.kind = SolverKind::SN;
    CHECK_THROWS_WITH_AS(run(problem, {NonnegMatrix(W), init.H}, cfg),
                         doctest::Contains("positive initialization"), SolverError);
  }
  SUBCASE("objective tolerance stops the run") {
    SolverConfig cfg;
    cfg.kind = SolverKind::MU;
    cfg.max_outer_iters = 100000;
    cfg.objective_tol = 1e-4;
    auto res = run(problem, init, cfg);
    CHECK(res.stop_reason == StopReason::ObjectiveTol);
    CHECK(res.outer_iters < 100000);
  }
  SUBCASE("kkt tolerance stops the run") {
    SolverConfig cfg;
    cfg.kind = SolverKind::SNMU;
    cfg.max_outer_iters = 100000;
    cfg.kkt_tol = 1e-3;
    auto res = run(problem, init, cfg);
    CHECK(res.stop_reason == StopReason::KktTol);
    CHECK(kkt_residual(problem.V, res.best.W, res.best.H, 0.0) <= 1e-3);
  }
  SUBCASE("rank mismatch") {
    ProblemInstance bad{NonnegMatrix(inst.V), 2, 0.0};
    CHECK_THROWS_AS(run(bad, init, SolverConfig{}), DimensionError);
  }
}
