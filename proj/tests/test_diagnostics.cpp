#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "ptfh/diagnostics.hpp"
#include "ptfh/estimation.hpp"
#include "ptfh/numeric.hpp"
#include "ptfh/rng.hpp"
#include "ptfh/transform.hpp"

using namespace ptfh;
using ptfh_tests::make_dgp_records;
using ptfh_tests::normal_quantile;

namespace {

FitResult manual_fit(ModelParams params, std::vector<double> d, ModelKind kind) {
  FitResult f;
  f.params = std::move(params);
  f.d_used = std::move(d);
  f.kind = kind;
  return f;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("residuals on constructed fits") {
  // responses sitting exactly on the fitted mean curve
  FitResult f = manual_fit({{1.0, 0.5}, 0.7, 0.6}, {0.3, 0.3, 0.3}, ModelKind::ptfh);
  std::vector<AreaRecord> data;
  for (double x : {0.5, 1.5, 3.0}) {
    AreaRecord r;
    r.x = {1.0, x};
    r.y = dpt_inv(1.0 + 0.5 * x, 0.6);
    r.D = 0.3;
    data.push_back(r);
  }
  for (double e : standardized_residuals(data, f)) CHECK(e == 0.0);

  // A + D = 4 with residual 2 on the transformed scale gives e = 1
  FitResult f2 = manual_fit({{0.0}, 3.0, 0.0}, {1.0}, ModelKind::logfh);
  AreaRecord r;
  r.x = {1.0};
  r.y = std::exp(2.0);
  r.D = 1.0;
  CHECK(standardized_residuals({r}, f2)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("residuals of a correct-model fit look standard normal") {
  const auto draw = make_dgp_records(300, 0.5, 1.0, 1.0, 1.5,
                                     {0.2, 0.4, 0.6, 0.8, 1.0}, 313, 0, true);
  const FitResult res = fit(draw.records);
  const std::vector<double> e = standardized_residuals(draw.records, res);
  CHECK(std::abs(mean(e)) < 3.0 / std::sqrt(300.0));
  const double sd = std::sqrt(sample_variance(e));
  CHECK(sd > 0.85);
  CHECK(sd < 1.15);
}

TEST_CASE("residuals are invariant to shifting a covariate column") {
  auto draw = make_dgp_records(47, 0.6, 1.0, 0.8, 0.4,
                               {0.15, 0.25, 0.3, 0.35, 0.45}, 314, 1, true);
  const FitResult base = fit(draw.records);
  const std::vector<double> e_base = standardized_residuals(draw.records, base);
  for (auto& r : draw.records) r.x[1] += 2.5;
  const FitResult shifted = fit(draw.records);
  const std::vector<double> e_shift = standardized_residuals(draw.records, shifted);
  for (std::size_t i = 0; i < e_base.size(); ++i) {
    CHECK(std::abs(e_base[i] - e_shift[i]) < 1e-8);
  }
}

TEST_CASE("ks statistic and p-value behavior") {
  const int n = 1000;
  std::vector<double> e(n);
  for (int i = 0; i < n; ++i) {
    e[static_cast<std::size_t>(i)] =
        normal_quantile((i + 1.0) / (n + 1.0));
  }
  const KsResult good = ks_normal_test(e);
  CHECK(good.p_value > 0.99);
  CHECK(good.statistic >= 0.0);
  CHECK(good.statistic <= 1.0);

  for (double& v : e) v += 3.0;
  const KsResult bad = ks_normal_test(e);
  CHECK(bad.p_value < 1e-6);
  CHECK(bad.statistic > good.statistic);  // p monotone against the statistic

  CHECK_THROWS_AS(ks_normal_test(std::vector<double>{1.0, 1.0, 1.0, 1.0, 1.0}),
                  std::domain_error);
  CHECK_THROWS_AS(ks_normal_test(std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("ks null rejection rate at n=47 sits near its level") {
  const int reps = 2000, n = 47;
  int rejections = 0;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(1000, rng_tag::kOracle, static_cast<std::uint64_t>(r), 0);
    std::vector<double> e(n);
    for (auto& v : e) v = rng.normal();
    if (ks_normal_test(e).p_value < 0.05) ++rejections;
  }
  const double rate = 100.0 * rejections / reps;
  CHECK(rate >= 2.0);
  CHECK(rate <= 9.0);
}

TEST_CASE("aic bookkeeping across models") {
  const auto draw = make_dgp_records(40, 0.0, 1.0, 1.0, 1.0,
                                     {0.3, 0.4, 0.5, 0.6, 0.7}, 315, 2, false);
  FitOptions pinned;
  pinned.lambda_min = 0.0;
  pinned.lambda_max = 0.0;
  const FitResult as_pinned = fit(draw.records, pinned);   // counted as ptfh
  const FitResult as_logfh = fit_logfh(draw.records);
  // identical likelihood, one extra counted parameter
  CHECK(marginal_aic(draw.records, as_pinned) -
            marginal_aic(draw.records, as_logfh) ==
        doctest::Approx(2.0).epsilon(1e-12));

  // normalized density at lambda = 0 equals the hand form with a 1/y Jacobian
  const auto& f = as_logfh;
  double hand = 0.0;
  for (std::size_t i = 0; i < draw.records.size(); ++i) {
    const AreaRecord& r = draw.records[i];
    const double v = f.params.A + f.d_used[i];
    const double resid = std::log(r.y) - (f.params.beta[0] + f.params.beta[1] * r.x[1]);
    hand += -0.5 * std::log(2.0 * std::numbers::pi * v) -
            0.5 * resid * resid / v - std::log(r.y);
  }
  CHECK(normalized_loglik(draw.records, f.params, f.d_used, ModelKind::logfh) ==
        doctest::Approx(hand).epsilon(1e-10));
  CHECK(normalized_loglik(draw.records, f.params, f.d_used, ModelKind::ptfh) ==
        doctest::Approx(hand).epsilon(1e-10));
}

TEST_CASE("aic prefers the transformed model when the data call for it") {
  const int reps = 100;
  std::vector<int> wins(reps, 0);
  parallel_for(reps, 2, [&](std::size_t r) {
    const auto draw = make_dgp_records(200, 0.9, 1.0, 1.0, 1.5,
                                       {0.2, 0.4, 0.6, 0.8, 1.0}, 316,
                                       static_cast<int>(r), true);
    const FitResult ptfh_fit = fit(draw.records);
    const FitResult logfh_fit = fit_logfh(draw.records);
    wins[r] = marginal_aic(draw.records, ptfh_fit) <
              marginal_aic(draw.records, logfh_fit);
  });
  int total = 0;
  for (int w : wins) total += w;
  CHECK(total >= 80);
}

TEST_CASE("lambda interval collapses under a degenerate refitter") {
  const auto draw = make_dgp_records(47, 0.6, 1.0, 0.8, 0.4,
                                     {0.15, 0.25, 0.3, 0.35, 0.45}, 317, 0, true);
  const FitResult fitted = fit(draw.records);
  const Refitter identity = [&](const std::vector<AreaRecord>&) { return fitted; };
  const LambdaCi ci =
      lambda_bootstrap_ci(draw.records, fitted, 100, 0.95, 9, {}, 1, identity);
  CHECK(ci.lo == doctest::Approx(fitted.params.lambda).epsilon(1e-14));
  CHECK(ci.hi == doctest::Approx(fitted.params.lambda).epsilon(1e-14));
  CHECK(ci.lo >= 0.0);
  CHECK_THROWS_AS(
      lambda_bootstrap_ci(draw.records, fitted, 50, 0.95, 9, {}, 1, identity),
      std::invalid_argument);
}

TEST_CASE("lambda interval covers the truth at roughly its nominal rate") {
  const int outer = 100, B = 200;
  std::vector<int> covered(outer, 0);
  FitOptions opts;  // trimmed search keeps the refits affordable
  opts.lambda_grid = 15;
  opts.lambda_tol = 1e-4;
  opts.a_tol = 1e-6;
  parallel_for(outer, 2, [&](std::size_t r) {
    const auto draw = make_dgp_records(300, 0.5, 1.0, 1.0, 1.5,
                                       {0.2, 0.4, 0.6, 0.8, 1.0}, 318,
                                       static_cast<int>(r), true);
    const FitResult fitted = fit(draw.records, opts);
    const LambdaCi ci = lambda_bootstrap_ci(
        draw.records, fitted, B, 0.95,
        RngStream(318, rng_tag::kBootstrap, r, 5).next_u64(), opts, 1);
    covered[r] = ci.lo <= 0.5 && 0.5 <= ci.hi;
  });
  int total = 0;
  for (int c : covered) total += c;
  CHECK(total >= 88);
  CHECK(total <= 99);
}

TEST_CASE("knot layout on a uniform grid") {
  std::vector<double> w(101);
  for (int i = 0; i <= 100; ++i) w[static_cast<std::size_t>(i)] = i / 100.0;
  const std::vector<double> knots = spline_knots(w, 20);
  CHECK(knots.front() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(knots.back() == doctest::Approx(0.9).epsilon(1e-12));
  const double spacing = (0.9 - 0.1) / 19.0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    CHECK(knots[k] - knots[k - 1] == doctest::Approx(spacing).epsilon(1e-10));
  }
}

TEST_CASE("zero spline variance reduces to the polynomial GLS fit") {
  RngStream rng(319);
  const int m = 60;
  std::vector<double> w(m), z(m), d(m);
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    w[k] = rng.uniform(0.0, 1.0);
    z[k] = 0.4 + 1.3 * w[k] + rng.normal(0.0, 0.3);
    d[k] = 0.09;
  }
  SplineConfig cfg;
  cfg.degree = 1;
  const double A = 0.05;
  const SplineFit reduced = spline_fit_at(z, w, d, cfg, A, 0.0);
  for (double g : reduced.gamma) CHECK(g == 0.0);

  std::vector<std::vector<double>> x_rows(static_cast<std::size_t>(m));
  std::vector<double> var(static_cast<std::size_t>(m), A + 0.09);
  for (int i = 0; i < m; ++i) x_rows[static_cast<std::size_t>(i)] = {1.0, w[static_cast<std::size_t>(i)]};
  const std::vector<double> beta = gls_beta(x_rows, z, var);
  CHECK(reduced.beta[0] == doctest::Approx(beta[0]).epsilon(1e-12));
  CHECK(reduced.beta[1] == doctest::Approx(beta[1]).epsilon(1e-12));
}

TEST_CASE("marginal covariance factorizes for nonnegative variances") {
  RngStream rng(320);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 40;
    std::vector<double> w(m), z(m), d(m);
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      w[k] = rng.uniform(-2.0, 2.0);
      z[k] = rng.normal(0.0, 1.0);
      d[k] = rng.uniform(0.05, 0.5);
    }
    SplineConfig cfg;
    cfg.K = 10;
    cfg.degree = 1 + trial % 3;
    const SplineFit f =
        spline_fit_at(z, w, d, cfg, rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
    CHECK(std::isfinite(f.loglik));
  }
}

TEST_CASE("no spurious wiggle on a straight-line truth") {
  const int reps = 100, m = 200;
  std::vector<int> ok(reps, 0);
  parallel_for(reps, 2, [&](std::size_t r) {
    RngStream rng(321, rng_tag::kOracle, r, 0);
    std::vector<double> w(m), z(m), d(m, 0.09);
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      w[k] = rng.uniform(0.0, 1.0);
      z[k] = 0.5 + 1.0 * w[k] + rng.normal(0.0, std::sqrt(0.04)) +
             rng.normal(0.0, std::sqrt(d[k]));
    }
    SplineConfig cfg;
    cfg.degree = 1;
    const SplineFit spline = spline_gof_fit(z, w, d, cfg);
    const SplineFit line = spline_fit_at(z, w, d, cfg, spline.A, 0.0);
    std::vector<double> resid(static_cast<std::size_t>(m));
    double max_gap = 0.0;
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      resid[k] = z[k] - line.fitted[k];
      max_gap = std::max(max_gap, std::abs(spline.fitted[k] - line.fitted[k]));
    }
    const double resid_sd = std::sqrt(sample_variance(resid));
    ok[r] = max_gap < 0.1 * resid_sd;
  });
  int total = 0;
  for (int v : ok) total += v;
  CHECK(total >= 90);
}

}  // TEST_SUITE
