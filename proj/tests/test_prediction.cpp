#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "ptfh/estimation.hpp"
#include "ptfh/numeric.hpp"
#include "ptfh/prediction.hpp"
#include "ptfh/rng.hpp"
#include "ptfh/transform.hpp"

using namespace ptfh;
using ptfh_tests::rel_diff;

TEST_SUITE("prediction") {

TEST_CASE("shrinkage parts") {
  ModelParams p{{0.0}, 1.5, 0.4};
  const std::vector<double> x = {1.0};
  const ShrinkageParts parts = best_theta(2.0, x, p, 0.5);
  CHECK(parts.gamma == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(parts.sigma2 == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(parts.theta ==
        doctest::Approx(0.75 * dpt(2.0, 0.4)).epsilon(1e-12));

  ModelParams degenerate{{0.3}, 0.0, 0.4};
  const ShrinkageParts zero = best_theta(2.0, x, degenerate, 0.5);
  CHECK(zero.gamma == 0.0);
  CHECK(zero.sigma2 == 0.0);
  CHECK(zero.theta == doctest::Approx(0.3).epsilon(1e-14));

  ModelParams p2{{0.3}, 1.0, 0.4};
  const ShrinkageParts flat = best_theta(2.0, x, p2, 1e12);
  CHECK(flat.gamma < 1e-11);
  CHECK(flat.theta == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("log-case closed form and point mass") {
  CHECK(ebp_mu_from_moments(0.0, 1.0, 0.0, 20) ==
        doctest::Approx(std::exp(0.5)).epsilon(1e-10));
  for (double lam : {0.0, 0.3, 1.2}) {
    CHECK(ebp_mu_from_moments(0.8, 0.0, lam) ==
          doctest::Approx(dpt_inv(0.8, lam)).epsilon(1e-14));
  }
}

TEST_CASE("quadrature agrees with a Monte-Carlo evaluation") {
  const double lambda = 0.6, theta = 1.2, sigma2 = 0.4;
  const int draws = 1000000;
  RngStream rng(202);
  std::vector<double> vals(draws);
  for (int k = 0; k < draws; ++k) {
    vals[static_cast<std::size_t>(k)] =
        dpt_inv(theta + std::sqrt(sigma2) * rng.normal(), lambda);
  }
  const double mc = mean(vals);
  const double se = std::sqrt(sample_variance(vals) / draws);
  CHECK(std::abs(ebp_mu_from_moments(theta, sigma2, lambda) - mc) < 3.0 * se);
}

TEST_CASE("quadrature order convergence over the moment grid") {
  for (double lam : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    for (double theta : {-5.0, -2.5, 0.0, 2.5, 5.0}) {
      for (double s2 : {0.1, 0.5, 1.0, 1.5, 2.0}) {
        const double a = ebp_mu_quadrature(theta, s2, lam, 50);
        const double b = ebp_mu_quadrature(theta, s2, lam, 100);
        CHECK(rel_diff(a, b) < 1e-8);
      }
    }
  }
}

TEST_CASE("monotone in theta and shrinkage ordering") {
  for (double s2 : {0.2, 1.0}) {
    for (double lam : {0.0, 0.7, 1.8}) {
      double prev = ebp_mu_from_moments(-4.0, s2, lam);
      for (double theta = -3.5; theta <= 4.0; theta += 0.5) {
        const double cur = ebp_mu_from_moments(theta, s2, lam);
        CHECK(cur > prev);
        prev = cur;
      }
    }
  }
  // same data, larger D: prediction pulled toward the synthetic part
  ModelParams p{{0.2}, 1.0, 0.5};
  const std::vector<double> x = {1.0};
  const double eta = 0.2;
  const double t_small = best_theta(3.0, x, p, 0.3).theta;
  const double t_large = best_theta(3.0, x, p, 3.0).theta;
  CHECK(std::abs(t_large - eta) < std::abs(t_small - eta));
}

TEST_CASE("simple back-transform") {
  ModelParams p{{0.0}, 1.0, 1.0};
  const std::vector<double> x = {0.0};
  // theta = gamma h(y): choose y so that theta lands on 0.75
  const double y = dpt_inv(1.5, 1.0);
  CHECK(naive_mu(y, x, p, 1.0) == doctest::Approx(2.0).epsilon(1e-12));

  // below the conditional-expectation predictor in the log case (Jensen)
  ModelParams pl{{0.4}, 0.8, 0.0};
  const std::vector<double> x1 = {1.0};
  const double nm = naive_mu(2.2, x1, pl, 0.6);
  const double bp = ebp_mu(2.2, x1, pl, 0.6);
  CHECK(nm < bp);
  ModelParams p_nov{{0.4}, 0.0, 0.0};
  CHECK(naive_mu(2.2, x1, p_nov, 0.6) ==
        doctest::Approx(ebp_mu(2.2, x1, p_nov, 0.6)).epsilon(1e-14));
}

TEST_CASE("log-scale bias-corrected predictor") {
  ModelParams p{{0.0}, 1.0, 0.0};
  const std::vector<double> x = {1.0};
  const double y = std::exp(2.0);  // h0(y) = 2
  // gamma = 1/2, theta = 1, sigma2 = 1/2
  CHECK(slud_maiti_mu_log(y, x, p, 1.0) ==
        doctest::Approx(std::exp(1.25)).epsilon(1e-12));
  CHECK(slud_maiti_mu_log(y, x, p, 1.0) ==
        doctest::Approx(ebp_mu(y, x, p, 1.0)).epsilon(1e-12));
  ModelParams p0{{0.0}, 0.0, 0.0};
  CHECK(slud_maiti_mu_log(1.0, x, p0, 1.0) == doctest::Approx(1.0));
  ModelParams bad{{0.0}, 1.0, 0.5};
  CHECK_THROWS_AS(slud_maiti_mu_log(y, x, bad, 1.0), std::invalid_argument);
}

TEST_CASE("identity-scale shrinkage") {
  const std::vector<double> x = {1.0};
  ModelParams p0{{0.7}, 0.0, 0.0};
  CHECK(fh_eblup(3.0, x, p0, 0.5) == doctest::Approx(0.7).epsilon(1e-14));
  ModelParams p1{{0.7}, 0.5, 0.0};
  CHECK(fh_eblup(3.0, x, p1, 0.5) == doctest::Approx(0.5 * (3.0 + 0.7)).epsilon(1e-14));
  RngStream rng(33);
  for (int i = 0; i < 100; ++i) {
    const double A = rng.uniform(0.01, 3.0), D = rng.uniform(0.01, 3.0);
    const double y = rng.uniform(-5.0, 5.0), eta = rng.uniform(-2.0, 2.0);
    ModelParams p{{eta}, A, 0.0};
    CHECK(fh_eblup(y, x, p, D) ==
          doctest::Approx((A * y + D * eta) / (A + D)).epsilon(1e-12));
  }
}

TEST_CASE("per-area prediction table keeps the stated identities") {
  const auto draw = ptfh_tests::make_dgp_records(
      30, 0.6, 1.0, 1.0, 1.5, {0.2, 0.4, 0.6, 0.8, 1.0}, 404, 2, false);
  const FitResult res = fit(draw.records);
  const auto preds = predict_areas(draw.records, res);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double A = res.params.A, D = res.d_used[i];
    CHECK(std::abs(preds[i].gamma - A / (A + D)) < 1e-12);
    CHECK(std::abs(preds[i].sigma2 - A * D / (A + D)) < 1e-12);
    const double h = dpt(draw.records[i].y, res.params.lambda);
    const double eta = res.params.beta[0] + res.params.beta[1] * draw.records[i].x[1];
    const double lo = std::min(h, eta), hi = std::max(h, eta);
    CHECK(preds[i].theta_hat >= lo - 1e-12);
    CHECK(preds[i].theta_hat <= hi + 1e-12);
    CHECK(preds[i].mu_hat > 0.0);
    CHECK(preds[i].mu_naive > 0.0);
  }
}

}  // TEST_SUITE
