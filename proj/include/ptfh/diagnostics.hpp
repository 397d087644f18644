// Model assessment: standardized residuals, a one-sample Kolmogorov-Smirnov
// normality check, marginal AIC on the original response scale, a percentile
// bootstrap interval for the transformation parameter, and a penalized-spline
// goodness-of-fit model with a truncated power basis.
#ifndef PTFH_DIAGNOSTICS_HPP
#define PTFH_DIAGNOSTICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ptfh/estimation.hpp"
#include "ptfh/mse_bootstrap.hpp"

namespace ptfh {

// e_i = (h(y_i) - x_i'beta) / sqrt(A + D_i), on the scale of the fitted model.
std::vector<double> standardized_residuals(const std::vector<AreaRecord>& data,
                                           const FitResult& fit);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample KS statistic against the standard normal CDF with the asymptotic
// Kolmogorov-distribution p-value. Parameter-estimation effects are ignored,
// so the p-value is approximate (slightly conservative).
KsResult ks_normal_test(std::span<const double> e);

// -2 * normalized max log marginal density + 2k, k = p+2 for the transformed
// model (lambda counted), p+1 otherwise. Comparable across models because all
// densities are on the original y scale.
double marginal_aic(const std::vector<AreaRecord>& data, const FitResult& fit);

struct LambdaCi {
  double lo = 0.0;
  double hi = 0.0;
  int refit_failures = 0;
  bool invalid = false;  // more than 10% of refits dropped
  std::vector<double> lambda_samples;
};

// Percentile interval from B parametric-bootstrap refits (full lambda
// bracket). level is the two-sided coverage, e.g. 0.95.
LambdaCi lambda_bootstrap_ci(const std::vector<AreaRecord>& data,
                             const FitResult& fit, int B, double level,
                             std::uint64_t seed, const FitOptions& opts = {},
                             unsigned threads = 1,
                             const Refitter& refit_override = nullptr);

struct SplineConfig {
  int K = 20;      // knot count
  int degree = 1;  // 1, 2 or 3
};

struct SplineFit {
  int degree = 1;
  std::vector<double> beta;   // polynomial coefficients, degree+1
  std::vector<double> gamma;  // conditional means of the spline coefficients
  std::vector<double> knots;
  double A = 0.0;      // area-level variance
  double alpha = 0.0;  // spline coefficient variance
  double loglik = 0.0;
  bool a_at_boundary = false;
  bool alpha_at_boundary = false;
  std::vector<double> fitted;  // at the data points

  double predict(double w) const;
};

// ML fit at fixed variance components (also the alpha = 0 reduction used in
// tests); beta by GLS, gamma as the conditional mean.
SplineFit spline_fit_at(std::span<const double> z, std::span<const double> w,
                        std::span<const double> d, const SplineConfig& config,
                        double A, double alpha);

// Full ML: nested derivative-free search over (A, alpha) on the log scale
// with floor 1e-8, beta profiled out.
SplineFit spline_gof_fit(std::span<const double> z, std::span<const double> w,
                         std::span<const double> d, const SplineConfig& config);

// Knot vector for the truncated power basis: first and last knots at the 10%
// and 90% quantiles of w, interior knots equally spaced between them.
std::vector<double> spline_knots(std::span<const double> w, int K);

}  // namespace ptfh

#endif
