// Parametric-bootstrap MSE estimation for the empirical best predictor.
//
// The MSE splits into g1 (prediction error at the true parameters) and g2
// (parameter-estimation variability). g1 has the Monte-Carlo form
//   g1 = E[ {h^{-1}(eta + z1)}^2
//           - h^{-1}(eta + c1 z1 + c2 z2) h^{-1}(eta + c1 z1 - c2 z2) ],
// with z1, z2 ~ N(0, A), c1 = sqrt((1+a)/2), c2 = sqrt((1-a)/2),
// a = A/(A+D). The bootstrap corrects the plug-in bias of g1 and estimates
// g2 as the bootstrap variance of the predictor around its fitted value.
#ifndef PTFH_MSE_BOOTSTRAP_HPP
#define PTFH_MSE_BOOTSTRAP_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ptfh/estimation.hpp"
#include "ptfh/rng.hpp"

namespace ptfh {

enum class BiasCorrection { additive, multiplicative };

struct MseSettings {
  int B = 100;        // bootstrap replicates
  int S = 10000;      // Monte-Carlo draws per g1 evaluation
  std::uint64_t seed = 0;
  BiasCorrection correction = BiasCorrection::additive;
  bool clamp_negative = false;  // headline estimate uses the clamped value
  int quad_order = 50;
  unsigned threads = 1;
};

struct G1Estimate {
  double value = 0.0;
  double se = 0.0;  // Monte-Carlo standard error of the mean
};

// Monte-Carlo g1 at the given parameters. The stream is taken by value:
// calling with an identically keyed stream replays the same draws, which is
// what couples the plug-in and bootstrap evaluations (common random numbers).
G1Estimate g1_mc(const ModelParams& params, std::span<const double> x, double D,
                 int S, RngStream stream);

struct MseAreaRow {
  double g1_plugin = 0.0;
  double g1_plugin_se = 0.0;
  double g1_corrected = 0.0;
  double g2_star = 0.0;
  double mse_total = 0.0;    // g1_corrected + g2_star, as-is
  double mse_clamped = 0.0;  // with g1_corrected floored at zero
  bool clamped_flag = false;
};

struct MseReport {
  std::vector<MseAreaRow> rows;  // per area, data order
  MseSettings settings;
  int refit_failures = 0;
  bool invalid = false;  // more than 10% of refits dropped
  int b_used = 0;
  // Per-replicate detail for the b_used successful replicates, row-major
  // by replicate: g1(phi*_b) and (mu*_b - mu_hat)^2 per area.
  std::vector<double> rep_g1;
  std::vector<double> rep_sq_diff;
  std::vector<double> rep_lambda;  // lambda_hat of each successful refit
};

using Refitter = std::function<FitResult(const std::vector<AreaRecord>&)>;

// Draws bootstrap responses from the fitted model, refits each sample with a
// bracket narrowed around the fitted lambda (full-bracket fallback when the
// narrowed search lands on an interior edge), and combines the g1 bias
// correction with the bootstrap g2. refit_override, when set, replaces the
// internal refitting (test seam).
MseReport bootstrap_mse(const std::vector<AreaRecord>& data,
                        const FitResult& fit, const MseSettings& settings,
                        const FitOptions& fit_opts = {},
                        const Refitter& refit_override = nullptr);

// The bootstrap sample generator used by bootstrap_mse and the lambda
// confidence interval: y*_i = h^{-1}(x_i'beta + v* + e*) with v* ~ N(0, A),
// e* ~ N(0, d_i). D / replicate columns are carried over unchanged.
std::vector<AreaRecord> make_bootstrap_records(
    const std::vector<AreaRecord>& data, const ModelParams& params,
    std::span<const double> d, RngStream& stream);

}  // namespace ptfh

#endif
