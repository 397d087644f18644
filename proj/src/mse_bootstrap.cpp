#include "ptfh/mse_bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ptfh/numeric.hpp"
#include "ptfh/prediction.hpp"
#include "ptfh/transform.hpp"

namespace ptfh {

namespace {

void check_settings(const MseSettings& s) {
  if (s.B < 1) throw std::invalid_argument("mse: B must be >= 1");
  if (s.S < 1000) throw std::invalid_argument("mse: S must be >= 1000");
}

// Refit one bootstrap sample with the bracket narrowed around lambda_hat.
// Falls back to the full bracket when the narrowed search stops on an edge
// that is not a true boundary of the lambda space.
FitResult narrowed_refit(const std::vector<AreaRecord>& boot,
                         const FitResult& original, const FitOptions& opts) {
  if (original.kind == ModelKind::logfh) return fit_logfh(boot, opts);

  const double lo = std::max(opts.lambda_min, original.params.lambda - 0.5);
  const double hi = std::min(opts.lambda_max, original.params.lambda + 0.5);
  FitOptions narrowed = opts;
  narrowed.lambda_min = lo;
  narrowed.lambda_max = hi;
  narrowed.lambda_grid = 11;
  const FitResult res = fit(boot, narrowed);

  const bool at_lo = res.params.lambda <= lo + opts.lambda_tol;
  const bool at_hi = res.params.lambda >= hi - opts.lambda_tol;
  const bool interior_edge = (at_lo && lo > opts.lambda_min + opts.lambda_tol) ||
                             (at_hi && hi < opts.lambda_max - opts.lambda_tol);
  if (!interior_edge) return res;
  return fit(boot, opts);
}

}  // namespace

G1Estimate g1_mc(const ModelParams& params, std::span<const double> x, double D,
                 int S, RngStream stream) {
  if (S < 1) throw std::invalid_argument("g1_mc: S must be >= 1");
  if (!(D > 0.0)) throw std::domain_error("g1_mc: D must be positive");
  if (!(params.A >= 0.0)) throw std::domain_error("g1_mc: A must be >= 0");
  if (params.A == 0.0) return {0.0, 0.0};  // z1 = z2 = 0: the bracket vanishes

  double eta = 0.0;
  if (x.size() != params.beta.size()) {
    throw std::invalid_argument("g1_mc: covariate/beta length mismatch");
  }
  for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * params.beta[j];

  const double a = params.A / (params.A + D);
  const double c1 = std::sqrt(0.5 * (1.0 + a));
  const double c2 = std::sqrt(0.5 * (1.0 - a));
  const double sd = std::sqrt(params.A);

  std::vector<double> terms(static_cast<std::size_t>(S));
  for (int k = 0; k < S; ++k) {
    const double z1 = sd * stream.normal();
    const double z2 = sd * stream.normal();
    try {
      const double u = dpt_inv(eta + z1, params.lambda);
      const double s = dpt_inv(eta + c1 * z1 + c2 * z2, params.lambda);
      const double t = dpt_inv(eta + c1 * z1 - c2 * z2, params.lambda);
      terms[static_cast<std::size_t>(k)] = u * u - s * t;
    } catch (const std::range_error& err) {
      throw std::runtime_error("g1_mc: overflow at draw " + std::to_string(k) +
                               ": " + err.what());
    }
  }
  G1Estimate est;
  est.value = mean(terms);
  est.se = std::sqrt(sample_variance(terms) / static_cast<double>(S));
  return est;
}

std::vector<AreaRecord> make_bootstrap_records(
    const std::vector<AreaRecord>& data, const ModelParams& params,
    std::span<const double> d, RngStream& stream) {
  if (d.size() != data.size()) {
    throw std::invalid_argument("make_bootstrap_records: variance length mismatch");
  }
  std::vector<AreaRecord> boot = data;
  for (std::size_t i = 0; i < boot.size(); ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < boot[i].x.size(); ++j) {
      eta += boot[i].x[j] * params.beta[j];
    }
    const double v = stream.normal(0.0, std::sqrt(params.A));
    const double e = stream.normal(0.0, std::sqrt(d[i]));
    boot[i].y = dpt_inv(eta + v + e, params.lambda);
  }
  return boot;
}

MseReport bootstrap_mse(const std::vector<AreaRecord>& data,
                        const FitResult& fit_result, const MseSettings& settings,
                        const FitOptions& fit_opts, const Refitter& refit_override) {
  check_settings(settings);
  if (fit_result.kind == ModelKind::fh) {
    throw std::invalid_argument(
        "bootstrap_mse: the identity-scale model has no transformed-scale MSE "
        "estimator here");
  }
  if (fit_result.d_used.size() != data.size()) {
    throw std::invalid_argument("bootstrap_mse: fit does not match the data");
  }
  const std::size_t m = data.size();
  const int B = settings.B;

  MseReport report;
  report.settings = settings;
  report.rows.resize(m);

  // Plug-in g1 and the fitted predictor, once per area. Stream keys depend
  // only on (seed, area), so bootstrap evaluations replay the same draws.
  std::vector<double> g1_hat(m), mu_hat(m);
  for (std::size_t i = 0; i < m; ++i) {
    const G1Estimate est =
        g1_mc(fit_result.params, data[i].x, fit_result.d_used[i], settings.S,
              RngStream(settings.seed, rng_tag::kG1, i, 0));
    g1_hat[i] = est.value;
    report.rows[i].g1_plugin = est.value;
    report.rows[i].g1_plugin_se = est.se;
    mu_hat[i] = ebp_mu(data[i].y, data[i].x, fit_result.params,
                       fit_result.d_used[i], settings.quad_order);
  }

  struct RepSlot {
    bool ok = false;
    std::vector<double> g1_star;
    std::vector<double> sq_diff;
    double lambda = 0.0;
  };
  std::vector<RepSlot> slots(static_cast<std::size_t>(B));

  parallel_for(static_cast<std::size_t>(B), settings.threads, [&](std::size_t b) {
    RngStream gen(settings.seed, rng_tag::kBootstrap, b, 0);
    const std::vector<AreaRecord> boot =
        make_bootstrap_records(data, fit_result.params, fit_result.d_used, gen);
    FitResult refit;
    try {
      refit = refit_override ? refit_override(boot)
                             : narrowed_refit(boot, fit_result, fit_opts);
    } catch (const std::exception&) {
      return;  // dropped and counted below
    }
    RepSlot& slot = slots[b];
    slot.g1_star.resize(m);
    slot.sq_diff.resize(m);
    slot.lambda = refit.params.lambda;
    for (std::size_t i = 0; i < m; ++i) {
      slot.g1_star[i] =
          g1_mc(refit.params, data[i].x, refit.d_used[i], settings.S,
                RngStream(settings.seed, rng_tag::kG1, i, 0))
              .value;
      const double mu_star = ebp_mu(data[i].y, data[i].x, refit.params,
                                    refit.d_used[i], settings.quad_order);
      const double diff = mu_star - mu_hat[i];
      slot.sq_diff[i] = diff * diff;
    }
    slot.ok = true;
  });

  for (const RepSlot& slot : slots) {
    if (!slot.ok) {
      ++report.refit_failures;
      continue;
    }
    ++report.b_used;
    report.rep_g1.insert(report.rep_g1.end(), slot.g1_star.begin(),
                         slot.g1_star.end());
    report.rep_sq_diff.insert(report.rep_sq_diff.end(), slot.sq_diff.begin(),
                              slot.sq_diff.end());
    report.rep_lambda.push_back(slot.lambda);
  }
  if (report.b_used == 0) {
    throw std::runtime_error("bootstrap_mse: every bootstrap refit failed");
  }
  report.invalid = report.refit_failures * 10 > B;

  const auto n_used = static_cast<std::size_t>(report.b_used);
  std::vector<double> col(n_used);
  for (std::size_t i = 0; i < m; ++i) {
    MseAreaRow& row = report.rows[i];
    for (std::size_t b = 0; b < n_used; ++b) col[b] = report.rep_g1[b * m + i];
    const double g1_star_mean = mean(col);
    for (std::size_t b = 0; b < n_used; ++b) col[b] = report.rep_sq_diff[b * m + i];
    row.g2_star = mean(col);

    if (settings.correction == BiasCorrection::additive) {
      row.g1_corrected = 2.0 * g1_hat[i] - g1_star_mean;
    } else {
      row.g1_corrected =
          g1_star_mean > 0.0 ? g1_hat[i] * g1_hat[i] / g1_star_mean : 0.0;
    }
    row.mse_total = row.g1_corrected + row.g2_star;
    row.clamped_flag = row.g1_corrected < 0.0;
    row.mse_clamped = std::max(row.g1_corrected, 0.0) + row.g2_star;
  }
  return report;
}

}  // namespace ptfh
