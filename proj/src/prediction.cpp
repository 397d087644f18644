#include "ptfh/prediction.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ptfh/gauss_hermite.hpp"
#include "ptfh/numeric.hpp"
#include "ptfh/transform.hpp"

namespace ptfh {

namespace {

double linear_predictor(std::span<const double> x, const ModelParams& params) {
  if (x.size() != params.beta.size()) {
    throw std::invalid_argument("prediction: covariate/beta length mismatch");
  }
  double eta = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * params.beta[j];
  return eta;
}

void check_variances(double A, double D) {
  if (!std::isfinite(A) || A < 0.0) {
    throw std::domain_error("prediction: A must be finite and >= 0");
  }
  if (!std::isfinite(D) || D <= 0.0) {
    throw std::domain_error("prediction: D must be finite and > 0");
  }
}

double checked_exp(double e, const char* who) {
  if (e > 709.0) {
    throw std::range_error(std::string(who) + ": result overflows double range");
  }
  return std::exp(e);
}

}  // namespace

ShrinkageParts best_theta(double y, std::span<const double> x,
                          const ModelParams& params, double D) {
  check_variances(params.A, D);
  const double h = dpt(y, params.lambda);
  const double eta = linear_predictor(x, params);
  ShrinkageParts parts;
  parts.gamma = params.A / (params.A + D);
  parts.sigma2 = params.A * D / (params.A + D);
  parts.theta = parts.gamma * h + (1.0 - parts.gamma) * eta;
  return parts;
}

double ebp_mu_from_moments(double theta, double sigma2, double lambda,
                           int quad_order) {
  if (!std::isfinite(theta) || !std::isfinite(sigma2) || sigma2 < 0.0) {
    throw std::domain_error("ebp_mu: invalid conditional moments");
  }
  if (sigma2 == 0.0) return dpt_inv(theta, lambda);
  if (lambda < kLambdaEps) {
    return checked_exp(theta + 0.5 * sigma2, "ebp_mu");
  }
  return ebp_mu_quadrature(theta, sigma2, lambda, quad_order);
}

double ebp_mu_quadrature(double theta, double sigma2, double lambda,
                         int quad_order) {
  if (quad_order < 2) {
    throw std::invalid_argument("ebp_mu: quadrature order must be >= 2");
  }
  const QuadRule& rule = gauss_hermite(quad_order);
  const double scale = std::sqrt(2.0 * sigma2);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    terms[k] = rule.weights[k] * inv_sqrt_pi *
               dpt_inv(theta + scale * rule.nodes[k], lambda);
  }
  return pairwise_sum(terms);
}

double ebp_mu(double y, std::span<const double> x, const ModelParams& params,
              double D, int quad_order) {
  const ShrinkageParts parts = best_theta(y, x, params, D);
  return ebp_mu_from_moments(parts.theta, parts.sigma2, params.lambda, quad_order);
}

double naive_mu(double y, std::span<const double> x, const ModelParams& params,
                double D) {
  const ShrinkageParts parts = best_theta(y, x, params, D);
  return dpt_inv(parts.theta, params.lambda);
}

double slud_maiti_mu_log(double y, std::span<const double> x,
                         const ModelParams& params, double D) {
  if (params.lambda >= kLambdaEps) {
    throw std::invalid_argument("slud_maiti_mu_log: requires a log-scale fit");
  }
  const ShrinkageParts parts = best_theta(y, x, params, D);
  return checked_exp(parts.theta + 0.5 * parts.sigma2, "slud_maiti_mu_log");
}

double fh_eblup(double y, std::span<const double> x, const ModelParams& params,
                double D) {
  check_variances(params.A, D);
  const double eta = linear_predictor(x, params);
  const double gamma = params.A / (params.A + D);
  return gamma * y + (1.0 - gamma) * eta;
}

std::vector<AreaPrediction> predict_areas(const std::vector<AreaRecord>& data,
                                          const FitResult& fit,
                                          int quad_order) {
  if (fit.d_used.size() != data.size()) {
    throw std::invalid_argument("predict_areas: fit does not match the data");
  }
  std::vector<AreaPrediction> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const AreaRecord& r = data[i];
    const double D = fit.d_used[i];
    AreaPrediction& p = out[i];
    p.area_id = r.area_id;
    if (fit.kind == ModelKind::fh) {
      p.gamma = fit.params.A / (fit.params.A + D);
      p.sigma2 = fit.params.A * D / (fit.params.A + D);
      p.theta_hat = fh_eblup(r.y, r.x, fit.params, D);
      p.mu_hat = p.theta_hat;
      p.mu_naive = p.theta_hat;
      continue;
    }
    const ShrinkageParts parts = best_theta(r.y, r.x, fit.params, D);
    p.theta_hat = parts.theta;
    p.gamma = parts.gamma;
    p.sigma2 = parts.sigma2;
    p.mu_hat = ebp_mu_from_moments(parts.theta, parts.sigma2, fit.params.lambda,
                                   quad_order);
    p.mu_naive = dpt_inv(parts.theta, fit.params.lambda);
  }
  return out;
}

}  // namespace ptfh
