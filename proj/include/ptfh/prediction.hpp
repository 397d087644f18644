// Point prediction of the area mean mu = h^{-1}(theta). Conditionally on y,
// theta ~ N(theta_tilde, sigma2) with theta_tilde the usual shrinkage
// combination, so the best predictor of mu is the Gaussian expectation of
// h^{-1}, evaluated by Gauss-Hermite quadrature (closed form exp(t + s/2)
// in the log case).
#ifndef PTFH_PREDICTION_HPP
#define PTFH_PREDICTION_HPP

#include <span>
#include <string>
#include <vector>

#include "ptfh/estimation.hpp"

namespace ptfh {

inline constexpr int kDefaultQuadOrder = 50;

struct ShrinkageParts {
  double theta = 0.0;   // gamma * h(y) + (1-gamma) * x'beta
  double gamma = 0.0;   // A / (A + D)
  double sigma2 = 0.0;  // A * D / (A + D)
};

ShrinkageParts best_theta(double y, std::span<const double> x,
                          const ModelParams& params, double D);

// E[h^{-1}(T)] for T ~ N(theta, sigma2) at the given lambda.
double ebp_mu_from_moments(double theta, double sigma2, double lambda,
                           int quad_order = kDefaultQuadOrder);

// Same expectation forced through the quadrature sum even when lambda is in
// the log branch (where ebp_mu_from_moments uses the exact closed form).
double ebp_mu_quadrature(double theta, double sigma2, double lambda,
                         int quad_order);

double ebp_mu(double y, std::span<const double> x, const ModelParams& params,
              double D, int quad_order = kDefaultQuadOrder);

// Simple back-transform h^{-1}(theta_tilde); comparison output only.
double naive_mu(double y, std::span<const double> x, const ModelParams& params,
                double D);

// Log-scale bias-corrected predictor exp(theta + sigma2/2); requires a fit
// with lambda in the log branch.
double slud_maiti_mu_log(double y, std::span<const double> x,
                         const ModelParams& params, double D);

// Identity-scale shrinkage predictor; may be negative.
double fh_eblup(double y, std::span<const double> x, const ModelParams& params,
                double D);

struct AreaPrediction {
  std::string area_id;
  double theta_hat = 0.0;
  double gamma = 0.0;
  double sigma2 = 0.0;
  double mu_hat = 0.0;    // model-kind predictor of the area mean
  double mu_naive = 0.0;  // simple back-transform (equals mu_hat for fh)
};

std::vector<AreaPrediction> predict_areas(const std::vector<AreaRecord>& data,
                                          const FitResult& fit,
                                          int quad_order = kDefaultQuadOrder);

}  // namespace ptfh

#endif
