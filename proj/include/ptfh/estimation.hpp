// Maximum-likelihood fitting of the transformed Fay-Herriot family.
//
// The printed objective for the transformed model is
//   L(phi) = -sum log(A+D_i) - sum {h_l(y_i) - x_i'b}^2 / (A+D_i)
//            + 2 sum log(y_i^{l-1} + y_i^{-l-1}),
// maximized by profiling: closed-form GLS for beta given A, a derivative-free
// 1-D search for A given lambda, and a coarse-grid-plus-golden-section outer
// search over lambda. The identity-scale (classical) model runs through the
// same machinery with the transform and Jacobian switched off; the log-scale
// model is the lambda = 0 member of the family.
//
// L omits the -1/2 factors and the 2*pi constant of the actual log marginal
// density; normalized_loglik restores them (plus the transformation Jacobian)
// so that AIC values are comparable across models.
#ifndef PTFH_ESTIMATION_HPP
#define PTFH_ESTIMATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ptfh {

struct AreaRecord {
  std::string area_id;
  double y = 0.0;                  // direct estimate, > 0
  std::vector<double> x;           // covariates, x[0] == 1 by convention
  std::optional<double> D;         // sampling variance on the model scale
  std::vector<double> replicates;  // auxiliary observations z_ik

  bool operator==(const AreaRecord&) const = default;
};

enum class ModelKind { ptfh, logfh, fh };

struct ModelParams {
  std::vector<double> beta;
  double A = 0.0;
  double lambda = 0.0;
};

struct Convergence {
  int iterations = 0;  // objective evaluations in the lambda search
  bool tol_met = true;
  bool a_at_boundary = false;
  bool lambda_at_boundary = false;
};

struct FitResult {
  ModelParams params;
  double loglik = 0.0;  // printed L at params and d_used
  std::vector<std::pair<double, double>> profile;  // (lambda, profile L), sorted
  std::vector<double> d_used;
  Convergence convergence;
  ModelKind kind = ModelKind::ptfh;
};

struct FitOptions {
  double lambda_min = 0.0;
  double lambda_max = 2.0;
  int lambda_grid = 21;
  double lambda_tol = 1e-5;
  double a_tol = 1e-8;
};

// ML estimates of A are clamped here instead of adopting an adjusted
// likelihood; fits landing on the floor carry a boundary flag.
inline constexpr double kAFloor = 1e-8;

// Structural checks shared by all fits: positive responses, consistent
// covariate length, m > p, and exactly one of {D, replicates} per record.
void validate_for_fit(const std::vector<AreaRecord>& data, ModelKind kind);

// Sample variance (divisor n-1) of the transformed replicates.
// Throws on fewer than two replicates or zero variance.
double d_from_replicates(std::span<const double> replicates, double lambda);

// Per-area sampling variances on the scale of `kind` at the given lambda:
// the stored D when present, otherwise derived from the replicates.
std::vector<double> resolve_d(const std::vector<AreaRecord>& data, double lambda,
                              ModelKind kind);

// Printed L(phi) for the transformed model; D resolved at params.lambda.
double loglik(const std::vector<AreaRecord>& data, const ModelParams& params);

// Printed objective of kind at params with explicit per-area variances.
double loglik_given_d(const std::vector<AreaRecord>& data,
                      const ModelParams& params, std::span<const double> d,
                      ModelKind kind);

// Fully normalized log marginal density of y (Gaussian constants and, for the
// transformed kinds, the Jacobian), used for AIC.
double normalized_loglik(const std::vector<AreaRecord>& data,
                         const ModelParams& params, std::span<const double> d,
                         ModelKind kind);

// GLS solve beta = (X'WX)^{-1} X'Wh with W = diag(1/var_i).
// x_rows are the per-record covariate vectors. Throws on rank deficiency.
std::vector<double> gls_beta(const std::vector<std::vector<double>>& x_rows,
                             std::span<const double> h,
                             std::span<const double> var);

struct ProfileFit {
  std::vector<double> beta;
  double A = 0.0;
  double profile_loglik = 0.0;  // printed L at (beta, A, lambda)
  bool a_at_boundary = false;
  int evaluations = 0;
};

// Inner fit at fixed lambda: GLS beta, 1-D search over A in
// [kAFloor, 10 * var(h)]. D resolved at this lambda.
ProfileFit fit_given_lambda(const std::vector<AreaRecord>& data, double lambda,
                            const FitOptions& opts = {});

// Full fit with lambda searched on [opts.lambda_min, opts.lambda_max].
FitResult fit(const std::vector<AreaRecord>& data, const FitOptions& opts = {});

// Log-scale comparator: the same path with lambda pinned to 0.
FitResult fit_logfh(const std::vector<AreaRecord>& data,
                    const FitOptions& opts = {});

// Identity-scale comparator: no transform, no Jacobian; replicate-based
// variances are computed from the raw replicates.
FitResult fit_fh(const std::vector<AreaRecord>& data,
                 const FitOptions& opts = {});

}  // namespace ptfh

#endif
