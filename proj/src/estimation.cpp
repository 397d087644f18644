#include "ptfh/estimation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ptfh/numeric.hpp"
#include "ptfh/transform.hpp"

namespace ptfh {

namespace {

bool uses_transform(ModelKind kind) { return kind != ModelKind::fh; }

std::vector<double> transformed_responses(const std::vector<AreaRecord>& data,
                                          double lambda, ModelKind kind) {
  std::vector<double> h(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    h[i] = uses_transform(kind) ? dpt(data[i].y, lambda) : data[i].y;
  }
  return h;
}

double jacobian_sum(const std::vector<AreaRecord>& data, double lambda,
                    ModelKind kind) {
  if (!uses_transform(kind)) return 0.0;
  std::vector<double> terms(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    terms[i] = log_jacobian_term(data[i].y, lambda);
  }
  return 2.0 * pairwise_sum(terms);
}

Eigen::MatrixXd design_matrix(const std::vector<AreaRecord>& data) {
  const auto m = static_cast<Eigen::Index>(data.size());
  const auto p = static_cast<Eigen::Index>(data.front().x.size());
  Eigen::MatrixXd X(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      X(i, j) = data[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(j)];
    }
  }
  return X;
}

void check_rank(const Eigen::MatrixXd& X) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    throw std::runtime_error("fit: design matrix is rank deficient");
  }
}

// Printed objective without the Jacobian term, at fixed (h, X, d, A), with
// beta profiled out by GLS. Returns beta through the out parameter.
double core_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& h,
                      std::span<const double> d, double A,
                      Eigen::VectorXd* beta_out) {
  const Eigen::Index m = X.rows();
  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    w[i] = 1.0 / (A + d[static_cast<std::size_t>(i)]);
  }
  const Eigen::MatrixXd Xw = w.asDiagonal() * X;
  const Eigen::MatrixXd xtwx = X.transpose() * Xw;
  const Eigen::VectorXd xtwh = Xw.transpose() * h;
  const Eigen::VectorXd beta = xtwx.ldlt().solve(xtwh);
  const Eigen::VectorXd r = h - X * beta;

  std::vector<double> logs(static_cast<std::size_t>(m));
  std::vector<double> quads(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    logs[k] = std::log(A + d[k]);
    quads[k] = r[i] * r[i] * w[i];
  }
  if (beta_out) *beta_out = beta;
  return -pairwise_sum(logs) - pairwise_sum(quads);
}

ProfileFit profile_over_a(const Eigen::MatrixXd& X, const Eigen::VectorXd& h,
                          std::span<const double> d, double a_tol) {
  std::vector<double> hv(h.data(), h.data() + h.size());
  const double var_h = sample_variance(hv);
  const double a_max = std::max(10.0 * var_h, 1e-4);

  // Coarse bracket: the floor plus a log-spaced sweep up to a_max.
  std::vector<double> grid;
  grid.push_back(kAFloor);
  const int n_log = 24;
  const double lo = std::log(std::max(kAFloor * 10.0, a_max * 1e-8));
  const double hi = std::log(a_max);
  for (int i = 0; i <= n_log; ++i) {
    grid.push_back(std::exp(lo + (hi - lo) * i / n_log));
  }
  std::sort(grid.begin(), grid.end());

  auto objective = [&](double A) { return core_objective(X, h, d, A, nullptr); };
  const MaximizeResult res = maximize_on_grid(objective, grid, a_tol);

  ProfileFit out;
  out.A = res.x;
  out.evaluations = res.evaluations;
  out.a_at_boundary = res.x <= kAFloor + a_tol || res.at_upper;
  Eigen::VectorXd beta;
  out.profile_loglik = core_objective(X, h, d, res.x, &beta);
  out.beta.assign(beta.data(), beta.data() + beta.size());
  return out;
}

struct LambdaEval {
  ProfileFit inner;
  std::vector<double> d;
  double full_loglik = 0.0;  // includes the Jacobian term
};

LambdaEval eval_at_lambda(const std::vector<AreaRecord>& data,
                          const Eigen::MatrixXd& X, double lambda,
                          ModelKind kind, double a_tol) {
  LambdaEval ev;
  ev.d = resolve_d(data, lambda, kind);
  const std::vector<double> hv = transformed_responses(data, lambda, kind);
  const Eigen::VectorXd h =
      Eigen::Map<const Eigen::VectorXd>(hv.data(), static_cast<Eigen::Index>(hv.size()));
  ev.inner = profile_over_a(X, h, ev.d, a_tol);
  ev.full_loglik = ev.inner.profile_loglik + jacobian_sum(data, lambda, kind);
  return ev;
}

FitResult fit_core(const std::vector<AreaRecord>& data, const FitOptions& opts,
                   ModelKind kind, bool pin_lambda, double pinned_lambda) {
  validate_for_fit(data, kind);
  if (opts.lambda_min < 0.0 || opts.lambda_max < opts.lambda_min) {
    throw std::invalid_argument("fit: invalid lambda search range");
  }
  const Eigen::MatrixXd X = design_matrix(data);
  check_rank(X);

  FitResult result;
  result.kind = kind;

  double lambda_hat = pinned_lambda;
  MaximizeResult search;
  if (pin_lambda || opts.lambda_max - opts.lambda_min <= opts.lambda_tol) {
    lambda_hat = pin_lambda ? pinned_lambda : opts.lambda_min;
    const LambdaEval ev = eval_at_lambda(data, X, lambda_hat, kind, opts.a_tol);
    result.profile.emplace_back(lambda_hat, ev.full_loglik);
    result.convergence.iterations = 1;
    result.convergence.tol_met = true;
    result.convergence.lambda_at_boundary =
        !pin_lambda && (lambda_hat <= opts.lambda_min + opts.lambda_tol ||
                        lambda_hat >= opts.lambda_max - opts.lambda_tol);
  } else {
    const std::vector<double> grid =
        linspace(opts.lambda_min, opts.lambda_max, std::max(2, opts.lambda_grid));
    auto objective = [&](double lam) {
      return eval_at_lambda(data, X, lam, kind, opts.a_tol).full_loglik;
    };
    search = maximize_on_grid(objective, grid, opts.lambda_tol);
    lambda_hat = search.x;
    result.profile = search.trace;
    std::sort(result.profile.begin(), result.profile.end());
    result.profile.erase(
        std::unique(result.profile.begin(), result.profile.end(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }),
        result.profile.end());
    result.convergence.iterations = search.evaluations;
    result.convergence.tol_met = search.evaluations <= 500;
    result.convergence.lambda_at_boundary = search.at_lower || search.at_upper;
  }

  const LambdaEval final_ev = eval_at_lambda(data, X, lambda_hat, kind, opts.a_tol);
  result.params.beta = final_ev.inner.beta;
  result.params.A = final_ev.inner.A;
  result.params.lambda = lambda_hat;
  result.loglik = final_ev.full_loglik;
  result.d_used = final_ev.d;
  result.convergence.a_at_boundary = final_ev.inner.a_at_boundary;
  return result;
}

}  // namespace

void validate_for_fit(const std::vector<AreaRecord>& data, ModelKind kind) {
  if (data.empty()) throw std::invalid_argument("fit: no records");
  const std::size_t p = data.front().x.size();
  if (p == 0) throw std::invalid_argument("fit: records carry no covariates");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const AreaRecord& r = data[i];
    if (!std::isfinite(r.y) || r.y <= 0.0) {
      throw std::domain_error("fit: record " + std::to_string(i + 1) + " (" +
                              r.area_id + ") has non-positive response");
    }
    if (r.x.size() != p) {
      throw std::invalid_argument("fit: record " + std::to_string(i + 1) +
                                  " has inconsistent covariate count");
    }
    for (double v : r.x) {
      if (!std::isfinite(v)) {
        throw std::domain_error("fit: record " + std::to_string(i + 1) +
                                " has non-finite covariate");
      }
    }
    const bool has_d = r.D.has_value();
    const bool has_z = !r.replicates.empty();
    if (has_d == has_z) {
      throw std::invalid_argument(
          "fit: record " + std::to_string(i + 1) +
          " must carry exactly one of {D, replicates}");
    }
    if (has_d && (!std::isfinite(*r.D) || *r.D <= 0.0)) {
      throw std::domain_error("fit: record " + std::to_string(i + 1) +
                              " has non-positive sampling variance");
    }
    if (has_z) {
      if (r.replicates.size() < 2) {
        throw std::invalid_argument("fit: record " + std::to_string(i + 1) +
                                    " needs at least 2 replicates");
      }
      for (double z : r.replicates) {
        if (!std::isfinite(z) || z <= 0.0) {
          throw std::domain_error("fit: record " + std::to_string(i + 1) +
                                  " has non-positive replicate");
        }
      }
    }
  }
  if (data.size() <= p) {
    throw std::invalid_argument("fit: need more areas than covariates (m > p)");
  }
  (void)kind;
}

double d_from_replicates(std::span<const double> replicates, double lambda) {
  if (replicates.size() < 2) {
    throw std::invalid_argument("d_from_replicates: need at least 2 replicates");
  }
  std::vector<double> t(replicates.size());
  for (std::size_t k = 0; k < replicates.size(); ++k) {
    t[k] = dpt(replicates[k], lambda);
  }
  const double v = sample_variance(t);
  if (v <= 0.0) {
    throw std::domain_error("d_from_replicates: replicates are degenerate (zero variance)");
  }
  return v;
}

std::vector<double> resolve_d(const std::vector<AreaRecord>& data, double lambda,
                              ModelKind kind) {
  std::vector<double> d(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const AreaRecord& r = data[i];
    if (r.D.has_value()) {
      d[i] = *r.D;
      continue;
    }
    if (r.replicates.empty()) {
      throw std::invalid_argument("resolve_d: record " + std::to_string(i + 1) +
                                  " has neither D nor replicates");
    }
    switch (kind) {
      case ModelKind::ptfh:
        d[i] = d_from_replicates(r.replicates, lambda);
        break;
      case ModelKind::logfh:
        d[i] = d_from_replicates(r.replicates, 0.0);
        break;
      case ModelKind::fh:
        d[i] = sample_variance(r.replicates);
        if (d[i] <= 0.0) {
          throw std::domain_error("resolve_d: record " + std::to_string(i + 1) +
                                  " has degenerate replicates");
        }
        break;
    }
  }
  return d;
}

double loglik(const std::vector<AreaRecord>& data, const ModelParams& params) {
  const std::vector<double> d = resolve_d(data, params.lambda, ModelKind::ptfh);
  return loglik_given_d(data, params, d, ModelKind::ptfh);
}

double loglik_given_d(const std::vector<AreaRecord>& data,
                      const ModelParams& params, std::span<const double> d,
                      ModelKind kind) {
  if (d.size() != data.size()) {
    throw std::invalid_argument("loglik: variance vector length mismatch");
  }
  const std::size_t m = data.size();
  std::vector<double> terms(m);
  for (std::size_t i = 0; i < m; ++i) {
    const AreaRecord& r = data[i];
    if (r.x.size() != params.beta.size()) {
      throw std::invalid_argument("loglik: covariate/beta length mismatch");
    }
    const double v = params.A + d[i];
    if (!(v > 0.0)) {
      throw std::domain_error("loglik: A + D_i must be positive");
    }
    double eta = 0.0;
    for (std::size_t j = 0; j < r.x.size(); ++j) eta += r.x[j] * params.beta[j];
    const double h = uses_transform(kind) ? dpt(r.y, params.lambda) : r.y;
    const double resid = h - eta;
    terms[i] = -std::log(v) - resid * resid / v;
  }
  return pairwise_sum(terms) + jacobian_sum(data, params.lambda, kind);
}

double normalized_loglik(const std::vector<AreaRecord>& data,
                         const ModelParams& params, std::span<const double> d,
                         ModelKind kind) {
  const double L = loglik_given_d(data, params, d, kind);
  const double m = static_cast<double>(data.size());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  if (uses_transform(kind)) {
    // Printed L = 2*loglik + m log 2pi + 2m log 2.
    return 0.5 * (L - m * log2pi - 2.0 * m * std::log(2.0));
  }
  return 0.5 * (L - m * log2pi);
}

std::vector<double> gls_beta(const std::vector<std::vector<double>>& x_rows,
                             std::span<const double> h,
                             std::span<const double> var) {
  if (x_rows.empty() || x_rows.size() != h.size() || h.size() != var.size()) {
    throw std::invalid_argument("gls_beta: inconsistent input sizes");
  }
  const auto m = static_cast<Eigen::Index>(x_rows.size());
  const auto p = static_cast<Eigen::Index>(x_rows.front().size());
  Eigen::MatrixXd X(m, p);
  Eigen::VectorXd hv(m), w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = x_rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != p) {
      throw std::invalid_argument("gls_beta: ragged covariate rows");
    }
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = row[static_cast<std::size_t>(j)];
    hv[i] = h[static_cast<std::size_t>(i)];
    const double v = var[static_cast<std::size_t>(i)];
    if (!(v > 0.0)) throw std::domain_error("gls_beta: variances must be positive");
    w[i] = 1.0 / v;
  }
  check_rank(X);
  const Eigen::MatrixXd Xw = w.asDiagonal() * X;
  const Eigen::VectorXd beta =
      (X.transpose() * Xw).ldlt().solve(Xw.transpose() * hv);
  return {beta.data(), beta.data() + beta.size()};
}

ProfileFit fit_given_lambda(const std::vector<AreaRecord>& data, double lambda,
                            const FitOptions& opts) {
  validate_for_fit(data, ModelKind::ptfh);
  const Eigen::MatrixXd X = design_matrix(data);
  check_rank(X);
  const LambdaEval ev = eval_at_lambda(data, X, lambda, ModelKind::ptfh, opts.a_tol);
  ProfileFit out = ev.inner;
  out.profile_loglik = ev.full_loglik;
  return out;
}

FitResult fit(const std::vector<AreaRecord>& data, const FitOptions& opts) {
  return fit_core(data, opts, ModelKind::ptfh, false, 0.0);
}

FitResult fit_logfh(const std::vector<AreaRecord>& data, const FitOptions& opts) {
  return fit_core(data, opts, ModelKind::logfh, true, 0.0);
}

FitResult fit_fh(const std::vector<AreaRecord>& data, const FitOptions& opts) {
  return fit_core(data, opts, ModelKind::fh, true, 0.0);
}

}  // namespace ptfh
