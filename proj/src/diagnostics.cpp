#include "ptfh/diagnostics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ptfh/numeric.hpp"
#include "ptfh/transform.hpp"

namespace ptfh {

namespace {

constexpr double kVarFloor = 1e-8;

// Asymptotic Kolmogorov distribution survival function Q(t) = P(sqrt(n) D > t).
double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 1.18) {
    // Dual theta-function form, fast-converging for small t.
    const double f = std::numbers::pi * std::numbers::pi / (8.0 * t * t);
    double cdf = 0.0;
    for (int j = 1; j <= 20; j += 2) {
      const double term = std::exp(-static_cast<double>(j) * j * f);
      cdf += term;
      if (term < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / t;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * static_cast<double>(j) * j * t * t);
    q += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

}  // namespace

std::vector<double> standardized_residuals(const std::vector<AreaRecord>& data,
                                           const FitResult& fit) {
  if (fit.d_used.size() != data.size()) {
    throw std::invalid_argument("standardized_residuals: fit does not match data");
  }
  std::vector<double> e(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const AreaRecord& r = data[i];
    double eta = 0.0;
    for (std::size_t j = 0; j < r.x.size(); ++j) eta += r.x[j] * fit.params.beta[j];
    const double h =
        fit.kind == ModelKind::fh ? r.y : dpt(r.y, fit.params.lambda);
    e[i] = (h - eta) / std::sqrt(fit.params.A + fit.d_used[i]);
  }
  return e;
}

KsResult ks_normal_test(std::span<const double> e) {
  const std::size_t n = e.size();
  if (n < 5) throw std::invalid_argument("ks_normal_test: need at least 5 values");
  std::vector<double> sorted(e.begin(), e.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw std::domain_error("ks_normal_test: degenerate input (all values equal)");
  }
  double d = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = norm_cdf(sorted[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) * inv_n - cdf);
    d = std::max(d, cdf - static_cast<double>(i) * inv_n);
  }
  KsResult res;
  res.statistic = d;
  res.p_value = kolmogorov_q(std::sqrt(static_cast<double>(n)) * d);
  return res;
}

double marginal_aic(const std::vector<AreaRecord>& data, const FitResult& fit) {
  const double ll = normalized_loglik(data, fit.params, fit.d_used, fit.kind);
  const auto p = static_cast<double>(fit.params.beta.size());
  const double k = fit.kind == ModelKind::ptfh ? p + 2.0 : p + 1.0;
  return -2.0 * ll + 2.0 * k;
}

LambdaCi lambda_bootstrap_ci(const std::vector<AreaRecord>& data,
                             const FitResult& fit, int B, double level,
                             std::uint64_t seed, const FitOptions& opts,
                             unsigned threads, const Refitter& refit_override) {
  if (fit.kind != ModelKind::ptfh) {
    throw std::invalid_argument("lambda_bootstrap_ci: requires a transformed-model fit");
  }
  if (B < 100) throw std::invalid_argument("lambda_bootstrap_ci: B must be >= 100");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("lambda_bootstrap_ci: level must be in (0,1)");
  }
  struct Slot {
    bool ok = false;
    double lambda = 0.0;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    RngStream gen(seed, rng_tag::kBootstrap, b, 1);
    const std::vector<AreaRecord> boot =
        make_bootstrap_records(data, fit.params, fit.d_used, gen);
    try {
      const FitResult refit = refit_override ? refit_override(boot) : ptfh::fit(boot, opts);
      slots[b] = {true, refit.params.lambda};
    } catch (const std::exception&) {
    }
  });

  LambdaCi ci;
  for (const Slot& s : slots) {
    if (s.ok) {
      ci.lambda_samples.push_back(s.lambda);
    } else {
      ++ci.refit_failures;
    }
  }
  if (ci.lambda_samples.size() < 2) {
    throw std::runtime_error("lambda_bootstrap_ci: too few successful refits");
  }
  ci.invalid = ci.refit_failures * 10 > B;
  std::vector<double> sorted = ci.lambda_samples;
  std::sort(sorted.begin(), sorted.end());
  const double tail = 0.5 * (1.0 - level);
  ci.lo = quantile_sorted(sorted, tail);
  ci.hi = quantile_sorted(sorted, 1.0 - tail);
  return ci;
}

std::vector<double> spline_knots(std::span<const double> w, int K) {
  if (K < 2) throw std::invalid_argument("spline_knots: K must be >= 2");
  std::vector<double> sorted(w.begin(), w.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_sorted(sorted, 0.10);
  const double hi = quantile_sorted(sorted, 0.90);
  if (!(hi > lo)) {
    throw std::domain_error("spline_knots: the 10% and 90% quantiles coincide");
  }
  std::vector<double> knots(static_cast<std::size_t>(K));
  const double step = (hi - lo) / static_cast<double>(K - 1);
  for (int k = 0; k < K; ++k) knots[static_cast<std::size_t>(k)] = lo + step * k;
  knots.back() = hi;
  return knots;
}

namespace {

struct SplineBasis {
  Eigen::MatrixXd X;  // m x (degree+1)
  Eigen::MatrixXd Z;  // m x K
};

double truncated_power(double w, double knot, int degree) {
  const double t = w - knot;
  if (t <= 0.0) return 0.0;
  double v = t;
  for (int i = 1; i < degree; ++i) v *= t;
  return v;
}

SplineBasis build_basis(std::span<const double> w,
                        const std::vector<double>& knots, int degree) {
  const auto m = static_cast<Eigen::Index>(w.size());
  const auto K = static_cast<Eigen::Index>(knots.size());
  SplineBasis basis;
  basis.X.resize(m, degree + 1);
  basis.Z.resize(m, K);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    double pow_w = 1.0;
    for (int j = 0; j <= degree; ++j) {
      basis.X(i, j) = pow_w;
      pow_w *= wi;
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      basis.Z(i, k) = truncated_power(wi, knots[static_cast<std::size_t>(k)], degree);
    }
  }
  return basis;
}

// Marginal covariance alpha ZZ' + A I + diag(d), handled through the
// low-rank identity: Sigma^{-1} = W - alpha W Z C^{-1} Z' W with
// W = diag(1/(A+d_i)) and C = I + alpha Z'WZ; log det Sigma follows from
// det(Sigma) = det(W^{-1}) det(C).
struct MarginalSolver {
  Eigen::VectorXd w_diag;
  Eigen::MatrixXd wz;  // W Z
  Eigen::LLT<Eigen::MatrixXd> c_llt;
  double alpha = 0.0;
  double logdet = 0.0;

  MarginalSolver(const SplineBasis& basis, std::span<const double> d, double A,
                 double alpha_in) {
    alpha = alpha_in;
    const Eigen::Index m = basis.Z.rows();
    const Eigen::Index K = basis.Z.cols();
    w_diag.resize(m);
    double logdet_delta = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = A + d[static_cast<std::size_t>(i)];
      w_diag[i] = 1.0 / v;
      logdet_delta += std::log(v);
    }
    wz = w_diag.asDiagonal() * basis.Z;
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(K, K);
    C.noalias() += alpha * basis.Z.transpose() * wz;
    c_llt.compute(C);
    if (c_llt.info() != Eigen::Success) {
      throw std::runtime_error("spline: marginal covariance is not positive definite");
    }
    double logdet_c = 0.0;
    const auto& L = c_llt.matrixLLT();
    for (Eigen::Index k = 0; k < K; ++k) logdet_c += 2.0 * std::log(L(k, k));
    logdet = logdet_delta + logdet_c;
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    const Eigen::MatrixXd w_rhs = w_diag.asDiagonal() * rhs;
    if (alpha == 0.0) return w_rhs;
    return w_rhs - alpha * (wz * c_llt.solve(wz.transpose() * rhs));
  }
};

struct SplineEval {
  double loglik = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  Eigen::VectorXd fitted;
};

SplineEval eval_spline(const SplineBasis& basis, const Eigen::VectorXd& z,
                       std::span<const double> d, double A, double alpha) {
  const Eigen::Index m = basis.X.rows();
  const MarginalSolver solver(basis, d, A, alpha);
  const Eigen::MatrixXd siX = solver.solve(basis.X);
  const Eigen::VectorXd siz = solver.solve(z);
  const Eigen::MatrixXd xtsx = basis.X.transpose() * siX;
  const Eigen::VectorXd beta = xtsx.ldlt().solve(basis.X.transpose() * siz);
  const Eigen::VectorXd resid = z - basis.X * beta;
  const Eigen::VectorXd si_resid = solver.solve(resid);

  SplineEval ev;
  ev.beta = beta;
  ev.loglik = -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) +
                      solver.logdet + resid.dot(si_resid));
  ev.gamma = alpha * basis.Z.transpose() * si_resid;
  ev.fitted = basis.X * beta + basis.Z * ev.gamma;
  return ev;
}

void check_spline_inputs(std::span<const double> z, std::span<const double> w,
                         std::span<const double> d, const SplineConfig& config) {
  if (config.degree < 1 || config.degree > 3) {
    throw std::invalid_argument("spline: degree must be 1, 2 or 3");
  }
  if (z.size() != w.size() || z.size() != d.size()) {
    throw std::invalid_argument("spline: input lengths differ");
  }
  if (z.size() <= static_cast<std::size_t>(config.degree + 1)) {
    throw std::invalid_argument("spline: need more points than polynomial terms");
  }
  for (double v : d) {
    if (!(v > 0.0)) throw std::domain_error("spline: sampling variances must be positive");
  }
}

}  // namespace

double SplineFit::predict(double w) const {
  double value = 0.0;
  double pow_w = 1.0;
  for (double b : beta) {
    value += b * pow_w;
    pow_w *= w;
  }
  for (std::size_t k = 0; k < knots.size(); ++k) {
    value += gamma[k] * truncated_power(w, knots[k], degree);
  }
  return value;
}

SplineFit spline_fit_at(std::span<const double> z, std::span<const double> w,
                        std::span<const double> d, const SplineConfig& config,
                        double A, double alpha) {
  check_spline_inputs(z, w, d, config);
  const std::vector<double> knots = spline_knots(w, config.K);
  const SplineBasis basis = build_basis(w, knots, config.degree);
  const Eigen::VectorXd zv =
      Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  const SplineEval ev = eval_spline(basis, zv, d, A, alpha);

  SplineFit out;
  out.degree = config.degree;
  out.knots = knots;
  out.A = A;
  out.alpha = alpha;
  out.loglik = ev.loglik;
  out.beta.assign(ev.beta.data(), ev.beta.data() + ev.beta.size());
  out.gamma.assign(ev.gamma.data(), ev.gamma.data() + ev.gamma.size());
  out.fitted.assign(ev.fitted.data(), ev.fitted.data() + ev.fitted.size());
  return out;
}

SplineFit spline_gof_fit(std::span<const double> z, std::span<const double> w,
                         std::span<const double> d, const SplineConfig& config) {
  check_spline_inputs(z, w, d, config);
  const std::vector<double> knots = spline_knots(w, config.K);
  const SplineBasis basis = build_basis(w, knots, config.degree);
  const Eigen::VectorXd zv =
      Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));

  const double var_z = sample_variance(z);
  const double cap = std::max(10.0 * var_z, 1e-4);
  const std::vector<double> log_grid =
      linspace(std::log(kVarFloor), std::log(cap), 17);
  const double log_tol = 1e-6;

  auto inner_best_a = [&](double alpha) {
    auto f = [&](double log_a) {
      return eval_spline(basis, zv, d, std::exp(log_a), alpha).loglik;
    };
    return maximize_on_grid(f, log_grid, log_tol);
  };
  auto outer = [&](double log_alpha) {
    return inner_best_a(std::exp(log_alpha)).fx;
  };
  const MaximizeResult alpha_res = maximize_on_grid(outer, log_grid, log_tol);
  const double alpha_hat = std::exp(alpha_res.x);
  const MaximizeResult a_res = inner_best_a(alpha_hat);
  const double a_hat = std::exp(a_res.x);

  SplineFit out = spline_fit_at(z, w, d, config, a_hat, alpha_hat);
  out.a_at_boundary = a_res.at_lower || a_res.at_upper;
  out.alpha_at_boundary = alpha_res.at_lower || alpha_res.at_upper;
  return out;
}

}  // namespace ptfh
