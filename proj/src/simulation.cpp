#include "ptfh/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ptfh/numeric.hpp"
#include "ptfh/prediction.hpp"
#include "ptfh/rng.hpp"
#include "ptfh/transform.hpp"

namespace ptfh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_groups(int m, std::size_t groups) {
  if (groups == 0 || m <= 0 || m % static_cast<int>(groups) != 0) {
    throw std::invalid_argument(
        "simulation: area count must divide evenly into the D groups");
  }
}

std::vector<double> expand_pattern(int m, const std::vector<double>& pattern) {
  check_groups(m, pattern.size());
  const int per_group = m / static_cast<int>(pattern.size());
  std::vector<double> d(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    d[static_cast<std::size_t>(i)] = pattern[static_cast<std::size_t>(i / per_group)];
  }
  return d;
}

// Shared generator: transformed-scale linear model with grouped variances.
GeneratedData generate(int m, const std::vector<double>& true_d,
                       const std::vector<std::vector<double>>& x_rows,
                       const std::vector<double>& beta, double A, double lambda,
                       PredStudyConfig::Effect effect, int n_aux,
                       std::uint64_t seed, int rep) {
  GeneratedData out;
  out.true_d = true_d;
  out.records.resize(static_cast<std::size_t>(m));
  out.truth_mu.resize(static_cast<std::size_t>(m));

  RngStream v_stream(seed, rng_tag::kEffects, static_cast<std::uint64_t>(rep), 0);
  RngStream e_stream(seed, rng_tag::kSampling, static_cast<std::uint64_t>(rep), 0);
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    AreaRecord& r = out.records[k];
    r.area_id = "area" + std::to_string(i + 1);
    r.x = x_rows[k];
    double eta = 0.0;
    for (std::size_t j = 0; j < r.x.size(); ++j) eta += r.x[j] * beta[j];

    const double v = effect == PredStudyConfig::Effect::normal
                         ? v_stream.normal(0.0, std::sqrt(A))
                         : v_stream.t5_scaled(A);
    const double eps = e_stream.normal(0.0, std::sqrt(true_d[k]));
    out.truth_mu[k] = dpt_inv(eta + v, lambda);
    r.y = dpt_inv(eta + v + eps, lambda);

    RngStream z_stream(seed, rng_tag::kAux, static_cast<std::uint64_t>(rep),
                       static_cast<std::uint64_t>(i));
    r.replicates.resize(static_cast<std::size_t>(n_aux));
    for (int a = 0; a < n_aux; ++a) {
      r.replicates[static_cast<std::size_t>(a)] =
          dpt_inv(z_stream.normal(0.0, std::sqrt(true_d[k])), lambda);
    }
  }
  return out;
}

std::vector<std::vector<double>> pred_covariates(const PredStudyConfig& config) {
  RngStream stream(config.seed, rng_tag::kCovariates, 0, 0);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(config.m));
  for (auto& row : rows) row = {1.0, stream.uniform(0.0, 4.0)};
  return rows;
}

struct AreaMetrics {
  std::vector<double> cv_pct, arb_pct;
};

// CV_i = 100 sqrt(mean_r e^2), ARB_i = 100 |mean_r e| over the replicates
// where the fit succeeded.
AreaMetrics area_metrics(const std::vector<double>& errors,
                         const std::vector<std::uint8_t>& ok, int reps, int m) {
  AreaMetrics out;
  out.cv_pct.resize(static_cast<std::size_t>(m));
  out.arb_pct.resize(static_cast<std::size_t>(m));
  std::vector<double> e, e2;
  e.reserve(static_cast<std::size_t>(reps));
  e2.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < m; ++i) {
    e.clear();
    e2.clear();
    for (int r = 0; r < reps; ++r) {
      if (!ok[static_cast<std::size_t>(r)]) continue;
      const double v = errors[static_cast<std::size_t>(r) * m + i];
      e.push_back(v);
      e2.push_back(v * v);
    }
    if (e.empty()) {
      throw std::runtime_error("simulation: every replicate failed for an area");
    }
    out.cv_pct[static_cast<std::size_t>(i)] = 100.0 * std::sqrt(mean(e2));
    out.arb_pct[static_cast<std::size_t>(i)] = 100.0 * std::abs(mean(e));
  }
  return out;
}

std::vector<double> group_means(const std::vector<double>& per_area, int groups) {
  const int m = static_cast<int>(per_area.size());
  const int per_group = m / groups;
  std::vector<double> out(static_cast<std::size_t>(groups));
  for (int g = 0; g < groups; ++g) {
    const auto* begin = per_area.data() + g * per_group;
    out[static_cast<std::size_t>(g)] =
        mean(std::span<const double>(begin, static_cast<std::size_t>(per_group)));
  }
  return out;
}

}  // namespace

GeneratedData gen_pred_data(const PredStudyConfig& config, int replicate_index) {
  const std::vector<double> true_d = expand_pattern(config.m, config.d_pattern);
  return generate(config.m, true_d, pred_covariates(config),
                  {config.beta0, config.beta1}, config.A, config.lambda,
                  config.effect, config.n_replicates_aux, config.seed,
                  replicate_index);
}

PredStudyResult run_pred_study(const PredStudyConfig& config) {
  const int m = config.m;
  const int reps = config.reps;
  const int groups = static_cast<int>(config.d_pattern.size());
  check_groups(m, config.d_pattern.size());

  PredStudyResult result;
  result.m = m;
  result.reps = reps;
  result.groups = groups;
  for (int method = 0; method < 4; ++method) {
    result.rel_errors[static_cast<std::size_t>(method)]
        .assign(static_cast<std::size_t>(reps) * m, kNaN);
    result.rep_ok[static_cast<std::size_t>(method)]
        .assign(static_cast<std::size_t>(reps), 0);
  }

  parallel_for(static_cast<std::size_t>(reps), config.threads, [&](std::size_t r) {
    const GeneratedData data = gen_pred_data(config, static_cast<int>(r));

    for (int method = 0; method < 4; ++method) {
      const auto mi = static_cast<std::size_t>(method);
      double* err_row = result.rel_errors[mi].data() + r * static_cast<std::size_t>(m);

      if (config.perfect_predictor_hook) {
        for (int i = 0; i < m; ++i) err_row[i] = 0.0;
        result.rep_ok[mi][r] = 1;
        continue;
      }

      std::vector<AreaRecord> records = data.records;
      if (method == static_cast<int>(PredMethod::ptfh_true_d)) {
        for (int i = 0; i < m; ++i) {
          records[static_cast<std::size_t>(i)].D = data.true_d[static_cast<std::size_t>(i)];
          records[static_cast<std::size_t>(i)].replicates.clear();
        }
      }
      try {
        FitResult fit_res;
        switch (static_cast<PredMethod>(method)) {
          case PredMethod::ptfh_true_d:
          case PredMethod::ptfh:
            fit_res = fit(records, config.fit_options);
            break;
          case PredMethod::logfh:
            fit_res = fit_logfh(records, config.fit_options);
            break;
          case PredMethod::fh:
            fit_res = fit_fh(records, config.fit_options);
            break;
        }
        const std::vector<AreaPrediction> preds =
            predict_areas(records, fit_res, config.quad_order);
        for (int i = 0; i < m; ++i) {
          const auto k = static_cast<std::size_t>(i);
          err_row[i] = (preds[k].mu_hat - data.truth_mu[k]) / data.truth_mu[k];
        }
        result.rep_ok[mi][r] = 1;
      } catch (const std::exception&) {
        // non-convergent replicate for this method; excluded from metrics
      }
    }
  });

  for (int method = 0; method < 4; ++method) {
    const auto mi = static_cast<std::size_t>(method);
    int ok_count = 0;
    for (auto flag : result.rep_ok[mi]) ok_count += flag;
    result.fit_failures[mi] = reps - ok_count;
    const AreaMetrics metrics =
        area_metrics(result.rel_errors[mi], result.rep_ok[mi], reps, m);
    result.cv_area_pct[mi] = metrics.cv_pct;
    result.arb_area_pct[mi] = metrics.arb_pct;
    result.group_cv_pct[mi] = group_means(metrics.cv_pct, groups);
    result.group_arb_pct[mi] = group_means(metrics.arb_pct, groups);
  }
  return result;
}

std::vector<double> mse_pattern(char pattern) {
  switch (pattern) {
    case 'a':
      return {0.3, 0.4, 0.5, 0.6, 0.7};
    case 'b':
      return {0.2, 0.4, 0.5, 0.6, 2.0};
    case 'c':
      return {0.1, 0.4, 0.5, 0.6, 4.0};
    default:
      throw std::invalid_argument("mse_pattern: pattern must be one of a, b, c");
  }
}

MseStudyResult run_mse_study(const MseStudyConfig& config) {
  const int m = config.m;
  const std::vector<double> pattern = mse_pattern(config.pattern);
  const std::vector<double> true_d = expand_pattern(m, pattern);
  const int groups = static_cast<int>(pattern.size());
  const std::vector<std::vector<double>> x_rows(
      static_cast<std::size_t>(m), std::vector<double>{1.0});
  const std::vector<double> beta = {config.mu};

  auto make_records = [&](int rep) {
    GeneratedData data =
        generate(m, true_d, x_rows, beta, config.A, config.lambda,
                 PredStudyConfig::Effect::normal, config.n_replicates_aux,
                 config.seed, rep);
    if (config.known_d) {
      for (int i = 0; i < m; ++i) {
        data.records[static_cast<std::size_t>(i)].D =
            true_d[static_cast<std::size_t>(i)];
        data.records[static_cast<std::size_t>(i)].replicates.clear();
      }
    }
    return data;
  };

  MseStudyResult result;
  result.m = m;
  result.groups = groups;

  // Stage 1: simulated truth from r1 independent replicates.
  std::vector<double> sq_err(static_cast<std::size_t>(config.r1) * m, kNaN);
  std::vector<std::uint8_t> stage1_ok(static_cast<std::size_t>(config.r1), 0);
  parallel_for(static_cast<std::size_t>(config.r1), config.threads,
               [&](std::size_t r) {
                 const GeneratedData data = make_records(static_cast<int>(r));
                 try {
                   const FitResult f = fit(data.records, config.fit_options);
                   const auto preds =
                       predict_areas(data.records, f, config.quad_order);
                   for (int i = 0; i < m; ++i) {
                     const auto k = static_cast<std::size_t>(i);
                     const double diff = preds[k].mu_hat - data.truth_mu[k];
                     sq_err[r * static_cast<std::size_t>(m) + k] = diff * diff;
                   }
                   stage1_ok[r] = 1;
                 } catch (const std::exception&) {
                 }
               });
  result.true_mse.resize(static_cast<std::size_t>(m));
  {
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(config.r1));
    for (int i = 0; i < m; ++i) {
      col.clear();
      for (int r = 0; r < config.r1; ++r) {
        if (stage1_ok[static_cast<std::size_t>(r)]) {
          col.push_back(sq_err[static_cast<std::size_t>(r) * m + i]);
        }
      }
      if (col.empty()) {
        throw std::runtime_error("run_mse_study: stage-1 fits all failed");
      }
      result.true_mse[static_cast<std::size_t>(i)] = mean(col);
    }
    int ok_count = 0;
    for (auto f : stage1_ok) ok_count += f;
    result.r1_failures = config.r1 - ok_count;
  }

  // Stage 2: distribution of the estimator over r2 fresh replicates.
  result.per_rep_est.assign(static_cast<std::size_t>(config.r2) * m, kNaN);
  result.per_rep_naive.assign(static_cast<std::size_t>(config.r2) * m, kNaN);
  result.rep_ok.assign(static_cast<std::size_t>(config.r2), 0);
  parallel_for(static_cast<std::size_t>(config.r2), config.threads,
               [&](std::size_t j) {
                 const int rep = config.r1 + static_cast<int>(j);
                 const GeneratedData data = make_records(rep);
                 double* est_row =
                     result.per_rep_est.data() + j * static_cast<std::size_t>(m);
                 double* naive_row =
                     result.per_rep_naive.data() + j * static_cast<std::size_t>(m);
                 if (config.estimator_hook) {
                   const std::vector<double> est =
                       config.estimator_hook(static_cast<int>(j));
                   for (int i = 0; i < m; ++i) {
                     est_row[i] = est[static_cast<std::size_t>(i)];
                     naive_row[i] = est[static_cast<std::size_t>(i)];
                   }
                   result.rep_ok[j] = 1;
                   return;
                 }
                 try {
                   const FitResult f = fit(data.records, config.fit_options);
                   MseSettings settings = config.mse;
                   settings.threads = 1;  // replicates already run in parallel
                   settings.seed =
                       RngStream(config.seed, rng_tag::kBootstrap, j, 7).next_u64();
                   const MseReport report = bootstrap_mse(
                       data.records, f, settings, config.fit_options);
                   for (int i = 0; i < m; ++i) {
                     const auto k = static_cast<std::size_t>(i);
                     est_row[i] = report.rows[k].mse_total;
                     naive_row[i] =
                         report.rows[k].g1_plugin + report.rows[k].g2_star;
                   }
                   result.rep_ok[j] = 1;
                 } catch (const std::exception&) {
                 }
               });
  {
    int ok_count = 0;
    for (auto f : result.rep_ok) ok_count += f;
    result.r2_failures = config.r2 - ok_count;
    if (ok_count == 0) {
      throw std::runtime_error("run_mse_study: stage-2 fits all failed");
    }
  }

  // RB_i in percent; CV_i as the root mean squared relative deviation.
  auto calibrate = [&](const std::vector<double>& estimates,
                       std::vector<double>* rb, std::vector<double>* cv) {
    rb->resize(static_cast<std::size_t>(m));
    cv->resize(static_cast<std::size_t>(m));
    std::vector<double> rel, rel2;
    for (int i = 0; i < m; ++i) {
      rel.clear();
      rel2.clear();
      const double truth = result.true_mse[static_cast<std::size_t>(i)];
      for (int r = 0; r < config.r2; ++r) {
        if (!result.rep_ok[static_cast<std::size_t>(r)]) continue;
        const double v =
            (estimates[static_cast<std::size_t>(r) * m + i] - truth) / truth;
        rel.push_back(v);
        rel2.push_back(v * v);
      }
      (*rb)[static_cast<std::size_t>(i)] = 100.0 * mean(rel);
      (*cv)[static_cast<std::size_t>(i)] = std::sqrt(mean(rel2));
    }
  };
  calibrate(result.per_rep_est, &result.rb_pct, &result.cv);
  calibrate(result.per_rep_naive, &result.rb_naive_pct, &result.cv_naive);

  const int per_group = m / groups;
  auto summarize = [&](const std::vector<double>& per_area,
                       std::vector<double>* gmax, std::vector<double>* gmean,
                       std::vector<double>* gmin) {
    for (int g = 0; g < groups; ++g) {
      const auto* begin = per_area.data() + g * per_group;
      const std::span<const double> span(begin, static_cast<std::size_t>(per_group));
      if (gmax) gmax->push_back(*std::max_element(span.begin(), span.end()));
      if (gmean) gmean->push_back(mean(span));
      if (gmin) gmin->push_back(*std::min_element(span.begin(), span.end()));
    }
  };
  summarize(result.rb_pct, &result.group_rb_max, &result.group_rb_mean,
            &result.group_rb_min);
  summarize(result.cv, &result.group_cv_max, &result.group_cv_mean,
            &result.group_cv_min);
  summarize(result.rb_naive_pct, nullptr, &result.group_rb_naive_mean, nullptr);
  return result;
}

}  // namespace ptfh
