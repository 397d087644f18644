#include "ptfh/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ptfh {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ptfh:
      return "ptfh";
    case ModelKind::logfh:
      return "logfh";
    case ModelKind::fh:
      return "fh";
  }
  return "?";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_fit_summary_csv(std::ostream& out, const FitResult& fit) {
  out << "model,lambda_hat,A_hat";
  for (std::size_t j = 0; j < fit.params.beta.size(); ++j) out << ",beta" << j;
  out << ",loglik,iterations,tol_met,a_at_boundary,lambda_at_boundary\n";
  out << model_kind_name(fit.kind) << ',' << fmt_g17(fit.params.lambda) << ','
      << fmt_g17(fit.params.A);
  for (double b : fit.params.beta) out << ',' << fmt_g17(b);
  out << ',' << fmt_g17(fit.loglik) << ',' << fit.convergence.iterations << ','
      << (fit.convergence.tol_met ? 1 : 0) << ','
      << (fit.convergence.a_at_boundary ? 1 : 0) << ','
      << (fit.convergence.lambda_at_boundary ? 1 : 0) << '\n';
}

void write_profile_csv(std::ostream& out, const FitResult& fit) {
  out << "lambda,profile_loglik\n";
  for (const auto& [lam, ll] : fit.profile) {
    out << fmt_g17(lam) << ',' << fmt_g17(ll) << '\n';
  }
}

void write_predictions_csv(std::ostream& out,
                           const std::vector<AreaRecord>& data,
                           const std::vector<AreaPrediction>& preds) {
  out << "area_id,direct,theta_hat,gamma,sigma2,mu_hat,mu_naive\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const AreaPrediction& p = preds[i];
    out << csv_escape(p.area_id) << ',' << fmt_g17(data[i].y) << ','
        << fmt_g17(p.theta_hat) << ',' << fmt_g17(p.gamma) << ','
        << fmt_g17(p.sigma2) << ',' << fmt_g17(p.mu_hat) << ','
        << fmt_g17(p.mu_naive) << '\n';
  }
}

void write_mse_csv(std::ostream& out, const std::vector<AreaRecord>& data,
                   const std::vector<AreaPrediction>& preds,
                   const MseReport& report) {
  out << "area_id,direct,mu_hat,g1_plugin,g1_plugin_se,g1_corrected,g2_star,"
         "mse_total,mse_clamped,clamped_flag,rmse\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const MseAreaRow& r = report.rows[i];
    const double headline =
        report.settings.clamp_negative ? r.mse_clamped : r.mse_total;
    const double rmse = headline > 0.0 ? std::sqrt(headline) : 0.0;
    out << csv_escape(data[i].area_id) << ',' << fmt_g17(data[i].y) << ','
        << fmt_g17(preds[i].mu_hat) << ',' << fmt_g17(r.g1_plugin) << ','
        << fmt_g17(r.g1_plugin_se) << ',' << fmt_g17(r.g1_corrected) << ','
        << fmt_g17(r.g2_star) << ',' << fmt_g17(r.mse_total) << ','
        << fmt_g17(r.mse_clamped) << ',' << (r.clamped_flag ? 1 : 0) << ','
        << fmt_g17(rmse) << '\n';
  }
}

void write_mse_replicates_csv(std::ostream& out, const MseReport& report) {
  out << "replicate,lambda_hat\n";
  for (std::size_t b = 0; b < report.rep_lambda.size(); ++b) {
    out << b << ',' << fmt_g17(report.rep_lambda[b]) << '\n';
  }
}

void write_pred_study_csv(
    std::ostream& out,
    const std::vector<std::pair<double, PredStudyResult>>& by_lambda) {
  out << "group,method";
  for (const auto& [lam, res] : by_lambda) out << ",cv_lambda" << fmt_g17(lam);
  for (const auto& [lam, res] : by_lambda) out << ",arb_lambda" << fmt_g17(lam);
  out << '\n';
  if (by_lambda.empty()) return;
  const int groups = by_lambda.front().second.groups;
  for (int g = 0; g < groups; ++g) {
    for (int method = 0; method < 4; ++method) {
      out << 'G' << (g + 1) << ',' << kPredMethodNames[static_cast<std::size_t>(method)];
      for (const auto& [lam, res] : by_lambda) {
        out << ','
            << fmt_g17(res.group_cv_pct[static_cast<std::size_t>(method)]
                                       [static_cast<std::size_t>(g)]);
      }
      for (const auto& [lam, res] : by_lambda) {
        out << ','
            << fmt_g17(res.group_arb_pct[static_cast<std::size_t>(method)]
                                        [static_cast<std::size_t>(g)]);
      }
      out << '\n';
    }
  }
}

void write_pred_study_errors_csv(std::ostream& out, const PredStudyResult& res) {
  out << "replicate,method";
  for (int i = 0; i < res.m; ++i) out << ",area" << (i + 1);
  out << '\n';
  for (int r = 0; r < res.reps; ++r) {
    for (int method = 0; method < 4; ++method) {
      const auto mi = static_cast<std::size_t>(method);
      out << r << ',' << kPredMethodNames[mi];
      for (int i = 0; i < res.m; ++i) {
        out << ','
            << fmt_g17(res.rel_errors[mi][static_cast<std::size_t>(r) * res.m + i]);
      }
      out << '\n';
    }
  }
}

void write_mse_study_csv(
    std::ostream& out,
    const std::vector<std::pair<double, MseStudyResult>>& by_lambda,
    bool cv_table) {
  out << "stat,group";
  for (const auto& [lam, res] : by_lambda) {
    out << ',' << (cv_table ? "cv" : "rb_pct") << "_lambda" << fmt_g17(lam);
  }
  if (!cv_table) {
    for (const auto& [lam, res] : by_lambda) {
      out << ",rb_naive_pct_lambda" << fmt_g17(lam);
    }
  }
  out << '\n';
  if (by_lambda.empty()) return;
  const int groups = by_lambda.front().second.groups;
  const char* stats[3] = {"max", "mean", "min"};
  for (int s = 0; s < 3; ++s) {
    for (int g = 0; g < groups; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      out << stats[s] << ",G" << (g + 1);
      for (const auto& [lam, res] : by_lambda) {
        const auto& src = cv_table
                              ? (s == 0 ? res.group_cv_max
                                        : s == 1 ? res.group_cv_mean : res.group_cv_min)
                              : (s == 0 ? res.group_rb_max
                                        : s == 1 ? res.group_rb_mean : res.group_rb_min);
        out << ',' << fmt_g17(src[gi]);
      }
      if (!cv_table) {
        for (const auto& [lam, res] : by_lambda) {
          // only the group mean is tracked for the naive plug-in
          out << ',' << (s == 1 ? fmt_g17(res.group_rb_naive_mean[gi]) : "");
        }
      }
      out << '\n';
    }
  }
}

void write_mse_study_errors_csv(std::ostream& out, const MseStudyResult& res) {
  out << "replicate";
  for (int i = 0; i < res.m; ++i) out << ",mse_hat_area" << (i + 1);
  for (int i = 0; i < res.m; ++i) out << ",naive_area" << (i + 1);
  out << '\n';
  out << "true_mse";
  for (int i = 0; i < res.m; ++i) {
    out << ',' << fmt_g17(res.true_mse[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < res.m; ++i) out << ',';
  out << '\n';
  const int r2 = static_cast<int>(res.rep_ok.size());
  for (int r = 0; r < r2; ++r) {
    out << r;
    for (int i = 0; i < res.m; ++i) {
      out << ',' << fmt_g17(res.per_rep_est[static_cast<std::size_t>(r) * res.m + i]);
    }
    for (int i = 0; i < res.m; ++i) {
      out << ','
          << fmt_g17(res.per_rep_naive[static_cast<std::size_t>(r) * res.m + i]);
    }
    out << '\n';
  }
}

void write_residuals_csv(
    std::ostream& out, const std::vector<AreaRecord>& data,
    const std::vector<std::pair<ModelKind, std::vector<double>>>& residuals) {
  out << "area_id";
  for (const auto& [kind, e] : residuals) out << ",e_" << model_kind_name(kind);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << csv_escape(data[i].area_id);
    for (const auto& [kind, e] : residuals) out << ',' << fmt_g17(e[i]);
    out << '\n';
  }
}

void write_gof_curves_csv(std::ostream& out, const std::vector<double>& w_grid,
                          const std::vector<double>& ptfh_line,
                          const std::vector<SplineFit>& spline_fits) {
  out << "w,ptfh";
  for (const SplineFit& f : spline_fits) out << ",spline_p" << f.degree;
  out << '\n';
  for (std::size_t i = 0; i < w_grid.size(); ++i) {
    out << fmt_g17(w_grid[i]) << ',' << fmt_g17(ptfh_line[i]);
    for (const SplineFit& f : spline_fits) out << ',' << fmt_g17(f.predict(w_grid[i]));
    out << '\n';
  }
}

}  // namespace ptfh
