// CSV report writers and small formatting helpers. Everything numeric is
// written with 17 significant digits so values survive a parse round trip
// and reruns can be compared byte for byte.
#ifndef PTFH_REPORT_IO_HPP
#define PTFH_REPORT_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ptfh/diagnostics.hpp"
#include "ptfh/estimation.hpp"
#include "ptfh/mse_bootstrap.hpp"
#include "ptfh/prediction.hpp"
#include "ptfh/simulation.hpp"

namespace ptfh {

std::string fmt_g17(double v);
std::string csv_escape(const std::string& s);
const char* model_kind_name(ModelKind kind);

// FNV-1a 64-bit digest of a byte string (input fingerprint for manifests).
std::uint64_t fnv1a64(const std::string& bytes);

void write_fit_summary_csv(std::ostream& out, const FitResult& fit);
void write_profile_csv(std::ostream& out, const FitResult& fit);
void write_predictions_csv(std::ostream& out,
                           const std::vector<AreaRecord>& data,
                           const std::vector<AreaPrediction>& preds);
void write_mse_csv(std::ostream& out, const std::vector<AreaRecord>& data,
                   const std::vector<AreaPrediction>& preds,
                   const MseReport& report);
void write_mse_replicates_csv(std::ostream& out, const MseReport& report);

// Prediction study, one column pair per lambda (Table 1/2 layout).
void write_pred_study_csv(
    std::ostream& out,
    const std::vector<std::pair<double, PredStudyResult>>& by_lambda);
void write_pred_study_errors_csv(std::ostream& out, const PredStudyResult& res);

// MSE study group summaries (Table 3/4 layout), one column per lambda.
void write_mse_study_csv(
    std::ostream& out,
    const std::vector<std::pair<double, MseStudyResult>>& by_lambda,
    bool cv_table);
void write_mse_study_errors_csv(std::ostream& out, const MseStudyResult& res);

void write_residuals_csv(std::ostream& out,
                         const std::vector<AreaRecord>& data,
                         const std::vector<std::pair<ModelKind, std::vector<double>>>& residuals);
void write_gof_curves_csv(std::ostream& out, const std::vector<double>& w_grid,
                          const std::vector<double>& ptfh_line,
                          const std::vector<SplineFit>& spline_fits);

}  // namespace ptfh

#endif
