// The two simulation studies: prediction-error comparison of the transformed,
// log, and identity models, and calibration of the bootstrap MSE estimator.
// Replicates draw from per-replicate keyed streams, so results are invariant
// to thread count and execution order.
#ifndef PTFH_SIMULATION_HPP
#define PTFH_SIMULATION_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ptfh/estimation.hpp"
#include "ptfh/mse_bootstrap.hpp"

namespace ptfh {

enum class PredMethod : int { ptfh_true_d = 0, ptfh = 1, logfh = 2, fh = 3 };
inline constexpr std::array<const char*, 4> kPredMethodNames = {
    "PTFH-t", "PTFH", "log-FH", "FH"};

struct PredStudyConfig {
  int m = 30;
  std::vector<double> d_pattern = {0.2, 0.4, 0.6, 0.8, 1.0};
  double beta0 = 1.0;
  double beta1 = 1.0;
  double A = 1.5;
  double lambda = 0.1;
  enum class Effect { normal, t5_scaled } effect = Effect::normal;
  int reps = 1000;  // paper scale: 10000
  int n_replicates_aux = 10;
  std::uint64_t seed = 20240801;
  FitOptions fit_options{};
  int quad_order = 50;
  unsigned threads = 1;
  bool perfect_predictor_hook = false;  // test seam: predictor returns truth
};

struct GeneratedData {
  std::vector<AreaRecord> records;  // replicates attached, D left empty
  std::vector<double> true_d;       // transformed-scale sampling variances
  std::vector<double> truth_mu;     // h^{-1}(x'beta + v)
};

// One replicate of the data-generating process. Covariates are drawn once
// per seed and held fixed across replicates.
GeneratedData gen_pred_data(const PredStudyConfig& config, int replicate_index);

struct PredStudyResult {
  int m = 0;
  int reps = 0;
  int groups = 0;
  // Indexed [method][area] and [method][group]; percent units.
  std::array<std::vector<double>, 4> cv_area_pct;
  std::array<std::vector<double>, 4> arb_area_pct;
  std::array<std::vector<double>, 4> group_cv_pct;
  std::array<std::vector<double>, 4> group_arb_pct;
  std::array<int, 4> fit_failures{};
  // Per-replicate relative errors, [method][rep * m + area]; NaN where the
  // fit for that method failed.
  std::array<std::vector<double>, 4> rel_errors;
  std::array<std::vector<std::uint8_t>, 4> rep_ok;
};

PredStudyResult run_pred_study(const PredStudyConfig& config);

struct MseStudyConfig {
  int m = 30;
  double mu = 0.0;  // intercept-only mean on the transformed scale
  double A = 1.0;
  double lambda = 0.2;
  char pattern = 'a';
  int r1 = 2000;  // paper scale: 5000
  int r2 = 200;   // paper scale: 2000
  MseSettings mse{};
  bool known_d = true;
  int n_replicates_aux = 10;
  std::uint64_t seed = 20240802;
  FitOptions fit_options{};
  int quad_order = 50;
  unsigned threads = 1;
  // Test seam: replaces the bootstrap estimator with a fixed per-area value.
  std::function<std::vector<double>(int rep)> estimator_hook;
};

// D group values for patterns (a), (b), (c).
std::vector<double> mse_pattern(char pattern);

struct MseStudyResult {
  int m = 0;
  int groups = 0;
  std::vector<double> true_mse;  // per area, from the r1 stage
  int r1_failures = 0;
  int r2_failures = 0;
  // Per-area calibration of the corrected estimator and the naive plug-in.
  std::vector<double> rb_pct, cv;
  std::vector<double> rb_naive_pct, cv_naive;
  // Group summaries (max / mean / min over the areas of each group).
  std::vector<double> group_rb_max, group_rb_mean, group_rb_min;
  std::vector<double> group_cv_max, group_cv_mean, group_cv_min;
  std::vector<double> group_rb_naive_mean;
  // Per-replicate estimates, [rep * m + area]; NaN where the fit failed.
  std::vector<double> per_rep_est, per_rep_naive;
  std::vector<std::uint8_t> rep_ok;
};

MseStudyResult run_mse_study(const MseStudyConfig& config);

}  // namespace ptfh

#endif
