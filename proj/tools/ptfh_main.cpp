// Command-line front end: fit | predict | mse | simulate | diagnose.
// Every run writes a JSON manifest plus CSV reports into --out. Outputs are
// a function of the inputs, the configuration and the seed only, so a rerun
// with the same flags (at any --threads value) reproduces them byte for byte.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ptfh/dataset.hpp"
#include "ptfh/diagnostics.hpp"
#include "ptfh/estimation.hpp"
#include "ptfh/mse_bootstrap.hpp"
#include "ptfh/numeric.hpp"
#include "ptfh/prediction.hpp"
#include "ptfh/report_io.hpp"
#include "ptfh/simulation.hpp"
#include "ptfh/transform.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kDefaultSeed = 202408;

using ordered_json = nlohmann::ordered_json;

// exit codes: 0 ok, 2 usage, 3 data, 4 numerical failure
struct CliError {
  int code;
  std::string kind;
  std::string message;
};

struct Common {
  std::string data_path;
  std::string out_dir = "ptfh_out";
  std::string model = "ptfh";
  double lambda_max = 2.0;
  int quad_order = 50;
  int boot = 100;
  int mc_samples = 10000;
  std::uint64_t seed = kDefaultSeed;
  std::string correction = "additive";
  unsigned threads = 1;
};

std::uint64_t env_seed() {
  if (const char* v = std::getenv("PTFH_SEED")) {
    return std::strtoull(v, nullptr, 10);
  }
  return kDefaultSeed;
}

ptfh::ModelKind parse_model(const std::string& name) {
  if (name == "ptfh") return ptfh::ModelKind::ptfh;
  if (name == "logfh") return ptfh::ModelKind::logfh;
  if (name == "fh") return ptfh::ModelKind::fh;
  throw CliError{2, "usage", "unknown model '" + name + "'"};
}

class RunOutput {
 public:
  RunOutput(const std::string& dir, std::string command)
      : dir_(dir), command_(std::move(command)) {
    std::filesystem::create_directories(dir_);
    manifest_["tool"] = "ptfh";
    manifest_["version"] = kVersion;
    manifest_["command"] = command_;
  }

  ordered_json& manifest() { return manifest_; }

  void add_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    ordered_json input;
    input["path"] = path;
    input["bytes"] = bytes.size();
    char digest[20];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(ptfh::fnv1a64(bytes)));
    input["fnv1a64"] = digest;
    manifest_["input"] = input;
  }

  std::ofstream open(const std::string& name) {
    outputs_.push_back(name);
    std::ofstream out(std::filesystem::path(dir_) / name);
    if (!out) {
      throw CliError{4, "io", "cannot write " + name + " under " + dir_};
    }
    return out;
  }

  void finish() {
    manifest_["outputs"] = outputs_;
    std::ofstream out(std::filesystem::path(dir_) / "manifest.json");
    out << manifest_.dump(2) << '\n';
  }

 private:
  std::string dir_;
  std::string command_;
  ordered_json manifest_;
  std::vector<std::string> outputs_;
};

ptfh::FitResult fit_model(const std::vector<ptfh::AreaRecord>& records,
                          ptfh::ModelKind kind, const ptfh::FitOptions& opts) {
  switch (kind) {
    case ptfh::ModelKind::ptfh:
      return ptfh::fit(records, opts);
    case ptfh::ModelKind::logfh:
      return ptfh::fit_logfh(records, opts);
    case ptfh::ModelKind::fh:
      return ptfh::fit_fh(records, opts);
  }
  throw CliError{2, "usage", "bad model"};
}

ordered_json fit_json(const ptfh::FitResult& fit) {
  ordered_json j;
  j["model"] = ptfh::model_kind_name(fit.kind);
  j["lambda_hat"] = fit.params.lambda;
  j["A_hat"] = fit.params.A;
  j["beta"] = fit.params.beta;
  j["loglik"] = fit.loglik;
  j["iterations"] = fit.convergence.iterations;
  j["tol_met"] = fit.convergence.tol_met;
  j["a_at_boundary"] = fit.convergence.a_at_boundary;
  j["lambda_at_boundary"] = fit.convergence.lambda_at_boundary;
  return j;
}

void config_echo(RunOutput& run, const Common& c, bool with_data) {
  ordered_json cfg;
  if (with_data) cfg["data"] = c.data_path;
  cfg["model"] = c.model;
  cfg["lambda_max"] = c.lambda_max;
  cfg["quad_order"] = c.quad_order;
  cfg["boot"] = c.boot;
  cfg["mc_samples"] = c.mc_samples;
  cfg["correction"] = c.correction;
  run.manifest()["config"] = cfg;
  run.manifest()["seed"] = c.seed;
}

int cmd_fit(const Common& c) {
  const ptfh::Dataset ds = ptfh::parse_dataset_file(c.data_path);
  const ptfh::ModelKind kind = parse_model(c.model);
  ptfh::FitOptions opts;
  opts.lambda_max = c.lambda_max;
  const ptfh::FitResult fit = fit_model(ds.records, kind, opts);

  RunOutput run(c.out_dir, "fit");
  config_echo(run, c, true);
  run.add_input(c.data_path);
  run.manifest()["fit"] = fit_json(fit);
  {
    auto out = run.open("fit_summary.csv");
    ptfh::write_fit_summary_csv(out, fit);
  }
  {
    auto out = run.open("profile.csv");
    ptfh::write_profile_csv(out, fit);
  }
  run.finish();
  return 0;
}

int cmd_predict(const Common& c) {
  const ptfh::Dataset ds = ptfh::parse_dataset_file(c.data_path);
  const ptfh::ModelKind kind = parse_model(c.model);
  ptfh::FitOptions opts;
  opts.lambda_max = c.lambda_max;
  const ptfh::FitResult fit = fit_model(ds.records, kind, opts);
  const auto preds = ptfh::predict_areas(ds.records, fit, c.quad_order);

  RunOutput run(c.out_dir, "predict");
  config_echo(run, c, true);
  run.add_input(c.data_path);
  run.manifest()["fit"] = fit_json(fit);
  {
    auto out = run.open("fit_summary.csv");
    ptfh::write_fit_summary_csv(out, fit);
  }
  {
    auto out = run.open("predictions.csv");
    ptfh::write_predictions_csv(out, ds.records, preds);
  }
  run.finish();
  return 0;
}

int cmd_mse(const Common& c) {
  const ptfh::Dataset ds = ptfh::parse_dataset_file(c.data_path);
  const ptfh::ModelKind kind = parse_model(c.model);
  if (kind == ptfh::ModelKind::fh) {
    throw CliError{2, "usage", "mse supports --model ptfh or logfh"};
  }
  ptfh::FitOptions opts;
  opts.lambda_max = c.lambda_max;
  const ptfh::FitResult fit = fit_model(ds.records, kind, opts);
  const auto preds = ptfh::predict_areas(ds.records, fit, c.quad_order);

  ptfh::MseSettings settings;
  settings.B = c.boot;
  settings.S = c.mc_samples;
  settings.seed = c.seed;
  settings.correction = c.correction == "multiplicative"
                            ? ptfh::BiasCorrection::multiplicative
                            : ptfh::BiasCorrection::additive;
  settings.quad_order = c.quad_order;
  settings.threads = c.threads;
  const ptfh::MseReport report = ptfh::bootstrap_mse(ds.records, fit, settings, opts);

  RunOutput run(c.out_dir, "mse");
  config_echo(run, c, true);
  run.add_input(c.data_path);
  run.manifest()["fit"] = fit_json(fit);
  ordered_json mse;
  mse["b_used"] = report.b_used;
  mse["refit_failures"] = report.refit_failures;
  mse["invalid"] = report.invalid;
  run.manifest()["mse"] = mse;
  {
    auto out = run.open("mse.csv");
    ptfh::write_mse_csv(out, ds.records, preds, report);
  }
  {
    auto out = run.open("mse_replicates.csv");
    ptfh::write_mse_replicates_csv(out, report);
  }
  run.finish();
  return 0;
}

struct SimulateFlags {
  std::string study = "pred";
  std::string pattern = "a";
  std::string scale = "desk";
  std::string effect = "normal";
  std::vector<double> lambdas;
  int reps = -1;
  int r1 = -1;
  int r2 = -1;
  bool estimated_d = false;
};

int cmd_simulate(const Common& c, const SimulateFlags& f) {
  RunOutput run(c.out_dir, "simulate");
  config_echo(run, c, false);
  ordered_json sim;
  sim["study"] = f.study;
  sim["scale"] = f.scale;

  if (f.study == "pred") {
    const std::vector<double> lambdas =
        f.lambdas.empty() ? std::vector<double>{0.1, 0.4, 0.7, 1.0} : f.lambdas;
    ptfh::PredStudyConfig config;
    config.reps = f.reps > 0 ? f.reps : (f.scale == "full" ? 10000 : 1000);
    config.effect = f.effect == "t5" ? ptfh::PredStudyConfig::Effect::t5_scaled
                                     : ptfh::PredStudyConfig::Effect::normal;
    config.seed = c.seed;
    config.threads = c.threads;
    config.quad_order = c.quad_order;
    config.fit_options.lambda_max = c.lambda_max;
    sim["reps"] = config.reps;
    sim["effect"] = f.effect;
    sim["lambdas"] = lambdas;
    run.manifest()["simulate"] = sim;

    std::vector<std::pair<double, ptfh::PredStudyResult>> by_lambda;
    for (double lam : lambdas) {
      config.lambda = lam;
      by_lambda.emplace_back(lam, ptfh::run_pred_study(config));
    }
    {
      auto out = run.open("pred_study.csv");
      ptfh::write_pred_study_csv(out, by_lambda);
    }
    ordered_json failures = ordered_json::array();
    for (const auto& [lam, res] : by_lambda) {
      char name[64];
      std::snprintf(name, sizeof name, "pred_errors_lambda%g.csv", lam);
      auto out = run.open(name);
      ptfh::write_pred_study_errors_csv(out, res);
      ordered_json fj;
      fj["lambda"] = lam;
      for (int method = 0; method < 4; ++method) {
        fj[ptfh::kPredMethodNames[static_cast<std::size_t>(method)]] =
            res.fit_failures[static_cast<std::size_t>(method)];
      }
      failures.push_back(fj);
    }
    run.manifest()["fit_failures"] = failures;
    run.finish();
    return 0;
  }

  if (f.study != "mse") {
    throw CliError{2, "usage", "--study must be pred or mse"};
  }
  const std::vector<double> lambdas =
      f.lambdas.empty() ? std::vector<double>{0.2, 0.6, 1.0} : f.lambdas;
  ptfh::MseStudyConfig config;
  config.pattern = f.pattern.empty() ? 'a' : f.pattern[0];
  config.r1 = f.r1 > 0 ? f.r1 : (f.scale == "full" ? 5000 : 2000);
  config.r2 = f.r2 > 0 ? f.r2 : (f.scale == "full" ? 2000 : 200);
  config.known_d = !f.estimated_d;
  config.seed = c.seed;
  config.threads = c.threads;
  config.quad_order = c.quad_order;
  config.fit_options.lambda_max = c.lambda_max;
  config.mse.B = c.boot;
  config.mse.S = c.mc_samples;
  config.mse.correction = c.correction == "multiplicative"
                              ? ptfh::BiasCorrection::multiplicative
                              : ptfh::BiasCorrection::additive;
  config.mse.quad_order = c.quad_order;
  sim["pattern"] = std::string(1, config.pattern);
  sim["r1"] = config.r1;
  sim["r2"] = config.r2;
  sim["known_d"] = config.known_d;
  sim["lambdas"] = lambdas;
  run.manifest()["simulate"] = sim;

  std::vector<std::pair<double, ptfh::MseStudyResult>> by_lambda;
  ordered_json failures = ordered_json::array();
  for (double lam : lambdas) {
    config.lambda = lam;
    by_lambda.emplace_back(lam, ptfh::run_mse_study(config));
    const auto& res = by_lambda.back().second;
    ordered_json fj;
    fj["lambda"] = lam;
    fj["r1_failures"] = res.r1_failures;
    fj["r2_failures"] = res.r2_failures;
    failures.push_back(fj);
  }
  {
    auto out = run.open("mse_study_rb.csv");
    ptfh::write_mse_study_csv(out, by_lambda, false);
  }
  {
    auto out = run.open("mse_study_cv.csv");
    ptfh::write_mse_study_csv(out, by_lambda, true);
  }
  for (const auto& [lam, res] : by_lambda) {
    char name[64];
    std::snprintf(name, sizeof name, "mse_errors_lambda%g.csv", lam);
    auto out = run.open(name);
    ptfh::write_mse_study_errors_csv(out, res);
  }
  run.manifest()["fit_failures"] = failures;
  run.finish();
  return 0;
}

struct DiagnoseFlags {
  int knots = 20;
  std::vector<int> degrees = {1, 2, 3};
  double ci_level = 0.95;
  int curve_points = 101;
};

int cmd_diagnose(const Common& c, const DiagnoseFlags& f) {
  const ptfh::Dataset ds = ptfh::parse_dataset_file(c.data_path);
  ptfh::FitOptions opts;
  opts.lambda_max = c.lambda_max;

  RunOutput run(c.out_dir, "diagnose");
  config_echo(run, c, true);
  run.add_input(c.data_path);

  const std::array<ptfh::ModelKind, 3> kinds = {
      ptfh::ModelKind::ptfh, ptfh::ModelKind::logfh, ptfh::ModelKind::fh};
  std::vector<std::pair<ptfh::ModelKind, std::vector<double>>> residuals;
  ordered_json models = ordered_json::array();
  ptfh::FitResult ptfh_fit;
  {
    auto out = run.open("diagnostics.csv");
    out << "model,lambda_hat,A_hat,aic,ks_statistic,ks_p_value,"
           "lambda_ci_lo,lambda_ci_hi\n";
    for (ptfh::ModelKind kind : kinds) {
      const ptfh::FitResult fit = fit_model(ds.records, kind, opts);
      if (kind == ptfh::ModelKind::ptfh) ptfh_fit = fit;
      const std::vector<double> e = ptfh::standardized_residuals(ds.records, fit);
      residuals.emplace_back(kind, e);
      const ptfh::KsResult ks = ptfh::ks_normal_test(e);
      const double aic = ptfh::marginal_aic(ds.records, fit);
      out << ptfh::model_kind_name(kind) << ','
          << ptfh::fmt_g17(fit.params.lambda) << ','
          << ptfh::fmt_g17(fit.params.A) << ',' << ptfh::fmt_g17(aic) << ','
          << ptfh::fmt_g17(ks.statistic) << ',' << ptfh::fmt_g17(ks.p_value);
      if (kind == ptfh::ModelKind::ptfh) {
        const ptfh::LambdaCi ci = ptfh::lambda_bootstrap_ci(
            ds.records, fit, c.boot, f.ci_level, c.seed, opts, c.threads);
        out << ',' << ptfh::fmt_g17(ci.lo) << ',' << ptfh::fmt_g17(ci.hi);
        ordered_json cij;
        cij["level"] = f.ci_level;
        cij["lo"] = ci.lo;
        cij["hi"] = ci.hi;
        cij["refit_failures"] = ci.refit_failures;
        run.manifest()["lambda_ci"] = cij;
      } else {
        out << ",,";
      }
      out << '\n';
      ordered_json mj = fit_json(fit);
      mj["aic"] = aic;
      mj["ks_p_value"] = ks.p_value;
      models.push_back(mj);
    }
  }
  run.manifest()["models"] = models;
  {
    auto out = run.open("residuals.csv");
    ptfh::write_residuals_csv(out, ds.records, residuals);
  }

  // Goodness-of-fit spline on (w, z) = (first covariate, transformed y).
  // Supply the covariate on the scale the spline should use.
  if (ds.records.front().x.size() < 2) {
    throw CliError{3, "data", "diagnose needs at least one covariate column"};
  }
  std::vector<double> w(ds.records.size()), z(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    w[i] = ds.records[i].x[1];
    z[i] = ptfh::dpt(ds.records[i].y, ptfh_fit.params.lambda);
  }
  std::vector<ptfh::SplineFit> spline_fits;
  for (int degree : f.degrees) {
    ptfh::SplineConfig cfg;
    cfg.K = f.knots;
    cfg.degree = degree;
    spline_fits.push_back(ptfh::spline_gof_fit(z, w, ptfh_fit.d_used, cfg));
  }
  const double w_lo = *std::min_element(w.begin(), w.end());
  const double w_hi = *std::max_element(w.begin(), w.end());
  const std::vector<double> w_grid = ptfh::linspace(w_lo, w_hi, f.curve_points);
  std::vector<double> ptfh_line(w_grid.size());
  for (std::size_t i = 0; i < w_grid.size(); ++i) {
    // fitted transformed-scale mean along the first covariate
    ptfh_line[i] =
        ptfh_fit.params.beta[0] + ptfh_fit.params.beta[1] * w_grid[i];
  }
  {
    auto out = run.open("gof_curves.csv");
    ptfh::write_gof_curves_csv(out, w_grid, ptfh_line, spline_fits);
  }
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformed Fay-Herriot small-area estimation"};
  app.require_subcommand(1);

  Common c;
  c.seed = env_seed();
  SimulateFlags sf;
  DiagnoseFlags df;

  auto add_common = [&](CLI::App* sub, bool needs_data) {
    if (needs_data) {
      sub->add_option("--data", c.data_path, "input CSV")->required();
    }
    sub->add_option("--out", c.out_dir, "output directory");
    sub->add_option("--model", c.model, "ptfh | logfh | fh");
    sub->add_option("--lambda-max", c.lambda_max, "upper end of the lambda search");
    sub->add_option("--quad-order", c.quad_order, "Gauss-Hermite order");
    sub->add_option("--boot", c.boot, "bootstrap replicates");
    sub->add_option("--mc-samples", c.mc_samples, "Monte-Carlo draws for g1");
    sub->add_option("--seed", c.seed, "RNG seed (PTFH_SEED overrides the default)");
    sub->add_option("--correction", c.correction, "additive | multiplicative");
    sub->add_option("--threads", c.threads, "worker thread cap");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model");
  add_common(fit_cmd, true);
  CLI::App* predict_cmd = app.add_subcommand("predict", "fit and predict area means");
  add_common(predict_cmd, true);
  CLI::App* mse_cmd = app.add_subcommand("mse", "fit and bootstrap MSE estimates");
  add_common(mse_cmd, true);

  CLI::App* sim_cmd = app.add_subcommand("simulate", "run a simulation study");
  add_common(sim_cmd, false);
  sim_cmd->add_option("--study", sf.study, "pred | mse");
  sim_cmd->add_option("--pattern", sf.pattern, "D pattern: a | b | c");
  sim_cmd->add_option("--scale", sf.scale, "desk | full");
  sim_cmd->add_option("--effect", sf.effect, "normal | t5");
  sim_cmd->add_option("--lambda", sf.lambdas, "lambda values")->delimiter(',');
  sim_cmd->add_option("--reps", sf.reps, "override replicate count (pred study)");
  sim_cmd->add_option("--r1", sf.r1, "override true-MSE replicates");
  sim_cmd->add_option("--r2", sf.r2, "override estimator replicates");
  sim_cmd->add_flag("--estimated-d", sf.estimated_d,
                    "use replicate-estimated sampling variances");

  CLI::App* diag_cmd = app.add_subcommand("diagnose", "residuals, KS, AIC, CI, spline");
  add_common(diag_cmd, true);
  diag_cmd->add_option("--knots", df.knots, "spline knot count");
  diag_cmd->add_option("--degrees", df.degrees, "spline degrees")->delimiter(',');
  diag_cmd->add_option("--ci-level", df.ci_level, "lambda CI coverage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    nlohmann::ordered_json err;
    err["error"] = {{"exit_code", 2}, {"kind", "usage"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(c);
    if (predict_cmd->parsed()) return cmd_predict(c);
    if (mse_cmd->parsed()) return cmd_mse(c);
    if (sim_cmd->parsed()) return cmd_simulate(c, sf);
    if (diag_cmd->parsed()) return cmd_diagnose(c, df);
    return 2;
  } catch (const CliError& e) {
    nlohmann::ordered_json err;
    err["error"] = {{"exit_code", e.code}, {"kind", e.kind}, {"message", e.message}};
    std::cerr << err.dump() << '\n';
    return e.code;
  } catch (const std::invalid_argument& e) {
    nlohmann::ordered_json err;
    err["error"] = {{"exit_code", 3}, {"kind", "data"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    nlohmann::ordered_json err;
    err["error"] = {{"exit_code", 3}, {"kind", "data"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 3;
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"] = {{"exit_code", 4}, {"kind", "numerical"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 4;
  }
}
