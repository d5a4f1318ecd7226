// Command-line front end: `simulate` runs the Monte-Carlo harness on the
// built-in benchmark designs, `estimate` fits curves on a CSV dataset,
// `report` merges previously written JSON reports.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drcurve/io.hpp"
#include "drcurve/simulate.hpp"

namespace {

using drc::EstimatorKind;

drc::EvalGrid parse_grid(const std::string& text) {
  const std::size_t c1 = text.find(':');
  const std::size_t c2 = text.find(':', c1 == std::string::npos ? 0 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw CLI::ValidationError("--grid", "expected lo:hi:count");
  try {
    const double lo = std::stod(text.substr(0, c1));
    const double hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const int count = std::stoi(text.substr(c2 + 1));
    return drc::EvalGrid::linspace(lo, hi, count);
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--grid", e.what());
  }
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    if (comma > start) out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

struct CommonFlags {
  std::string kernel = "epanechnikov";
  std::string bw_rule = "scaled";
  double bw_scale = 1.25;
  int folds = 1;
  std::string grid;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  double level = 0.05;
  double density_floor = 0.001;
  bool plain_ipw = false;  // disable self-normalization
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--kernel", flags.kernel, "epanechnikov|gaussian|triangular|uniform");
  cmd->add_option("--bw-rule", flags.bw_rule, "scaled|silverman");
  cmd->add_option("--bw-scale", flags.bw_scale, "bandwidth scale c in h = c*sd*n^{-1/5}");
  cmd->add_option("--folds", flags.folds, "cross-fitting folds (1 = none)");
  cmd->add_option("--grid", flags.grid, "evaluation grid lo:hi:count");
  cmd->add_option("--seed", flags.seed, "master RNG seed");
  cmd->add_option("--out", flags.out, "output path (default: stdout)");
  cmd->add_option("--format", flags.format, "csv|json");
  cmd->add_option("--level", flags.level, "CI miss level tau (default 0.05)");
  cmd->add_option("--density-floor", flags.density_floor, "density floor");
  cmd->add_flag("--plain-ipw", flags.plain_ipw, "disable self-normalized weighting");
}

void emit(const CommonFlags& flags, const std::string& content) {
  if (flags.out.empty())
    std::cout << content;
  else
    drc::write_file(flags.out, content);
}

int run_simulate(const CommonFlags& flags, const std::string& dgp_name, long n, int d,
                 int reps, int threads, const std::string& estimators, bool oracle) {
  drc::MonteCarloSpec spec;
  spec.dgp.kind = drc::dgp_from_string(dgp_name);
  spec.dgp.n = n;
  spec.dgp.d = spec.dgp.kind == drc::DgpKind::dgp2 ? 1 : d;
  spec.dgp.seed = flags.seed;
  spec.reps = reps;
  spec.threads = threads;
  spec.folds = flags.folds;
  spec.kernel.kind = drc::kernel_from_string(flags.kernel);
  spec.bw_rule =
      flags.bw_rule == "silverman" ? drc::BandwidthRule::silverman : drc::BandwidthRule::scaled;
  spec.bw_scale = flags.bw_scale;
  if (flags.grid.empty()) {
    spec.grid = spec.dgp.kind == drc::DgpKind::dgp1 ? drc::EvalGrid::linspace(-2.0, 2.0, 81)
                                                    : drc::EvalGrid::linspace(-1.3, 1.3, 53);
  } else {
    spec.grid = parse_grid(flags.grid);
  }
  const drc::NuisanceFns oracle_fns = spec.dgp.kind == drc::DgpKind::dgp1
                                          ? drc::dgp1_oracle(spec.dgp.d)
                                          : drc::dgp2_oracle();
  for (const std::string& name : split_commas(estimators)) {
    drc::EstimatorRun run;
    run.kind = drc::estimator_kind_from_string(name);
    run.label = name;
    run.opts.self_normalized = !flags.plain_ipw;
    run.opts.ci_level = flags.level;
    run.opts.density_floor = flags.density_floor;
    if (oracle) {
      run.nuisance.oracle_mu = oracle_fns.mu;
      run.nuisance.oracle_beta = oracle_fns.beta;
      run.nuisance.oracle_cond_pdf = oracle_fns.cond_pdf;
    }
    spec.estimators.push_back(std::move(run));
  }
  const drc::SimulationReport report = drc::run_monte_carlo(spec);
  emit(flags, drc::format_from_string(flags.format) == drc::OutputFormat::csv
                  ? drc::report_to_csv(report)
                  : drc::report_to_json(report));
  return 0;
}

int run_estimate(const CommonFlags& flags, const std::string& data_path,
                 const std::string& outcome, const std::string& treatment,
                 const std::string& covariates, const std::string& method,
                 bool no_positivity, int band, bool standardize) {
  const drc::ObservationSet data =
      drc::load_csv(data_path, outcome, treatment, split_commas(covariates), standardize);
  std::string tag = method;
  if (no_positivity && tag.rfind("theta_", 0) == 0 && tag.rfind("theta_c_", 0) != 0)
    tag = "theta_c_" + tag.substr(6);
  const bool integral_m = no_positivity && tag.rfind("m_", 0) == 0;
  const EstimatorKind kind =
      drc::estimator_kind_from_string(integral_m ? "theta_c_" + tag.substr(2) : tag);

  drc::KernelSpec kernel{drc::kernel_from_string(flags.kernel)};
  const drc::BandwidthRule rule =
      flags.bw_rule == "silverman" ? drc::BandwidthRule::silverman : drc::BandwidthRule::scaled;
  const drc::Bandwidth h = drc::bandwidth_rule(data.t, rule, flags.bw_scale);
  drc::EvalGrid grid = flags.grid.empty()
                           ? drc::EvalGrid::linspace(data.t.minCoeff(), data.t.maxCoeff(), 81)
                           : parse_grid(flags.grid);
  drc::NuisanceSpec nspec;
  drc::EstimatorOptions opts;
  opts.self_normalized = !flags.plain_ipw;
  opts.ci_level = flags.level;
  opts.density_floor = flags.density_floor;

  const drc::FoldAssignment fa = drc::make_folds(data.n(), flags.folds, flags.seed);
  std::vector<drc::NuisanceFns> fns = drc::crossfit_nuisances(data, fa, nspec, kind);
  drc::NuisanceView view(data, std::move(fns), fa.fold_of);

  drc::CurveEstimate curve;
  if (integral_m) {
    const drc::EvalGrid fine = drc::make_fine_grid(data, grid);
    const drc::CurveEstimate theta_fine =
        drc::apply_estimator(view, kind, kernel, h, fine, opts);
    curve = drc::integrate_theta(theta_fine, data, grid);
  } else {
    curve = drc::apply_estimator(view, kind, kernel, h, grid, opts);
  }

  const drc::OutputFormat fmt = drc::format_from_string(flags.format);
  if (band > 0) {
    if (kind != EstimatorKind::theta_dr && kind != EstimatorKind::theta_dr_eif)
      throw CLI::ValidationError("--band", "uniform bands require --method theta_dr");
    const drc::UniformBand ub = drc::multiplier_bootstrap_band(
        view, kernel, h, grid, band, flags.level, drc::MultiplierLaw::exponential,
        flags.seed, opts);
    emit(flags, fmt == drc::OutputFormat::json ? drc::curve_to_json(curve, &ub)
                                               : drc::curve_to_csv(curve));
    return 0;
  }
  emit(flags, fmt == drc::OutputFormat::json ? drc::curve_to_json(curve)
                                             : drc::curve_to_csv(curve));
  return 0;
}

int run_report(const CommonFlags& flags, const std::vector<std::string>& inputs) {
  nlohmann::ordered_json merged;
  merged["sources"] = inputs;
  merged["reports"] = nlohmann::ordered_json::array();
  std::string csv = "source,estimator,t,estimate,bias,rmse,coverage,n_valid\n";
  for (const std::string& path : inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
    merged["reports"].push_back(j);
    if (!j.contains("results") || !j.contains("grid")) continue;
    for (const auto& r : j["results"]) {
      const auto& grid = j["grid"];
      for (std::size_t g = 0; g < grid.size(); ++g) {
        auto cell = [&](const char* key) {
          if (!r.contains(key) || r[key][g].is_null()) return std::string("nan");
          char buf[40];
          std::snprintf(buf, sizeof(buf), "%.17g", r[key][g].get<double>());
          return std::string(buf);
        };
        char tbuf[40];
        std::snprintf(tbuf, sizeof(tbuf), "%.17g", grid[g].get<double>());
        csv += path + "," + r["estimator"].get<std::string>() + "," + tbuf + "," +
               cell("mean_estimate") + "," + cell("bias") + "," + cell("rmse") + "," +
               cell("coverage") + "," +
               (r.contains("n_valid") ? std::to_string(r["n_valid"][g].get<long>()) : "0") +
               "\n";
      }
    }
  }
  emit(flags, drc::format_from_string(flags.format) == drc::OutputFormat::json
                  ? merged.dump(2) + "\n"
                  : csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dose-response and derivative-effect curve estimation"};
  app.require_subcommand(1);

  CommonFlags sim_flags, est_flags, rep_flags;

  auto* sim = app.add_subcommand("simulate", "run the Monte-Carlo benchmark harness");
  std::string dgp = "dgp1";
  long n = 1000;
  int d = 5, reps = 1, threads = 1;
  std::string estimators = "theta_dr";
  bool oracle = false;
  sim->add_option("--dgp", dgp, "dgp1|dgp2");
  sim->add_option("--n", n, "sample size per replication");
  sim->add_option("--d", d, "covariate dimension (dgp1)");
  sim->add_option("--reps", reps, "Monte-Carlo replications");
  sim->add_option("--threads", threads, "worker threads");
  sim->add_option("--estimators", estimators, "comma-separated estimator tags");
  sim->add_flag("--oracle-nuisances", oracle, "use the design's closed-form nuisances");
  add_common(sim, sim_flags);

  auto* est = app.add_subcommand("estimate", "estimate curves from a CSV dataset");
  std::string data_path, outcome = "y", treatment = "t", covariates, method = "theta_dr";
  bool no_positivity = false, standardize = false;
  int band = 0;
  est->add_option("--data", data_path, "input CSV path")->required();
  est->add_option("--outcome", outcome, "outcome column name");
  est->add_option("--treatment", treatment, "treatment column name");
  est->add_option("--covariates", covariates, "comma-separated covariate columns");
  est->add_option("--method", method, "estimator tag (m_*/theta_*)");
  est->add_flag("--no-positivity", no_positivity, "use the bias-corrected estimators");
  est->add_option("--band", band, "bootstrap replicates for a uniform band (0 = off)");
  est->add_flag("--standardize", standardize, "z-score all selected columns");
  add_common(est, est_flags);

  auto* rep = app.add_subcommand("report", "merge JSON reports from prior runs");
  std::vector<std::string> inputs;
  rep->add_option("--inputs", inputs, "JSON report files")->required();
  add_common(rep, rep_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return run_simulate(sim_flags, dgp, n, d, reps, threads, estimators, oracle);
    if (est->parsed())
      return run_estimate(est_flags, data_path, outcome, treatment, covariates, method,
                          no_positivity, band, standardize);
    return run_report(rep_flags, inputs);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
