#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "drcurve/io.hpp"
#include "drcurve/simulate.hpp"

namespace py = pybind11;

namespace {

drc::ObservationSet make_set(const Eigen::VectorXd& y, const Eigen::VectorXd& t,
                             const Eigen::MatrixXd& s) {
  drc::ObservationSet data{y, t, s};
  drc::validate(data);
  return data;
}

py::dict curve_dict(const drc::CurveEstimate& curve) {
  py::dict out;
  out["method"] = curve.method;
  out["bandwidth"] = curve.h.h;
  out["grid"] = curve.grid.points;
  std::vector<double> est, var;
  std::vector<bool> flagged;
  std::vector<int> neff;
  for (const drc::PointEstimate& pe : curve.estimates) {
    est.push_back(pe.value);
    var.push_back(pe.variance);
    flagged.push_back(pe.flagged);
    neff.push_back(pe.n_effective);
  }
  out["estimate"] = est;
  out["variance"] = var;
  out["flagged"] = flagged;
  out["n_effective"] = neff;
  if (curve.ci_lower.size() == curve.estimates.size()) {
    out["ci_lower"] = curve.ci_lower;
    out["ci_upper"] = curve.ci_upper;
  }
  return out;
}

struct CurveArgs {
  std::string kernel = "epanechnikov";
  std::string bw_rule = "scaled";
  double bw_scale = 1.25;
  int folds = 1;
  std::uint64_t seed = 1;
  bool self_normalized = true;
  double level = 0.05;
  double density_floor = 0.001;
};

std::pair<drc::KernelSpec, drc::Bandwidth> resolve_kernel(const drc::ObservationSet& data,
                                                          const CurveArgs& a) {
  drc::KernelSpec kernel{drc::kernel_from_string(a.kernel)};
  const drc::BandwidthRule rule = a.bw_rule == "silverman" ? drc::BandwidthRule::silverman
                                                           : drc::BandwidthRule::scaled;
  return {kernel, drc::bandwidth_rule(data.t, rule, a.bw_scale)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "dose-response / derivative-effect curve estimation core";

  m.def(
      "kernel_moment",
      [](const std::string& kernel, int j, bool squared) {
        return drc::kernel_moment(drc::KernelSpec{drc::kernel_from_string(kernel)}, j,
                                  squared);
      },
      py::arg("kernel"), py::arg("j"), py::arg("squared") = false);

  m.def(
      "gen_dgp1",
      [](long n, int d, std::uint64_t seed) {
        const drc::ObservationSet data = drc::gen_dgp1(n, d, seed);
        return py::make_tuple(data.y, data.t, data.s);
      },
      py::arg("n"), py::arg("d") = 5, py::arg("seed") = 1);

  m.def(
      "gen_dgp2",
      [](long n, std::uint64_t seed) {
        const drc::ObservationSet data = drc::gen_dgp2(n, seed);
        return py::make_tuple(data.y, data.t, data.s);
      },
      py::arg("n"), py::arg("seed") = 1);

  m.def(
      "theta_true",
      [](const std::string& dgp, double t) {
        return drc::theta_true(drc::dgp_from_string(dgp), t);
      },
      py::arg("dgp"), py::arg("t"));
  m.def(
      "m_true",
      [](const std::string& dgp, double t) {
        return drc::m_true(drc::dgp_from_string(dgp), t);
      },
      py::arg("dgp"), py::arg("t"));

  m.def(
      "make_folds",
      [](long n, int folds, std::uint64_t seed) {
        return drc::make_folds(n, folds, seed).fold_of;
      },
      py::arg("n"), py::arg("folds"), py::arg("seed") = 1);

  m.def(
      "estimate_curve",
      [](const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& s,
         const std::string& method, double grid_lo, double grid_hi, int grid_count,
         const std::string& kernel, const std::string& bw_rule, double bw_scale, int folds,
         std::uint64_t seed, bool self_normalized, double level, double density_floor,
         bool no_positivity_m) {
        const drc::ObservationSet data = make_set(y, t, s);
        CurveArgs a{kernel, bw_rule, bw_scale, folds, seed, self_normalized, level,
                    density_floor};
        const auto [kspec, h] = resolve_kernel(data, a);
        const drc::EvalGrid grid = drc::EvalGrid::linspace(grid_lo, grid_hi, grid_count);
        drc::EstimatorOptions opts;
        opts.self_normalized = self_normalized;
        opts.ci_level = level;
        opts.density_floor = density_floor;
        drc::NuisanceSpec nspec;
        const drc::EstimatorKind kind = drc::estimator_kind_from_string(method);
        if (no_positivity_m) {
          const drc::EvalGrid fine = drc::make_fine_grid(data, grid);
          const drc::CurveEstimate theta_fine = drc::crossfit_curve(
              data, kind, nspec, kspec, h, fine, folds, seed, opts);
          return curve_dict(drc::integrate_theta(theta_fine, data, grid));
        }
        return curve_dict(
            drc::crossfit_curve(data, kind, nspec, kspec, h, grid, folds, seed, opts));
      },
      py::arg("y"), py::arg("t"), py::arg("s"), py::arg("method") = "theta_dr",
      py::arg("grid_lo") = -1.0, py::arg("grid_hi") = 1.0, py::arg("grid_count") = 41,
      py::arg("kernel") = "epanechnikov", py::arg("bw_rule") = "scaled",
      py::arg("bw_scale") = 1.25, py::arg("folds") = 1, py::arg("seed") = 1,
      py::arg("self_normalized") = true, py::arg("level") = 0.05,
      py::arg("density_floor") = 0.001, py::arg("no_positivity_m") = false);

  m.def(
      "uniform_band",
      [](const Eigen::VectorXd& y, const Eigen::VectorXd& t, const Eigen::MatrixXd& s,
         double grid_lo, double grid_hi, int grid_count, int replicates, double tau,
         const std::string& kernel, const std::string& bw_rule, double bw_scale, int folds,
         std::uint64_t seed, const std::string& law) {
        const drc::ObservationSet data = make_set(y, t, s);
        CurveArgs a;
        a.kernel = kernel;
        a.bw_rule = bw_rule;
        a.bw_scale = bw_scale;
        const auto [kspec, h] = resolve_kernel(data, a);
        const drc::EvalGrid grid = drc::EvalGrid::linspace(grid_lo, grid_hi, grid_count);
        drc::NuisanceSpec nspec;
        const drc::FoldAssignment fa = drc::make_folds(data.n(), folds, seed);
        std::vector<drc::NuisanceFns> fns =
            drc::crossfit_nuisances(data, fa, nspec, drc::EstimatorKind::theta_dr);
        drc::NuisanceView view(data, std::move(fns), fa.fold_of);
        drc::EstimatorOptions opts;
        const drc::UniformBand band = drc::multiplier_bootstrap_band(
            view, kspec, h, grid, replicates, tau,
            law == "two_point" ? drc::MultiplierLaw::two_point
                               : drc::MultiplierLaw::exponential,
            seed, opts);
        py::dict out = curve_dict(band.base);
        out["band_quantile"] = band.quantile;
        out["band_lower"] = band.lower;
        out["band_upper"] = band.upper;
        return out;
      },
      py::arg("y"), py::arg("t"), py::arg("s"), py::arg("grid_lo") = -1.0,
      py::arg("grid_hi") = 1.0, py::arg("grid_count") = 41, py::arg("replicates") = 200,
      py::arg("tau") = 0.05, py::arg("kernel") = "epanechnikov",
      py::arg("bw_rule") = "scaled", py::arg("bw_scale") = 1.25, py::arg("folds") = 1,
      py::arg("seed") = 1, py::arg("law") = "exponential");

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& outcome, const std::string& treatment,
         const std::vector<std::string>& covariates, bool standardize) {
        const drc::ObservationSet data =
            drc::load_csv(path, outcome, treatment, covariates, standardize);
        return py::make_tuple(data.y, data.t, data.s);
      },
      py::arg("path"), py::arg("outcome"), py::arg("treatment"), py::arg("covariates"),
      py::arg("standardize") = false);
}
