#pragma once

#include <functional>
#include <vector>

#include "drcurve/estimators.hpp"

namespace drc {

// Cumulative trapezoid integral of a theta-curve on a fine grid, used to
// reconstruct m(t) = E[Y] + E[int_{T}^{t} theta]. Partial segments are
// handled by linear interpolation of theta inside the cell.
struct IntegralCurve {
  std::vector<double> grid;   // strictly increasing fine grid
  std::vector<double> theta;  // theta values on the grid
  std::vector<double> cum;    // cumulative integral from grid.front()
  bool gap_warning = false;   // observed-T gap exceeded 5x grid spacing

  double value_at(double x) const;  // int_{grid.front()}^{x} theta
};

// Fine uniform grid spanning the observed treatments and the query points.
EvalGrid make_fine_grid(const ObservationSet& data, const EvalGrid& queries,
                        int points = 400);

// --- bias-corrected estimators without positivity ---

CurveEstimate theta_c_ra(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                         const EvalGrid& grid, const EstimatorOptions& opts);
CurveEstimate theta_c_ipw(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                          const EvalGrid& grid, const EstimatorOptions& opts);
CurveEstimate theta_c_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                         const EvalGrid& grid, const EstimatorOptions& opts);

double variance_theta_c_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                           double t, double theta_hat, const EstimatorOptions& opts);

IntegralCurve build_integral_curve(const std::function<double(double)>& theta_fn,
                                   const ObservationSet& data, const EvalGrid& queries,
                                   int points = 400);

// m_C(t) = mean(Y) + mean_i int_{T_i}^{t} theta; the input curve must span
// [min(T, queries), max(T, queries)].
CurveEstimate integrate_theta(const CurveEstimate& theta_curve, const ObservationSet& data,
                              const EvalGrid& queries);

}  // namespace drc
