#include "drcurve/no_positivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "drcurve/stats.hpp"

namespace drc {

double IntegralCurve::value_at(double x) const {
  if (grid.empty()) throw std::runtime_error("empty integral curve");
  const double eps = 1e-12 * std::max(1.0, std::abs(grid.back() - grid.front()));
  if (x < grid.front() - eps || x > grid.back() + eps)
    throw std::runtime_error("query outside the integration grid");
  x = std::clamp(x, grid.front(), grid.back());
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const std::size_t k = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
  if (k + 1 >= grid.size()) return cum.back();
  const double g0 = grid[k], g1 = grid[k + 1];
  const double frac = (x - g0) / (g1 - g0);
  const double th_x = theta[k] + frac * (theta[k + 1] - theta[k]);
  return cum[k] + 0.5 * (theta[k] + th_x) * (x - g0);
}

EvalGrid make_fine_grid(const ObservationSet& data, const EvalGrid& queries, int points) {
  double lo = data.t.minCoeff();
  double hi = data.t.maxCoeff();
  for (double q : queries.points) {
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (!(hi > lo)) hi = lo + 1e-8;
  return EvalGrid::linspace(lo, hi, points);
}

namespace {

IntegralCurve curve_from_values(std::vector<double> grid, std::vector<double> theta,
                                const ObservationSet& data) {
  if (grid.size() != theta.size() || grid.size() < 2)
    throw std::invalid_argument("integral curve needs matching grid/theta of size >= 2");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1]))
      throw std::invalid_argument("integration grid must be strictly increasing");
  IntegralCurve ic;
  ic.grid = std::move(grid);
  ic.theta = std::move(theta);
  ic.cum.resize(ic.grid.size(), 0.0);
  for (std::size_t k = 1; k < ic.grid.size(); ++k)
    ic.cum[k] = ic.cum[k - 1] +
                0.5 * (ic.theta[k] + ic.theta[k - 1]) * (ic.grid[k] - ic.grid[k - 1]);
  // Connectedness guard: the m(t) identity integrates across the treatment
  // support, which must be an interval for that to be meaningful.
  std::vector<double> ts(data.t.data(), data.t.data() + data.n());
  std::sort(ts.begin(), ts.end());
  const double spacing = (ic.grid.back() - ic.grid.front()) /
                         static_cast<double>(ic.grid.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (ts[i] - ts[i - 1] > 5.0 * spacing) {
      ic.gap_warning = true;
      break;
    }
  return ic;
}

}  // namespace

IntegralCurve build_integral_curve(const std::function<double(double)>& theta_fn,
                                   const ObservationSet& data, const EvalGrid& queries,
                                   int points) {
  const EvalGrid fine = make_fine_grid(data, queries, points);
  std::vector<double> theta(fine.points.size());
  for (std::size_t k = 0; k < fine.points.size(); ++k) theta[k] = theta_fn(fine.points[k]);
  return curve_from_values(fine.points, std::move(theta), data);
}

CurveEstimate integrate_theta(const CurveEstimate& theta_curve, const ObservationSet& data,
                              const EvalGrid& queries) {
  std::vector<double> vals(theta_curve.estimates.size());
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = theta_curve.estimates[k].value;
  IntegralCurve ic = curve_from_values(theta_curve.grid.points, std::move(vals), data);
  const double lo = ic.grid.front(), hi = ic.grid.back();
  for (double q : queries.points)
    if (q < lo || q > hi) throw std::runtime_error("theta curve does not cover the query range");
  const Eigen::Index n = data.n();
  double mean_c_t = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) mean_c_t += ic.value_at(data.t(i));
  mean_c_t /= static_cast<double>(n);
  const double y_bar = data.y.mean();
  CurveEstimate out;
  out.grid = queries;
  out.method = theta_curve.method + "_integral";
  out.h = theta_curve.h;
  for (double q : queries.points) {
    PointEstimate pe;
    pe.value = y_bar + ic.value_at(q) - mean_c_t;
    pe.n_effective = static_cast<int>(n);
    out.estimates.push_back(pe);
  }
  return out;
}

CurveEstimate theta_c_ra(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                         const EvalGrid& grid, const EstimatorOptions& opts) {
  CurveEstimate curve;
  curve.grid = grid;
  curve.method = "theta_c_ra";
  curve.h = h;
  for (double t : grid.points) {
    PointEstimate pe;
    try {
      const CondCdfWeights w = cond_cdf_weights(view.data(), t, kernel, h.h);
      const Eigen::VectorXd beta = view.beta_at(t);
      pe.value = w.w.dot(beta);
      pe.n_effective = static_cast<int>((w.w.array() > 0.0).count());
    } catch (const std::runtime_error&) {
      if (opts.strict) throw;
      pe.flagged = true;
    }
    curve.estimates.push_back(pe);
  }
  return curve;
}

namespace detail {

// Working arrays for the interior-density estimators at one grid point.
struct ThetaCWork {
  Eigen::VectorXd u;
  Eigen::VectorXd k;
  Eigen::VectorXd resid;
  Eigen::VectorXd pz;        // trimmed, renormalized p_zeta(S_i|t)
  Eigen::VectorXd joint;     // floored p(T_i, S_i)
  Eigen::VectorXd ra_terms;  // beta_i * pz_i / p_S(S_i), averaging to the RA part
  double sum_k_w = 0.0;      // sum K pz / joint
  double ipw_sum = 0.0;      // sum u K resid pz / joint
  double ra = 0.0;
  int n_effective = 0;  // untrimmed points
  bool empty = false;
};

ThetaCWork build_theta_c_work(const NuisanceView& view, KernelSpec kernel, double h,
                              double t, const EstimatorOptions& opts, bool zero_outcome,
                              const Eigen::VectorXd& joint, const Eigen::VectorXd& ps) {
  const ObservationSet& data = view.data();
  const Eigen::Index n = data.n();
  ThetaCWork w;
  const Eigen::VectorXd cvals = view.cond_s_at(t);
  const double cmax = cvals.maxCoeff();
  if (!(cmax > 0.0)) {
    w.empty = true;
    return w;
  }
  const double zeta = opts.levelset_multiplier * cmax;
  Eigen::VectorXd pz_raw(n);
  double z_hat = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    pz_raw(i) = cvals(i) >= zeta ? cvals(i) : 0.0;
    if (pz_raw(i) > 0.0) ++w.n_effective;
    z_hat += pz_raw(i) / ps(i);
  }
  z_hat /= static_cast<double>(n);
  if (!(z_hat > 0.0)) {
    w.empty = true;
    return w;
  }
  w.pz = pz_raw / z_hat;
  w.joint = joint;
  Eigen::VectorXd beta;
  if (zero_outcome) {
    beta = Eigen::VectorXd::Zero(n);
    w.resid = data.y;
  } else {
    const Eigen::VectorXd mu_t = view.mu_at(t);
    beta = view.beta_at(t);
    w.resid.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      w.resid(i) = data.y(i) - mu_t(i) - (data.t(i) - t) * beta(i);
  }
  w.u.resize(n);
  w.k.resize(n);
  w.ra_terms.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w.u(i) = (data.t(i) - t) / h;
    w.k(i) = eval_kernel(kernel, w.u(i));
    w.sum_k_w += w.k(i) * w.pz(i) / w.joint(i);
    w.ipw_sum += w.u(i) * w.k(i) * w.resid(i) * w.pz(i) / w.joint(i);
    w.ra_terms(i) = beta(i) * w.pz(i) / ps(i);
  }
  w.ra = w.ra_terms.mean();
  return w;
}

double theta_c_from_work(const ThetaCWork& w, double h, double kappa2,
                         bool self_normalized, Eigen::Index n) {
  if (self_normalized) {
    if (!(w.sum_k_w > 0.0)) throw std::runtime_error("zero self-normalizing denominator");
    return w.ipw_sum / (kappa2 * h * w.sum_k_w) + w.ra;
  }
  return w.ipw_sum / (static_cast<double>(n) * h * h * kappa2) + w.ra;
}

double variance_c_from_work(const ThetaCWork& w, double h, double kappa2, double theta,
                            bool self_normalized, Eigen::Index n) {
  const double sqrt_h = std::sqrt(h);
  const double sqrt_h3 = std::sqrt(h * h * h);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double phi = w.u(i) * w.k(i) * w.pz(i) * w.resid(i) / (sqrt_h * kappa2 * w.joint(i));
    if (self_normalized) phi *= static_cast<double>(n) * h / w.sum_k_w;
    const double term = phi + sqrt_h3 * (w.ra_terms(i) - theta);
    acc += term * term;
  }
  return acc / static_cast<double>(n);
}

CurveEstimate theta_c_curve(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                            const EvalGrid& grid, const EstimatorOptions& opts,
                            bool zero_outcome, const std::string& method) {
  const Eigen::Index n = view.n();
  const double kappa2 = kernel_moment(kernel, 2, false);
  const Eigen::VectorXd joint =
      apply_density_floor(view.joint_pdf_sample(), opts.density_floor);
  const Eigen::VectorXd ps = view.marginal_s();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(ps(i) > 0.0)) throw std::runtime_error("zero covariate marginal at sample point");
  CurveEstimate curve;
  curve.grid = grid;
  curve.method = method;
  curve.h = h;
  const double q = normal_quantile(1.0 - opts.ci_level / 2.0);
  for (double t : grid.points) {
    ThetaCWork w =
        build_theta_c_work(view, kernel, h.h, t, opts, zero_outcome, joint, ps);
    PointEstimate pe;
    bool ok = !w.empty;
    if (ok) {
      try {
        pe.value = theta_c_from_work(w, h.h, kappa2, opts.self_normalized, n);
      } catch (const std::runtime_error&) {
        if (opts.strict) throw;
        ok = false;
      }
    } else if (opts.strict) {
      throw std::runtime_error("empty level set at grid point");
    }
    if (ok) {
      pe.n_effective = w.n_effective;
      if (opts.with_ci)
        pe.variance =
            variance_c_from_work(w, h.h, kappa2, pe.value, opts.self_normalized, n);
    } else {
      pe.flagged = true;
    }
    curve.estimates.push_back(pe);
    if (opts.with_ci) {
      const double half =
          pe.flagged ? 0.0 : q * std::sqrt(pe.variance / (n * h.h * h.h * h.h));
      curve.ci_lower.push_back(pe.value - half);
      curve.ci_upper.push_back(pe.value + half);
    }
  }
  return curve;
}

}  // namespace detail

CurveEstimate theta_c_ipw(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                          const EvalGrid& grid, const EstimatorOptions& opts) {
  return detail::theta_c_curve(view, kernel, h, grid, opts, /*zero_outcome=*/true,
                               "theta_c_ipw");
}

CurveEstimate theta_c_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                         const EvalGrid& grid, const EstimatorOptions& opts) {
  return detail::theta_c_curve(view, kernel, h, grid, opts, /*zero_outcome=*/false,
                               "theta_c_dr");
}

double variance_theta_c_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                           double t, double theta_hat, const EstimatorOptions& opts) {
  const double kappa2 = kernel_moment(kernel, 2, false);
  const Eigen::VectorXd joint =
      apply_density_floor(view.joint_pdf_sample(), opts.density_floor);
  const Eigen::VectorXd ps = view.marginal_s();
  detail::ThetaCWork w =
      detail::build_theta_c_work(view, kernel, h.h, t, opts, false, joint, ps);
  if (w.empty) throw std::runtime_error("empty level set at grid point");
  return detail::variance_c_from_work(w, h.h, kappa2, theta_hat, opts.self_normalized,
                                      view.n());
}

}  // namespace drc
