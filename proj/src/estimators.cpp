#include "drcurve/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "drcurve/stats.hpp"
#include "estimator_detail.hpp"

namespace drc {

NuisanceFns make_fns(const NuisanceSet& set) {
  NuisanceFns fns;
  if (set.outcome) {
    const OutcomeModel* om = &*set.outcome;
    fns.mu = [om](double t, const Eigen::RowVectorXd& s) { return om->mu(t, s); };
    fns.beta = [om](double t, const Eigen::RowVectorXd& s) { return om->beta(t, s); };
  }
  if (set.cond_density) {
    const CondDensityModel* cd = &*set.cond_density;
    fns.cond_pdf = [cd](double t, const Eigen::RowVectorXd& s) { return cd->pdf(t, s); };
    fns.cond_pdf_batch = [cd](double t, const Eigen::MatrixXd& S) {
      return cd->pdf_batch(t, S);
    };
  }
  if (set.joint) {
    const JointDensityModel* jd = &*set.joint;
    fns.joint_pdf = [jd](double t, const Eigen::RowVectorXd& s) {
      return jd->joint_pdf(t, s);
    };
    fns.marginal_s_pdf = [jd](const Eigen::RowVectorXd& s) { return jd->marginal_s(s); };
    fns.cond_s_batch = [jd](double t, const Eigen::MatrixXd& S) {
      return jd->cond_s_batch(t, S);
    };
  }
  return fns;
}

NuisanceView::NuisanceView(const ObservationSet& data, std::vector<NuisanceFns> folds,
                           std::vector<int> fold_of)
    : data_(&data), folds_(std::move(folds)), fold_of_(std::move(fold_of)) {
  if (fold_of_.size() != static_cast<std::size_t>(data.n()))
    throw std::invalid_argument("fold assignment size differs from sample size");
  members_.resize(folds_.size());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int f = fold_of_[static_cast<std::size_t>(i)];
    if (f < 0 || f >= static_cast<int>(folds_.size()))
      throw std::invalid_argument("fold index out of range");
    members_[static_cast<std::size_t>(f)].push_back(i);
  }
  fold_s_.resize(folds_.size());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    const auto& idx = members_[f];
    fold_s_[f].resize(static_cast<Eigen::Index>(idx.size()), data.dim());
    for (std::size_t r = 0; r < idx.size(); ++r)
      fold_s_[f].row(static_cast<Eigen::Index>(r)) = data.s.row(idx[r]);
  }
}

NuisanceView NuisanceView::single(const ObservationSet& data, NuisanceFns fns) {
  std::vector<NuisanceFns> folds;
  folds.push_back(std::move(fns));
  return NuisanceView(data, std::move(folds), std::vector<int>(data.n(), 0));
}

Eigen::VectorXd NuisanceView::mu_at(double t) const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (!folds_[f].mu) throw std::runtime_error("outcome nuisance not available");
    for (Eigen::Index i : members_[f]) out(i) = folds_[f].mu(t, data_->s.row(i));
  }
  return out;
}

Eigen::VectorXd NuisanceView::beta_at(double t) const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (!folds_[f].beta) throw std::runtime_error("outcome nuisance not available");
    for (Eigen::Index i : members_[f]) out(i) = folds_[f].beta(t, data_->s.row(i));
  }
  return out;
}

Eigen::VectorXd NuisanceView::mu_at_sample() const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (!folds_[f].mu) throw std::runtime_error("outcome nuisance not available");
    for (Eigen::Index i : members_[f]) out(i) = folds_[f].mu(data_->t(i), data_->s.row(i));
  }
  return out;
}

Eigen::VectorXd NuisanceView::cond_pdf_sample() const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (!folds_[f].cond_pdf) throw std::runtime_error("conditional density not available");
    for (Eigen::Index i : members_[f])
      out(i) = folds_[f].cond_pdf(data_->t(i), data_->s.row(i));
  }
  return out;
}

Eigen::VectorXd NuisanceView::cond_pdf_query(double t) const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (folds_[f].cond_pdf_batch) {
      const Eigen::VectorXd vals = folds_[f].cond_pdf_batch(t, fold_s_[f]);
      for (std::size_t r = 0; r < members_[f].size(); ++r)
        out(members_[f][r]) = vals(static_cast<Eigen::Index>(r));
    } else if (folds_[f].cond_pdf) {
      for (Eigen::Index i : members_[f]) out(i) = folds_[f].cond_pdf(t, data_->s.row(i));
    } else {
      throw std::runtime_error("conditional density not available");
    }
  }
  return out;
}

Eigen::VectorXd NuisanceView::joint_pdf_sample() const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (!folds_[f].joint_pdf) throw std::runtime_error("joint density not available");
    for (Eigen::Index i : members_[f])
      out(i) = folds_[f].joint_pdf(data_->t(i), data_->s.row(i));
  }
  return out;
}

Eigen::VectorXd NuisanceView::marginal_s() const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (!folds_[f].marginal_s_pdf) throw std::runtime_error("marginal density not available");
    for (Eigen::Index i : members_[f]) out(i) = folds_[f].marginal_s_pdf(data_->s.row(i));
  }
  return out;
}

Eigen::VectorXd NuisanceView::cond_s_at(double t) const {
  Eigen::VectorXd out(n());
  for (std::size_t f = 0; f < folds_.size(); ++f) {
    if (!folds_[f].cond_s_batch) throw std::runtime_error("p_{S|T} not available");
    const Eigen::VectorXd vals = folds_[f].cond_s_batch(t, fold_s_[f]);
    for (std::size_t r = 0; r < members_[f].size(); ++r)
      out(members_[f][r]) = vals(static_cast<Eigen::Index>(r));
  }
  return out;
}

namespace detail {

ThetaWork build_theta_work(const NuisanceView& view, KernelSpec kernel, double h, double t,
                           const EstimatorOptions& opts, bool zero_outcome) {
  const ObservationSet& data = view.data();
  const Eigen::Index n = data.n();
  ThetaWork w;
  if (zero_outcome) {
    w.beta = Eigen::VectorXd::Zero(n);
    w.resid = data.y;
  } else {
    const Eigen::VectorXd mu_t = view.mu_at(t);
    w.beta = view.beta_at(t);
    if (opts.form == DrForm::eif) {
      w.resid = data.y - view.mu_at_sample();
    } else {
      w.resid.resize(n);
      for (Eigen::Index i = 0; i < n; ++i)
        w.resid(i) = data.y(i) - mu_t(i) - (data.t(i) - t) * w.beta(i);
    }
  }
  const Eigen::VectorXd raw = opts.variant == IpwWeightPoint::sample_point
                                  ? view.cond_pdf_sample()
                                  : view.cond_pdf_query(t);
  w.dens = apply_density_floor(raw, opts.density_floor);
  w.u.resize(n);
  w.k.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w.u(i) = (data.t(i) - t) / h;
    w.k(i) = eval_kernel(kernel, w.u(i));
    if (w.k(i) > 0.0) ++w.n_effective;
    w.sum_k_over_p += w.k(i) / w.dens(i);
    w.ipw_sum += w.u(i) * w.k(i) * w.resid(i) / w.dens(i);
  }
  w.mean_beta = w.beta.sum() / static_cast<double>(n);
  return w;
}

double theta_from_work(const ThetaWork& w, double h, double kappa2, bool self_normalized,
                       Eigen::Index n) {
  if (self_normalized) return w.ipw_sum / (kappa2 * h * w.sum_k_over_p) + w.mean_beta;
  return w.ipw_sum / (static_cast<double>(n) * h * h * kappa2) + w.mean_beta;
}

double variance_from_work(const ThetaWork& w, double h, double kappa2, double theta,
                          bool self_normalized, Eigen::Index n) {
  const double sqrt_h = std::sqrt(h);
  const double sqrt_h3 = std::sqrt(h * h * h);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double phi = w.u(i) * w.k(i) * w.resid(i) / (sqrt_h * kappa2 * w.dens(i));
    if (self_normalized) phi *= static_cast<double>(n) * h / w.sum_k_over_p;
    const double term = phi + sqrt_h3 * (w.beta(i) - theta);
    acc += term * term;
  }
  return acc / static_cast<double>(n);
}

CurveEstimate theta_curve(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                          const EvalGrid& grid, const EstimatorOptions& opts,
                          bool zero_outcome, const std::string& method) {
  const Eigen::Index n = view.n();
  const double kappa2 = kernel_moment(kernel, 2, false);
  CurveEstimate curve;
  curve.grid = grid;
  curve.method = method;
  curve.h = h;
  curve.estimates.reserve(grid.points.size());
  const double q = normal_quantile(1.0 - opts.ci_level / 2.0);
  for (double t : grid.points) {
    ThetaWork w = build_theta_work(view, kernel, h.h, t, opts, zero_outcome);
    PointEstimate pe;
    if (w.n_effective == 0) {
      if (opts.strict) throw std::runtime_error("empty kernel window at grid point");
      pe.flagged = true;
    } else {
      pe.value = theta_from_work(w, h.h, kappa2, opts.self_normalized, n);
      pe.n_effective = w.n_effective;
      if (opts.with_ci)
        pe.variance = variance_from_work(w, h.h, kappa2, pe.value, opts.self_normalized, n);
    }
    curve.estimates.push_back(pe);
    if (opts.with_ci) {
      const double half = pe.flagged ? 0.0 : q * std::sqrt(pe.variance / (n * h.h * h.h * h.h));
      curve.ci_lower.push_back(pe.value - half);
      curve.ci_upper.push_back(pe.value + half);
    }
  }
  return curve;
}

struct MWork {
  Eigen::VectorXd k;
  Eigen::VectorXd resid;  // Y - mu(t, S)
  Eigen::VectorXd dens;
  double sum_k_over_p = 0.0;
  double ipw_sum = 0.0;  // sum K resid / p
  double mean_mu = 0.0;
  int n_effective = 0;
};

MWork build_m_work(const NuisanceView& view, KernelSpec kernel, double h, double t,
                   const EstimatorOptions& opts, bool zero_outcome) {
  const ObservationSet& data = view.data();
  const Eigen::Index n = data.n();
  MWork w;
  Eigen::VectorXd mu_t;
  if (zero_outcome) {
    w.resid = data.y;
    w.mean_mu = 0.0;
  } else {
    mu_t = view.mu_at(t);
    w.resid = data.y - mu_t;
    w.mean_mu = mu_t.sum() / static_cast<double>(n);
  }
  const Eigen::VectorXd raw = opts.variant == IpwWeightPoint::sample_point
                                  ? view.cond_pdf_sample()
                                  : view.cond_pdf_query(t);
  w.dens = apply_density_floor(raw, opts.density_floor);
  w.k.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w.k(i) = eval_kernel(kernel, (data.t(i) - t) / h);
    if (w.k(i) > 0.0) ++w.n_effective;
    w.sum_k_over_p += w.k(i) / w.dens(i);
    w.ipw_sum += w.k(i) * w.resid(i) / w.dens(i);
  }
  return w;
}

CurveEstimate m_curve(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                      const EvalGrid& grid, const EstimatorOptions& opts, bool zero_outcome,
                      const std::string& method) {
  const Eigen::Index n = view.n();
  CurveEstimate curve;
  curve.grid = grid;
  curve.method = method;
  curve.h = h;
  for (double t : grid.points) {
    MWork w = build_m_work(view, kernel, h.h, t, opts, zero_outcome);
    PointEstimate pe;
    if (w.n_effective == 0) {
      if (opts.strict) throw std::runtime_error("empty kernel window at grid point");
      pe.flagged = true;
    } else {
      const double ipw = opts.self_normalized
                             ? w.ipw_sum / w.sum_k_over_p
                             : w.ipw_sum / (static_cast<double>(n) * h.h);
      pe.value = ipw + w.mean_mu;
      pe.n_effective = w.n_effective;
    }
    curve.estimates.push_back(pe);
  }
  return curve;
}

}  // namespace detail

CurveEstimate m_ra(const NuisanceView& view, const EvalGrid& grid) {
  CurveEstimate curve;
  curve.grid = grid;
  curve.method = "m_ra";
  for (double t : grid.points) {
    PointEstimate pe;
    pe.value = view.mu_at(t).mean();
    pe.n_effective = static_cast<int>(view.n());
    curve.estimates.push_back(pe);
  }
  return curve;
}

CurveEstimate m_ipw(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                    const EvalGrid& grid, const EstimatorOptions& opts) {
  return detail::m_curve(view, kernel, h, grid, opts, /*zero_outcome=*/true, "m_ipw");
}

CurveEstimate m_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                   const EvalGrid& grid, const EstimatorOptions& opts) {
  EstimatorOptions o = opts;
  o.variant = IpwWeightPoint::sample_point;  // query-point DR weights are biased
  return detail::m_curve(view, kernel, h, grid, o, /*zero_outcome=*/false, "m_dr");
}

CurveEstimate theta_ra(const NuisanceView& view, const EvalGrid& grid) {
  CurveEstimate curve;
  curve.grid = grid;
  curve.method = "theta_ra";
  for (double t : grid.points) {
    PointEstimate pe;
    pe.value = view.beta_at(t).mean();
    pe.n_effective = static_cast<int>(view.n());
    curve.estimates.push_back(pe);
  }
  return curve;
}

CurveEstimate theta_ipw(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                        const EvalGrid& grid, const EstimatorOptions& opts) {
  return detail::theta_curve(view, kernel, h, grid, opts, /*zero_outcome=*/true, "theta_ipw");
}

CurveEstimate theta_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                       const EvalGrid& grid, const EstimatorOptions& opts) {
  EstimatorOptions o = opts;
  o.variant = IpwWeightPoint::sample_point;
  const std::string method = opts.form == DrForm::eif ? "theta_dr2" : "theta_dr";
  return detail::theta_curve(view, kernel, h, grid, o, /*zero_outcome=*/false, method);
}

double variance_theta_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h, double t,
                         double theta_hat, const EstimatorOptions& opts) {
  const double kappa2 = kernel_moment(kernel, 2, false);
  detail::ThetaWork w = detail::build_theta_work(view, kernel, h.h, t, opts, false);
  return detail::variance_from_work(w, h.h, kappa2, theta_hat, opts.self_normalized,
                                    view.n());
}

std::pair<double, double> pointwise_ci(double estimate, double variance, Eigen::Index n,
                                       double h, double tau, bool theta_scale) {
  if (variance < 0.0) throw std::invalid_argument("variance must be >= 0");
  const double q = normal_quantile(1.0 - tau / 2.0);
  const double scale = theta_scale ? n * h * h * h : n * h;
  const double half = q * std::sqrt(variance / scale);
  return {estimate - half, estimate + half};
}

double ipw_denominator_mean(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                            double t, const EstimatorOptions& opts) {
  detail::ThetaWork w = detail::build_theta_work(view, kernel, h.h, t, opts, true);
  return w.sum_k_over_p / (static_cast<double>(view.n()) * h.h);
}

double ipw_variant_bias_diag(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                             double t, const EstimatorOptions& opts) {
  const double kappa2 = kernel_moment(kernel, 2, false);
  EstimatorOptions o = opts;
  o.self_normalized = false;  // the asymptotic gap is stated for the plain forms
  o.variant = IpwWeightPoint::query_point;
  detail::ThetaWork wq = detail::build_theta_work(view, kernel, h.h, t, o, true);
  o.variant = IpwWeightPoint::sample_point;
  detail::ThetaWork ws = detail::build_theta_work(view, kernel, h.h, t, o, true);
  const Eigen::Index n = view.n();
  return detail::theta_from_work(wq, h.h, kappa2, false, n) -
         detail::theta_from_work(ws, h.h, kappa2, false, n);
}

}  // namespace drc
