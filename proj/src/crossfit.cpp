#include "drcurve/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "drcurve/stats.hpp"
#include "estimator_detail.hpp"

namespace drc {

FoldAssignment make_folds(Eigen::Index n, int L, std::uint64_t seed) {
  if (L < 1 || L > n) throw std::invalid_argument("fold count must satisfy 1 <= L <= n");
  FoldAssignment fa;
  fa.L = L;
  fa.fold_of.assign(static_cast<std::size_t>(n), 0);
  if (L == 1) return fa;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng = make_rng(seed, kStreamFolds, 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t r = 0; r < perm.size(); ++r)
    fa.fold_of[static_cast<std::size_t>(perm[r])] = static_cast<int>(r % L);
  return fa;
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "m_ra") return EstimatorKind::m_ra;
  if (name == "m_ipw") return EstimatorKind::m_ipw;
  if (name == "m_dr") return EstimatorKind::m_dr;
  if (name == "theta_ra") return EstimatorKind::theta_ra;
  if (name == "theta_ipw") return EstimatorKind::theta_ipw;
  if (name == "theta_dr") return EstimatorKind::theta_dr;
  if (name == "theta_dr_eif") return EstimatorKind::theta_dr_eif;
  if (name == "theta_c_ra") return EstimatorKind::theta_c_ra;
  if (name == "theta_c_ipw") return EstimatorKind::theta_c_ipw;
  if (name == "theta_c_dr") return EstimatorKind::theta_c_dr;
  throw std::invalid_argument("unknown estimator: " + name);
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::m_ra: return "m_ra";
    case EstimatorKind::m_ipw: return "m_ipw";
    case EstimatorKind::m_dr: return "m_dr";
    case EstimatorKind::theta_ra: return "theta_ra";
    case EstimatorKind::theta_ipw: return "theta_ipw";
    case EstimatorKind::theta_dr: return "theta_dr";
    case EstimatorKind::theta_dr_eif: return "theta_dr_eif";
    case EstimatorKind::theta_c_ra: return "theta_c_ra";
    case EstimatorKind::theta_c_ipw: return "theta_c_ipw";
    case EstimatorKind::theta_c_dr: return "theta_c_dr";
  }
  throw std::logic_error("unreachable");
}

bool is_theta_kind(EstimatorKind kind) {
  return kind != EstimatorKind::m_ra && kind != EstimatorKind::m_ipw &&
         kind != EstimatorKind::m_dr;
}

namespace {

struct Needs {
  bool outcome = false;
  bool cond_density = false;
  bool joint = false;
};

Needs needs_of(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::m_ra:
    case EstimatorKind::theta_ra:
    case EstimatorKind::theta_c_ra: return {true, false, false};
    case EstimatorKind::m_ipw:
    case EstimatorKind::theta_ipw: return {false, true, false};
    case EstimatorKind::m_dr:
    case EstimatorKind::theta_dr:
    case EstimatorKind::theta_dr_eif: return {true, true, false};
    case EstimatorKind::theta_c_ipw: return {false, false, true};
    case EstimatorKind::theta_c_dr: return {true, false, true};
  }
  throw std::logic_error("unreachable");
}

}  // namespace

NuisanceFns fit_nuisances(const ObservationSet& train, const NuisanceSpec& spec,
                          EstimatorKind kind) {
  const Needs need = needs_of(kind);
  NuisanceFns fns;
  if (need.outcome) {
    if (spec.zero_outcome) {
      fns.mu = [](double, const Eigen::RowVectorXd&) { return 0.0; };
      fns.beta = [](double, const Eigen::RowVectorXd&) { return 0.0; };
    } else if (spec.oracle_mu || spec.oracle_beta) {
      if (!spec.oracle_mu || !spec.oracle_beta)
        throw std::invalid_argument("oracle_mu and oracle_beta must be set together");
      fns.mu = spec.oracle_mu;
      fns.beta = spec.oracle_beta;
    } else {
      auto model = std::make_shared<OutcomeModel>(
          OutcomeModel::fit(train, spec.basis, spec.ridge_lambda));
      fns.mu = [model](double t, const Eigen::RowVectorXd& s) { return model->mu(t, s); };
      fns.beta = [model](double t, const Eigen::RowVectorXd& s) {
        return model->beta(t, s);
      };
    }
  }
  if (need.cond_density) {
    if (spec.oracle_cond_pdf) {
      fns.cond_pdf = spec.oracle_cond_pdf;
    } else {
      auto model = std::make_shared<CondDensityModel>(CondDensityModel::fit(
          train, spec.density_method, spec.density_kernel, std::max(spec.ridge_lambda, 1e-8)));
      fns.cond_pdf = [model](double t, const Eigen::RowVectorXd& s) {
        return model->pdf(t, s);
      };
      fns.cond_pdf_batch = [model](double t, const Eigen::MatrixXd& S) {
        return model->pdf_batch(t, S);
      };
    }
  }
  if (need.joint) {
    if (spec.oracle_joint_pdf || spec.oracle_marginal_s || spec.oracle_cond_s_batch) {
      if (!spec.oracle_joint_pdf || !spec.oracle_marginal_s || !spec.oracle_cond_s_batch)
        throw std::invalid_argument("joint-density oracles must be set together");
      fns.joint_pdf = spec.oracle_joint_pdf;
      fns.marginal_s_pdf = spec.oracle_marginal_s;
      fns.cond_s_batch = spec.oracle_cond_s_batch;
    } else {
      auto model =
          std::make_shared<JointDensityModel>(JointDensityModel::fit(train, spec.density_kernel));
      fns.joint_pdf = [model](double t, const Eigen::RowVectorXd& s) {
        return model->joint_pdf(t, s);
      };
      fns.marginal_s_pdf = [model](const Eigen::RowVectorXd& s) {
        return model->marginal_s(s);
      };
      fns.cond_s_batch = [model](double t, const Eigen::MatrixXd& S) {
        return model->cond_s_batch(t, S);
      };
    }
  }
  return fns;
}

CurveEstimate apply_estimator(const NuisanceView& view, EstimatorKind kind,
                              KernelSpec kernel, Bandwidth h, const EvalGrid& grid,
                              const EstimatorOptions& opts) {
  switch (kind) {
    case EstimatorKind::m_ra: return m_ra(view, grid);
    case EstimatorKind::m_ipw: return m_ipw(view, kernel, h, grid, opts);
    case EstimatorKind::m_dr: return m_dr(view, kernel, h, grid, opts);
    case EstimatorKind::theta_ra: return theta_ra(view, grid);
    case EstimatorKind::theta_ipw: return theta_ipw(view, kernel, h, grid, opts);
    case EstimatorKind::theta_dr: {
      EstimatorOptions o = opts;
      o.form = DrForm::local_poly;
      return theta_dr(view, kernel, h, grid, o);
    }
    case EstimatorKind::theta_dr_eif: {
      EstimatorOptions o = opts;
      o.form = DrForm::eif;
      return theta_dr(view, kernel, h, grid, o);
    }
    case EstimatorKind::theta_c_ra: return theta_c_ra(view, kernel, h, grid, opts);
    case EstimatorKind::theta_c_ipw: return theta_c_ipw(view, kernel, h, grid, opts);
    case EstimatorKind::theta_c_dr: return theta_c_dr(view, kernel, h, grid, opts);
  }
  throw std::logic_error("unreachable");
}

std::vector<NuisanceFns> crossfit_nuisances(const ObservationSet& data,
                                            const FoldAssignment& fa,
                                            const NuisanceSpec& spec, EstimatorKind kind) {
  std::vector<NuisanceFns> fns(static_cast<std::size_t>(fa.L));
  if (fa.L == 1) {
    fns[0] = fit_nuisances(data, spec, kind);
  } else {
    for (int f = 0; f < fa.L; ++f) {
      // Training complement of fold f.
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = 0; i < data.n(); ++i)
        if (fa.fold_of[static_cast<std::size_t>(i)] != f) keep.push_back(i);
      if (keep.size() < 2) throw std::runtime_error("training complement too small");
      ObservationSet train;
      train.y.resize(static_cast<Eigen::Index>(keep.size()));
      train.t.resize(static_cast<Eigen::Index>(keep.size()));
      train.s.resize(static_cast<Eigen::Index>(keep.size()), data.dim());
      for (std::size_t r = 0; r < keep.size(); ++r) {
        train.y(static_cast<Eigen::Index>(r)) = data.y(keep[r]);
        train.t(static_cast<Eigen::Index>(r)) = data.t(keep[r]);
        train.s.row(static_cast<Eigen::Index>(r)) = data.s.row(keep[r]);
      }
      fns[static_cast<std::size_t>(f)] = fit_nuisances(train, spec, kind);
    }
  }
  return fns;
}

CurveEstimate crossfit_curve(const ObservationSet& data, EstimatorKind kind,
                             const NuisanceSpec& nspec, KernelSpec kernel, Bandwidth h,
                             const EvalGrid& grid, int folds, std::uint64_t seed,
                             const EstimatorOptions& opts) {
  validate(data);
  const FoldAssignment fa = make_folds(data.n(), folds, seed);
  std::vector<NuisanceFns> fns = crossfit_nuisances(data, fa, nspec, kind);
  NuisanceView view(data, std::move(fns), fa.fold_of);
  return apply_estimator(view, kind, kernel, h, grid, opts);
}

UniformBand multiplier_bootstrap_band(const NuisanceView& view, KernelSpec kernel,
                                      Bandwidth h, const EvalGrid& grid, int B, double tau,
                                      MultiplierLaw law, std::uint64_t seed,
                                      const EstimatorOptions& opts) {
  if (B < 1) throw std::invalid_argument("bootstrap replicate count must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
  const Eigen::Index n = view.n();
  const std::size_t m = grid.points.size();
  const double kappa2 = kernel_moment(kernel, 2, false);
  // The replicate formula reweights the plain (un-normalized) DR summands
  // with the nuisances held fixed, so the band is built around that form.
  EstimatorOptions o = opts;
  o.self_normalized = false;
  o.variant = IpwWeightPoint::sample_point;
  o.with_ci = true;

  UniformBand band;
  band.tau = tau;
  band.replicates = B;
  band.law = law;
  band.base.grid = grid;
  band.base.method = "theta_dr";
  band.base.h = h;

  // brace_i(t): theta_hat(t) = mean_i brace_i(t) / h.
  Eigen::MatrixXd brace(static_cast<Eigen::Index>(m), n);
  std::vector<double> theta(m), variance(m);
  std::vector<bool> valid(m, false);
  const double q = normal_quantile(1.0 - tau / 2.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  bool any_valid = false;
  for (std::size_t g = 0; g < m; ++g) {
    const double t = grid.points[g];
    detail::ThetaWork w = detail::build_theta_work(view, kernel, h.h, t, o, false);
    PointEstimate pe;
    if (w.n_effective == 0) {
      pe.flagged = true;
      brace.row(static_cast<Eigen::Index>(g)).setZero();
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        brace(static_cast<Eigen::Index>(g), i) =
            w.u(i) * w.k(i) * w.resid(i) / (h.h * kappa2 * w.dens(i)) + h.h * w.beta(i);
      // Same reduction path as the replicates so Z = 1 reproduces theta
      // bitwise.
      theta[g] =
          brace.row(static_cast<Eigen::Index>(g)).dot(ones) / (static_cast<double>(n) * h.h);
      variance[g] = detail::variance_from_work(w, h.h, kappa2, theta[g], false, n);
      pe.value = theta[g];
      pe.variance = variance[g];
      pe.n_effective = w.n_effective;
      valid[g] = variance[g] > 0.0;
      any_valid = any_valid || valid[g];
    }
    band.base.estimates.push_back(pe);
    const double half = pe.flagged ? 0.0 : q * std::sqrt(pe.variance / (n * h.h * h.h * h.h));
    band.base.ci_lower.push_back(pe.value - half);
    band.base.ci_upper.push_back(pe.value + half);
  }
  if (!any_valid) throw std::runtime_error("all grid variances are zero");

  const double root = std::sqrt(static_cast<double>(n) * h.h * h.h * h.h);
  std::vector<double> sups(static_cast<std::size_t>(B));
  Eigen::VectorXd z(n);
  for (int b = 0; b < B; ++b) {
    std::mt19937_64 rng = make_rng(seed, kStreamBootstrap, static_cast<std::uint64_t>(b));
    if (law == MultiplierLaw::exponential) {
      std::exponential_distribution<double> dist(1.0);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = dist(rng);
    } else if (law == MultiplierLaw::two_point) {
      std::bernoulli_distribution dist(0.5);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = dist(rng) ? 2.0 : 0.0;
    } else {
      z.setOnes();
    }
    double sup = 0.0;
    for (std::size_t g = 0; g < m; ++g) {
      if (!valid[g]) continue;
      const double star =
          brace.row(static_cast<Eigen::Index>(g)).dot(z) / (static_cast<double>(n) * h.h);
      const double stat = root * std::abs(star - theta[g]) / std::sqrt(variance[g]);
      sup = std::max(sup, stat);
    }
    sups[static_cast<std::size_t>(b)] = sup;
  }
  std::sort(sups.begin(), sups.end());
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil((1.0 - tau) * static_cast<double>(B)));
  band.quantile = sups[std::min(rank == 0 ? 0 : rank - 1, sups.size() - 1)];
  band.base.band_quantile = band.quantile;
  band.lower.resize(m);
  band.upper.resize(m);
  for (std::size_t g = 0; g < m; ++g) {
    const double half = valid[g] ? band.quantile * std::sqrt(variance[g] / (n * h.h * h.h * h.h))
                                 : 0.0;
    band.lower[g] = theta[g] - half;
    band.upper[g] = theta[g] + half;
  }
  return band;
}

}  // namespace drc
