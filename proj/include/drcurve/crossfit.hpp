#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drcurve/estimators.hpp"
#include "drcurve/no_positivity.hpp"

namespace drc {

struct FoldAssignment {
  int L = 1;
  std::vector<int> fold_of;  // fold index per observation, in [0, L)
};

// Uniformly shuffled balanced partition; sizes differ by at most one.
// L = 1 keeps everything in a single fold (no cross-fitting).
FoldAssignment make_folds(Eigen::Index n, int L, std::uint64_t seed);

enum class EstimatorKind {
  m_ra,
  m_ipw,
  m_dr,
  theta_ra,
  theta_ipw,
  theta_dr,
  theta_dr_eif,
  theta_c_ra,
  theta_c_ipw,
  theta_c_dr,
};

EstimatorKind estimator_kind_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);
bool is_theta_kind(EstimatorKind kind);

// How to obtain the nuisances each estimator needs. Oracle fields, when
// set, replace the corresponding fitted model (fitting is skipped).
struct NuisanceSpec {
  OutcomeBasis basis;
  double ridge_lambda = 0.0;
  CondDensityMethod density_method = CondDensityMethod::kde_residual;
  KernelSpec density_kernel{KernelKind::gaussian};
  bool zero_outcome = false;  // force mu = beta = 0

  std::function<double(double, const Eigen::RowVectorXd&)> oracle_mu;
  std::function<double(double, const Eigen::RowVectorXd&)> oracle_beta;
  std::function<double(double, const Eigen::RowVectorXd&)> oracle_cond_pdf;
  std::function<double(double, const Eigen::RowVectorXd&)> oracle_joint_pdf;
  std::function<double(const Eigen::RowVectorXd&)> oracle_marginal_s;
  std::function<Eigen::VectorXd(double, const Eigen::MatrixXd&)> oracle_cond_s_batch;
};

// Fit (or wire up oracle) nuisances on a training sample; fitted models
// are owned by the returned closures.
NuisanceFns fit_nuisances(const ObservationSet& train, const NuisanceSpec& spec,
                          EstimatorKind kind);

// Per-fold nuisances: entry f is fitted on the complement of fold f
// (single entry fitted on the full sample when L = 1).
std::vector<NuisanceFns> crossfit_nuisances(const ObservationSet& data,
                                            const FoldAssignment& fa,
                                            const NuisanceSpec& spec, EstimatorKind kind);

// Dispatch an estimator tag against a prepared view.
CurveEstimate apply_estimator(const NuisanceView& view, EstimatorKind kind,
                              KernelSpec kernel, Bandwidth h, const EvalGrid& grid,
                              const EstimatorOptions& opts);

// L-fold cross-fitting: nuisances fit on each fold's complement, estimator
// sums evaluated with the held-out fold's nuisances, all in one pass.
CurveEstimate crossfit_curve(const ObservationSet& data, EstimatorKind kind,
                             const NuisanceSpec& nspec, KernelSpec kernel, Bandwidth h,
                             const EvalGrid& grid, int folds, std::uint64_t seed,
                             const EstimatorOptions& opts);

// exponential: Exponential(1); two_point: {0, 2} with equal probability;
// degenerate: Z = 1 (diagnostic only — every replicate equals the original).
enum class MultiplierLaw { exponential, two_point, degenerate };

struct UniformBand {
  CurveEstimate base;  // un-normalized DR curve the band is built around
  std::vector<double> lower;
  std::vector<double> upper;
  double quantile = 0.0;  // Q(1 - tau)
  double tau = 0.05;
  int replicates = 0;
  MultiplierLaw law = MultiplierLaw::exponential;
};

// Multiplier bootstrap uniform band for theta_DR: replicates reweight the
// DR summands by i.i.d. mean-1 variance-1 draws with nuisances held fixed;
// Q is the empirical (1 - tau) quantile of the sup statistics.
UniformBand multiplier_bootstrap_band(const NuisanceView& view, KernelSpec kernel,
                                      Bandwidth h, const EvalGrid& grid, int B, double tau,
                                      MultiplierLaw law, std::uint64_t seed,
                                      const EstimatorOptions& opts);

}  // namespace drc
