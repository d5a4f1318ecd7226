#pragma once

// Internal shared machinery between the estimator translation units; not
// part of the public API.

#include <Eigen/Dense>

#include "drcurve/estimators.hpp"

namespace drc::detail {

struct ThetaWork {
  Eigen::VectorXd u;      // (T_i - t)/h
  Eigen::VectorXd k;      // K(u_i)
  Eigen::VectorXd resid;  // Y - mu(t,S) - (T-t) beta(t,S), or Y - mu(T,S)
  Eigen::VectorXd dens;   // floored density weights
  Eigen::VectorXd beta;   // beta(t, S_i), zero for pure IPW
  double sum_k_over_p = 0.0;
  double ipw_sum = 0.0;  // sum u K resid / p
  double mean_beta = 0.0;
  int n_effective = 0;
};

ThetaWork build_theta_work(const NuisanceView& view, KernelSpec kernel, double h, double t,
                           const EstimatorOptions& opts, bool zero_outcome);

double theta_from_work(const ThetaWork& w, double h, double kappa2, bool self_normalized,
                       Eigen::Index n);

double variance_from_work(const ThetaWork& w, double h, double kappa2, double theta,
                          bool self_normalized, Eigen::Index n);

}  // namespace drc::detail
