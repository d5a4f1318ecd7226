#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drcurve/data.hpp"
#include "drcurve/kernels.hpp"
#include "drcurve/nuisance.hpp"

namespace drc {

struct PointEstimate {
  double value = 0.0;
  double variance = 0.0;
  int n_effective = 0;
  bool flagged = false;  // zero kernel mass / empty level set in batch mode
};

struct CurveEstimate {
  EvalGrid grid;
  std::vector<PointEstimate> estimates;
  std::string method;
  Bandwidth h;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  std::optional<double> band_quantile;
};

// Evaluable nuisance functions. Any field may be backed by a fitted model
// or a user-supplied (oracle) function; batch fields are optional fast
// paths and must agree with their scalar counterparts.
struct NuisanceFns {
  std::function<double(double, const Eigen::RowVectorXd&)> mu;
  std::function<double(double, const Eigen::RowVectorXd&)> beta;
  std::function<double(double, const Eigen::RowVectorXd&)> cond_pdf;  // p_{T|S}(t|s)
  std::function<Eigen::VectorXd(double, const Eigen::MatrixXd&)> cond_pdf_batch;
  std::function<double(double, const Eigen::RowVectorXd&)> joint_pdf;  // p(t,s)
  std::function<double(const Eigen::RowVectorXd&)> marginal_s_pdf;
  std::function<Eigen::VectorXd(double, const Eigen::MatrixXd&)> cond_s_batch;  // p_{S|T}
};

NuisanceFns make_fns(const NuisanceSet& set);

// Per-observation nuisance evaluation over one estimation sample, with a
// fold assignment mapping each observation to the nuisances fitted on its
// training complement. A single fold reduces to plain (non-crossfit) use.
class NuisanceView {
 public:
  NuisanceView(const ObservationSet& data, std::vector<NuisanceFns> folds,
               std::vector<int> fold_of);
  static NuisanceView single(const ObservationSet& data, NuisanceFns fns);

  const ObservationSet& data() const { return *data_; }
  Eigen::Index n() const { return data_->n(); }

  Eigen::VectorXd mu_at(double t) const;
  Eigen::VectorXd beta_at(double t) const;
  Eigen::VectorXd mu_at_sample() const;            // mu(T_i, S_i)
  Eigen::VectorXd cond_pdf_sample() const;         // p(T_i|S_i)
  Eigen::VectorXd cond_pdf_query(double t) const;  // p(t|S_i)
  Eigen::VectorXd joint_pdf_sample() const;        // p(T_i,S_i)
  Eigen::VectorXd marginal_s() const;
  Eigen::VectorXd cond_s_at(double t) const;       // p_{S|T}(S_i|t)

 private:
  const ObservationSet* data_;
  std::vector<NuisanceFns> folds_;
  std::vector<int> fold_of_;
  std::vector<std::vector<Eigen::Index>> members_;
  std::vector<Eigen::MatrixXd> fold_s_;  // covariate rows per fold, cached
};

enum class DrForm { local_poly, eif };

struct EstimatorOptions {
  bool self_normalized = true;
  IpwWeightPoint variant = IpwWeightPoint::sample_point;
  DrForm form = DrForm::local_poly;
  double density_floor = 0.001;
  double levelset_multiplier = 0.5;
  bool strict = false;        // error instead of flagging empty windows
  bool with_ci = true;        // attach pointwise CIs where a variance exists
  double ci_level = 0.05;
};

// --- estimators under positivity (kernel-localized RA / IPW / DR) ---

CurveEstimate m_ra(const NuisanceView& view, const EvalGrid& grid);
CurveEstimate m_ipw(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                    const EvalGrid& grid, const EstimatorOptions& opts);
CurveEstimate m_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                   const EvalGrid& grid, const EstimatorOptions& opts);

CurveEstimate theta_ra(const NuisanceView& view, const EvalGrid& grid);
CurveEstimate theta_ipw(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                        const EvalGrid& grid, const EstimatorOptions& opts);
CurveEstimate theta_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                       const EvalGrid& grid, const EstimatorOptions& opts);

double variance_theta_dr(const NuisanceView& view, KernelSpec kernel, Bandwidth h, double t,
                         double theta_hat, const EstimatorOptions& opts);

// Wald interval; theta-scale uses sqrt(V/(n h^3)), m-scale sqrt(V/(n h)).
std::pair<double, double> pointwise_ci(double estimate, double variance, Eigen::Index n,
                                       double h, double tau, bool theta_scale = true);

// Mean of the self-normalizing IPW denominator, (1/(nh)) sum K_i / p_i;
// its expectation is 1 when the density weights are correct.
double ipw_denominator_mean(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                            double t, const EstimatorOptions& opts);

// theta_IPW with query-point weights minus the sample-point form; the gap
// converges to E[mu(t,S) d/dt log p_{T|S}(t|S)] instead of vanishing.
double ipw_variant_bias_diag(const NuisanceView& view, KernelSpec kernel, Bandwidth h,
                             double t, const EstimatorOptions& opts);

}  // namespace drc
