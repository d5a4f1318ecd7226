#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "drcurve/data.hpp"
#include "drcurve/kernels.hpp"

namespace drc {

// Polynomial basis for the outcome regression: powers of t up to degree_t,
// linear covariate terms, optional t*s_j interactions. The t-derivative of
// the fitted expansion is available analytically from the same coefficients.
struct OutcomeBasis {
  int degree_t = 2;
  bool covariates = true;
  bool interactions = true;
};

class OutcomeModel {
 public:
  static OutcomeModel fit(const ObservationSet& train, const OutcomeBasis& basis,
                          double lambda);
  // Regression of an arbitrary response on the same basis (used for the
  // treatment-on-covariates regressor of the residual-KDE density method).
  static OutcomeModel fit_response(const Eigen::VectorXd& response,
                                   const Eigen::VectorXd& t, const Eigen::MatrixXd& s,
                                   const OutcomeBasis& basis, double lambda);

  double mu(double t, const Eigen::Ref<const Eigen::RowVectorXd>& s) const;
  double beta(double t, const Eigen::Ref<const Eigen::RowVectorXd>& s) const;

  const Eigen::VectorXd& coefficients() const { return coef_; }
  const OutcomeBasis& basis() const { return basis_; }

 private:
  OutcomeBasis basis_;
  Eigen::Index d_ = 0;
  Eigen::VectorXd coef_;
};

enum class CondDensityMethod { kde_residual, rks };

CondDensityMethod cond_density_method_from_string(const std::string& name);

// Conditional treatment density p_{T|S}(t|s), fitted by either KDE on the
// residuals of a T-on-S regression or by regressing kernel-smoothed
// outcomes (RKS) on the covariates.
class CondDensityModel {
 public:
  static CondDensityModel fit(const ObservationSet& train, CondDensityMethod method,
                              KernelSpec kernel, double ridge_lambda = 1e-8);

  double pdf(double t, const Eigen::Ref<const Eigen::RowVectorXd>& s) const;
  // p(t | S_i) for every row of S at a common query t.
  Eigen::VectorXd pdf_batch(double t, const Eigen::MatrixXd& S) const;
  // p(T_i | S_i) elementwise.
  Eigen::VectorXd pdf_at_pairs(const Eigen::VectorXd& T, const Eigen::MatrixXd& S) const;

  CondDensityMethod method() const { return method_; }
  double bandwidth() const { return h_; }

 private:
  CondDensityMethod method_ = CondDensityMethod::kde_residual;
  KernelSpec kernel_;
  double h_ = 0.0;

  // kde_residual state
  std::optional<OutcomeModel> regressor_;
  Eigen::VectorXd residuals_;

  // rks state: coefficients b(t) solve (X'X + lambda I) b = X' k(t) with
  // k_i = K((T_i - t)/h_r)/h_r; evaluation is max(0, x(s)'b(t)).
  Eigen::MatrixXd design_;
  Eigen::VectorXd t_train_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;

  Eigen::VectorXd rks_coef(double t) const;
  Eigen::RowVectorXd rks_row(const Eigen::Ref<const Eigen::RowVectorXd>& s) const;
};

Eigen::VectorXd apply_density_floor(const Eigen::VectorXd& values, double floor);

// Product-kernel KDE over (t, s) with per-dimension Silverman bandwidths.
// Exposes the joint p(t,s), the marginals p_T, p_S, and p_{S|T} = p/p_T.
class JointDensityModel {
 public:
  static JointDensityModel fit(const ObservationSet& train, KernelSpec kernel);

  double joint_pdf(double t, const Eigen::Ref<const Eigen::RowVectorXd>& s) const;
  double marginal_t(double t) const;
  double marginal_s(const Eigen::Ref<const Eigen::RowVectorXd>& s) const;
  double cond_s(const Eigen::Ref<const Eigen::RowVectorXd>& s, double t) const;

  Eigen::VectorXd joint_at_pairs(const Eigen::VectorXd& T, const Eigen::MatrixXd& S) const;
  Eigen::VectorXd marginal_s_batch(const Eigen::MatrixXd& S) const;
  // p_{S|T}(S_i | t) for every row of S; reuses a cached covariate-kernel
  // cross matrix when called repeatedly with the same S (not thread-safe
  // across concurrent callers sharing one model).
  Eigen::VectorXd cond_s_batch(double t, const Eigen::MatrixXd& S) const;

  double bandwidth_t() const { return h_t_; }
  const Eigen::VectorXd& bandwidth_s() const { return h_s_; }
  KernelSpec kernel() const { return kernel_; }

 private:
  KernelSpec kernel_;
  Eigen::VectorXd t_train_;
  Eigen::MatrixXd s_train_;
  double h_t_ = 0.0;
  Eigen::VectorXd h_s_;

  Eigen::MatrixXd covariate_cross(const Eigen::MatrixXd& S) const;

  struct Cache {
    const double* key = nullptr;
    Eigen::Index rows = 0;
    Eigen::MatrixXd w;  // n_eval x n_train, product of s-kernels / prod(h_s)
  };
  mutable Cache cache_;
};

// p_{S|T}(.|t) trimmed to its zeta-upper level set and renormalized by a
// self-normalized importance-sampling estimate of its mass.
class InteriorDensity {
 public:
  InteriorDensity(const JointDensityModel& joint, double t, const ObservationSet& data,
                  double multiplier = 0.5);

  double threshold() const { return zeta_; }
  double normalization() const { return z_hat_; }
  double query_t() const { return t_; }
  double pdf(const Eigen::Ref<const Eigen::RowVectorXd>& s) const;
  // p_zeta(S_i|t) over the construction sample.
  const Eigen::VectorXd& sample_values() const { return sample_values_; }

 private:
  const JointDensityModel* joint_;
  double t_ = 0.0;
  double zeta_ = 0.0;
  double z_hat_ = 0.0;
  Eigen::VectorXd sample_values_;
};

struct CondCdfWeights {
  double t = 0.0;
  Eigen::VectorXd w;  // nonnegative, sums to 1
};

// Nadaraya-Watson weights w_i(t) = K((T_i-t)/h) / sum_j K((T_j-t)/h).
// Throws when every kernel weight vanishes.
CondCdfWeights cond_cdf_weights(const ObservationSet& data, double t, KernelSpec kernel,
                                double h);

struct NuisanceSet {
  std::optional<OutcomeModel> outcome;
  std::optional<CondDensityModel> cond_density;
  std::optional<JointDensityModel> joint;
  int fold_tag = 0;
};

}  // namespace drc
