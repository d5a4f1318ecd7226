#include "drcurve/nuisance.hpp"

#include <cmath>
#include <stdexcept>

namespace drc {

namespace {

Eigen::Index basis_size(const OutcomeBasis& b, Eigen::Index d) {
  Eigen::Index p = b.degree_t + 1;
  if (b.covariates) p += d;
  if (b.interactions) p += d;
  return p;
}

using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

void fill_row(const OutcomeBasis& b, double t, const Eigen::Ref<const Eigen::RowVectorXd>& s,
              RowRef row) {
  Eigen::Index c = 0;
  double tp = 1.0;
  for (int k = 0; k <= b.degree_t; ++k, tp *= t) row(c++) = tp;
  if (b.covariates)
    for (Eigen::Index j = 0; j < s.size(); ++j) row(c++) = s(j);
  if (b.interactions)
    for (Eigen::Index j = 0; j < s.size(); ++j) row(c++) = t * s(j);
}

void fill_deriv_row(const OutcomeBasis& b, double t,
                    const Eigen::Ref<const Eigen::RowVectorXd>& s, RowRef row) {
  Eigen::Index c = 0;
  row(c++) = 0.0;
  double tp = 1.0;
  for (int k = 1; k <= b.degree_t; ++k, tp *= t) row(c++) = k * tp;
  if (b.covariates)
    for (Eigen::Index j = 0; j < s.size(); ++j) row(c++) = 0.0;
  if (b.interactions)
    for (Eigen::Index j = 0; j < s.size(); ++j) row(c++) = s(j);
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            double lambda) {
  if (lambda > 0.0) {
    Eigen::MatrixXd gram = X.transpose() * X;
    gram.diagonal().array() += lambda;
    return gram.ldlt().solve(X.transpose() * y);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols())
    throw std::runtime_error("singular fit: design matrix is rank-deficient with lambda = 0");
  return qr.solve(y);
}

}  // namespace

OutcomeModel OutcomeModel::fit(const ObservationSet& train, const OutcomeBasis& basis,
                               double lambda) {
  return fit_response(train.y, train.t, train.s, basis, lambda);
}

OutcomeModel OutcomeModel::fit_response(const Eigen::VectorXd& response,
                                        const Eigen::VectorXd& t, const Eigen::MatrixXd& s,
                                        const OutcomeBasis& basis, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("ridge penalty must be >= 0");
  const Eigen::Index n = response.size();
  const Eigen::Index d = s.cols();
  const Eigen::Index p = basis_size(basis, d);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) fill_row(basis, t(i), s.row(i), X.row(i));
  OutcomeModel m;
  m.basis_ = basis;
  m.d_ = d;
  m.coef_ = solve_ridge(X, response, lambda);
  if (!m.coef_.allFinite()) throw std::runtime_error("singular fit: non-finite coefficients");
  return m;
}

double OutcomeModel::mu(double t, const Eigen::Ref<const Eigen::RowVectorXd>& s) const {
  Eigen::RowVectorXd row(coef_.size());
  fill_row(basis_, t, s, row);
  return row.dot(coef_);
}

double OutcomeModel::beta(double t, const Eigen::Ref<const Eigen::RowVectorXd>& s) const {
  Eigen::RowVectorXd row(coef_.size());
  fill_deriv_row(basis_, t, s, row);
  return row.dot(coef_);
}

CondDensityMethod cond_density_method_from_string(const std::string& name) {
  if (name == "kde" || name == "kde_residual") return CondDensityMethod::kde_residual;
  if (name == "rks") return CondDensityMethod::rks;
  throw std::invalid_argument("unknown conditional density method: " + name);
}

CondDensityModel CondDensityModel::fit(const ObservationSet& train, CondDensityMethod method,
                                       KernelSpec kernel, double ridge_lambda) {
  CondDensityModel m;
  m.method_ = method;
  m.kernel_ = kernel;
  const Eigen::Index n = train.n();
  if (method == CondDensityMethod::kde_residual) {
    OutcomeBasis reg{.degree_t = 0, .covariates = true, .interactions = false};
    m.regressor_ = OutcomeModel::fit_response(train.t, train.t, train.s, reg, ridge_lambda);
    m.residuals_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      m.residuals_(i) = train.t(i) - m.regressor_->mu(0.0, train.s.row(i));
    m.h_ = bandwidth_rule(m.residuals_, BandwidthRule::silverman).h;
  } else {
    m.h_ = bandwidth_rule(train.t, BandwidthRule::silverman).h;
    m.t_train_ = train.t;
    OutcomeBasis reg{.degree_t = 0, .covariates = true, .interactions = false};
    const Eigen::Index p = 1 + train.dim();
    m.design_.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      m.design_(i, 0) = 1.0;
      m.design_.row(i).tail(train.dim()) = train.s.row(i);
    }
    (void)reg;
    Eigen::MatrixXd gram = m.design_.transpose() * m.design_;
    gram.diagonal().array() += std::max(ridge_lambda, 1e-10);
    m.gram_.compute(gram);
  }
  return m;
}

Eigen::RowVectorXd CondDensityModel::rks_row(
    const Eigen::Ref<const Eigen::RowVectorXd>& s) const {
  Eigen::RowVectorXd row(1 + s.size());
  row(0) = 1.0;
  row.tail(s.size()) = s;
  return row;
}

Eigen::VectorXd CondDensityModel::rks_coef(double t) const {
  const Eigen::Index n = t_train_.size();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k(i) = eval_kernel(kernel_, (t_train_(i) - t) / h_) / h_;
  return gram_.solve(design_.transpose() * k);
}

double CondDensityModel::pdf(double t, const Eigen::Ref<const Eigen::RowVectorXd>& s) const {
  if (method_ == CondDensityMethod::kde_residual) {
    const double center = t - regressor_->mu(0.0, s);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < residuals_.size(); ++i)
      sum += eval_kernel(kernel_, (center - residuals_(i)) / h_);
    return sum / (static_cast<double>(residuals_.size()) * h_);
  }
  return std::max(0.0, rks_row(s).dot(rks_coef(t)));
}

Eigen::VectorXd CondDensityModel::pdf_batch(double t, const Eigen::MatrixXd& S) const {
  const Eigen::Index m = S.rows();
  Eigen::VectorXd out(m);
  if (method_ == CondDensityMethod::kde_residual) {
    for (Eigen::Index i = 0; i < m; ++i) out(i) = pdf(t, S.row(i));
    return out;
  }
  const Eigen::VectorXd b = rks_coef(t);
  for (Eigen::Index i = 0; i < m; ++i) out(i) = std::max(0.0, rks_row(S.row(i)).dot(b));
  return out;
}

Eigen::VectorXd CondDensityModel::pdf_at_pairs(const Eigen::VectorXd& T,
                                               const Eigen::MatrixXd& S) const {
  const Eigen::Index m = T.size();
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out(i) = pdf(T(i), S.row(i));
  return out;
}

Eigen::VectorXd apply_density_floor(const Eigen::VectorXd& values, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("density floor must be > 0");
  return values.cwiseMax(floor);
}

JointDensityModel JointDensityModel::fit(const ObservationSet& train, KernelSpec kernel) {
  JointDensityModel m;
  m.kernel_ = kernel;
  m.t_train_ = train.t;
  m.s_train_ = train.s;
  m.h_t_ = bandwidth_rule(train.t, BandwidthRule::silverman).h;
  m.h_s_.resize(train.dim());
  for (Eigen::Index j = 0; j < train.dim(); ++j)
    m.h_s_(j) = bandwidth_rule(train.s.col(j), BandwidthRule::silverman).h;
  return m;
}

double JointDensityModel::joint_pdf(double t,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& s) const {
  const Eigen::Index n = t_train_.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double prod = eval_kernel(kernel_, (t - t_train_(i)) / h_t_);
    for (Eigen::Index j = 0; j < s.size(); ++j)
      prod *= eval_kernel(kernel_, (s(j) - s_train_(i, j)) / h_s_(j));
    sum += prod;
  }
  return sum / (static_cast<double>(n) * h_t_ * h_s_.prod());
}

double JointDensityModel::marginal_t(double t) const {
  const Eigen::Index n = t_train_.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += eval_kernel(kernel_, (t - t_train_(i)) / h_t_);
  return sum / (static_cast<double>(n) * h_t_);
}

double JointDensityModel::marginal_s(const Eigen::Ref<const Eigen::RowVectorXd>& s) const {
  const Eigen::Index n = t_train_.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double prod = 1.0;
    for (Eigen::Index j = 0; j < s.size(); ++j)
      prod *= eval_kernel(kernel_, (s(j) - s_train_(i, j)) / h_s_(j));
    sum += prod;
  }
  return sum / (static_cast<double>(n) * h_s_.prod());
}

double JointDensityModel::cond_s(const Eigen::Ref<const Eigen::RowVectorXd>& s,
                                 double t) const {
  const double pt = marginal_t(t);
  if (!(pt > 0.0)) return 0.0;
  return joint_pdf(t, s) / pt;
}

Eigen::MatrixXd JointDensityModel::covariate_cross(const Eigen::MatrixXd& S) const {
  const Eigen::Index m = S.rows();
  const Eigen::Index n = s_train_.rows();
  Eigen::MatrixXd w(m, n);
  const double inv_prod_h = 1.0 / h_s_.prod();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      double prod = inv_prod_h;
      for (Eigen::Index j = 0; j < S.cols(); ++j)
        prod *= eval_kernel(kernel_, (S(i, j) - s_train_(k, j)) / h_s_(j));
      w(i, k) = prod;
    }
  return w;
}

Eigen::VectorXd JointDensityModel::joint_at_pairs(const Eigen::VectorXd& T,
                                                  const Eigen::MatrixXd& S) const {
  const Eigen::Index m = T.size();
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out(i) = joint_pdf(T(i), S.row(i));
  return out;
}

Eigen::VectorXd JointDensityModel::marginal_s_batch(const Eigen::MatrixXd& S) const {
  const Eigen::Index m = S.rows();
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out(i) = marginal_s(S.row(i));
  return out;
}

Eigen::VectorXd JointDensityModel::cond_s_batch(double t, const Eigen::MatrixXd& S) const {
  if (cache_.key != S.data() || cache_.rows != S.rows()) {
    cache_.w = covariate_cross(S);
    cache_.key = S.data();
    cache_.rows = S.rows();
  }
  const Eigen::Index n = t_train_.size();
  Eigen::VectorXd a(n);
  for (Eigen::Index k = 0; k < n; ++k) a(k) = eval_kernel(kernel_, (t - t_train_(k)) / h_t_);
  const double sum_a = a.sum();
  if (!(sum_a > 0.0)) return Eigen::VectorXd::Zero(S.rows());
  // p(t, S_i) / p_T(t): the 1/(n h_t) factors cancel.
  return (cache_.w * a) / sum_a;
}

InteriorDensity::InteriorDensity(const JointDensityModel& joint, double t,
                                 const ObservationSet& data, double multiplier)
    : joint_(&joint), t_(t) {
  if (!(multiplier > 0.0)) throw std::invalid_argument("level-set multiplier must be > 0");
  const Eigen::VectorXd cvals = joint.cond_s_batch(t, data.s);
  const double cmax = cvals.maxCoeff();
  if (!(cmax > 0.0))
    throw std::runtime_error("empty level set: conditional density vanishes at query t");
  zeta_ = multiplier * cmax;
  const Eigen::VectorXd ps = joint.marginal_s_batch(data.s);
  const Eigen::Index n = data.n();
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (cvals(i) >= zeta_ && ps(i) > 0.0) z += cvals(i) / ps(i);
  z_hat_ = z / static_cast<double>(n);
  if (!(z_hat_ > 0.0)) throw std::runtime_error("empty level set: zero normalization mass");
  sample_values_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    sample_values_(i) = cvals(i) >= zeta_ ? cvals(i) / z_hat_ : 0.0;
}

double InteriorDensity::pdf(const Eigen::Ref<const Eigen::RowVectorXd>& s) const {
  const double c = joint_->cond_s(s, t_);
  return c >= zeta_ ? c / z_hat_ : 0.0;
}

CondCdfWeights cond_cdf_weights(const ObservationSet& data, double t, KernelSpec kernel,
                                double h) {
  const Eigen::Index n = data.n();
  CondCdfWeights out;
  out.t = t;
  out.w.resize(n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.w(i) = eval_kernel(kernel, (data.t(i) - t) / h);
    sum += out.w(i);
  }
  if (!(sum > 0.0))
    throw std::runtime_error("empty kernel window: no observation within bandwidth of t");
  out.w /= sum;
  return out;
}

}  // namespace drc
