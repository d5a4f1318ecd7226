#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "drcurve/data.hpp"

namespace drc {

enum class KernelKind { epanechnikov, gaussian, triangular, uniform };

struct KernelSpec {
  KernelKind kind = KernelKind::epanechnikov;

  [[nodiscard]] bool compact_support() const { return kind != KernelKind::gaussian; }
};

KernelKind kernel_from_string(const std::string& name);
std::string to_string(KernelKind kind);

double eval_kernel(KernelSpec spec, double u);

// kappa_j = int u^j K(u) du  (squared=false)
// nu_j    = int u^j K^2(u) du (squared=true)
// Closed forms for epanechnikov/gaussian, adaptive quadrature otherwise.
double kernel_moment(KernelSpec spec, int j, bool squared);

struct Bandwidth {
  double h = 0.0;
  BandwidthRule rule = BandwidthRule::scaled;
  double scale = 1.0;
};

// scaled:    h = scale * sd * n^{-1/5}
// silverman: h = (4/3)^{1/5} * sd * n^{-1/5}
// Throws on zero-variance input.
Bandwidth bandwidth_rule(const Eigen::VectorXd& values, BandwidthRule rule, double scale = 1.0);

double sample_sd(const Eigen::VectorXd& values);

// Adaptive Simpson quadrature on [a, b] to absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b, double tol);

}  // namespace drc
