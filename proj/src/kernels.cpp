#include "drcurve/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace drc {

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

// double factorial (j-1)!! for even j >= 0 moments of the standard normal
double odd_double_factorial(int j) {
  double v = 1.0;
  for (int k = j - 1; k >= 1; k -= 2) v *= k;
  return v;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

KernelKind kernel_from_string(const std::string& name) {
  if (name == "epanechnikov") return KernelKind::epanechnikov;
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "triangular") return KernelKind::triangular;
  if (name == "uniform") return KernelKind::uniform;
  throw std::invalid_argument("unknown kernel: " + name);
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::epanechnikov: return "epanechnikov";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::triangular: return "triangular";
    case KernelKind::uniform: return "uniform";
  }
  return "?";
}

double eval_kernel(KernelSpec spec, double u) {
  switch (spec.kind) {
    case KernelKind::epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelKind::gaussian:
      return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    case KernelKind::triangular:
      return std::abs(u) <= 1.0 ? 1.0 - std::abs(u) : 0.0;
    case KernelKind::uniform:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
  }
  return 0.0;
}

double kernel_moment(KernelSpec spec, int j, bool squared) {
  if (j < 0) throw std::invalid_argument("moment order must be >= 0");
  if (j % 2 == 1) return 0.0;  // symmetric kernels
  switch (spec.kind) {
    case KernelKind::epanechnikov: {
      const double a = static_cast<double>(j);
      if (!squared) return 1.5 * (1.0 / (a + 1.0) - 1.0 / (a + 3.0));
      return 1.125 * (1.0 / (a + 1.0) - 2.0 / (a + 3.0) + 1.0 / (a + 5.0));
    }
    case KernelKind::gaussian: {
      if (!squared) return odd_double_factorial(j);
      // int u^j phi(u)^2 du = (1/(2 sqrt(pi))) * E[U^j], U ~ N(0, 1/2)
      return odd_double_factorial(j) * std::pow(0.5, j / 2) /
             (2.0 * std::sqrt(std::numbers::pi));
    }
    default: {
      auto f = [&](double u) {
        const double k = eval_kernel(spec, u);
        const double w = squared ? k * k : k;
        return std::pow(u, j) * w;
      };
      return integrate(f, -1.0, 1.0, 1e-13);
    }
  }
}

double sample_sd(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n < 2) throw std::invalid_argument("need n >= 2 for a standard deviation");
  const double mean = values.mean();
  const double ss = (values.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(n - 1));
}

Bandwidth bandwidth_rule(const Eigen::VectorXd& values, BandwidthRule rule, double scale) {
  const double sd = sample_sd(values);
  if (!(sd > 0.0)) throw std::invalid_argument("degenerate bandwidth: zero-variance input");
  const double n = static_cast<double>(values.size());
  const double base = sd * std::pow(n, -0.2);
  Bandwidth bw;
  bw.rule = rule;
  switch (rule) {
    case BandwidthRule::scaled:
      if (!(scale > 0.0)) throw std::invalid_argument("bandwidth scale must be > 0");
      bw.scale = scale;
      bw.h = scale * base;
      break;
    case BandwidthRule::silverman:
      bw.scale = std::pow(4.0 / 3.0, 0.2);
      bw.h = bw.scale * base;
      break;
  }
  return bw;
}

}  // namespace drc
