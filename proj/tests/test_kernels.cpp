#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drcurve/kernels.hpp"
#include "drcurve/stats.hpp"

using drc::KernelKind;
using drc::KernelSpec;

TEST_CASE("kernel point evaluations") {
  CHECK(drc::eval_kernel({KernelKind::epanechnikov}, 0.0) == doctest::Approx(0.75));
  CHECK(drc::eval_kernel({KernelKind::epanechnikov}, 1.5) == 0.0);
  CHECK(drc::eval_kernel({KernelKind::gaussian}, 0.0) ==
        doctest::Approx(0.3989422804014327).epsilon(1e-12));
  CHECK(drc::eval_kernel({KernelKind::epanechnikov}, 0.5) == doctest::Approx(0.5625));
}

TEST_CASE("closed-form kernel moments") {
  const KernelSpec ep{KernelKind::epanechnikov};
  const KernelSpec ga{KernelKind::gaussian};
  CHECK(std::abs(drc::kernel_moment(ep, 1, false)) <= 1e-12);
  CHECK(std::abs(drc::kernel_moment(ep, 2, false) - 0.2) <= 1e-12);
  CHECK(std::abs(drc::kernel_moment(ep, 4, false) - 3.0 / 35.0) <= 1e-12);
  CHECK(std::abs(drc::kernel_moment(ep, 0, true) - 0.6) <= 1e-12);
  CHECK(std::abs(drc::kernel_moment(ga, 2, false) - 1.0) <= 1e-12);
  CHECK(std::abs(drc::kernel_moment(ga, 0, false) - 1.0) <= 1e-12);
}

TEST_CASE("every kind integrates to one and is symmetric") {
  for (KernelKind kind : {KernelKind::epanechnikov, KernelKind::gaussian,
                          KernelKind::triangular, KernelKind::uniform}) {
    const KernelSpec spec{kind};
    const double lo = spec.compact_support() ? -1.0 : -10.0;
    const double mass =
        drc::integrate([spec](double u) { return drc::eval_kernel(spec, u); }, lo, -lo, 1e-11);
    CHECK(std::abs(mass - 1.0) <= 1e-10);
    CHECK(std::abs(drc::kernel_moment(spec, 1, false)) <= 1e-12);
    CHECK(drc::kernel_moment(spec, 2, false) > 0.0);
    for (int k = 0; k <= 1000; ++k) {
      const double u = -5.0 + 0.01 * k;
      CHECK(drc::eval_kernel(spec, u) == drc::eval_kernel(spec, -u));
      if (spec.compact_support() && std::abs(u) > 1.0)
        CHECK(drc::eval_kernel(spec, u) == 0.0);
    }
  }
}

TEST_CASE("kernel_moment is deterministic") {
  for (KernelKind kind : {KernelKind::triangular, KernelKind::uniform}) {
    const double a = drc::kernel_moment({kind}, 2, true);
    const double b = drc::kernel_moment({kind}, 2, true);
    CHECK(a == b);
  }
}

TEST_CASE("bandwidth rules") {
  // sd = 1 by construction: values {-1, 0, 1} repeated have sample sd
  // sqrt(sum/(n-1)); build a vector with exact unit sd instead.
  Eigen::VectorXd v(3125);
  for (int i = 0; i < 3125; ++i) v(i) = (i % 2 == 0) ? 1.0 : -1.0;
  const double sd = drc::sample_sd(v);
  const drc::Bandwidth b = drc::bandwidth_rule(v, drc::BandwidthRule::scaled, 1.25);
  CHECK(b.h == doctest::Approx(1.25 * sd * std::pow(3125.0, -0.2)).epsilon(1e-12));

  Eigen::VectorXd w(1024);
  for (int i = 0; i < 1024; ++i) w(i) = (i < 512) ? 0.0 : 2.0;  // sd computed below
  const double sdw = drc::sample_sd(w);
  const drc::Bandwidth s = drc::bandwidth_rule(w, drc::BandwidthRule::silverman, 1.0);
  // silverman with sd = 1, n = 1024 gives (4/3)^{1/5}/4 = 0.264805960262203
  CHECK(s.h / sdw == doctest::Approx(0.264805960262203).epsilon(1e-12));

  Eigen::VectorXd c = Eigen::VectorXd::Constant(10, 3.0);
  CHECK_THROWS(drc::bandwidth_rule(c, drc::BandwidthRule::scaled, 1.25));
}

TEST_CASE("normal quantile and cdf") {
  CHECK(drc::normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(drc::normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(drc::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(drc::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  for (double p : {0.01, 0.1, 0.3, 0.7, 0.9, 0.99})
    CHECK(drc::normal_cdf(drc::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
}
