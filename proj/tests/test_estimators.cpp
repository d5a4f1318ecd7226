#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drcurve/estimators.hpp"
#include "drcurve/stats.hpp"
#include "helpers.hpp"

using drc::Bandwidth;
using drc::CurveEstimate;
using drc::EstimatorOptions;
using drc::EvalGrid;
using drc::KernelKind;
using drc::KernelSpec;
using drc::NuisanceView;

namespace {

const KernelSpec kEpan{KernelKind::epanechnikov};

Bandwidth bw(double h) {
  Bandwidth b;
  b.h = h;
  return b;
}

EvalGrid at(double t) { return EvalGrid{{t}}; }

EstimatorOptions plain() {
  EstimatorOptions o;
  o.self_normalized = false;
  return o;
}

EstimatorOptions selfnorm() { return EstimatorOptions{}; }

}  // namespace

TEST_CASE("regression-adjustment point values") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  const double mean_s = data.s.col(0).mean();
  const CurveEstimate m = drc::m_ra(view, at(0.2));
  CHECK(m.estimates[0].value ==
        doctest::Approx(0.5 + 0.3 * 0.2 + 0.2 * mean_s).epsilon(1e-14));
  CHECK(m.estimates[0].n_effective == 3);
  const CurveEstimate th = drc::theta_ra(view, at(0.2));
  CHECK(th.estimates[0].value == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(th.method == "theta_ra");
}

TEST_CASE("ipw point values against hand computation") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  CHECK(drc::m_ipw(view, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value ==
        doctest::Approx(0.6252032078250201).epsilon(1e-14));
  CHECK(drc::m_ipw(view, kEpan, bw(0.7), at(0.2), selfnorm()).estimates[0].value ==
        doctest::Approx(0.4662883845126836).epsilon(1e-14));
  CHECK(drc::theta_ipw(view, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value ==
        doctest::Approx(-1.713867645660015).epsilon(1e-14));
  CHECK(drc::theta_ipw(view, kEpan, bw(0.7), at(0.2), selfnorm()).estimates[0].value ==
        doctest::Approx(-1.2782349254788699).epsilon(1e-14));
  EstimatorOptions q = plain();
  q.variant = drc::IpwWeightPoint::query_point;
  CHECK(drc::theta_ipw(view, kEpan, bw(0.7), at(0.2), q).estimates[0].value ==
        doctest::Approx(-1.67451760509909).epsilon(1e-14));
}

TEST_CASE("dr point values against hand computation") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  CHECK(drc::m_dr(view, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value ==
        doctest::Approx(0.4246587260936412).epsilon(1e-14));
  CHECK(drc::m_dr(view, kEpan, bw(0.7), at(0.2), selfnorm()).estimates[0].value ==
        doctest::Approx(0.4573653760569648).epsilon(1e-14));
  const CurveEstimate un = drc::theta_dr(view, kEpan, bw(0.7), at(0.2), plain());
  CHECK(un.estimates[0].value == doctest::Approx(-1.4422540066656708).epsilon(1e-14));
  CHECK(un.method == "theta_dr");
  CHECK(un.estimates[0].n_effective == 3);
  CHECK(drc::theta_dr(view, kEpan, bw(0.7), at(0.2), selfnorm()).estimates[0].value ==
        doctest::Approx(-0.9994060107354024).epsilon(1e-14));
}

TEST_CASE("dr variance against hand computation") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  const CurveEstimate un = drc::theta_dr(view, kEpan, bw(0.7), at(0.2), plain());
  CHECK(un.estimates[0].variance == doctest::Approx(0.6012102689667772).epsilon(1e-14));
  const CurveEstimate sn = drc::theta_dr(view, kEpan, bw(0.7), at(0.2), selfnorm());
  CHECK(sn.estimates[0].variance == doctest::Approx(0.33442072865543665).epsilon(1e-14));
  // standalone variance matches the curve-attached one
  CHECK(drc::variance_theta_dr(view, kEpan, bw(0.7), 0.2, un.estimates[0].value, plain()) ==
        un.estimates[0].variance);
  // curve CI matches pointwise_ci on the same inputs
  const auto ci = drc::pointwise_ci(un.estimates[0].value, un.estimates[0].variance, 3, 0.7,
                                    0.05, true);
  CHECK(un.ci_lower[0] == doctest::Approx(ci.first).epsilon(1e-14));
  CHECK(un.ci_upper[0] == doctest::Approx(ci.second).epsilon(1e-14));
}

TEST_CASE("eif and local-polynomial residuals differ for curved mu") {
  const auto data = testutil::three_point();
  drc::NuisanceFns fns = testutil::linear_fns();
  fns.mu = [](double t, const Eigen::RowVectorXd& s) {
    return 0.5 + 0.3 * t + 0.1 * t * t + 0.2 * s(0);
  };
  fns.beta = [](double t, const Eigen::RowVectorXd&) { return 0.3 + 0.2 * t; };
  const auto view = NuisanceView::single(data, fns);
  EstimatorOptions lp = plain();
  const CurveEstimate a = drc::theta_dr(view, kEpan, bw(0.7), at(0.2), lp);
  CHECK(a.estimates[0].value == doctest::Approx(-1.4526699374093066).epsilon(1e-14));
  EstimatorOptions eif = plain();
  eif.form = drc::DrForm::eif;
  const CurveEstimate b = drc::theta_dr(view, kEpan, bw(0.7), at(0.2), eif);
  CHECK(b.estimates[0].value == doctest::Approx(-1.4203873017559638).epsilon(1e-14));
  CHECK(b.method == "theta_dr2");
}

TEST_CASE("dr with zero outcome model reproduces ipw bitwise") {
  const auto data = testutil::three_point();
  const auto ipw_view = NuisanceView::single(data, testutil::linear_fns());
  const auto zero_view = NuisanceView::single(data, testutil::zero_outcome_fns());
  for (const auto& opts : {plain(), selfnorm()}) {
    const auto grid = EvalGrid{{-0.2, 0.2, 0.4}};
    const CurveEstimate ipw_m = drc::m_ipw(ipw_view, kEpan, bw(0.7), grid, opts);
    const CurveEstimate dr_m = drc::m_dr(zero_view, kEpan, bw(0.7), grid, opts);
    const CurveEstimate ipw_t = drc::theta_ipw(ipw_view, kEpan, bw(0.7), grid, opts);
    const CurveEstimate dr_t = drc::theta_dr(zero_view, kEpan, bw(0.7), grid, opts);
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
      CHECK(dr_m.estimates[g].value == ipw_m.estimates[g].value);  // bitwise
      CHECK(dr_t.estimates[g].value == ipw_t.estimates[g].value);  // bitwise
      CHECK(dr_t.estimates[g].variance == ipw_t.estimates[g].variance);
    }
  }
}

TEST_CASE("correct linear outcome model annihilates the residual term") {
  // Y = 0.4 + 1.7 T exactly; with the matching mu/beta the DR correction
  // vanishes and theta_dr returns the slope regardless of the density.
  drc::ObservationSet data = testutil::three_point();
  data.y = 0.4 + 1.7 * data.t.array();
  drc::NuisanceFns fns = testutil::linear_fns();
  fns.mu = [](double t, const Eigen::RowVectorXd&) { return 0.4 + 1.7 * t; };
  fns.beta = [](double, const Eigen::RowVectorXd&) { return 1.7; };
  const auto view = NuisanceView::single(data, fns);
  for (const auto& opts : {plain(), selfnorm()}) {
    for (double t : {-0.1, 0.2, 0.45}) {
      const CurveEstimate th = drc::theta_dr(view, kEpan, bw(0.7), at(t), opts);
      CHECK(std::abs(th.estimates[0].value - 1.7) <= 1e-10);
    }
  }
}

TEST_CASE("outcome scaling equivariance") {
  const auto data = testutil::three_point();
  drc::ObservationSet scaled = data;
  const double c = -2.5;
  scaled.y = c * data.y;
  drc::NuisanceFns fns = testutil::linear_fns();
  drc::NuisanceFns sfns = fns;
  sfns.mu = [c, fns](double t, const Eigen::RowVectorXd& s) { return c * fns.mu(t, s); };
  sfns.beta = [c, fns](double t, const Eigen::RowVectorXd& s) { return c * fns.beta(t, s); };
  const auto view = NuisanceView::single(data, fns);
  const auto sview = NuisanceView::single(scaled, sfns);
  const double base = drc::theta_dr(view, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value;
  const double got = drc::theta_dr(sview, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value;
  CHECK(got == doctest::Approx(c * base).epsilon(1e-12));
}

TEST_CASE("outcome translation invariance of theta") {
  const auto data = testutil::three_point();
  drc::ObservationSet shifted = data;
  shifted.y = data.y.array() + 10.0;
  drc::NuisanceFns fns = testutil::linear_fns();
  drc::NuisanceFns tfns = fns;
  tfns.mu = [fns](double t, const Eigen::RowVectorXd& s) { return fns.mu(t, s) + 10.0; };
  const auto view = NuisanceView::single(data, fns);
  const auto tview = NuisanceView::single(shifted, tfns);
  const double base = drc::theta_dr(view, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value;
  const double got = drc::theta_dr(tview, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value;
  CHECK(got == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("un-normalized and self-normalized forms are linked by the denominator mean") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  const double denom = drc::ipw_denominator_mean(view, kEpan, bw(0.7), 0.2, plain());
  const double un = drc::m_ipw(view, kEpan, bw(0.7), at(0.2), plain()).estimates[0].value;
  const double sn = drc::m_ipw(view, kEpan, bw(0.7), at(0.2), selfnorm()).estimates[0].value;
  CHECK(un == doctest::Approx(sn * denom).epsilon(1e-13));
  CHECK(denom > 0.0);
}

TEST_CASE("weight-point diagnostic equals the query-sample gap") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  CHECK(drc::ipw_variant_bias_diag(view, kEpan, bw(0.7), 0.2, plain()) ==
        doctest::Approx(0.03935004056092506).epsilon(1e-13));
}

TEST_CASE("pointwise confidence interval scales") {
  const auto ci = drc::pointwise_ci(1.0, 4.0, 1000, 0.1, 0.05, true);
  const double half = (ci.second - ci.first) / 2.0;
  CHECK(half == doctest::Approx(3.9199279999999996).epsilon(1e-5));
  CHECK(half ==
        doctest::Approx(drc::normal_quantile(0.975) * std::sqrt(4.0 / (1000 * 1e-3)))
            .epsilon(1e-14));
  CHECK((ci.first + ci.second) / 2.0 == doctest::Approx(1.0).epsilon(1e-14));
  // m-scale divides by n h instead of n h^3
  const auto mci = drc::pointwise_ci(1.0, 4.0, 1000, 0.1, 0.05, false);
  CHECK((mci.second - mci.first) / 2.0 == doctest::Approx(half * 0.1).epsilon(1e-12));
  // degenerate variance collapses to the point
  const auto zci = drc::pointwise_ci(2.0, 0.0, 1000, 0.1, 0.05, true);
  CHECK(zci.first == 2.0);
  CHECK(zci.second == 2.0);
  CHECK_THROWS(drc::pointwise_ci(1.0, -1.0, 10, 0.1, 0.05, true));
}

TEST_CASE("partial window reduces n_effective") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  const CurveEstimate th = drc::theta_ipw(view, kEpan, bw(0.3), at(0.5), plain());
  CHECK(th.estimates[0].n_effective == 1);
  CHECK(!th.estimates[0].flagged);
}

TEST_CASE("empty kernel window: flagged in batch mode, throws in strict mode") {
  const auto data = testutil::three_point();
  const auto view = NuisanceView::single(data, testutil::linear_fns());
  EstimatorOptions opts = plain();
  const EvalGrid grid{{0.2, 100.0}};
  const CurveEstimate th = drc::theta_dr(view, kEpan, bw(0.7), grid, opts);
  CHECK(!th.estimates[0].flagged);
  CHECK(th.estimates[1].flagged);
  CHECK(th.estimates[1].value == 0.0);
  CHECK(th.estimates[1].n_effective == 0);
  CHECK(th.ci_lower[1] == th.ci_upper[1]);
  const CurveEstimate m = drc::m_ipw(view, kEpan, bw(0.7), grid, opts);
  CHECK(m.estimates[1].flagged);
  opts.strict = true;
  CHECK_THROWS(drc::theta_dr(view, kEpan, bw(0.7), grid, opts));
  CHECK_THROWS(drc::m_ipw(view, kEpan, bw(0.7), grid, opts));
}

TEST_CASE("density floor bounds the implied weights") {
  const auto data = testutil::three_point();
  drc::NuisanceFns fns = testutil::linear_fns();
  fns.cond_pdf = [](double, const Eigen::RowVectorXd&) { return 1e-12; };
  const auto view = NuisanceView::single(data, fns);
  EstimatorOptions opts = plain();
  opts.density_floor = 0.5;  // every weight becomes 1/0.5
  const double got = drc::m_ipw(view, kEpan, bw(0.7), at(0.2), opts).estimates[0].value;
  double expect = 0.0;
  for (int i = 0; i < 3; ++i)
    expect += drc::eval_kernel(kEpan, (data.t(i) - 0.2) / 0.7) * data.y(i) / 0.5;
  expect /= 3.0 * 0.7;
  CHECK(got == doctest::Approx(expect).epsilon(1e-14));
}
