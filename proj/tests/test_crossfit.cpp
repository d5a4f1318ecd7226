#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "drcurve/simulate.hpp"
#include "drcurve/stats.hpp"
#include "helpers.hpp"

using drc::Bandwidth;
using drc::CurveEstimate;
using drc::EstimatorKind;
using drc::EstimatorOptions;
using drc::EvalGrid;
using drc::FoldAssignment;
using drc::KernelKind;
using drc::KernelSpec;
using drc::NuisanceSpec;
using drc::NuisanceView;

namespace {

const KernelSpec kEpan{KernelKind::epanechnikov};

Bandwidth bw(double h) {
  Bandwidth b;
  b.h = h;
  return b;
}

NuisanceSpec fitted_spec() {
  NuisanceSpec spec;
  spec.ridge_lambda = 1e-8;
  return spec;
}

}  // namespace

TEST_CASE("fold assignments partition the sample evenly") {
  const FoldAssignment fa = drc::make_folds(103, 5, 42);
  CHECK(fa.L == 5);
  CHECK(fa.fold_of.size() == 103);
  std::vector<int> counts(5, 0);
  for (int f : fa.fold_of) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++counts[static_cast<std::size_t>(f)];
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);
  // deterministic in the seed, different across seeds
  CHECK(drc::make_folds(103, 5, 42).fold_of == fa.fold_of);
  CHECK(drc::make_folds(103, 5, 43).fold_of != fa.fold_of);
  // the shuffle actually mixes: not simply blocks of consecutive indices
  CHECK(std::set<int>(fa.fold_of.begin(), fa.fold_of.begin() + 10).size() > 1);
}

TEST_CASE("fold edge cases") {
  const FoldAssignment one = drc::make_folds(10, 1, 7);
  CHECK(std::all_of(one.fold_of.begin(), one.fold_of.end(), [](int f) { return f == 0; }));
  const FoldAssignment full = drc::make_folds(6, 6, 7);
  CHECK(std::set<int>(full.fold_of.begin(), full.fold_of.end()).size() == 6);
  CHECK_THROWS(drc::make_folds(10, 0, 7));
  CHECK_THROWS(drc::make_folds(10, 11, 7));
  CHECK_THROWS(drc::make_folds(10, -2, 7));
}

TEST_CASE("estimator tags round trip") {
  using drc::estimator_kind_from_string;
  using drc::to_string;
  for (auto kind :
       {EstimatorKind::m_ra, EstimatorKind::m_ipw, EstimatorKind::m_dr, EstimatorKind::theta_ra,
        EstimatorKind::theta_ipw, EstimatorKind::theta_dr, EstimatorKind::theta_dr_eif,
        EstimatorKind::theta_c_ra, EstimatorKind::theta_c_ipw, EstimatorKind::theta_c_dr})
    CHECK(estimator_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS(estimator_kind_from_string("theta_xyz"));
  CHECK(drc::is_theta_kind(EstimatorKind::theta_c_dr));
  CHECK(!drc::is_theta_kind(EstimatorKind::m_dr));
}

TEST_CASE("single-fold cross-fitting is bitwise identical to a plain fit") {
  const drc::ObservationSet data = drc::gen_dgp1(80, 3, 5);
  const EvalGrid grid{{-0.5, 0.0, 0.5}};
  EstimatorOptions opts;
  for (auto kind : {EstimatorKind::m_ra, EstimatorKind::m_ipw, EstimatorKind::m_dr,
                    EstimatorKind::theta_ra, EstimatorKind::theta_ipw, EstimatorKind::theta_dr,
                    EstimatorKind::theta_dr_eif, EstimatorKind::theta_c_ra,
                    EstimatorKind::theta_c_ipw, EstimatorKind::theta_c_dr}) {
    const NuisanceSpec spec = fitted_spec();
    const CurveEstimate cf =
        drc::crossfit_curve(data, kind, spec, kEpan, bw(0.4), grid, 1, 99, opts);
    const drc::NuisanceFns fns = drc::fit_nuisances(data, spec, kind);
    const auto view = NuisanceView::single(data, fns);
    const CurveEstimate direct = drc::apply_estimator(view, kind, kEpan, bw(0.4), grid, opts);
    REQUIRE(cf.estimates.size() == direct.estimates.size());
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
      CHECK(cf.estimates[g].value == direct.estimates[g].value);  // bitwise
      CHECK(cf.estimates[g].variance == direct.estimates[g].variance);
      CHECK(cf.estimates[g].flagged == direct.estimates[g].flagged);
    }
  }
}

TEST_CASE("oracle nuisances make the curve fold-count invariant") {
  const drc::ObservationSet data = drc::gen_dgp1(60, 2, 9);
  const EvalGrid grid{{0.0, 0.3}};
  EstimatorOptions opts;
  NuisanceSpec spec;
  const drc::NuisanceFns oracle = drc::dgp1_oracle(2);
  spec.oracle_mu = oracle.mu;
  spec.oracle_beta = oracle.beta;
  spec.oracle_cond_pdf = oracle.cond_pdf;
  const CurveEstimate base =
      drc::crossfit_curve(data, EstimatorKind::theta_dr, spec, kEpan, bw(0.5), grid, 1, 1, opts);
  for (int L : {2, 3, 5}) {
    const CurveEstimate cf = drc::crossfit_curve(data, EstimatorKind::theta_dr, spec, kEpan,
                                                 bw(0.5), grid, L, 1, opts);
    for (std::size_t g = 0; g < grid.points.size(); ++g)
      CHECK(cf.estimates[g].value == doctest::Approx(base.estimates[g].value).epsilon(1e-13));
  }
}

TEST_CASE("five-fold cross-fitting matches a hand-orchestrated loop") {
  const drc::ObservationSet data = drc::gen_dgp1(200, 3, 17);
  const EvalGrid grid{{-0.3, 0.2}};
  EstimatorOptions opts;
  const NuisanceSpec spec = fitted_spec();
  const int L = 5;
  const std::uint64_t seed = 31;
  const CurveEstimate cf =
      drc::crossfit_curve(data, EstimatorKind::theta_dr, spec, kEpan, bw(0.5), grid, L, seed, opts);

  const FoldAssignment fa = drc::make_folds(data.n(), L, seed);
  const std::vector<drc::NuisanceFns> fns =
      drc::crossfit_nuisances(data, fa, spec, EstimatorKind::theta_dr);
  const NuisanceView view(data, fns, fa.fold_of);
  const CurveEstimate manual =
      drc::apply_estimator(view, EstimatorKind::theta_dr, kEpan, bw(0.5), grid, opts);
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    CHECK(cf.estimates[g].value == manual.estimates[g].value);  // bitwise
    CHECK(cf.estimates[g].variance == manual.estimates[g].variance);
  }
}

TEST_CASE("incomplete oracle groups are rejected") {
  NuisanceSpec spec;
  spec.oracle_mu = [](double, const Eigen::RowVectorXd&) { return 0.0; };
  const drc::ObservationSet data = drc::gen_dgp1(30, 2, 3);
  CHECK_THROWS(drc::fit_nuisances(data, spec, EstimatorKind::theta_dr));
  NuisanceSpec jspec;
  jspec.oracle_joint_pdf = [](double, const Eigen::RowVectorXd&) { return 1.0; };
  CHECK_THROWS(drc::fit_nuisances(data, jspec, EstimatorKind::theta_c_ipw));
}

TEST_CASE("bootstrap band is seed-reproducible and law-sensitive") {
  const drc::ObservationSet data = drc::gen_dgp1(150, 2, 23);
  const drc::NuisanceFns fns = drc::fit_nuisances(data, fitted_spec(), EstimatorKind::theta_dr);
  const auto view = NuisanceView::single(data, fns);
  const EvalGrid grid = EvalGrid::linspace(-1.0, 1.0, 11);
  EstimatorOptions opts;
  const auto a = drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 60, 0.05,
                                                drc::MultiplierLaw::exponential, 7, opts);
  const auto b = drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 60, 0.05,
                                                drc::MultiplierLaw::exponential, 7, opts);
  CHECK(a.quantile == b.quantile);  // bitwise
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  const auto c = drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 60, 0.05,
                                                drc::MultiplierLaw::exponential, 8, opts);
  CHECK(a.quantile != c.quantile);
  const auto d = drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 60, 0.05,
                                                drc::MultiplierLaw::two_point, 7, opts);
  CHECK(d.quantile > 0.0);
  CHECK(d.quantile != a.quantile);
}

TEST_CASE("degenerate multipliers produce a zero-width band exactly") {
  const drc::ObservationSet data = drc::gen_dgp1(120, 2, 29);
  const drc::NuisanceFns fns = drc::fit_nuisances(data, fitted_spec(), EstimatorKind::theta_dr);
  const auto view = NuisanceView::single(data, fns);
  const EvalGrid grid = EvalGrid::linspace(-1.0, 1.0, 9);
  const auto band = drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 25, 0.05,
                                                   drc::MultiplierLaw::degenerate, 3, {});
  CHECK(band.quantile == 0.0);
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    CHECK(band.lower[g] == band.base.estimates[g].value);
    CHECK(band.upper[g] == band.base.estimates[g].value);
  }
}

TEST_CASE("the band base is the plain dr curve and dominates the pointwise ci") {
  const drc::ObservationSet data = drc::gen_dgp1(150, 2, 37);
  const drc::NuisanceFns fns = drc::fit_nuisances(data, fitted_spec(), EstimatorKind::theta_dr);
  const auto view = NuisanceView::single(data, fns);
  const EvalGrid grid = EvalGrid::linspace(-1.0, 1.0, 11);
  EstimatorOptions opts;
  const auto band = drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 300, 0.05,
                                                   drc::MultiplierLaw::exponential, 11, opts);
  EstimatorOptions plain = opts;
  plain.self_normalized = false;
  const CurveEstimate dr = drc::theta_dr(view, kEpan, bw(0.5), grid, plain);
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    CHECK(band.base.estimates[g].value == doctest::Approx(dr.estimates[g].value).epsilon(1e-12));
    // a uniform band must be at least as wide as the pointwise interval
    // whenever Q-hat exceeds the normal quantile
    if (band.quantile >= drc::normal_quantile(0.975)) {
      CHECK(band.lower[g] <= dr.ci_lower[g] + 1e-12);
      CHECK(band.upper[g] >= dr.ci_upper[g] - 1e-12);
    }
  }
  CHECK(band.base.band_quantile.has_value());
  CHECK(*band.base.band_quantile == band.quantile);
}

TEST_CASE("single-replicate quantile is that replicate's sup") {
  const drc::ObservationSet data = drc::gen_dgp1(80, 2, 41);
  const drc::NuisanceFns fns = drc::fit_nuisances(data, fitted_spec(), EstimatorKind::theta_dr);
  const auto view = NuisanceView::single(data, fns);
  const EvalGrid grid{{0.0}};
  const auto band = drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 1, 0.05,
                                                   drc::MultiplierLaw::exponential, 2, {});
  CHECK(band.replicates == 1);
  CHECK(band.quantile >= 0.0);
  CHECK_THROWS(drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 0, 0.05,
                                              drc::MultiplierLaw::exponential, 2, {}));
  CHECK_THROWS(drc::multiplier_bootstrap_band(view, kEpan, bw(0.5), grid, 10, 1.5,
                                              drc::MultiplierLaw::exponential, 2, {}));
}
