#pragma once

#include <Eigen/Dense>

#include "drcurve/estimators.hpp"

namespace testutil {

// Small fixed dataset used by the hand-computed estimator checks.
inline drc::ObservationSet three_point() {
  drc::ObservationSet data;
  data.t.resize(3);
  data.t << 0.1, -0.3, 0.5;
  data.y.resize(3);
  data.y << 1.0, 0.5, -0.2;
  data.s.resize(3, 1);
  data.s << 0.2, -0.4, 0.1;
  return data;
}

// Linear outcome nuisances matching the hand calculations.
inline drc::NuisanceFns linear_fns() {
  drc::NuisanceFns fns;
  fns.mu = [](double t, const Eigen::RowVectorXd& s) {
    return 0.5 + 0.3 * t + 0.2 * s(0);
  };
  fns.beta = [](double, const Eigen::RowVectorXd&) { return 0.3; };
  fns.cond_pdf = [](double t, const Eigen::RowVectorXd& s) {
    return 0.6 + 0.2 * s(0) + 0.05 * t;
  };
  return fns;
}

inline drc::NuisanceFns zero_outcome_fns() {
  drc::NuisanceFns fns = linear_fns();
  fns.mu = [](double, const Eigen::RowVectorXd&) { return 0.0; };
  fns.beta = [](double, const Eigen::RowVectorXd&) { return 0.0; };
  return fns;
}

}  // namespace testutil
