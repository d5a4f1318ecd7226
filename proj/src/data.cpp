#include "drcurve/data.hpp"

#include <cmath>

namespace drc {

EvalGrid EvalGrid::linspace(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("grid count must be >= 1");
  if (count > 1 && !(lo < hi)) throw std::invalid_argument("grid requires lo < hi");
  EvalGrid g;
  g.points.resize(static_cast<std::size_t>(count));
  if (count == 1) {
    g.points[0] = lo;
    return g;
  }
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) g.points[static_cast<std::size_t>(i)] = lo + step * i;
  g.points.back() = hi;
  return g;
}

const ObservationSet& validate(const ObservationSet& data) {
  const Eigen::Index n = data.y.size();
  if (data.t.size() != n || data.s.rows() != n)
    throw std::invalid_argument("ObservationSet: y, t, s row counts differ");
  if (n < 2) throw std::invalid_argument("ObservationSet: need n >= 2");
  if (data.s.cols() < 1) throw std::invalid_argument("ObservationSet: need d >= 1");
  if (!data.y.allFinite() || !data.t.allFinite() || !data.s.allFinite())
    throw std::invalid_argument("ObservationSet: non-finite entry");
  return data;
}

void check_config(const EstimationConfig& cfg) {
  if (!(cfg.bandwidth_scale > 0)) throw std::invalid_argument("bandwidth scale must be > 0");
  if (cfg.folds < 1) throw std::invalid_argument("folds must be >= 1");
  if (!(cfg.density_floor > 0)) throw std::invalid_argument("density floor must be > 0");
  if (!(cfg.ci_level > 0 && cfg.ci_level < 1)) throw std::invalid_argument("ci level must lie in (0,1)");
}

}  // namespace drc
