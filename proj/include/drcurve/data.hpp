#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace drc {

// Immutable sample {(Y_i, T_i, S_i)}. Covariates are stored as a dense
// n x d matrix; discrete covariates must be pre-encoded numerically.
struct ObservationSet {
  Eigen::VectorXd y;
  Eigen::VectorXd t;
  Eigen::MatrixXd s;

  [[nodiscard]] Eigen::Index n() const { return y.size(); }
  [[nodiscard]] Eigen::Index dim() const { return s.cols(); }
};

// Strictly increasing query points for m(t) / theta(t).
struct EvalGrid {
  std::vector<double> points;

  static EvalGrid linspace(double lo, double hi, int count);
};

enum class IpwWeightPoint { sample_point, query_point };
enum class BandwidthRule { scaled, silverman };

struct EstimationConfig {
  BandwidthRule bandwidth_rule = BandwidthRule::scaled;
  double bandwidth_scale = 1.25;
  int folds = 1;
  bool self_normalized = true;
  IpwWeightPoint ipw_weight_point = IpwWeightPoint::sample_point;
  double density_floor = 0.001;
  double ci_level = 0.05;  // tau
  std::uint64_t rng_seed = 0;
};

// Throws std::invalid_argument on dimension mismatch, non-finite entries,
// or n < 2; otherwise returns its input unchanged.
const ObservationSet& validate(const ObservationSet& data);

void check_config(const EstimationConfig& cfg);

}  // namespace drc
