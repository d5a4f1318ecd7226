#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drcurve/crossfit.hpp"

namespace drc {

enum class DgpKind { dgp1, dgp2 };

DgpKind dgp_from_string(const std::string& name);
std::string to_string(DgpKind kind);

struct DgpSpec {
  DgpKind kind = DgpKind::dgp1;
  Eigen::Index n = 1000;
  int d = 5;  // dgp1 only; dgp2 forces d = 1
  std::uint64_t seed = 0;
};

// Benchmark design 1: positivity holds. S ~ N_d(0, Sigma) with tridiagonal
// Sigma (unit diagonal, 0.5 off-diagonal), xi_j = 1/j^2,
// T = Phi(3 xi'S) - 0.5 + 0.75 E, Y = 1.2T + T^2 + T S_1 + 1.2 xi'S + noise.
// Truth: theta(t) = 1.2 + 2t, m(t) = 1.2t + t^2.
ObservationSet gen_dgp1(Eigen::Index n, int d, std::uint64_t seed);

// Benchmark design 2: positivity fails. S ~ U[-1,1], E ~ U[-0.3, 0.3],
// T = sin(pi S) + E, Y = T^3 + T^2 + 10 S + eps.
// Truth: theta(t) = 3t^2 + 2t, m(t) = t^3 + t^2.
ObservationSet gen_dgp2(Eigen::Index n, std::uint64_t seed);

ObservationSet gen_data(const DgpSpec& spec);

double theta_true(DgpKind kind, double t);
double m_true(DgpKind kind, double t);

// Closed-form nuisance functions of each design (exact mu, beta, p_{T|S}).
NuisanceFns dgp1_oracle(int d);
NuisanceFns dgp2_oracle();

struct EstimatorRun {
  EstimatorKind kind = EstimatorKind::theta_dr;
  NuisanceSpec nuisance;
  EstimatorOptions opts;
  std::string label;  // defaults to the estimator tag
};

struct MonteCarloSpec {
  DgpSpec dgp;
  std::vector<EstimatorRun> estimators;
  KernelSpec kernel{KernelKind::epanechnikov};
  BandwidthRule bw_rule = BandwidthRule::scaled;
  double bw_scale = 1.25;
  int folds = 1;
  EvalGrid grid;
  int reps = 1;
  int threads = 1;
  bool strict = false;  // abort on a failing replication instead of skipping
};

struct EstimatorReport {
  std::string label;
  std::vector<double> mean_estimate;
  std::vector<double> bias;
  std::vector<double> rmse;
  std::vector<double> coverage;  // NaN where no CI is produced
  std::vector<int> n_valid;      // replications contributing per grid point
  int reps = 0;
  int failures = 0;  // replications skipped entirely
};

struct SimulationReport {
  MonteCarloSpec spec;
  std::vector<EstimatorReport> results;
};

// Replications run in parallel over a deterministic substream per rep;
// the aggregation is order-insensitive, so output is thread-count
// independent.
SimulationReport run_monte_carlo(const MonteCarloSpec& spec);

}  // namespace drc
