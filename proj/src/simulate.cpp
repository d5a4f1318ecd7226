#include "drcurve/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "drcurve/stats.hpp"

namespace drc {

DgpKind dgp_from_string(const std::string& name) {
  if (name == "dgp1") return DgpKind::dgp1;
  if (name == "dgp2") return DgpKind::dgp2;
  throw std::invalid_argument("unknown dgp: " + name);
}

std::string to_string(DgpKind kind) { return kind == DgpKind::dgp1 ? "dgp1" : "dgp2"; }

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd dgp1_xi(int d) {
  Eigen::VectorXd xi(d);
  for (int j = 0; j < d; ++j) xi(j) = 1.0 / ((j + 1.0) * (j + 1.0));
  return xi;
}

double dgp1_location(const Eigen::VectorXd& xi,
                     const Eigen::Ref<const Eigen::RowVectorXd>& s) {
  return normal_cdf(3.0 * s.dot(xi)) - 0.5;
}

}  // namespace

ObservationSet gen_dgp1(Eigen::Index n, int d, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
  for (int j = 0; j + 1 < d; ++j) sigma(j, j + 1) = sigma(j + 1, j) = 0.5;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("covariance matrix not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  const Eigen::VectorXd xi = dgp1_xi(d);

  std::mt19937_64 rng = make_rng(seed, kStreamData, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ObservationSet out;
  out.y.resize(n);
  out.t.resize(n);
  out.s.resize(n, d);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z(j) = gauss(rng);
    const Eigen::RowVectorXd s = (chol * z).transpose();
    const double e = gauss(rng);
    const double eps = gauss(rng);
    const double t = dgp1_location(xi, s) + 0.75 * e;
    const double lin = s.dot(xi);
    out.s.row(i) = s;
    out.t(i) = t;
    out.y(i) = 1.2 * t + t * t + t * s(0) + 1.2 * lin +
               eps * std::sqrt(0.5 + normal_cdf(s(0)));
  }
  return out;
}

ObservationSet gen_dgp2(Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  std::mt19937_64 rng = make_rng(seed, kStreamData, 0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> unif_e(-0.3, 0.3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ObservationSet out;
  out.y.resize(n);
  out.t.resize(n);
  out.s.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = unif(rng);
    const double t = std::sin(kPi * s) + unif_e(rng);
    out.s(i, 0) = s;
    out.t(i) = t;
    out.y(i) = t * t * t + t * t + 10.0 * s + gauss(rng);
  }
  return out;
}

ObservationSet gen_data(const DgpSpec& spec) {
  return spec.kind == DgpKind::dgp1 ? gen_dgp1(spec.n, spec.d, spec.seed)
                                    : gen_dgp2(spec.n, spec.seed);
}

double theta_true(DgpKind kind, double t) {
  return kind == DgpKind::dgp1 ? 1.2 + 2.0 * t : 3.0 * t * t + 2.0 * t;
}

double m_true(DgpKind kind, double t) {
  return kind == DgpKind::dgp1 ? 1.2 * t + t * t : t * t * t + t * t;
}

NuisanceFns dgp1_oracle(int d) {
  const Eigen::VectorXd xi = dgp1_xi(d);
  NuisanceFns fns;
  fns.mu = [xi](double t, const Eigen::RowVectorXd& s) {
    return 1.2 * t + t * t + t * s(0) + 1.2 * s.dot(xi);
  };
  fns.beta = [](double t, const Eigen::RowVectorXd& s) { return 1.2 + 2.0 * t + s(0); };
  fns.cond_pdf = [xi](double t, const Eigen::RowVectorXd& s) {
    return normal_pdf((t - dgp1_location(xi, s)) / 0.75) / 0.75;
  };
  return fns;
}

NuisanceFns dgp2_oracle() {
  NuisanceFns fns;
  fns.mu = [](double t, const Eigen::RowVectorXd& s) {
    return t * t * t + t * t + 10.0 * s(0);
  };
  fns.beta = [](double t, const Eigen::RowVectorXd&) { return 3.0 * t * t + 2.0 * t; };
  fns.cond_pdf = [](double t, const Eigen::RowVectorXd& s) {
    return std::abs(t - std::sin(kPi * s(0))) <= 0.3 ? 1.0 / 0.6 : 0.0;
  };
  return fns;
}

SimulationReport run_monte_carlo(const MonteCarloSpec& spec) {
  if (spec.reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (spec.estimators.empty()) throw std::invalid_argument("no estimators requested");
  if (spec.grid.points.empty()) throw std::invalid_argument("empty evaluation grid");
  const std::size_t ne = spec.estimators.size();
  const std::size_t ng = spec.grid.points.size();
  const std::size_t nr = static_cast<std::size_t>(spec.reps);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Pre-allocated slots indexed by (estimator, rep): values, CI hits
  // (-1 no CI / invalid), and a per-rep failure flag.
  std::vector<std::vector<std::vector<double>>> values(
      ne, std::vector<std::vector<double>>(nr, std::vector<double>(ng, nan)));
  std::vector<std::vector<std::vector<signed char>>> hits(
      ne, std::vector<std::vector<signed char>>(nr, std::vector<signed char>(ng, -1)));
  std::vector<std::vector<bool>> failed(ne, std::vector<bool>(nr, false));

  std::atomic<long> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const long r = next.fetch_add(1);
      if (r >= spec.reps || abort.load()) return;
      const std::uint64_t seed_r =
          mix_seed(spec.dgp.seed, kStreamReplication, static_cast<std::uint64_t>(r));
      try {
        DgpSpec dgp = spec.dgp;
        dgp.seed = seed_r;
        const ObservationSet data = gen_data(dgp);
        const Bandwidth h = bandwidth_rule(data.t, spec.bw_rule, spec.bw_scale);
        for (std::size_t e = 0; e < ne; ++e) {
          const EstimatorRun& run = spec.estimators[e];
          const DgpKind kind = spec.dgp.kind;
          const bool theta_kind = is_theta_kind(run.kind);
          try {
            const CurveEstimate curve =
                crossfit_curve(data, run.kind, run.nuisance, spec.kernel, h, spec.grid,
                               spec.folds, seed_r, run.opts);
            const bool has_ci = curve.ci_lower.size() == ng;
            for (std::size_t g = 0; g < ng; ++g) {
              const PointEstimate& pe = curve.estimates[g];
              if (pe.flagged) continue;
              values[e][static_cast<std::size_t>(r)][g] = pe.value;
              if (has_ci && pe.variance > 0.0) {
                const double truth = theta_kind ? theta_true(kind, spec.grid.points[g])
                                                : m_true(kind, spec.grid.points[g]);
                hits[e][static_cast<std::size_t>(r)][g] =
                    (curve.ci_lower[g] <= truth && truth <= curve.ci_upper[g]) ? 1 : 0;
              }
            }
          } catch (...) {
            if (spec.strict) throw;
            failed[e][static_cast<std::size_t>(r)] = true;
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const int nthreads = std::max(1, std::min(spec.threads, spec.reps));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SimulationReport report;
  report.spec = spec;
  for (std::size_t e = 0; e < ne; ++e) {
    const EstimatorRun& run = spec.estimators[e];
    EstimatorReport er;
    er.label = run.label.empty() ? to_string(run.kind) : run.label;
    er.reps = spec.reps;
    for (std::size_t r = 0; r < nr; ++r)
      if (failed[e][r]) ++er.failures;
    er.mean_estimate.assign(ng, nan);
    er.bias.assign(ng, nan);
    er.rmse.assign(ng, nan);
    er.coverage.assign(ng, nan);
    er.n_valid.assign(ng, 0);
    const bool theta_kind = is_theta_kind(run.kind);
    for (std::size_t g = 0; g < ng; ++g) {
      const double truth = theta_kind ? theta_true(spec.dgp.kind, spec.grid.points[g])
                                      : m_true(spec.dgp.kind, spec.grid.points[g]);
      double sum = 0.0, sq = 0.0;
      int nv = 0, nci = 0, nhit = 0;
      for (std::size_t r = 0; r < nr; ++r) {
        if (failed[e][r] || std::isnan(values[e][r][g])) continue;
        const double v = values[e][r][g];
        sum += v;
        sq += (v - truth) * (v - truth);
        ++nv;
        if (hits[e][r][g] >= 0) {
          ++nci;
          nhit += hits[e][r][g];
        }
      }
      er.n_valid[g] = nv;
      if (nv > 0) {
        er.mean_estimate[g] = sum / nv;
        er.bias[g] = sum / nv - truth;
        er.rmse[g] = std::sqrt(sq / nv);
      }
      if (nci > 0) er.coverage[g] = static_cast<double>(nhit) / nci;
    }
    report.results.push_back(std::move(er));
  }
  return report;
}

}  // namespace drc
