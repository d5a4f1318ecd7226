#include "drcurve/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace drc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    cells.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& col, std::size_t row) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != cell.size() || cell.empty())
    throw std::runtime_error("non-numeric cell in column '" + col + "', data row " +
                             std::to_string(row + 1));
  return v;
}

void standardize_column(Eigen::Ref<Eigen::VectorXd> col, const std::string& name) {
  const double mean = col.mean();
  const double var = (col.array() - mean).square().sum() / static_cast<double>(col.size());
  if (!(var > 0.0))
    throw std::runtime_error("zero-variance column under standardize: " + name);
  col = (col.array() - mean) / std::sqrt(var);
}

ordered_json kernel_json(KernelSpec k) { return to_string(k.kind); }

ordered_json estimate_array(const CurveEstimate& curve,
                            double (*get)(const PointEstimate&)) {
  ordered_json arr = ordered_json::array();
  for (const PointEstimate& pe : curve.estimates) arr.push_back(get(pe));
  return arr;
}

}  // namespace

std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  std::vector<std::string>& headers) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing header row: " + path);
  headers = split_line(line);
  std::vector<std::vector<double>> rows;
  std::size_t r = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != headers.size())
      throw std::runtime_error("row " + std::to_string(r + 1) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(headers.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_cell(cells[c], headers[c], r);
    rows.push_back(std::move(row));
    ++r;
  }
  return rows;
}

ObservationSet load_csv(const std::string& path, const std::string& outcome,
                        const std::string& treatment,
                        const std::vector<std::string>& covariates, bool standardize) {
  std::vector<std::string> headers;
  const std::vector<std::vector<double>> rows = read_numeric_csv(path, headers);
  auto col_index = [&](const std::string& name) {
    for (std::size_t c = 0; c < headers.size(); ++c)
      if (headers[c] == name) return c;
    throw std::runtime_error("missing column: " + name);
  };
  const std::size_t yc = col_index(outcome);
  const std::size_t tc = col_index(treatment);
  std::vector<std::size_t> sc;
  for (const std::string& name : covariates) sc.push_back(col_index(name));
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  ObservationSet out;
  out.y.resize(n);
  out.t.resize(n);
  out.s.resize(n, static_cast<Eigen::Index>(sc.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    out.y(i) = row[yc];
    out.t(i) = row[tc];
    for (std::size_t c = 0; c < sc.size(); ++c)
      out.s(i, static_cast<Eigen::Index>(c)) = row[sc[c]];
  }
  if (standardize) {
    standardize_column(out.y, outcome);
    standardize_column(out.t, treatment);
    for (std::size_t c = 0; c < sc.size(); ++c) {
      Eigen::VectorXd col = out.s.col(static_cast<Eigen::Index>(c));
      standardize_column(col, covariates[c]);
      out.s.col(static_cast<Eigen::Index>(c)) = col;
    }
  }
  return validate(out);
}

OutputFormat format_from_string(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw std::invalid_argument("unknown format: " + name);
}

std::string curve_to_csv(const CurveEstimate& curve) {
  std::string out = "t,estimate,variance,ci_lo,ci_hi\n";
  const bool has_ci = curve.ci_lower.size() == curve.estimates.size();
  for (std::size_t g = 0; g < curve.estimates.size(); ++g) {
    const PointEstimate& pe = curve.estimates[g];
    out += fmt(curve.grid.points[g]) + "," + fmt(pe.value) + "," + fmt(pe.variance) + "," +
           fmt(has_ci ? curve.ci_lower[g] : pe.value) + "," +
           fmt(has_ci ? curve.ci_upper[g] : pe.value) + "\n";
  }
  return out;
}

std::string curve_to_json(const CurveEstimate& curve, const UniformBand* band) {
  ordered_json j;
  j["config"] = {{"method", curve.method},
                 {"bandwidth", curve.h.h},
                 {"bandwidth_rule",
                  curve.h.rule == BandwidthRule::scaled ? "scaled" : "silverman"},
                 {"bandwidth_scale", curve.h.scale}};
  j["grid"] = curve.grid.points;
  j["estimate"] = estimate_array(curve, [](const PointEstimate& pe) { return pe.value; });
  j["variance"] =
      estimate_array(curve, [](const PointEstimate& pe) { return pe.variance; });
  ordered_json flags = ordered_json::array();
  for (const PointEstimate& pe : curve.estimates) flags.push_back(pe.flagged);
  j["flagged"] = flags;
  if (curve.ci_lower.size() == curve.estimates.size()) {
    j["ci_lower"] = curve.ci_lower;
    j["ci_upper"] = curve.ci_upper;
  }
  if (band != nullptr) {
    j["band"] = {{"quantile", band->quantile},
                 {"tau", band->tau},
                 {"replicates", band->replicates},
                 {"law", band->law == MultiplierLaw::exponential ? "exponential"
                         : band->law == MultiplierLaw::two_point ? "two_point"
                                                                 : "degenerate"},
                 {"lower", band->lower},
                 {"upper", band->upper}};
  }
  return j.dump(2) + "\n";
}

namespace {

ordered_json spec_json(const MonteCarloSpec& spec) {
  ordered_json grid;
  grid["lo"] = spec.grid.points.front();
  grid["hi"] = spec.grid.points.back();
  grid["count"] = spec.grid.points.size();
  ordered_json ests = ordered_json::array();
  for (const EstimatorRun& run : spec.estimators)
    ests.push_back(run.label.empty() ? to_string(run.kind) : run.label);
  return ordered_json{{"dgp", to_string(spec.dgp.kind)},
                      {"n", spec.dgp.n},
                      {"d", spec.dgp.d},
                      {"seed", spec.dgp.seed},
                      {"reps", spec.reps},
                      {"folds", spec.folds},
                      {"kernel", kernel_json(spec.kernel)},
                      {"bandwidth_rule",
                       spec.bw_rule == BandwidthRule::scaled ? "scaled" : "silverman"},
                      {"bandwidth_scale", spec.bw_scale},
                      {"grid", grid},
                      {"estimators", ests}};
}

}  // namespace

std::string report_to_csv(const SimulationReport& report) {
  std::string out = "estimator,t,estimate,bias,rmse,coverage,n_valid\n";
  for (const EstimatorReport& er : report.results) {
    for (std::size_t g = 0; g < report.spec.grid.points.size(); ++g) {
      out += er.label + "," + fmt(report.spec.grid.points[g]) + "," +
             fmt(er.mean_estimate[g]) + "," + fmt(er.bias[g]) + "," + fmt(er.rmse[g]) + "," +
             fmt(er.coverage[g]) + "," + std::to_string(er.n_valid[g]) + "\n";
    }
  }
  return out;
}

std::string report_to_json(const SimulationReport& report) {
  ordered_json j;
  j["config"] = spec_json(report.spec);
  ordered_json results = ordered_json::array();
  for (const EstimatorReport& er : report.results) {
    ordered_json r;
    r["estimator"] = er.label;
    r["mean_estimate"] = er.mean_estimate;
    r["bias"] = er.bias;
    r["rmse"] = er.rmse;
    r["coverage"] = er.coverage;
    r["n_valid"] = er.n_valid;
    r["failures"] = er.failures;
    results.push_back(std::move(r));
  }
  j["grid"] = report.spec.grid.points;
  j["results"] = std::move(results);
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace drc
