#pragma once

#include <string>
#include <vector>

#include "drcurve/crossfit.hpp"
#include "drcurve/simulate.hpp"

namespace drc {

// Reads a UTF-8 CSV with a header row; all referenced cells must be
// numeric (no imputation). With standardize, every selected column is
// z-scored using the population (1/n) variance, so round-trips are exact.
ObservationSet load_csv(const std::string& path, const std::string& outcome,
                        const std::string& treatment,
                        const std::vector<std::string>& covariates, bool standardize);

// Generic numeric-CSV reader used for round-trip checks and `report`.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  std::vector<std::string>& headers);

enum class OutputFormat { csv, json };
OutputFormat format_from_string(const std::string& name);

std::string curve_to_csv(const CurveEstimate& curve);
std::string curve_to_json(const CurveEstimate& curve, const UniformBand* band = nullptr);

std::string report_to_csv(const SimulationReport& report);
std::string report_to_json(const SimulationReport& report);

void write_file(const std::string& path, const std::string& content);

}  // namespace drc
