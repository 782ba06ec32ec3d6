#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cvna/experiment.hpp"
#include "cvna/run_config.hpp"

namespace cvna {

/// Header of cells.csv.
inline constexpr const char* kCellsHeader =
    "k,leverage,rho,n,n_realizations,q_mean,q_median_triggered,triggered_fraction,q_analytic,"
    "q_limit,cvna_ratio";

/// Shortest round-trip-safe text for a double ("nan" for NaN). Used for
/// every number written so reruns are byte-identical.
std::string format_number(double x);

void write_cells_csv(const std::vector<ExperimentSummary>& summaries, std::ostream& out);

/// {"k":..,"leverage":..,"rho":..,"n_realizations":..,"bin_edges":[..],"counts":[..]}
void write_histogram_json(const ExperimentSummary& summary, std::ostream& out);

/// hist_<k>_<leverage>_<rho>.json
std::string histogram_file_name(const ExperimentSummary& summary);

/// Writes cells.csv, one histogram file per cell and config_echo.json into
/// `dir` (created if missing). I/O failures throw std::runtime_error with
/// the offending path.
void write_outputs(const std::vector<ExperimentSummary>& summaries, const RunConfig& config,
                   const std::filesystem::path& dir);

struct AnalyticRow {
  std::size_t k = 0;
  double leverage = 0.0;
  double rho = 0.0;
  double q_expected = 0.0;
  std::string method;
  double error_bound = 0.0;
};

/// "k,leverage,rho,q_expected,method,error_bound"
void write_analytic_csv(const std::vector<AnalyticRow>& rows, std::ostream& out);

struct LimitRow {
  double leverage = 0.0;
  double rho = 0.0;
  double q_limit = 0.0;
  double error_bound = 0.0;
  std::string regime;
};

/// "leverage,rho,q_limit,error_bound,regime"
void write_limit_csv(const std::vector<LimitRow>& rows, std::ostream& out);

/// "n,k,leverage,rho,n_realizations,q_mean,q_median_triggered,triggered_fraction,q_limit"
void write_size_scan_csv(const std::vector<SizeScanRow>& rows, std::ostream& out);

/// Opens `path` for writing or throws std::runtime_error naming it.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

}  // namespace cvna
