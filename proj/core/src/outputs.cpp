#include "cvna/outputs.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cvna {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

namespace {

std::string degree_text(std::size_t k) { return std::to_string(k); }

}  // namespace

void write_cells_csv(const std::vector<ExperimentSummary>& summaries, std::ostream& out) {
  out << kCellsHeader << '\n';
  for (const ExperimentSummary& s : summaries) {
    out << degree_text(s.k) << ',' << format_number(s.leverage) << ',' << format_number(s.rho)
        << ',' << s.n << ',' << s.n_realizations << ',' << format_number(s.q_mean) << ','
        << format_number(s.q_median_triggered) << ',' << format_number(s.triggered_fraction)
        << ',' << format_number(s.q_analytic) << ',' << format_number(s.q_limit) << ','
        << format_number(s.cvna_ratio) << '\n';
  }
}

void write_histogram_json(const ExperimentSummary& s, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["k"] = s.k;
  doc["leverage"] = s.leverage;
  doc["rho"] = s.rho;
  doc["n"] = s.n;
  doc["n_realizations"] = s.n_realizations;
  std::vector<double> edges(kHistogramBins + 1);
  for (std::size_t b = 0; b <= kHistogramBins; ++b) {
    edges[b] = static_cast<double>(b) / static_cast<double>(kHistogramBins);
  }
  doc["bin_edges"] = edges;
  doc["counts"] = s.histogram;
  out << doc.dump(1) << '\n';
}

std::string histogram_file_name(const ExperimentSummary& s) {
  return "hist_" + degree_text(s.k) + "_" + format_number(s.leverage) + "_" +
         format_number(s.rho) + ".json";
}

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_outputs(const std::vector<ExperimentSummary>& summaries, const RunConfig& config,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "cells.csv", [&](std::ostream& out) { write_cells_csv(summaries, out); });
  for (const ExperimentSummary& s : summaries) {
    write_file(dir / histogram_file_name(s),
               [&](std::ostream& out) { write_histogram_json(s, out); });
  }
  write_file(dir / "config_echo.json",
             [&](std::ostream& out) { out << to_json(config).dump(2) << '\n'; });
}

void write_analytic_csv(const std::vector<AnalyticRow>& rows, std::ostream& out) {
  out << "k,leverage,rho,q_expected,method,error_bound\n";
  for (const AnalyticRow& r : rows) {
    out << r.k << ',' << format_number(r.leverage) << ',' << format_number(r.rho) << ','
        << format_number(r.q_expected) << ',' << r.method << ',' << format_number(r.error_bound)
        << '\n';
  }
}

void write_limit_csv(const std::vector<LimitRow>& rows, std::ostream& out) {
  out << "leverage,rho,q_limit,error_bound,regime\n";
  for (const LimitRow& r : rows) {
    out << format_number(r.leverage) << ',' << format_number(r.rho) << ','
        << format_number(r.q_limit) << ',' << format_number(r.error_bound) << ',' << r.regime
        << '\n';
  }
}

void write_size_scan_csv(const std::vector<SizeScanRow>& rows, std::ostream& out) {
  out << "n,k,leverage,rho,n_realizations,q_mean,q_median_triggered,triggered_fraction,q_limit\n";
  for (const SizeScanRow& r : rows) {
    out << r.n << ',' << r.k << ',' << format_number(r.leverage) << ',' << format_number(r.rho)
        << ',' << r.n_realizations << ',' << format_number(r.q_mean) << ','
        << format_number(r.q_median_triggered) << ',' << format_number(r.triggered_fraction)
        << ',' << format_number(r.q_limit) << '\n';
  }
}

}  // namespace cvna
