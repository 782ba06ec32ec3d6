#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "cvna/interbank_graph.hpp"
#include "cvna/run_config.hpp"

namespace cvna {

inline constexpr std::size_t kHistogramBins = 100;

/// Aggregate statistics of one (k, leverage, rho) cell. Fields that were not
/// requested by the run modes are NaN.
struct ExperimentSummary {
  std::size_t k = 0;
  double leverage = 0.0;
  double rho = 0.0;
  std::size_t n = 0;
  std::size_t n_realizations = 0;
  double q_mean = 0.0;
  double q_stddev = 0.0;
  double q_median_triggered = 0.0;  ///< NaN when no realization triggered
  double triggered_fraction = 0.0;
  std::size_t unconverged = 0;      ///< realizations stopped by the cutoff
  /// Counts of q over 100 equal bins of [0, 1]; q == 1 goes in the last bin.
  std::vector<std::uint64_t> histogram;
  double q_analytic = 0.0;
  double q_analytic_error = 0.0;
  double q_limit = 0.0;
  double q_limit_error = 0.0;
  double cvna_ratio = 0.0;
};

/// <q> / p1, the factor turning the direct-counterparty adjustment into the
/// network one. Throws std::domain_error when p1 is not positive.
double cvna_ratio(double q_expected, double p1);

/// Histogram bin of `defaults` out of `banks`, computed in integers so bin
/// edges are exact.
std::size_t histogram_bin(std::size_t defaults, std::size_t banks) noexcept;

/// Graphs keyed by (n, k, instance); lets cells with the same topology share
/// them.
class GraphCache {
 public:
  std::shared_ptr<const RegularGraph> get(std::size_t n, std::size_t k, std::size_t instance,
                                          std::uint64_t master_seed);

 private:
  struct Key {
    std::size_t n, k, instance;
    std::uint64_t seed;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::shared_ptr<const RegularGraph>> graphs_;
};

/// Seeds of the independent random streams.
std::uint64_t graph_seed(std::uint64_t master_seed, std::size_t n, std::size_t k,
                         std::size_t instance) noexcept;
std::uint64_t shock_seed(std::uint64_t master_seed, std::size_t instance,
                         std::size_t realization) noexcept;

/// Runs one cell on config.n banks: n_network_instances graphs with
/// n_shock_samples shock vectors each, plus analytic and limit values when
/// the modes ask for them. k may be kCompleteDegree. Errors are rethrown as
/// std::runtime_error naming the cell.
ExperimentSummary run_cell(const RunConfig& config, std::size_t k, double leverage, double rho);
ExperimentSummary run_cell(const RunConfig& config, std::size_t k, double leverage, double rho,
                           GraphCache& cache);

/// Every (k, leverage, rho) cell of the configuration in that nesting order.
/// `progress`, if set, is called after each cell.
std::vector<ExperimentSummary> run_sweep(
    const RunConfig& config,
    const std::function<void(const ExperimentSummary&)>& progress = {});

struct SizeScanRow {
  std::size_t n = 0;
  std::size_t k = 0;
  double leverage = 0.0;
  double rho = 0.0;
  std::size_t n_realizations = 0;
  double q_mean = 0.0;
  double q_median_triggered = 0.0;
  double triggered_fraction = 0.0;
  double q_limit = 0.0;
};

/// Complete networks at each of config.sizes, for every (rho, leverage),
/// each row carrying the infinite-network limit as reference.
std::vector<SizeScanRow> size_scan(const RunConfig& config,
                                   const std::function<void(const SizeScanRow&)>& progress = {});

}  // namespace cvna
