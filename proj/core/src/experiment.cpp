#include "cvna/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cvna/clearing_engine.hpp"
#include "cvna/seed.hpp"
#include "cvna/shock_model.hpp"
#include "cvna/threshold_analytics.hpp"

namespace cvna {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kGraphStream = 0x6E6574776F726BULL;

struct Realization {
  std::size_t defaults = 0;
  bool triggered = false;
  bool converged = true;
};

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t t = requested == 0 ? std::thread::hardware_concurrency() : requested;
  return std::max<std::size_t>(1, std::min(t, jobs));
}

// Runs body(i) for i in [0, jobs) on `threads` workers. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t jobs, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = jobs;
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void attach_analytics(const RunConfig& config, const ShockDistribution& dist, std::size_t k,
                      ExperimentSummary& s) {
  s.q_analytic = s.q_analytic_error = kNaN;
  s.q_limit = s.q_limit_error = kNaN;
  if (config.has_mode(Mode::kAnalytic)) {
    const QuadratureResult r = dist.rho() == 0.0
                                   ? expected_q_uncorrelated(s.n, dist, k, s.leverage)
                                   : expected_q_correlated(dist, k, s.leverage);
    s.q_analytic = r.value;
    s.q_analytic_error = r.error;
  }
  if (config.has_mode(Mode::kLimit)) {
    const QuadratureResult r = limit_correlated(dist, s.leverage);
    s.q_limit = r.value;
    s.q_limit_error = r.error;
  }
}

double reference_q(const RunConfig& config, const ExperimentSummary& s) {
  if (config.has_mode(Mode::kSimulate)) return s.q_mean;
  if (config.has_mode(Mode::kAnalytic)) return s.q_analytic;
  return s.q_limit;
}

ExperimentSummary simulate_cell(const RunConfig& config, std::size_t banks, std::size_t k,
                                double leverage, double rho, GraphCache& cache) {
  const ShockDistribution dist = config.distribution(rho);
  ExperimentSummary s;
  s.k = k;
  s.leverage = leverage;
  s.rho = dist.rho();
  s.n = banks;
  s.histogram.assign(kHistogramBins, 0);

  if (config.has_mode(Mode::kSimulate)) {
    const std::size_t instances = config.n_network_instances;
    const std::size_t samples = config.n_shock_samples;
    std::vector<FinancialSystem> systems;
    systems.reserve(instances);
    for (std::size_t g = 0; g < instances; ++g) {
      systems.push_back(build_system(cache.get(banks, k, g, config.master_seed), leverage,
                                     config.delta));
    }
    const CascadeOptions options{config.tol, config.cutoff};
    const std::size_t total = instances * samples;
    std::vector<Realization> runs(total);
    parallel_for(total, worker_count(config.threads, total), [&](std::size_t idx) {
      const std::size_t g = idx / samples;
      const std::size_t r = idx % samples;
      const ShockVector shocks = sample_shocks(dist, banks, shock_seed(config.master_seed, g, r));
      const CascadeResult c = run_cascade(systems[g], shocks, options);
      Realization& out = runs[idx];
      out.defaults = static_cast<std::size_t>(
          std::count(c.default_indicators.begin(), c.default_indicators.end(), 1));
      out.triggered = c.triggered;
      out.converged = c.converged;
    });

    // Sequential reduction in realization order keeps sums bit-reproducible.
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t triggered = 0;
    std::vector<double> triggered_q;
    for (const Realization& run : runs) {
      const double q = static_cast<double>(run.defaults) / static_cast<double>(banks);
      sum += q;
      sum_sq += q * q;
      ++s.histogram[histogram_bin(run.defaults, banks)];
      if (run.triggered) {
        ++triggered;
        triggered_q.push_back(q);
      }
      if (!run.converged) ++s.unconverged;
    }
    const double count = static_cast<double>(total);
    s.n_realizations = total;
    s.q_mean = sum / count;
    s.q_stddev = total > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / count) / (count - 1.0)))
                           : 0.0;
    s.q_median_triggered = median_of(std::move(triggered_q));
    s.triggered_fraction = static_cast<double>(triggered) / count;
  } else {
    s.q_mean = s.q_stddev = s.q_median_triggered = s.triggered_fraction = kNaN;
  }

  attach_analytics(config, dist, k, s);
  const double p1 = dist.probs()[0];
  const double ref = reference_q(config, s);
  s.cvna_ratio = p1 > 0.0 && !std::isnan(ref) ? cvna_ratio(ref, p1) : kNaN;
  return s;
}

}  // namespace

double cvna_ratio(double q_expected, double p1) {
  if (!(p1 > 0.0)) throw std::domain_error("cvna_ratio: p1 must be positive");
  return q_expected / p1;
}

std::size_t histogram_bin(std::size_t defaults, std::size_t banks) noexcept {
  if (banks == 0) return 0;
  return std::min(kHistogramBins - 1, defaults * kHistogramBins / banks);
}

std::uint64_t graph_seed(std::uint64_t master_seed, std::size_t n, std::size_t k,
                         std::size_t instance) noexcept {
  return derive_seed(master_seed, {kGraphStream, n, k, instance});
}

std::uint64_t shock_seed(std::uint64_t master_seed, std::size_t instance,
                         std::size_t realization) noexcept {
  return derive_seed(master_seed, {instance, realization});
}

std::shared_ptr<const RegularGraph> GraphCache::get(std::size_t n, std::size_t k,
                                                    std::size_t instance,
                                                    std::uint64_t master_seed) {
  const Key key{n, k, instance, master_seed};
  auto it = graphs_.find(key);
  if (it != graphs_.end()) return it->second;
  auto graph = std::make_shared<const RegularGraph>(
      generate_k_regular(n, k, graph_seed(master_seed, n, k, instance)));
  graphs_.emplace(key, graph);
  return graph;
}

ExperimentSummary run_cell(const RunConfig& config, std::size_t k, double leverage, double rho) {
  GraphCache cache;
  return run_cell(config, k, leverage, rho, cache);
}

ExperimentSummary run_cell(const RunConfig& config, std::size_t k, double leverage, double rho,
                           GraphCache& cache) {
  const std::size_t degree = config.resolve_degree(k, config.n);
  try {
    return simulate_cell(config, config.n, degree, leverage, rho, cache);
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "cell (n=" << config.n << ", k=" << degree << ", leverage=" << leverage
        << ", rho=" << rho << "): " << e.what();
    throw std::runtime_error(msg.str());
  }
}

std::vector<ExperimentSummary> run_sweep(
    const RunConfig& config, const std::function<void(const ExperimentSummary&)>& progress) {
  config.validate();
  std::vector<ExperimentSummary> out;
  for (std::size_t k : config.degrees) {
    GraphCache cache;  // graphs of one degree are reused across leverages and rhos
    for (double leverage : config.leverages) {
      for (double rho : config.rhos) {
        out.push_back(run_cell(config, k, leverage, rho, cache));
        if (progress) progress(out.back());
      }
    }
  }
  return out;
}

std::vector<SizeScanRow> size_scan(const RunConfig& config,
                                   const std::function<void(const SizeScanRow&)>& progress) {
  config.validate();
  std::vector<SizeScanRow> rows;
  for (std::size_t banks : config.sizes) {
    RunConfig cell_config = config;
    cell_config.n = banks;
    cell_config.modes = {Mode::kSimulate, Mode::kLimit};
    // Complete graphs are unique, so every instance would be the same graph.
    cell_config.n_shock_samples = config.realizations();
    cell_config.n_network_instances = 1;
    GraphCache cache;
    for (double rho : config.rhos) {
      for (double leverage : config.leverages) {
        const ExperimentSummary s =
            run_cell(cell_config, kCompleteDegree, leverage, rho, cache);
        SizeScanRow row;
        row.n = banks;
        row.k = s.k;
        row.leverage = leverage;
        row.rho = s.rho;
        row.n_realizations = s.n_realizations;
        row.q_mean = s.q_mean;
        row.q_median_triggered = s.q_median_triggered;
        row.triggered_fraction = s.triggered_fraction;
        row.q_limit = s.q_limit;
        rows.push_back(row);
        if (progress) progress(row);
      }
    }
  }
  return rows;
}

}  // namespace cvna
