#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvna/clearing_engine.hpp"
#include "cvna/experiment.hpp"
#include "cvna/outputs.hpp"
#include "cvna/run_config.hpp"
#include "cvna/shock_model.hpp"
#include "cvna/threshold_analytics.hpp"

namespace fs = std::filesystem;
using namespace cvna;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "master seed (overrides the config)");
  cmd->add_option("--out", flags.out, "output directory (overrides the config)");
  cmd->add_flag("--paper-scale", flags.paper_scale, "n = 10000 and 5000 realizations per cell");
}

RunConfig resolve(const CommonFlags& flags) {
  RunConfig c = flags.config_path.empty() ? RunConfig{} : load_run_config(flags.config_path);
  if (flags.paper_scale) apply_paper_scale(c);
  if (flags.seed) c.master_seed = *flags.seed;
  if (flags.out) c.output_dir = *flags.out;
  c.validate();
  return c;
}

void echo_config(const RunConfig& c) {
  fs::create_directories(c.output_dir);
  write_file(fs::path(c.output_dir) / "config_echo.json",
             [&](std::ostream& out) { out << to_json(c).dump(2) << '\n'; });
}

// Edge list of instance 0 and a bank-level audit of its first realization.
void write_debug_dumps(const RunConfig& c, const ExperimentSummary& s, GraphCache& cache) {
  const fs::path dir(c.output_dir);
  const auto graph = cache.get(c.n, s.k, 0, c.master_seed);
  write_file(dir / ("edges_" + std::to_string(s.k) + ".csv"),
             [&](std::ostream& out) { write_edge_list(*graph, out); });
  const FinancialSystem system = build_system(graph, s.leverage, c.delta);
  const ShockVector shocks =
      sample_shocks(c.distribution(s.rho), c.n, shock_seed(c.master_seed, 0, 0));
  std::vector<BankState> states;
  run_cascade(system, shocks, {c.tol, c.cutoff}, &states);
  const std::string tag =
      std::to_string(s.k) + "_" + format_number(s.leverage) + "_" + format_number(s.rho);
  write_file(dir / ("audit_" + tag + ".csv"),
             [&](std::ostream& out) { write_cascade_audit(states, shocks, out); });
}

int cmd_simulate(const CommonFlags& flags, bool dumps) {
  RunConfig c = resolve(flags);
  if (!c.has_mode(Mode::kSimulate)) c.modes.push_back(Mode::kSimulate);
  const auto summaries = run_sweep(c, [](const ExperimentSummary& s) {
    std::fprintf(stderr, "k=%zu leverage=%g rho=%g  q_mean=%.4f triggered=%.3f\n", s.k,
                 s.leverage, s.rho, s.q_mean, s.triggered_fraction);
  });
  write_outputs(summaries, c, c.output_dir);
  if (dumps) {
    GraphCache cache;
    for (const ExperimentSummary& s : summaries) write_debug_dumps(c, s, cache);
  }
  std::cout << "wrote " << summaries.size() << " cells to " << c.output_dir << '\n';
  return 0;
}

int cmd_analytic(const CommonFlags& flags) {
  const RunConfig c = resolve(flags);
  std::vector<AnalyticRow> rows;
  for (std::size_t raw_k : c.degrees) {
    const std::size_t k = c.resolve_degree(raw_k, c.n);
    for (double leverage : c.leverages) {
      for (double rho : c.rhos) {
        const ShockDistribution dist = c.distribution(rho);
        AnalyticRow row{k, leverage, dist.rho(), 0.0, "", 0.0};
        QuadratureResult r;
        if (dist.rho() == 0.0) {
          r = expected_q_uncorrelated(c.n, dist, k, leverage);
          row.method = "multinomial_sum";
        } else {
          r = expected_q_correlated(dist, k, leverage);
          row.method = "factor_quadrature";
        }
        row.q_expected = r.value;
        row.error_bound = r.error;
        rows.push_back(row);
        std::fprintf(stderr, "k=%zu leverage=%g rho=%g  q=%.6f (%s)\n", k, leverage, row.rho,
                     r.value, row.method.c_str());
      }
    }
  }
  echo_config(c);
  write_file(fs::path(c.output_dir) / "analytic.csv",
             [&](std::ostream& out) { write_analytic_csv(rows, out); });
  write_analytic_csv(rows, std::cout);
  return 0;
}

int cmd_limit(const CommonFlags& flags) {
  const RunConfig c = resolve(flags);
  std::vector<LimitRow> rows;
  for (double leverage : c.leverages) {
    for (double rho : c.rhos) {
      const ShockDistribution dist = c.distribution(rho);
      const QuadratureResult r = limit_correlated(dist, leverage);
      rows.push_back({leverage, dist.rho(), r.value, r.error,
                      to_string(classify_regime(dist.with_rho(0.0), leverage))});
    }
  }
  echo_config(c);
  write_file(fs::path(c.output_dir) / "limit.csv",
             [&](std::ostream& out) { write_limit_csv(rows, out); });
  write_limit_csv(rows, std::cout);
  return 0;
}

int cmd_size_scan(const CommonFlags& flags) {
  const RunConfig c = resolve(flags);
  const auto rows = size_scan(c, [](const SizeScanRow& r) {
    std::fprintf(stderr, "n=%zu leverage=%g rho=%g  q_mean=%.4f limit=%.4f\n", r.n, r.leverage,
                 r.rho, r.q_mean, r.q_limit);
  });
  echo_config(c);
  write_file(fs::path(c.output_dir) / "size_scan.csv",
             [&](std::ostream& out) { write_size_scan_csv(rows, out); });
  write_size_scan_csv(rows, std::cout);
  return 0;
}

int cmd_pmf(const CommonFlags& flags, const std::vector<std::size_t>& counts,
            std::optional<double> rho_flag) {
  const RunConfig c = resolve(flags);
  const double rho = rho_flag ? *rho_flag : c.rhos.front();
  const ShockDistribution dist = c.distribution(rho);
  const CompartmentVector v(counts);
  const QuadratureResult r = correlated_pmf(v, dist);
  std::ostringstream joined;
  for (std::size_t i = 0; i < counts.size(); ++i) joined << (i ? " " : "") << counts[i];
  std::cout << "counts,rho,multinomial_pmf,pmf,error\n"
            << joined.str() << ',' << format_number(dist.rho()) << ','
            << format_number(multinomial_pmf(v, dist.probs())) << ',' << format_number(r.value)
            << ',' << format_number(r.error) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Default contagion on interbank networks under correlated shocks"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool dumps = false;
  std::vector<std::size_t> counts;
  std::optional<double> pmf_rho;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sweep over (k, leverage, rho)");
  add_common(simulate, flags);
  simulate->add_flag("--dump", dumps, "also write edge lists and one cascade audit per cell");

  auto* analytic = app.add_subcommand("analytic", "mean-field expected default fraction");
  add_common(analytic, flags);

  auto* limit = app.add_subcommand("limit", "infinite-network limits and regimes");
  add_common(limit, flags);

  auto* scan = app.add_subcommand("size-scan", "complete networks at increasing size");
  add_common(scan, flags);

  auto* pmf = app.add_subcommand("pmf", "probability of a compartment count vector");
  add_common(pmf, flags);
  pmf->add_option("--counts", counts, "banks per shock class, e.g. --counts 2 0 0")
      ->required()
      ->delimiter(',');
  pmf->add_option("--rho", pmf_rho, "shock correlation (default: first of the config rhos)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(flags, dumps);
    if (*analytic) return cmd_analytic(flags);
    if (*limit) return cmd_limit(flags);
    if (*scan) return cmd_size_scan(flags);
    if (*pmf) return cmd_pmf(flags, counts, pmf_rho);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
