#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cvna/shock_model.hpp"

namespace cvna {

/// Degree placeholder resolved to the complete graph, k = 2 (n - 1).
/// Written as "complete" in configuration files.
inline constexpr std::size_t kCompleteDegree = std::numeric_limits<std::size_t>::max();

enum class Mode { kSimulate, kAnalytic, kLimit };

struct RunConfig {
  std::size_t n = 2000;
  std::vector<std::size_t> degrees{10, 50, 212, 1000, kCompleteDegree};
  std::vector<double> leverages{8.0};
  std::vector<double> rhos{0.0, 0.1};
  std::vector<double> sigmas{-1.1, -0.75, 0.0};
  std::vector<double> probs{0.02, 0.09, 0.89};
  std::size_t n_shock_samples = 200;
  std::size_t n_network_instances = 5;
  double tol = 0.03;
  std::size_t cutoff = 1000;
  double delta = 0.0;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  std::vector<Mode> modes{Mode::kSimulate, Mode::kAnalytic, Mode::kLimit};
  std::vector<std::size_t> sizes{300, 800, 2000};
  std::size_t threads = 1;  ///< 0 = one per hardware thread

  bool has_mode(Mode m) const noexcept;
  std::size_t realizations() const noexcept { return n_shock_samples * n_network_instances; }
  /// kCompleteDegree mapped to 2 (n - 1) for the given system size.
  std::size_t resolve_degree(std::size_t k, std::size_t banks) const noexcept;
  ShockDistribution distribution(double rho = 0.0) const;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// Parses a JSON object whose keys are RunConfig field names. Missing keys
/// keep their defaults; unknown keys and wrong types are errors
/// (std::invalid_argument).
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

/// Full resolved configuration, every field present.
nlohmann::json to_json(const RunConfig& config);

/// Paper-scale sizes: n = 10^4, 1000 shocks on each of 5 networks and the
/// full system-size ladder up to 10^4.
void apply_paper_scale(RunConfig& config);

const char* to_string(Mode mode) noexcept;
Mode parse_mode(const std::string& name);

}  // namespace cvna
