#include "cvna/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cvna {

using nlohmann::json;

bool RunConfig::has_mode(Mode m) const noexcept {
  return std::find(modes.begin(), modes.end(), m) != modes.end();
}

std::size_t RunConfig::resolve_degree(std::size_t k, std::size_t banks) const noexcept {
  if (k != kCompleteDegree) return k;
  return banks == 0 ? 0 : 2 * (banks - 1);
}

ShockDistribution RunConfig::distribution(double rho) const { return {sigmas, probs, rho}; }

void RunConfig::validate() const {
  const auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (n < 2) fail("n must be at least 2");
  if (degrees.empty()) fail("degrees is empty");
  if (leverages.empty()) fail("leverages is empty");
  if (rhos.empty()) fail("rhos is empty");
  if (modes.empty()) fail("modes is empty");
  for (std::size_t k : degrees) {
    if (k == kCompleteDegree) continue;
    if (k % 2 != 0) fail("degree " + std::to_string(k) + " is odd");
    if (k < 2) fail("degrees must be at least 2");
    if (k / 2 > n - 1) fail("degree " + std::to_string(k) + " exceeds the complete graph");
  }
  for (double l : leverages) {
    if (!(l >= 0.0)) fail("leverages must be >= 0");
  }
  for (double r : rhos) {
    if (!(r >= 0.0 && r < 1.0)) fail("rhos must lie in [0, 1)");
  }
  (void)distribution();
  if (n_shock_samples == 0 || n_network_instances == 0) fail("sample counts must be positive");
  if (!(tol > 0.0)) fail("tol must be positive");
  if (cutoff < 1) fail("cutoff must be >= 1");
  if (!(delta >= 0.0 && delta < 1.0)) fail("delta must lie in [0, 1)");
  for (std::size_t s : sizes) {
    if (s < 2) fail("sizes must be at least 2");
  }
}

const char* to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::kSimulate: return "simulate";
    case Mode::kAnalytic: return "analytic";
    case Mode::kLimit: return "limit";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  if (name == "simulate") return Mode::kSimulate;
  if (name == "analytic") return Mode::kAnalytic;
  if (name == "limit") return Mode::kLimit;
  throw std::invalid_argument("config: unknown mode '" + name + "'");
}

namespace {

template <class T>
T read_value(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("expected a string");
    }
    return v.get<T>();
  } catch (const std::exception& e) {
    throw std::invalid_argument("config: key '" + key + "': " + e.what());
  }
}

template <class T>
std::vector<T> read_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw std::invalid_argument("config: key '" + key + "': expected a list");
  std::vector<T> out;
  for (const json& item : v) out.push_back(read_value<T>(item, key));
  return out;
}

std::vector<std::size_t> read_degrees(const json& v) {
  if (!v.is_array()) throw std::invalid_argument("config: key 'degrees': expected a list");
  std::vector<std::size_t> out;
  for (const json& item : v) {
    if (item.is_string() && item.get<std::string>() == "complete") {
      out.push_back(kCompleteDegree);
    } else {
      out.push_back(read_value<std::size_t>(item, "degrees"));
    }
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  RunConfig c;
  for (const auto& [key, v] : doc.items()) {
    if (key == "n") c.n = read_value<std::size_t>(v, key);
    else if (key == "degrees") c.degrees = read_degrees(v);
    else if (key == "leverages") c.leverages = read_list<double>(v, key);
    else if (key == "rhos") c.rhos = read_list<double>(v, key);
    else if (key == "sigmas") c.sigmas = read_list<double>(v, key);
    else if (key == "probs") c.probs = read_list<double>(v, key);
    else if (key == "n_shock_samples") c.n_shock_samples = read_value<std::size_t>(v, key);
    else if (key == "n_network_instances") c.n_network_instances = read_value<std::size_t>(v, key);
    else if (key == "tol") c.tol = read_value<double>(v, key);
    else if (key == "cutoff") c.cutoff = read_value<std::size_t>(v, key);
    else if (key == "delta") c.delta = read_value<double>(v, key);
    else if (key == "master_seed") c.master_seed = read_value<std::uint64_t>(v, key);
    else if (key == "output_dir") c.output_dir = read_value<std::string>(v, key);
    else if (key == "sizes") c.sizes = read_list<std::size_t>(v, key);
    else if (key == "threads") c.threads = read_value<std::size_t>(v, key);
    else if (key == "modes") {
      c.modes.clear();
      for (const std::string& m : read_list<std::string>(v, key)) c.modes.push_back(parse_mode(m));
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
  json degrees = json::array();
  for (std::size_t k : c.degrees) {
    if (k == kCompleteDegree) degrees.push_back("complete");
    else degrees.push_back(k);
  }
  json modes = json::array();
  for (Mode m : c.modes) modes.push_back(to_string(m));
  // ordered_json is not used so keys come out sorted, which keeps the echo stable.
  return json{{"n", c.n},
              {"degrees", degrees},
              {"leverages", c.leverages},
              {"rhos", c.rhos},
              {"sigmas", c.sigmas},
              {"probs", c.probs},
              {"n_shock_samples", c.n_shock_samples},
              {"n_network_instances", c.n_network_instances},
              {"tol", c.tol},
              {"cutoff", c.cutoff},
              {"delta", c.delta},
              {"master_seed", c.master_seed},
              {"output_dir", c.output_dir},
              {"modes", modes},
              {"sizes", c.sizes},
              {"threads", c.threads}};
}

void apply_paper_scale(RunConfig& config) {
  config.n = 10000;
  config.n_shock_samples = 1000;
  config.n_network_instances = 5;
  config.sizes = {300, 500, 800, 1000, 3000, 5000, 8000, 10000};
}

}  // namespace cvna
