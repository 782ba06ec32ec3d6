#include "cvna/clearing_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cvna {

namespace {

void check_sizes(const FinancialSystem& system, const ShockVector& shocks) {
  if (!system.graph) throw std::invalid_argument("cascade: system has no graph");
  if (shocks.size() != system.size()) {
    throw std::invalid_argument("cascade: shock vector length differs from the number of banks");
  }
}

double interbank_value(double exposure, std::size_t half, double written_down) {
  return exposure * (static_cast<double>(half) - written_down);
}

// Value creditors assign to a claim on a defaulted bank.
double defaulted_claim(const BankState& s, const FinancialSystem& system, std::size_t bank) {
  if (system.delta == 0.0) return 0.0;
  return system.delta * recovery_rate(s, system.interbank_liabilities[bank]);
}

// Shortest text that reads back to the same double.
std::string shortest(double x) {
  char buf[32];
  return {buf, std::to_chars(buf, buf + sizeof buf, x).ptr};
}

CascadeResult summarize(const std::vector<BankState>& states, std::size_t iterations,
                        bool converged) {
  CascadeResult r;
  r.default_indicators.resize(states.size());
  std::size_t defaults = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const bool d = states[i].defaulted;
    r.default_indicators[i] = d ? 1 : 0;
    if (!d) continue;
    ++defaults;
    if (states[i].default_step == 0) {
      ++r.initial_defaults;
    } else {
      r.triggered = true;
    }
  }
  r.default_fraction =
      states.empty() ? 0.0 : static_cast<double>(defaults) / static_cast<double>(states.size());
  r.iterations = iterations;
  r.converged = converged;
  return r;
}

}  // namespace

std::vector<BankState> apply_shock(const FinancialSystem& system, const ShockVector& shocks) {
  check_sizes(system, shocks);
  const std::size_t half = system.graph->half_degree();
  std::vector<BankState> states(system.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    BankState& s = states[i];
    s.external_assets = system.net_external_assets[i] + shocks.values[i];
    s.interbank_assets = interbank_value(system.exposure, half, 0.0);
    s.written_down = 0.0;
    s.equity = s.external_assets;
    if (s.equity < 0.0) {
      s.defaulted = true;
      s.default_step = 0;
      s.recovery = recovery_rate(s, system.interbank_liabilities[i]);
      s.claim_value = defaulted_claim(s, system, i);
    }
  }
  return states;
}

double recovery_rate(const BankState& state, double interbank_liabilities,
                     double external_liabilities) {
  if (interbank_liabilities <= 0.0) return 0.0;
  const double residual = state.external_assets + state.interbank_assets - external_liabilities;
  return std::min(std::max(0.0, residual), interbank_liabilities) / interbank_liabilities;
}

StepReport propagate_step(std::vector<BankState>& states, const FinancialSystem& system,
                          std::size_t step) {
  if (states.size() != system.size()) {
    throw std::invalid_argument("propagate_step: state vector length differs from the system");
  }
  const RegularGraph& graph = *system.graph;
  const std::size_t half = graph.half_degree();
  std::vector<double> previous(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) previous[i] = states[i].claim_value;

  StepReport report;
  for (std::size_t i = 0; i < states.size(); ++i) {
    BankState& s = states[i];
    double written_down = 0.0;
    for (BankId j : graph.borrowers(i)) written_down += 1.0 - previous[j];
    const double equity = s.external_assets - system.exposure * written_down;
    report.max_equity_change = std::max(report.max_equity_change, std::abs(equity - s.equity));
    s.written_down = written_down;
    s.interbank_assets = interbank_value(system.exposure, half, written_down);
    s.equity = equity;
    if (!s.defaulted && s.equity < 0.0) {
      s.defaulted = true;
      s.default_step = step;
      ++report.new_defaults;
    }
    if (s.defaulted) {
      s.recovery = recovery_rate(s, system.interbank_liabilities[i]);
      s.claim_value = defaulted_claim(s, system, i);
    }
  }
  return report;
}

CascadeResult run_cascade(const FinancialSystem& system, const ShockVector& shocks,
                          const CascadeOptions& options) {
  return run_cascade(system, shocks, options, nullptr);
}

CascadeResult run_cascade(const FinancialSystem& system, const ShockVector& shocks,
                          const CascadeOptions& options, std::vector<BankState>* final_states) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("run_cascade: tol must be positive");
  if (options.cutoff < 1) throw std::invalid_argument("run_cascade: cutoff must be >= 1");
  std::vector<BankState> states = apply_shock(system, shocks);
  const RegularGraph& graph = *system.graph;
  const std::size_t n = states.size();
  const std::size_t half = graph.half_degree();

  // applied[j]: claim value on j that creditors have already booked.
  std::vector<double> applied(n, 1.0);
  std::vector<BankId> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (states[i].claim_value != applied[i]) pending.push_back(static_cast<BankId>(i));
  }

  std::vector<std::uint8_t> touched(n, 0);
  std::vector<double> equity_before(n, 0.0);
  std::vector<BankId> touched_list;
  std::vector<BankId> next;

  std::size_t step = 0;
  bool converged = false;
  while (step < options.cutoff) {
    ++step;
    // Synchronous: all claims pushed here were fixed at the end of the previous step.
    touched_list.clear();
    for (BankId j : pending) {
      const double loss = applied[j] - states[j].claim_value;
      applied[j] = states[j].claim_value;
      for (BankId i : graph.creditors(j)) {
        if (!touched[i]) {
          touched[i] = 1;
          equity_before[i] = states[i].equity;
          touched_list.push_back(i);
        }
        states[i].written_down += loss;
      }
    }

    double max_change = 0.0;
    std::size_t new_defaults = 0;
    next.clear();
    for (BankId i : touched_list) {
      touched[i] = 0;
      BankState& s = states[i];
      s.interbank_assets = interbank_value(system.exposure, half, s.written_down);
      s.equity = s.external_assets - system.exposure * s.written_down;
      max_change = std::max(max_change, std::abs(s.equity - equity_before[i]));
      if (!s.defaulted && s.equity < 0.0) {
        s.defaulted = true;
        s.default_step = step;
        ++new_defaults;
      }
      if (s.defaulted) {
        s.recovery = recovery_rate(s, system.interbank_liabilities[i]);
        s.claim_value = defaulted_claim(s, system, i);
        if (s.claim_value != applied[i]) next.push_back(i);
      }
    }
    pending.swap(next);

    if (pending.empty() ||
        (new_defaults == 0 && (system.delta == 0.0 || max_change < options.tol))) {
      converged = true;
      break;
    }
  }

  CascadeResult result = summarize(states, step, converged);
  if (final_states) *final_states = std::move(states);
  return result;
}

CascadeResult threshold_cascade(const RegularGraph& graph, const ShockVector& shocks,
                                double leverage) {
  const std::size_t n = graph.size();
  if (shocks.size() != n) {
    throw std::invalid_argument("threshold_cascade: shock vector length differs from graph size");
  }
  const std::size_t half = graph.half_degree();
  const double w = half == 0 ? 0.0 : leverage / static_cast<double>(half);

  std::vector<BankState> states(n);
  std::vector<std::size_t> dead_borrowers(n, 0);
  std::vector<BankId> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    states[i].external_assets = 1.0 + shocks.values[i];
    states[i].equity = states[i].external_assets;
    if (states[i].equity < 0.0) {
      states[i].defaulted = true;
      states[i].default_step = 0;
      frontier.push_back(static_cast<BankId>(i));
    }
  }

  std::vector<BankId> next;
  std::size_t round = 0;
  while (true) {
    ++round;
    next.clear();
    for (BankId j : frontier) {
      for (BankId i : graph.creditors(j)) {
        BankState& s = states[i];
        const std::size_t m = ++dead_borrowers[i];
        if (!s.defaulted && static_cast<double>(m) * w > s.external_assets) {
          s.defaulted = true;
          s.default_step = round;
          next.push_back(i);
        }
      }
    }
    if (next.empty()) break;
    frontier.swap(next);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double m = static_cast<double>(dead_borrowers[i]);
    states[i].written_down = m;
    states[i].equity = states[i].external_assets - w * m;
  }
  return summarize(states, round, true);
}

void write_cascade_audit(const std::vector<BankState>& states, const ShockVector& shocks,
                         std::ostream& out) {
  if (states.size() != shocks.size()) {
    throw std::invalid_argument("write_cascade_audit: states and shocks differ in length");
  }
  out << "bank,shock,equity,defaulted,default_step\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    const BankState& s = states[i];
    out << i << ',' << shortest(shocks.values[i]) << ',' << shortest(s.equity) << ','
        << (s.defaulted ? 1 : 0) << ',';
    if (s.defaulted) out << s.default_step;
    out << '\n';
  }
}

}  // namespace cvna
