#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "cvna/interbank_graph.hpp"
#include "cvna/shock_model.hpp"

namespace cvna {

inline constexpr std::size_t kNotDefaulted = std::numeric_limits<std::size_t>::max();

/// Balance sheet of one bank during shock propagation.
///
/// Equity is tracked in write-down form, E = A^e - w * written_down, which
/// equals A^e + A^b - L^b because every bank's interbank assets at par
/// match its interbank liabilities.
struct BankState {
  double external_assets = 1.0;
  double interbank_assets = 0.0;  ///< marked value of the borrower portfolio
  double written_down = 0.0;      ///< sum over borrowers of (1 - x_j)
  double equity = 1.0;
  double recovery = 0.0;          ///< R_i once defaulted
  double claim_value = 1.0;       ///< x_i as seen by creditors: 1, or delta * R_i
  bool defaulted = false;
  std::size_t default_step = kNotDefaulted;  ///< 0 = defaulted by the shock itself
};

struct CascadeResult {
  std::vector<std::uint8_t> default_indicators;
  double default_fraction = 0.0;
  std::size_t initial_defaults = 0;  ///< banks defaulted by the shock alone
  bool triggered = false;            ///< any default beyond the initially shocked set
  std::size_t iterations = 0;
  bool converged = true;
};

struct CascadeOptions {
  double tol = 0.03;          ///< equity-change tolerance, fraction of initial equity
  std::size_t cutoff = 1000;  ///< maximum number of propagation steps
};

/// Applies the external shock: A^e_i = 1 + s_i, equities recomputed, banks
/// with negative equity marked defaulted at step 0.
std::vector<BankState> apply_shock(const FinancialSystem& system, const ShockVector& shocks);

/// Endogenous recovery rate min(max(0, A^e + A^b - L^e), L^b) / L^b.
/// Zero when the bank has no interbank liabilities.
double recovery_rate(const BankState& state, double interbank_liabilities,
                     double external_liabilities = 0.0);

struct StepReport {
  double max_equity_change = 0.0;
  std::size_t new_defaults = 0;
};

/// One synchronous revaluation. Every bank marks each borrower at 1 if the
/// borrower was solvent after the previous step and at delta * R_j
/// otherwise, recomputes equity and flags new negative equities. Defaulted
/// banks get their recovery re-marked from the new portfolio value.
///
/// This is the plain O(arcs) form; run_cascade pushes only the changed
/// claims and reaches the same states.
StepReport propagate_step(std::vector<BankState>& states, const FinancialSystem& system,
                          std::size_t step);

/// Iterates propagate_step to the fixed point.
///
/// Stops once a step produces no new default and every surviving bank moved
/// by less than tol; without recovery (delta == 0) a step with no new default
/// already is the fixed point. converged is false when the cutoff hit first.
CascadeResult run_cascade(const FinancialSystem& system, const ShockVector& shocks,
                          const CascadeOptions& options = {});

/// Same as run_cascade but also returns the final bank states.
CascadeResult run_cascade(const FinancialSystem& system, const ShockVector& shocks,
                          const CascadeOptions& options, std::vector<BankState>* final_states);

/// Integer threshold cascade (no recovery): a bank with post-shock equity eps
/// defaults once m * w > eps, m being its number of defaulted borrowers.
/// Returns the same default set as run_cascade with delta == 0.
CascadeResult threshold_cascade(const RegularGraph& graph, const ShockVector& shocks,
                                double leverage);

/// Writes "bank,shock,equity,defaulted,default_step" rows; default_step is
/// empty for survivors.
void write_cascade_audit(const std::vector<BankState>& states, const ShockVector& shocks,
                         std::ostream& out);

}  // namespace cvna
