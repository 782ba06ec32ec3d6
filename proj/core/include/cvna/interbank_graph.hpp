#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace cvna {

using BankId = std::uint32_t;

/// Random directed graph in which every bank has the same number of
/// borrowers and creditors.
///
/// An arc (creditor -> borrower) means the creditor holds a claim on the
/// borrower, so a borrower default damages the creditor. The total degree
/// k counts both directions; each bank has k/2 borrowers (its in-neighbours
/// in contagion terms) and k/2 creditors.
class RegularGraph {
 public:
  RegularGraph() = default;

  /// Builds a graph from a flat borrower table of size n * (k/2), row i
  /// holding the borrowers of bank i. Throws std::invalid_argument if the
  /// table violates regularity, contains self-loops or parallel arcs.
  RegularGraph(std::size_t n, std::size_t k, std::vector<BankId> borrowers);

  std::size_t size() const noexcept { return n_; }
  std::size_t degree() const noexcept { return 2 * half_; }
  std::size_t half_degree() const noexcept { return half_; }
  std::size_t arc_count() const noexcept { return borrowers_.size(); }

  std::span<const BankId> borrowers(std::size_t bank) const noexcept {
    return {borrowers_.data() + bank * half_, half_};
  }
  std::span<const BankId> creditors(std::size_t bank) const noexcept {
    return {creditors_.data() + bank * half_, half_};
  }

  /// Arcs as (creditor, borrower) pairs, ordered by creditor then by the
  /// borrower order stored in the table.
  std::vector<std::pair<BankId, BankId>> arcs() const;

  friend bool operator==(const RegularGraph&, const RegularGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t half_ = 0;
  std::vector<BankId> borrowers_;
  std::vector<BankId> creditors_;
};

/// Samples a random k-regular directed graph on n banks (k/2 borrowers and
/// k/2 creditors each, no self-loops, no parallel arcs).
///
/// Directed configuration model: whole matchings are rejected and redrawn up
/// to `kMatchingRetries` times, after which one matching is repaired by
/// random arc swaps. Graphs denser than half the complete graph are drawn as
/// complements of a sparser sample, so k/2 == n-1 yields the complete graph.
/// k == 0 is accepted and gives an empty graph.
RegularGraph generate_k_regular(std::size_t n, std::size_t k, std::uint64_t seed);

inline constexpr int kMatchingRetries = 1000;

/// Writes one "src,dst" line per arc (creditor, borrower), zero-indexed.
void write_edge_list(const RegularGraph& graph, std::ostream& out);

/// Homogeneous interbank system built on a regular graph: the triplet of
/// exposure matrix, interbank liabilities and net external assets, plus the
/// exogenous recovery multiplier.
struct FinancialSystem {
  std::shared_ptr<const RegularGraph> graph;
  double leverage = 0.0;  ///< interbank assets over equity
  double delta = 0.0;     ///< exogenous recovery rate in [0, 1)
  double exposure = 0.0;  ///< value of every single arc, leverage / (k/2)
  std::vector<double> net_external_assets;   ///< initially 1 for every bank
  std::vector<double> interbank_liabilities;  ///< leverage for every bank

  std::size_t size() const noexcept { return graph ? graph->size() : 0; }

  /// Sum of exposures on the borrower side of bank i.
  double interbank_assets(std::size_t bank) const noexcept {
    return exposure * static_cast<double>(graph->borrowers(bank).size());
  }
  /// Sum of exposures on the creditor side of bank i.
  double interbank_debt(std::size_t bank) const noexcept {
    return exposure * static_cast<double>(graph->creditors(bank).size());
  }
};

/// Throws std::invalid_argument if leverage < 0 or delta is outside [0, 1).
/// On a graph with k == 0 all exposures and liabilities are zero.
FinancialSystem build_system(std::shared_ptr<const RegularGraph> graph,
                             double leverage, double delta = 0.0);

}  // namespace cvna
