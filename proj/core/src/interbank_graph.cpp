#include "cvna/interbank_graph.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace cvna {

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t upper_exclusive) {
  std::uniform_int_distribution<std::size_t> dist(0, upper_exclusive - 1);
  return dist(rng);
}

// Swap-repairs a full stub matching until it is simple.
void repair_matching(std::size_t n, std::size_t d, std::vector<BankId>& heads,
                     std::mt19937_64& rng) {
  const std::size_t arcs = n * d;
  auto key = [n](std::size_t u, std::size_t v) {
    return static_cast<std::uint64_t>(u) * n + v;
  };
  std::unordered_map<std::uint64_t, std::uint32_t> multiplicity;
  multiplicity.reserve(arcs * 2);
  for (std::size_t e = 0; e < arcs; ++e) ++multiplicity[key(e / d, heads[e])];

  auto is_bad = [&](std::size_t e) {
    const std::size_t u = e / d;
    const std::size_t v = heads[e];
    return u == v || multiplicity[key(u, v)] > 1;
  };

  std::vector<std::size_t> bad;
  for (std::size_t e = 0; e < arcs; ++e) {
    if (is_bad(e)) bad.push_back(e);
  }

  const std::uint64_t max_attempts =
      std::max<std::uint64_t>(1'000'000, 1000ULL * static_cast<std::uint64_t>(arcs));
  std::uint64_t attempts = 0;
  for (std::size_t e : bad) {
    while (is_bad(e)) {
      if (++attempts > max_attempts) {
        throw std::runtime_error("generate_k_regular: edge-swap repair did not produce a "
                                 "simple graph for n=" + std::to_string(n) +
                                 ", k/2=" + std::to_string(d));
      }
      const std::size_t f = uniform_index(rng, arcs);
      const std::size_t u = e / d;
      const std::size_t x = f / d;
      const std::size_t v = heads[e];
      const std::size_t y = heads[f];
      if (f == e || u == x || v == y || u == y || x == v) continue;
      if (multiplicity[key(u, y)] > 0 || multiplicity[key(x, v)] > 0) continue;
      --multiplicity[key(u, v)];
      --multiplicity[key(x, y)];
      ++multiplicity[key(u, y)];
      ++multiplicity[key(x, v)];
      heads[e] = static_cast<BankId>(y);
      heads[f] = static_cast<BankId>(v);
    }
  }
}

// Borrower table of a simple digraph with d borrowers and d creditors per bank,
// d <= n - 1. Row u (entries [u*d, (u+1)*d)) lists the borrowers of u.
std::vector<BankId> sample_configuration(std::size_t n, std::size_t d,
                                         std::mt19937_64& rng) {
  const std::size_t arcs = n * d;
  std::vector<BankId> heads(arcs);
  for (std::size_t e = 0; e < arcs; ++e) heads[e] = static_cast<BankId>(e / d);
  if (arcs == 0) return heads;

  // Rejection phase: a lazily shuffled matching is abandoned at its first
  // self-loop or parallel arc. Fisher-Yates stays uniform from any start.
  std::vector<std::uint64_t> stamp(n, 0);
  std::uint64_t token = 0;
  for (int attempt = 0; attempt < kMatchingRetries; ++attempt) {
    bool simple = true;
    for (std::size_t e = 0; e < arcs; ++e) {
      const std::size_t j = e + uniform_index(rng, arcs - e);
      std::swap(heads[e], heads[j]);
      if (e % d == 0) ++token;
      const std::size_t u = e / d;
      const BankId v = heads[e];
      if (v == u || stamp[v] == token) {
        simple = false;
        break;
      }
      stamp[v] = token;
    }
    if (simple) return heads;
  }

  for (std::size_t e = 0; e + 1 < arcs; ++e) {
    const std::size_t j = e + uniform_index(rng, arcs - e);
    std::swap(heads[e], heads[j]);
  }
  repair_matching(n, d, heads, rng);
  return heads;
}

}  // namespace

RegularGraph::RegularGraph(std::size_t n, std::size_t k, std::vector<BankId> table)
    : n_(n), half_(k / 2), borrowers_(std::move(table)) {
  if (k % 2 != 0) throw std::invalid_argument("RegularGraph: degree k must be even");
  if (n_ > 0 && half_ > n_ - 1) {
    throw std::invalid_argument("RegularGraph: k/2 must not exceed n-1");
  }
  if (borrowers_.size() != n_ * half_) {
    throw std::invalid_argument("RegularGraph: borrower table must have n*k/2 entries");
  }
  std::vector<std::size_t> in_count(n_, 0);
  std::vector<std::size_t> stamp(n_, n_);
  for (std::size_t u = 0; u < n_; ++u) {
    for (BankId v : borrowers(u)) {
      if (v >= n_) throw std::invalid_argument("RegularGraph: bank index out of range");
      if (v == u) throw std::invalid_argument("RegularGraph: self-loop");
      if (stamp[v] == u) throw std::invalid_argument("RegularGraph: parallel arc");
      stamp[v] = u;
      ++in_count[v];
    }
  }
  for (std::size_t v = 0; v < n_; ++v) {
    if (in_count[v] != half_) {
      throw std::invalid_argument("RegularGraph: every bank needs exactly k/2 creditors");
    }
  }
  creditors_.resize(borrowers_.size());
  std::vector<std::size_t> fill(n_, 0);
  for (std::size_t u = 0; u < n_; ++u) {
    for (BankId v : borrowers(u)) {
      creditors_[v * half_ + fill[v]++] = static_cast<BankId>(u);
    }
  }
}

std::vector<std::pair<BankId, BankId>> RegularGraph::arcs() const {
  std::vector<std::pair<BankId, BankId>> out;
  out.reserve(borrowers_.size());
  for (std::size_t u = 0; u < n_; ++u) {
    for (BankId v : borrowers(u)) out.emplace_back(static_cast<BankId>(u), v);
  }
  return out;
}

RegularGraph generate_k_regular(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k % 2 != 0) throw std::invalid_argument("generate_k_regular: k must be even");
  const std::size_t d = k / 2;
  if (d > 0 && (n == 0 || d > n - 1)) {
    throw std::invalid_argument("generate_k_regular: k/2 must not exceed n-1 (n=" +
                                std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
  if (n > std::numeric_limits<BankId>::max()) {
    throw std::invalid_argument("generate_k_regular: too many banks");
  }
  std::mt19937_64 rng(seed);
  if (d == 0) return RegularGraph(n, 0, {});

  const std::size_t complement_degree = n - 1 - d;
  if (complement_degree >= d) {
    return RegularGraph(n, k, sample_configuration(n, d, rng));
  }

  const std::vector<BankId> sparse = sample_configuration(n, complement_degree, rng);
  std::vector<BankId> borrowers;
  borrowers.reserve(n * d);
  std::vector<std::size_t> excluded(n, n);
  for (std::size_t u = 0; u < n; ++u) {
    excluded[u] = u;
    for (std::size_t j = 0; j < complement_degree; ++j) excluded[sparse[u * complement_degree + j]] = u;
    for (std::size_t v = 0; v < n; ++v) {
      if (excluded[v] != u) borrowers.push_back(static_cast<BankId>(v));
    }
  }
  return RegularGraph(n, k, std::move(borrowers));
}

void write_edge_list(const RegularGraph& graph, std::ostream& out) {
  for (const auto& [src, dst] : graph.arcs()) out << src << ',' << dst << '\n';
}

FinancialSystem build_system(std::shared_ptr<const RegularGraph> graph, double leverage,
                             double delta) {
  if (!graph) throw std::invalid_argument("build_system: null graph");
  if (!(leverage >= 0.0)) throw std::invalid_argument("build_system: leverage must be >= 0");
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("build_system: delta must lie in [0, 1)");
  }
  FinancialSystem system;
  const std::size_t n = graph->size();
  const std::size_t half = graph->half_degree();
  system.leverage = leverage;
  system.delta = delta;
  system.exposure = half == 0 ? 0.0 : leverage / static_cast<double>(half);
  system.net_external_assets.assign(n, 1.0);
  system.interbank_liabilities.assign(n, half == 0 ? 0.0 : leverage);
  system.graph = std::move(graph);
  return system;
}

}  // namespace cvna
