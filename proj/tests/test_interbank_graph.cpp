#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cvna/interbank_graph.hpp"

using namespace cvna;

namespace {

// Checks in/out degree, self-loops and parallel arcs straight from the arc list.
void expect_regular(const RegularGraph& g, std::size_t n, std::size_t k) {
  ASSERT_EQ(g.size(), n);
  ASSERT_EQ(g.degree(), k);
  const auto arcs = g.arcs();
  ASSERT_EQ(arcs.size(), n * k / 2);
  std::vector<std::size_t> out(n, 0), in(n, 0);
  std::set<std::pair<BankId, BankId>> seen;
  for (const auto& [c, b] : arcs) {
    EXPECT_NE(c, b);
    EXPECT_TRUE(seen.insert({c, b}).second) << "parallel arc " << c << "->" << b;
    ++out[c];
    ++in[b];
  }
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(out[i], k / 2);
    EXPECT_EQ(in[i], k / 2);
  }
  // creditor lists must mirror borrower lists
  for (std::size_t i = 0; i < n; ++i) {
    for (BankId c : g.creditors(i)) {
      const auto b = g.borrowers(c);
      EXPECT_NE(std::find(b.begin(), b.end(), static_cast<BankId>(i)), b.end());
    }
  }
}

}  // namespace

TEST(Graph, SaturatedDegreeIsComplete) {
  const RegularGraph g = generate_k_regular(4, 6, 123);
  expect_regular(g, 4, 6);
  std::set<std::pair<BankId, BankId>> arcs;
  for (const auto& a : g.arcs()) arcs.insert(a);
  EXPECT_EQ(arcs.size(), 12u);
  for (BankId u = 0; u < 4; ++u)
    for (BankId v = 0; v < 4; ++v)
      if (u != v) EXPECT_TRUE(arcs.count({u, v}));
}

TEST(Graph, DegreeTwoIsUnionOfCycles) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RegularGraph g = generate_k_regular(3, 2, seed);
    expect_regular(g, 3, 2);
    // following the unique borrower from each bank must return to it
    for (BankId start = 0; start < 3; ++start) {
      BankId v = start;
      std::size_t steps = 0;
      do {
        v = g.borrowers(v)[0];
        ++steps;
      } while (v != start && steps <= 3);
      EXPECT_EQ(v, start);
    }
  }
}

TEST(Graph, InvariantsAndDeterminism) {
  const RegularGraph a = generate_k_regular(100, 10, 7);
  const RegularGraph b = generate_k_regular(100, 10, 7);
  expect_regular(a, 100, 10);
  EXPECT_EQ(a.arcs(), b.arcs());
  std::ostringstream ea, eb;
  write_edge_list(a, ea);
  write_edge_list(b, eb);
  EXPECT_EQ(ea.str(), eb.str());
  const RegularGraph c = generate_k_regular(100, 10, 8);
  EXPECT_NE(a.arcs(), c.arcs());
}

TEST(Graph, RegularAcrossDensities) {
  for (std::size_t k : {2u, 4u, 10u, 30u, 50u, 60u, 98u}) {
    SCOPED_TRACE(k);
    expect_regular(generate_k_regular(50, k, 11 + k), 50, k);
  }
  expect_regular(generate_k_regular(400, 212, 5), 400, 212);
}

TEST(Graph, EmptyDegree) {
  const RegularGraph g = generate_k_regular(5, 0, 1);
  EXPECT_EQ(g.arcs().size(), 0u);
}

TEST(Graph, RejectsBadArguments) {
  EXPECT_THROW(generate_k_regular(10, 3, 1), std::invalid_argument);
  EXPECT_THROW(generate_k_regular(4, 8, 1), std::invalid_argument);
  EXPECT_THROW(RegularGraph(2, 2, {0, 1}), std::invalid_argument);     // self-loop
  EXPECT_THROW(RegularGraph(3, 2, {1, 1, 0}), std::invalid_argument);  // creditor imbalance
  EXPECT_NO_THROW(RegularGraph(2, 2, {1, 0}));
}

TEST(Graph, EdgeListFormat) {
  const RegularGraph g(2, 2, {1, 0});
  std::ostringstream out;
  write_edge_list(g, out);
  EXPECT_NE(out.str().find("0,1\n"), std::string::npos);
  EXPECT_NE(out.str().find("1,0\n"), std::string::npos);
}

TEST(System, CycleExposure) {
  auto g = std::make_shared<const RegularGraph>(generate_k_regular(3, 2, 3));
  const FinancialSystem s = build_system(g, 2.0);
  EXPECT_DOUBLE_EQ(s.exposure, 2.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(s.interbank_liabilities[i], 2.0);
    EXPECT_DOUBLE_EQ(s.net_external_assets[i], 1.0);
  }
}

TEST(System, CompleteRowSums) {
  auto g = std::make_shared<const RegularGraph>(generate_k_regular(4, 6, 3));
  const FinancialSystem s = build_system(g, 8.0);
  EXPECT_DOUBLE_EQ(s.exposure, 8.0 / 3.0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(s.interbank_assets(i), 8.0, 1e-12);
    EXPECT_NEAR(s.interbank_debt(i), 8.0, 1e-12);
  }
}

TEST(System, ZeroLeverage) {
  auto g = std::make_shared<const RegularGraph>(generate_k_regular(20, 6, 3));
  const FinancialSystem s = build_system(g, 0.0);
  EXPECT_EQ(s.exposure, 0.0);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(s.interbank_assets(i), 0.0);
}

TEST(System, RejectsBadArguments) {
  auto g = std::make_shared<const RegularGraph>(generate_k_regular(20, 6, 3));
  EXPECT_THROW(build_system(g, -1.0), std::invalid_argument);
  EXPECT_THROW(build_system(g, 2.0, 1.0), std::invalid_argument);
  EXPECT_THROW(build_system(nullptr, 2.0), std::invalid_argument);
}
