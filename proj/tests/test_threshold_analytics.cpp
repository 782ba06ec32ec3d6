#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "cvna/clearing_engine.hpp"
#include "cvna/interbank_graph.hpp"
#include "cvna/normal.hpp"
#include "cvna/shock_model.hpp"
#include "cvna/threshold_analytics.hpp"

using namespace cvna;

namespace {

const std::vector<double> kEq{-0.1, 0.25, 1.0};  // equities for sigma = (-1.1, -0.75, 0)

// P[Bin(n, q) >= m] by direct summation.
double tail_oracle(std::size_t n, double q, std::size_t m) {
  if (m == 0) return 1.0;
  if (m > n) return 0.0;
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  double sum = 0.0;
  for (std::size_t j = m; j <= n; ++j) {
    sum += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                    j * std::log(q) + (n - j) * std::log1p(-q));
  }
  return sum;
}

double map_oracle(std::size_t h, const std::vector<std::size_t>& m, const std::vector<double>& pi,
                  double q) {
  double out = 0.0;
  for (std::size_t mu = 0; mu < pi.size(); ++mu) out += pi[mu] * tail_oracle(h, q, m[mu]);
  return out;
}

double least_fixed_point_oracle(std::size_t h, const std::vector<std::size_t>& m,
                                const std::vector<double>& pi) {
  double q = pi[0];
  for (int it = 0; it < 1000000; ++it) {
    const double next = map_oracle(h, m, pi, q);
    if (std::abs(next - q) < 1e-14) return next;
    q = next;
  }
  return q;
}

ShockDistribution fig2a(double rho = 0.0) { return {{-1.1, -0.75, 0.0}, {0.02, 0.09, 0.89}, rho}; }
ShockDistribution fig4() { return {{-1.1, -0.75, 0.0}, {0.09, 0.083, 0.827}}; }

}  // namespace

TEST(BinomialTail, MatchesDirectSum) {
  for (std::size_t n : {1u, 5u, 40u, 500u})
    for (double q : {0.0, 0.01, 0.2, 0.5, 0.93, 1.0})
      for (std::size_t m : {0u, 1u, 3u, 20u, 499u, 600u})
        EXPECT_NEAR(binomial_upper_tail(n, q, m), tail_oracle(n, q, m), 1e-12)
            << n << " " << q << " " << m;
}

TEST(Heaviside, HalfMaximum) {
  EXPECT_EQ(heaviside(-1e-300), 0.0);
  EXPECT_EQ(heaviside(0.0), 0.5);
  EXPECT_EQ(heaviside(2.0), 1.0);
}

TEST(MeanFieldMap, Examples) {
  const auto p = make_mean_field_problem(4, 1.0, kEq, std::vector<double>{0.1, 0.2, 0.7},
                                        ThresholdRule::kCeiling);
  EXPECT_EQ(p.thresholds, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(mean_field_iterate(p, 0.0), 0.1);
  EXPECT_NEAR(mean_field_iterate(p, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(mean_field_iterate(p, 0.1), 0.145, 1e-15);
  const auto immune = make_mean_field_problem(4, 0.5, kEq, std::vector<double>{0.1, 0.2, 0.7});
  EXPECT_EQ(immune.thresholds[2], 3u);
  EXPECT_NEAR(mean_field_iterate(immune, 1.0), 0.3, 1e-15);
}

TEST(MeanFieldMap, ThresholdRules) {
  // 0.25 * 4 / 1 = 1 exactly: the strict rule needs a second default.
  EXPECT_EQ(threshold_count(0.25, 1.0, 4, ThresholdRule::kStrict), 2u);
  EXPECT_EQ(threshold_count(0.25, 1.0, 4, ThresholdRule::kCeiling), 1u);
  EXPECT_EQ(threshold_count(0.25, 1.1, 4, ThresholdRule::kStrict),
            threshold_count(0.25, 1.1, 4, ThresholdRule::kCeiling));
}

TEST(FixedPoint, Examples) {
  const auto none = make_mean_field_problem(4, 0.0, kEq, std::vector<double>{0.0, 0.3, 0.7});
  EXPECT_EQ(solve_q_of_N(none).q_star, 0.0);

  const auto a = make_mean_field_problem(4, 1.0, kEq, std::vector<double>{0.1, 0.2, 0.7},
                                        ThresholdRule::kCeiling);
  const FixedPointSolution sa = solve_q_of_N(a);
  EXPECT_TRUE(sa.converged);
  EXPECT_NEAR(sa.q_star, 0.2, 1e-10);

  const auto b = make_mean_field_problem(4, 2.0, kEq, std::vector<double>{0.1, 0.2, 0.7},
                                        ThresholdRule::kCeiling);
  EXPECT_EQ(b.thresholds, (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_NEAR(solve_q_of_N(b).q_star, 1.0, 1e-10);
}

// The same inputs with the engine's strict rule: a loss equal to the equity
// is survived, so the thresholds move up by one at these exact ratios.
TEST(FixedPoint, StrictRuleOnTheSameInputs) {
  const auto a = make_mean_field_problem(4, 1.0, kEq, std::vector<double>{0.1, 0.2, 0.7});
  EXPECT_EQ(a.thresholds, (std::vector<std::size_t>{0, 1, 3}));
  // m3 = 3 > k/2: compartment 3 is immune, q -> 0.1 + 0.2 (1 - (1-q)^2)
  EXPECT_NEAR(mean_field_iterate(a, 0.1), 0.1 + 0.2 * 0.19, 1e-15);
  const auto b = make_mean_field_problem(4, 2.0, kEq, std::vector<double>{0.1, 0.2, 0.7});
  EXPECT_EQ(b.thresholds, (std::vector<std::size_t>{0, 1, 2}));
  // 0.1 + 0.2 (2q - q^2) + 0.7 q^2 = q  ->  0.5 q^2 - 0.6 q + 0.1 = 0
  EXPECT_NEAR(solve_q_of_N(b).q_star, 0.2, 1e-10);
}

TEST(FixedPoint, MatchesPlainIteration) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 * (1 + rng() % 300);
    const double p1 = 0.2 * u(rng), p2 = 0.3 * u(rng);
    const std::vector<double> pi{p1, p2, 1.0 - p1 - p2};
    const double lev = 16.0 * u(rng);
    const auto prob = make_mean_field_problem(k, lev, kEq, pi);
    const FixedPointSolution s = solve_q_of_N(prob);
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(s.q_star, least_fixed_point_oracle(k / 2, prob.thresholds, pi), 1e-8)
        << "k=" << k << " lev=" << lev << " pi=" << p1 << "," << p2;
  }
}

TEST(Property, MapIsMonotone) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double p1 = 0.3 * u(rng), p2 = 0.3 * u(rng);
    const auto prob = make_mean_field_problem(2 * (1 + rng() % 500), 20.0 * u(rng), kEq,
                                              std::vector<double>{p1, p2, 1.0 - p1 - p2});
    double prev = -1.0;
    for (int i = 0; i < 100; ++i) {
      const double v = mean_field_iterate(prob, i / 99.0);
      EXPECT_GE(v, prev - 1e-15);
      prev = v;
    }
  }
}

TEST(Property, IterationFromBelowIsNondecreasing) {
  const auto prob = make_mean_field_problem(20, 6.0, kEq, std::vector<double>{0.05, 0.15, 0.8});
  double q = 0.05;
  for (int i = 0; i < 200; ++i) {
    const double next = mean_field_iterate(prob, q);
    EXPECT_GE(next, q - 1e-15);
    EXPECT_LE(next, 1.0);
    q = next;
  }
}

TEST(Property, HeavisideConsistencyAtLargeDegree) {
  const std::size_t h = 5000;
  for (double lev : {1.0, 2.0, 4.0, 8.0, 14.0}) {
    for (double eps : {0.25, 0.5, 1.0}) {
      const std::size_t m = threshold_count(eps, lev, h);
      const double cut = eps / lev;
      for (int i = 0; i <= 200; ++i) {
        const double q = i / 200.0;
        if (std::abs(q - cut) < 0.01) continue;
        EXPECT_LE(std::abs(binomial_upper_tail(h, q, m) - heaviside(q - cut)), 0.01)
            << "lev=" << lev << " eps=" << eps << " q=" << q;
      }
    }
  }
}

TEST(Uncorrelated, NoLeverageGivesP1) {
  for (std::size_t n : {7u, 60u, 500u}) {
    const QuadratureResult r = expected_q_uncorrelated(n, fig2a(), 10, 0.0);
    // exact for small N; otherwise the truncated mass is the only loss
    EXPECT_LE(r.error, kTruncationMass);
    EXPECT_NEAR(r.value, 0.02, n <= kExactEnumerationLimit ? 1e-12 : r.error) << n;
  }
}

TEST(Uncorrelated, TwoBankBruteForce) {
  const ShockDistribution d({-1.1, -0.75, 0.0}, {0.5, 0.25, 0.25});
  // h = 1 and w = 2 kill both survivor classes after one default, so
  // q = 1 whenever N1 >= 1 and q = 0 otherwise.
  double expected = 0.0;
  for (std::size_t a = 0; a <= 2; ++a) {
    for (std::size_t b = 0; a + b <= 2; ++b) {
      const double pmf = multinomial_pmf({a, b, 2 - a - b}, d.probs());
      const std::vector<double> pi{a / 2.0, b / 2.0, (2 - a - b) / 2.0};
      expected += pmf * least_fixed_point_oracle(1, {0, 1, 1}, pi);
    }
  }
  EXPECT_NEAR(expected, 0.75, 1e-12);
  EXPECT_NEAR(expected_q_uncorrelated(2, d, 2, 2.0).value, expected, 1e-12);
}

TEST(Uncorrelated, ExactEnumerationAgainstOracle) {
  const ShockDistribution d = fig2a();
  const std::size_t n = 30, k = 8;
  const double lev = 3.0;
  std::vector<std::size_t> m;
  for (double e : kEq) m.push_back(threshold_count(e, lev, k / 2));
  double expected = 0.0;
  for (std::size_t a = 0; a <= n; ++a) {
    for (std::size_t b = 0; a + b <= n; ++b) {
      const std::vector<double> pi{double(a) / n, double(b) / n, double(n - a - b) / n};
      expected += multinomial_pmf({a, b, n - a - b}, d.probs()) * least_fixed_point_oracle(k / 2, m, pi);
    }
  }
  EXPECT_NEAR(expected_q_uncorrelated(n, d, k, lev).value, expected, 1e-9);
}

TEST(Uncorrelated, TruncationBoundIsSmall) {
  const QuadratureResult r = expected_q_uncorrelated(2000, fig2a(), 50, 4.0);
  EXPECT_LT(r.error, 1e-6);
  EXPECT_GE(r.value, 0.02 - 1e-9);
}

// Mean-field against Monte Carlo on random regular graphs, no correlation.
TEST(Uncorrelated, AgreesWithSimulationFig1a) {
  const ShockDistribution d({-1.1, -0.5, 0.0}, {0.09, 0.083, 0.827});
  const std::size_t n = 10000, k = 210;
  const double lev = 2.0;
  const double analytic = expected_q_uncorrelated(n, d, k, lev).value;
  double sum = 0.0;
  const std::size_t runs = 100;
  for (std::size_t g = 0; g < 2; ++g) {
    auto graph = std::make_shared<const RegularGraph>(generate_k_regular(n, k, 100 + g));
    const FinancialSystem sys = build_system(graph, lev);
    for (std::size_t r = 0; r < runs; ++r) {
      sum += run_cascade(sys, sample_shocks(d, n, 1000 * g + r)).default_fraction;
    }
  }
  EXPECT_NEAR(sum / (2 * runs), analytic, 0.02);
}

TEST(QAlpha, Limits) {
  const ShockDistribution d = fig2a(0.3);
  EXPECT_NEAR(solve_q_alpha(40.0, d, 100, 2.0).q_star, 0.0, 1e-12);
  EXPECT_NEAR(solve_q_alpha(-40.0, d, 100, 2.0).q_star, 1.0, 1e-12);
}

TEST(QAlpha, SubstitutesConditionalFractions) {
  const ShockDistribution d({-1.1, -0.5, 0.0}, {0.02, 0.09, 0.89}, 0.3);
  for (std::size_t k : {212u, 1000u}) {
    const auto pi = pi_probabilities(0.0, d);
    const auto prob = make_mean_field_problem(k, 2.0, d.equities(), pi);
    EXPECT_DOUBLE_EQ(solve_q_alpha(0.0, d, k, 2.0).q_star, solve_q_of_N(prob).q_star);
    EXPECT_NEAR(solve_q_alpha(0.0, d, k, 2.0).q_star,
                least_fixed_point_oracle(k / 2, prob.thresholds, {pi[0], pi[1], pi[2]}), 1e-9);
  }
}

TEST(Correlated, ContinuousAtZeroCorrelation) {
  for (double lev : {1.0, 2.0, 8.0, 14.0}) {
    const ShockDistribution d = fig2a(1e-6);
    const auto mean_value =
        solve_q_of_N(make_mean_field_problem(212, lev, d.equities(), d.probs())).q_star;
    EXPECT_NEAR(expected_q_correlated(d, 212, lev).value, mean_value, 1e-3) << lev;
  }
}

TEST(Correlated, IndependentQuadratureOracle) {
  const ShockDistribution d({-1.1, -0.5, 0.0}, {0.02, 0.09, 0.89}, 0.3);
  const std::size_t k = 212;
  const double lev = 2.0;
  // midpoint rule on the factor density, fixed point by plain iteration
  const double sd = std::sqrt(0.3);
  const int points = 4000;
  const double lo = -9 * sd, hi = 9 * sd, hstep = (hi - lo) / points;
  double oracle = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (i + 0.5) * hstep;
    const auto pi = pi_probabilities(x, d);
    std::vector<std::size_t> m;
    for (double e : d.equities()) m.push_back(threshold_count(e, lev, k / 2));
    const double q = least_fixed_point_oracle(k / 2, m, {pi[0], pi[1], pi[2]});
    oracle += q * std::exp(-0.5 * x * x / 0.3) / (sd * std::sqrt(2 * M_PI)) * hstep;
  }
  const QuadratureResult r = expected_q_correlated(d, k, lev);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, oracle, 1e-4);
}

TEST(Correlated, GapToLimitShrinksWithDegree) {
  for (double rho : {0.1, 0.2, 0.3}) {
    for (double lev : {2.0, 4.0, 8.0, 14.0}) {
      const ShockDistribution d = fig2a(rho);
      const double lim = limit_correlated(d, lev).value;
      double prev = 1.0;
      for (std::size_t h : {1000u, 5000u, 20000u, 100000u}) {
        const double gap = std::abs(expected_q_correlated(d, 2 * h, lev).value - lim);
        EXPECT_LE(gap, prev + 1e-4) << "rho=" << rho << " lev=" << lev << " h=" << h;
        prev = gap;
      }
    }
  }
}

// Stated tolerance for the approach to the limit at k/2 = 5000.
TEST(Correlated, WithinHundredthOfLimitAtHalfDegree5000) {
  for (double rho : {0.1, 0.2, 0.3}) {
    for (double lev : {0.2, 1.0, 2.0, 4.0, 5.0, 8.0, 12.0, 14.0}) {
      const ShockDistribution d = fig2a(rho);
      EXPECT_NEAR(expected_q_correlated(d, 10000, lev).value, limit_correlated(d, lev).value, 0.01)
          << "rho=" << rho << " lev=" << lev;
    }
  }
}

TEST(Limits, UncorrelatedPlateaus) {
  for (double lev : {0.2, 1.0, 4.0, 8.0, 12.0}) EXPECT_EQ(limit_uncorrelated(fig2a(), lev), 0.02);
  EXPECT_EQ(limit_uncorrelated(fig2a(), 14.0), 1.0);
  EXPECT_EQ(limit_uncorrelated(fig4(), 2.0), 0.09);
  EXPECT_NEAR(limit_uncorrelated(fig4(), 4.0), 0.173, 1e-15);
  EXPECT_EQ(limit_uncorrelated(fig4(), 8.0), 1.0);
  EXPECT_EQ(limit_uncorrelated(fig2a(), 0.0), 0.02);
}

TEST(Limits, HalfMaximumAtBoundary) {
  // p1 == eps2 / leverage exactly, so compartment 2 enters with weight 1/2
  const ShockDistribution d({-1.1, -0.75, 0.0}, {0.25, 0.25, 0.5});
  EXPECT_EQ(limit_uncorrelated(d, 1.0), 0.25 + 0.25 * 0.5);
}

TEST(Limits, Regimes) {
  EXPECT_EQ(classify_regime(fig2a(), 14.0), Regime::kSupercritical);
  EXPECT_EQ(classify_regime(fig2a(), 8.0), Regime::kSubcritical);
  EXPECT_EQ(classify_regime(fig4(), 4.0), Regime::kPartial);
  EXPECT_STREQ(to_string(Regime::kPartial), "partial");
}

TEST(Limits, CorrelatedNoLeverageGivesP1) {
  for (double rho : {0.1, 0.5}) {
    EXPECT_NEAR(limit_correlated(fig2a(rho), 1e-9).value, 0.02, 1e-9);
    EXPECT_NEAR(limit_correlated(fig2a(rho), 0.0).value, 0.02, 1e-9);
  }
}

TEST(Limits, CorrelatedMatchesIndependentIntegral) {
  // same integrals with erfc, midpoint rule split at the cut-offs
  for (double rho : {0.1, 0.3}) {
    for (double lev : {2.0, 8.0, 14.0}) {
      const ShockDistribution d = fig2a(rho);
      const auto pi_lo = [&](double x, double z) {
        return 0.5 * std::erfc(-(z - x) / std::sqrt(2 * (1 - rho)));
      };
      const double zI = normal_quantile(0.02), zII = normal_quantile(0.11);
      const auto cut = [&](double z, double eps) {
        return eps / lev >= 1.0 ? -INFINITY : z - std::sqrt(1 - rho) * normal_quantile(eps / lev);
      };
      const double l2 = cut(zI, 0.25), l3 = std::min(l2, cut(zII, 1.0));
      const double sd = std::sqrt(rho);
      const auto integrate = [&](double a, double b, auto g) {
        a = std::max(a, -12 * sd);
        b = std::min(b, 12 * sd);
        if (!(b > a)) return 0.0;
        const int points = 100000;
        const double h = (b - a) / points;
        double sum = 0.0;
        for (int i = 0; i < points; ++i) {
          const double x = a + (i + 0.5) * h;
          sum += g(x) * std::exp(-0.5 * x * x / rho) / (sd * std::sqrt(2 * M_PI)) * h;
        }
        return sum;
      };
      const double total =
          integrate(-INFINITY, INFINITY, [&](double x) { return pi_lo(x, zI); }) +
          integrate(-INFINITY, l2, [&](double x) { return pi_lo(x, zII) - pi_lo(x, zI); }) +
          integrate(-INFINITY, l3, [&](double x) { return 1 - pi_lo(x, zII); });
      EXPECT_NEAR(limit_correlated(d, lev).value, total, 1e-8) << rho << " " << lev;
    }
  }
}

TEST(Limits, CorrelatedTextValue) {
  EXPECT_NEAR(limit_correlated(fig2a(0.1), 8.0).value, 0.28, 0.005);
}
