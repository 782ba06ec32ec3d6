#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cvna/quadrature.hpp"
#include "cvna/shock_model.hpp"

namespace cvna {

/// How many defaulted borrowers kill a bank with post-shock equity eps.
///
/// kStrict matches the balance-sheet engine: the smallest m with
/// m * w > eps, w = leverage / (k/2), evaluated in the same floating-point
/// form the engine uses. kCeiling is ceil((k/2) * eps / leverage), which
/// differs from kStrict only when (k/2) * eps / leverage is an integer.
enum class ThresholdRule { kStrict, kCeiling };

/// Threshold count for one compartment. Returns 0 for eps < 0 (dead on
/// arrival) and half_degree + 1 when the bank survives even with every
/// borrower defaulted (immune), including leverage == 0.
std::size_t threshold_count(double equity, double leverage, std::size_t half_degree,
                            ThresholdRule rule = ThresholdRule::kStrict);

/// P[Bin(n, q) >= m].
double binomial_upper_tail(std::size_t n, double q, std::size_t m);

/// Heaviside step with the half-maximum convention H(0) = 1/2.
double heaviside(double x) noexcept;

struct MeanFieldProblem {
  std::size_t half_degree = 0;
  double leverage = 0.0;
  std::vector<double> equities;          ///< post-shock equity per compartment
  std::vector<double> fractions;         ///< compartment probabilities, sum to one
  std::vector<std::size_t> thresholds;   ///< m per compartment, half_degree + 1 = immune
};

/// k is the total degree; thresholds are derived from the equities.
MeanFieldProblem make_mean_field_problem(std::size_t k, double leverage,
                                         std::span<const double> equities,
                                         std::span<const double> fractions,
                                         ThresholdRule rule = ThresholdRule::kStrict);

/// One application of q -> sum_mu Pi_mu P[Bin(k/2, q) >= m_mu].
double mean_field_iterate(const MeanFieldProblem& problem, double q_prev);

inline constexpr double kFixedPointTolerance = 1e-12;
inline constexpr std::size_t kMaxFixedPointIterations = 100000;

struct FixedPointSolution {
  double q_star = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  ///< size of the last step
  bool converged = false;
};

/// Iterates the mean-field map from q0 until a step is below
/// kFixedPointTolerance. For q0 at or below the least fixed point (for
/// instance q0 = Pi_1) the iterates increase monotonically towards it.
FixedPointSolution solve_fixed_point(const MeanFieldProblem& problem, double q0);

/// Least fixed point for fixed compartment fractions, started at Pi_1.
FixedPointSolution solve_q_of_N(const MeanFieldProblem& problem);

/// Expected default fraction of a finite system of N banks without shock
/// correlation: sum over compartment counts of multinomial probability times
/// the fixed point for fractions N_mu / N.
///
/// N <= kExactEnumerationLimit enumerates every composition. Above that,
/// each count is restricted to within 6 standard deviations of its mean,
/// widened where needed so that at most kTruncationMass is left out. The
/// neglected probability mass goes into the error bound.
QuadratureResult expected_q_uncorrelated(std::size_t n_banks, const ShockDistribution& dist,
                                         std::size_t k, double leverage,
                                         ThresholdRule rule = ThresholdRule::kStrict);

inline constexpr std::size_t kExactEnumerationLimit = 60;
inline constexpr double kTruncationMass = 1e-6;

/// Fixed point with fractions replaced by pi(alpha), started at pi_1(alpha).
FixedPointSolution solve_q_alpha(double alpha, const ShockDistribution& dist, std::size_t k,
                                 double leverage, ThresholdRule rule = ThresholdRule::kStrict);

/// E_X[q(X)] over the common factor. At rho == 0 this is the fixed point
/// with fractions equal to the shock probabilities.
QuadratureResult expected_q_correlated(const ShockDistribution& dist, std::size_t k,
                                       double leverage,
                                       ThresholdRule rule = ThresholdRule::kStrict);

/// Infinite-degree limit without correlation: p_1 plus every compartment
/// whose threshold eps_phi / leverage is exceeded by the cumulative mass of
/// the worse compartments, H(0) = 1/2. Returns exactly 1 when all
/// compartments fall and exactly p_1 + ... + p_mu on intermediate plateaus.
double limit_uncorrelated(const ShockDistribution& dist, double leverage);

/// Infinite-degree limit with correlation: compartment mu contributes the
/// mass of pi_mu over the factor values alpha below min(l_2, ..., l_mu),
/// l_phi = z_{phi-1} - F_Y^{-1}(eps_phi / leverage) with F_Y the
/// idiosyncratic CDF. eps_phi / leverage >= 1 makes compartment phi and all
/// milder ones immune. rho == 0 falls back to limit_uncorrelated.
QuadratureResult limit_correlated(const ShockDistribution& dist, double leverage);

/// Factor cut-offs l_phi for phi = 1..n-1 (zero-based compartments);
/// -inf marks an immune compartment. Entry 0 is +inf.
std::vector<double> limit_cutoffs(const ShockDistribution& dist, double leverage);

enum class Regime { kSubcritical, kSupercritical, kPartial };

/// Classifies the uncorrelated diversification limit: supercritical when it
/// is 1, subcritical when it is p_1, partial otherwise.
Regime classify_regime(const ShockDistribution& dist, double leverage);

const char* to_string(Regime regime) noexcept;

}  // namespace cvna
