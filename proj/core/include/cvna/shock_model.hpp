#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "cvna/quadrature.hpp"

namespace cvna {

/// Largest accepted shock correlation; values in (kMaxRho, 1) are capped.
inline constexpr double kMaxRho = 0.999;

/// Discrete external shock distribution with single-factor Gaussian copula
/// dependence.
///
/// Shock classes are ordered from worst to mildest: the first value wipes
/// out the bank (sigma < -1), intermediate values lie in [-1, 0) and the
/// last one is 0. A bank hit by class mu keeps equity 1 + sigma_mu.
class ShockDistribution {
 public:
  /// Throws std::invalid_argument on malformed input (fewer than two
  /// classes, shock ordering violated, probabilities negative or not summing
  /// to one within 1e-9, rho outside [0, 1)). rho above kMaxRho is capped.
  ShockDistribution(std::vector<double> sigmas, std::vector<double> probs, double rho = 0.0);

  std::size_t classes() const noexcept { return sigmas_.size(); }
  std::span<const double> sigmas() const noexcept { return sigmas_; }
  std::span<const double> probs() const noexcept { return probs_; }
  double rho() const noexcept { return rho_; }

  /// p_1 + ... + p_{mu+1} (zero-based mu); the last entry is exactly 1.
  double cumulative(std::size_t mu) const noexcept { return cumulative_[mu]; }

  /// Post-shock equity 1 + sigma_mu.
  double equity(std::size_t mu) const noexcept { return 1.0 + sigmas_[mu]; }
  std::vector<double> equities() const;

  /// Class index of a uniform draw: the first mu with u <= cumulative(mu).
  std::size_t class_of(double u) const noexcept;

  ShockDistribution with_rho(double rho) const { return {sigmas_, probs_, rho}; }

 private:
  std::vector<double> sigmas_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double rho_ = 0.0;
};

/// Bank counts per shock class.
struct CompartmentVector {
  std::vector<std::size_t> counts;

  CompartmentVector() = default;
  explicit CompartmentVector(std::vector<std::size_t> c) : counts(std::move(c)) {}
  CompartmentVector(std::initializer_list<std::size_t> c) : counts(c) {}

  std::size_t total() const noexcept;
  std::size_t operator[](std::size_t mu) const noexcept { return counts[mu]; }
  friend bool operator==(const CompartmentVector&, const CompartmentVector&) = default;
};

/// One realised shock per bank together with its class.
struct ShockVector {
  std::vector<double> values;
  std::vector<std::uint8_t> classes;
  CompartmentVector compartments;

  std::size_t size() const noexcept { return values.size(); }
};

/// Builds a shock vector from explicit class assignments.
ShockVector make_shock_vector(const ShockDistribution& dist, std::span<const std::uint8_t> classes);

/// Latent-scale description of the copula: Z_i = X + Y_i with
/// X ~ N(0, rho) common and Y_i ~ N(0, 1 - rho) idiosyncratic. thresholds[mu]
/// is the standard normal quantile of cumulative(mu) (last one +inf).
struct LatentFactor {
  double rho = 0.0;
  double common_variance = 0.0;
  double idiosyncratic_variance = 1.0;
  std::vector<double> thresholds;
};

LatentFactor latent_factor(const ShockDistribution& dist);

/// Inverse of the discrete shock CDF.
double inverse_shock_cdf(double u, const ShockDistribution& dist);

/// Samples one shock per bank. rho == 0 maps independent uniforms through the
/// inverse CDF; rho > 0 draws a common x ~ N(0, rho) and idiosyncratic
/// y_i ~ N(0, 1 - rho) and maps Phi(x + y_i). Deterministic in `seed`.
ShockVector sample_shocks(const ShockDistribution& dist, std::size_t n, std::uint64_t seed);

/// Same as sample_shocks but also returns the latent z_i (empty when rho == 0).
ShockVector sample_shocks(const ShockDistribution& dist, std::size_t n, std::uint64_t seed,
                          std::vector<double>* latent);

/// Writes "bank,class,shock" rows.
void write_shock_csv(const ShockVector& shocks, std::ostream& out);

/// log of N! / (N_1! ... N_m!).
double log_multinomial_coefficient(const CompartmentVector& counts);

/// Multinomial probability of the counts under class probabilities `probs`,
/// evaluated in log space.
double multinomial_pmf(const CompartmentVector& counts, std::span<const double> probs);

/// Class probabilities conditional on the common factor X = alpha:
/// pi_mu(alpha) = F_Y(z_mu - alpha) - F_Y(z_{mu-1} - alpha). At rho == 0
/// this is the unconditional probability vector.
std::vector<double> conditional_probabilities(double alpha, const ShockDistribution& dist);

/// Same, with the latent thresholds precomputed. Requires rho > 0.
std::vector<double> conditional_probabilities(double alpha, const LatentFactor& factor);

/// Three-class form of conditional_probabilities.
std::array<double, 3> pi_probabilities(double alpha, const ShockDistribution& dist);

/// Probability of the counts under the correlated shock model: the
/// multinomial with factor-conditional probabilities averaged over X.
/// At rho == 0 returns multinomial_pmf exactly.
QuadratureResult correlated_pmf(const CompartmentVector& counts, const ShockDistribution& dist);

}  // namespace cvna
