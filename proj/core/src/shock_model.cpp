#include "cvna/shock_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "cvna/normal.hpp"

namespace cvna {

ShockDistribution::ShockDistribution(std::vector<double> sigmas, std::vector<double> probs,
                                     double rho)
    : sigmas_(std::move(sigmas)), probs_(std::move(probs)), rho_(rho) {
  const std::size_t m = sigmas_.size();
  if (m < 2) throw std::invalid_argument("ShockDistribution: need at least two shock classes");
  if (probs_.size() != m) {
    throw std::invalid_argument("ShockDistribution: sigmas and probs differ in length");
  }
  if (!(sigmas_.front() < -1.0)) {
    throw std::invalid_argument("ShockDistribution: first shock must be below -1");
  }
  for (std::size_t mu = 1; mu + 1 < m; ++mu) {
    if (!(sigmas_[mu] >= -1.0 && sigmas_[mu] < 0.0)) {
      throw std::invalid_argument("ShockDistribution: intermediate shocks must lie in [-1, 0)");
    }
  }
  if (sigmas_.back() != 0.0) throw std::invalid_argument("ShockDistribution: last shock must be 0");

  double total = 0.0;
  cumulative_.resize(m);
  for (std::size_t mu = 0; mu < m; ++mu) {
    if (!(probs_[mu] >= 0.0)) throw std::invalid_argument("ShockDistribution: negative probability");
    total += probs_[mu];
    cumulative_[mu] = total;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("ShockDistribution: probabilities must sum to 1");
  }
  cumulative_.back() = 1.0;

  if (!(rho_ >= 0.0 && rho_ < 1.0)) throw std::invalid_argument("ShockDistribution: rho must lie in [0, 1)");
  rho_ = std::min(rho_, kMaxRho);
}

std::vector<double> ShockDistribution::equities() const {
  std::vector<double> out(classes());
  for (std::size_t mu = 0; mu < classes(); ++mu) out[mu] = equity(mu);
  return out;
}

std::size_t ShockDistribution::class_of(double u) const noexcept {
  for (std::size_t mu = 0; mu + 1 < classes(); ++mu) {
    if (u <= cumulative_[mu]) return mu;
  }
  return classes() - 1;
}

std::size_t CompartmentVector::total() const noexcept {
  std::size_t sum = 0;
  for (std::size_t c : counts) sum += c;
  return sum;
}

ShockVector make_shock_vector(const ShockDistribution& dist, std::span<const std::uint8_t> classes) {
  ShockVector out;
  out.values.reserve(classes.size());
  out.classes.assign(classes.begin(), classes.end());
  out.compartments.counts.assign(dist.classes(), 0);
  for (std::uint8_t mu : classes) {
    if (mu >= dist.classes()) throw std::invalid_argument("make_shock_vector: class out of range");
    out.values.push_back(dist.sigmas()[mu]);
    ++out.compartments.counts[mu];
  }
  return out;
}

LatentFactor latent_factor(const ShockDistribution& dist) {
  LatentFactor f;
  f.rho = dist.rho();
  f.common_variance = dist.rho();
  f.idiosyncratic_variance = 1.0 - dist.rho();
  f.thresholds.resize(dist.classes());
  for (std::size_t mu = 0; mu < dist.classes(); ++mu) {
    f.thresholds[mu] = normal_quantile(dist.cumulative(mu));
  }
  f.thresholds.back() = std::numeric_limits<double>::infinity();
  return f;
}

double inverse_shock_cdf(double u, const ShockDistribution& dist) {
  return dist.sigmas()[dist.class_of(u)];
}

ShockVector sample_shocks(const ShockDistribution& dist, std::size_t n, std::uint64_t seed) {
  return sample_shocks(dist, n, seed, nullptr);
}

ShockVector sample_shocks(const ShockDistribution& dist, std::size_t n, std::uint64_t seed,
                          std::vector<double>* latent) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> classes(n);
  if (latent) latent->clear();
  const double rho = dist.rho();
  if (rho == 0.0) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      classes[i] = static_cast<std::uint8_t>(dist.class_of(uniform(rng)));
    }
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double common = std::sqrt(rho) * normal(rng);
    const double idio_sd = std::sqrt(1.0 - rho);
    if (latent) latent->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = common + idio_sd * normal(rng);
      if (latent) (*latent)[i] = z;
      classes[i] = static_cast<std::uint8_t>(dist.class_of(normal_cdf(z)));
    }
  }
  return make_shock_vector(dist, classes);
}

void write_shock_csv(const ShockVector& shocks, std::ostream& out) {
  out << "bank,class,shock\n";
  for (std::size_t i = 0; i < shocks.size(); ++i) {
    out << i << ',' << static_cast<int>(shocks.classes[i]) << ',' << shocks.values[i] << '\n';
  }
}

double log_multinomial_coefficient(const CompartmentVector& counts) {
  double log_coeff = std::lgamma(static_cast<double>(counts.total()) + 1.0);
  for (std::size_t c : counts.counts) log_coeff -= std::lgamma(static_cast<double>(c) + 1.0);
  return log_coeff;
}

namespace {

// Log of the multinomial kernel; -inf when a populated class has probability 0.
double log_multinomial(double log_coeff, const CompartmentVector& counts,
                       std::span<const double> probs) {
  double log_p = log_coeff;
  for (std::size_t mu = 0; mu < counts.counts.size(); ++mu) {
    const std::size_t c = counts.counts[mu];
    if (c == 0) continue;
    if (probs[mu] <= 0.0) return -std::numeric_limits<double>::infinity();
    log_p += static_cast<double>(c) * std::log(probs[mu]);
  }
  return log_p;
}

}  // namespace

double multinomial_pmf(const CompartmentVector& counts, std::span<const double> probs) {
  if (counts.counts.size() != probs.size()) {
    throw std::invalid_argument("multinomial_pmf: counts and probs differ in length");
  }
  return std::exp(log_multinomial(log_multinomial_coefficient(counts), counts, probs));
}

std::vector<double> conditional_probabilities(double alpha, const LatentFactor& factor) {
  const std::size_t m = factor.thresholds.size();
  std::vector<double> pi(m);
  const double sd = std::sqrt(factor.idiosyncratic_variance);
  double below = 0.0;
  for (std::size_t mu = 0; mu + 1 < m; ++mu) {
    const double cdf = normal_cdf((factor.thresholds[mu] - alpha) / sd);
    pi[mu] = std::max(0.0, cdf - below);
    below = cdf;
  }
  pi[m - 1] = normal_cdf(-(factor.thresholds[m - 2] - alpha) / sd);
  return pi;
}

std::vector<double> conditional_probabilities(double alpha, const ShockDistribution& dist) {
  if (dist.rho() == 0.0) return {dist.probs().begin(), dist.probs().end()};
  return conditional_probabilities(alpha, latent_factor(dist));
}

std::array<double, 3> pi_probabilities(double alpha, const ShockDistribution& dist) {
  if (dist.classes() != 3) throw std::invalid_argument("pi_probabilities: needs three shock classes");
  const std::vector<double> pi = conditional_probabilities(alpha, dist);
  return {pi[0], pi[1], pi[2]};
}

QuadratureResult correlated_pmf(const CompartmentVector& counts, const ShockDistribution& dist) {
  if (counts.counts.size() != dist.classes()) {
    throw std::invalid_argument("correlated_pmf: counts and classes differ in length");
  }
  if (dist.rho() == 0.0) return {multinomial_pmf(counts, dist.probs()), 0.0, true};
  const double log_coeff = log_multinomial_coefficient(counts);
  const LatentFactor factor = latent_factor(dist);
  const auto conditional = [&](double alpha) {
    const std::vector<double> pi = conditional_probabilities(alpha, factor);
    return std::exp(log_multinomial(log_coeff, counts, pi));
  };
  return expect_normal(conditional, dist.rho());
}

}  // namespace cvna
