#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cvna {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< estimated absolute error
  bool converged = true;
};

/// Absolute tolerance used for every integral over the common factor.
inline constexpr double kQuadratureTolerance = 1e-9;

/// Half-width, in standard deviations, of the finite window used by the
/// adaptive cross-check.
inline constexpr double kFactorSpan = 8.0;

/// Gauss-Hermite rule for integrals of the form  int exp(-t^2) f(t) dt.
class GaussHermite {
 public:
  explicit GaussHermite(std::size_t order);

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * f(nodes_[i]);
    return sum;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Shared 256-node rule.
const GaussHermite& gauss_hermite_256();

/// Adaptive Simpson on [a, b]. Intervals are split until the local error
/// estimate meets its share of `tol` or `max_depth` is reached; the result's
/// error is the sum of the local estimates of the accepted panels. The first
/// `min_depth` levels are always split.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double tol = kQuadratureTolerance, int max_depth = 40,
                                  int min_depth = 6);

/// E[f(X)] for X ~ N(0, variance), f bounded by one in absolute value.
///
/// Gauss-Hermite (256 nodes, alpha = sqrt(2 variance) t) is cross-checked by
/// adaptive Simpson on +-kFactorSpan standard deviations. When the two agree
/// within `tol` the Gauss-Hermite value is returned; otherwise the integrand
/// is treated as non-smooth and the adaptive value is returned with its own
/// error estimate. variance == 0 returns f(0) exactly.
QuadratureResult expect_normal(const std::function<double(double)>& f, double variance,
                               double tol = kQuadratureTolerance);

/// int_{-inf}^{upper} f(alpha) pdf_X(alpha) d alpha for X ~ N(0, variance),
/// f bounded by one, by adaptive Simpson on the truncated window.
QuadratureResult expect_normal_below(const std::function<double(double)>& f, double variance,
                                     double upper, double tol = kQuadratureTolerance);

}  // namespace cvna
