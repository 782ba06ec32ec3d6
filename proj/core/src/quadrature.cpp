#include "cvna/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cvna/normal.hpp"

namespace cvna {

GaussHermite::GaussHermite(std::size_t order) : nodes_(order), weights_(order) {
  if (order == 0) throw std::invalid_argument("GaussHermite: order must be positive");
  // Newton iteration on the orthonormal Hermite recurrence with the usual
  // asymptotic starting guesses for the largest roots.
  const double n = static_cast<double>(order);
  const double pi_m4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const std::size_t half = (order + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 1; i <= half; ++i) {
    if (i == 1) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 2) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 3) {
      z = 1.86 * z - 0.86 * nodes_[0];
    } else if (i == 4) {
      z = 1.91 * z - 0.91 * nodes_[1];
    } else {
      z = 2.0 * z - nodes_[i - 3];
    }
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pi_m4;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
      }
      derivative = std::sqrt(2.0 * n) * p2;
      const double previous = z;
      z = previous - p1 / derivative;
      if (std::abs(z - previous) <= 1e-14 * std::max(1.0, std::abs(z))) break;
    }
    nodes_[i - 1] = z;
    nodes_[order - i] = -z;
    weights_[i - 1] = 2.0 / (derivative * derivative);
    weights_[order - i] = weights_[i - 1];
  }
}

const GaussHermite& gauss_hermite_256() {
  static const GaussHermite rule(256);
  return rule;
}

namespace {

struct SimpsonState {
  const std::function<double(double)>* f;
  int max_depth;
  int min_depth;
  double error = 0.0;
};

double simpson_panel(SimpsonState& s, double a, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = (*s.f)(lm);
  const double frm = (*s.f)(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const bool forced = depth < s.min_depth;
  if (!forced && (depth >= s.max_depth || std::abs(delta) <= 15.0 * tol)) {
    s.error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_panel(s, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_panel(s, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

// Mass of N(0, variance) outside +-kFactorSpan standard deviations.
const double kTailMass = 2.0 * normal_cdf(-kFactorSpan);

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double tol, int max_depth, int min_depth) {
  if (!(b > a)) return {0.0, 0.0, true};
  SimpsonState state{&f, max_depth, min_depth};
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double value = simpson_panel(state, a, b, fa, fm, fb, whole, tol, 0);
  return {value, state.error, state.error <= tol};
}

QuadratureResult expect_normal(const std::function<double(double)>& f, double variance,
                               double tol) {
  if (!(variance >= 0.0)) throw std::invalid_argument("expect_normal: negative variance");
  if (variance == 0.0) return {f(0.0), 0.0, true};

  const GaussHermite& rule = gauss_hermite_256();
  const double scale = std::sqrt(2.0 * variance);
  const double hermite =
      rule.integrate([&](double t) { return f(scale * t); }) / std::sqrt(std::numbers::pi);

  const double sd = std::sqrt(variance);
  const auto weighted = [&](double alpha) { return f(alpha) * normal_pdf(alpha, variance); };
  const QuadratureResult simpson =
      adaptive_simpson(weighted, -kFactorSpan * sd, kFactorSpan * sd, tol);

  const double gap = std::abs(hermite - simpson.value);
  if (gap <= tol) return {hermite, std::max(gap, kTailMass), true};
  return {simpson.value, simpson.error + kTailMass, simpson.converged};
}

QuadratureResult expect_normal_below(const std::function<double(double)>& f, double variance,
                                     double upper, double tol) {
  if (!(variance > 0.0)) throw std::invalid_argument("expect_normal_below: variance must be > 0");
  const double sd = std::sqrt(variance);
  const double lo = -kFactorSpan * sd;
  const double hi = std::min(upper, kFactorSpan * sd);
  if (!(hi > lo)) return {0.0, normal_cdf(upper, variance), true};
  const auto weighted = [&](double alpha) { return f(alpha) * normal_pdf(alpha, variance); };
  QuadratureResult r = adaptive_simpson(weighted, lo, hi, tol);
  r.error += kTailMass;
  return r;
}

}  // namespace cvna
