#include "cvna/threshold_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

#include "cvna/normal.hpp"

namespace cvna {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::size_t threshold_count(double equity, double leverage, std::size_t half_degree,
                            ThresholdRule rule) {
  if (equity < 0.0) return 0;
  const std::size_t immune = half_degree + 1;
  if (half_degree == 0 || !(leverage > 0.0)) return immune;
  const double half = static_cast<double>(half_degree);
  const double ratio = half * equity / leverage;
  if (rule == ThresholdRule::kCeiling) {
    const double m = std::ceil(ratio);
    return m >= static_cast<double>(immune) ? immune : static_cast<std::size_t>(m);
  }
  // Same arithmetic as the balance-sheet engine: default iff fl(m * w) > eps.
  const double w = leverage / half;
  if (!(half * w > equity)) return immune;
  double guess = std::floor(equity / w);
  if (guess > half) guess = half;
  std::size_t m = static_cast<std::size_t>(std::max(guess, 0.0));
  while (m > 0 && static_cast<double>(m - 1) * w > equity) --m;
  while (!(static_cast<double>(m) * w > equity)) ++m;
  return m;
}

double binomial_upper_tail(std::size_t n, double q, std::size_t m) {
  if (m == 0) return 1.0;
  if (m > n) return 0.0;
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  return boost::math::ibeta(static_cast<double>(m), static_cast<double>(n - m + 1), q);
}

double heaviside(double x) noexcept {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return 0.0;
  return 0.5;
}

MeanFieldProblem make_mean_field_problem(std::size_t k, double leverage,
                                         std::span<const double> equities,
                                         std::span<const double> fractions, ThresholdRule rule) {
  if (k % 2 != 0) throw std::invalid_argument("make_mean_field_problem: k must be even");
  if (equities.size() != fractions.size()) {
    throw std::invalid_argument("make_mean_field_problem: equities and fractions differ in length");
  }
  if (!(leverage >= 0.0)) throw std::invalid_argument("make_mean_field_problem: leverage < 0");
  MeanFieldProblem p;
  p.half_degree = k / 2;
  p.leverage = leverage;
  p.equities.assign(equities.begin(), equities.end());
  p.fractions.assign(fractions.begin(), fractions.end());
  p.thresholds.resize(equities.size());
  for (std::size_t mu = 0; mu < equities.size(); ++mu) {
    p.thresholds[mu] = threshold_count(equities[mu], leverage, p.half_degree, rule);
  }
  return p;
}

double mean_field_iterate(const MeanFieldProblem& problem, double q_prev) {
  double q = 0.0;
  for (std::size_t mu = 0; mu < problem.fractions.size(); ++mu) {
    const double f = problem.fractions[mu];
    if (f == 0.0) continue;
    q += f * binomial_upper_tail(problem.half_degree, q_prev, problem.thresholds[mu]);
  }
  return std::min(q, 1.0);
}

namespace {

// Lower bound used to step over near-tangencies of f(q) = q. Each binomial
// tail T(q) = P[Bin(h, q) >= m] is convex below its inflection
// (m - 1) / (h - 1) and concave above. On [a, b] free of inflections a
// convex tail lies above its tangent at a and a concave one above its chord,
// so g(x) = f(x) - x is bounded below by a line through g(a).
class SafeStep {
 public:
  explicit SafeStep(const MeanFieldProblem& p) : p_(p) {
    const std::size_t h = p.half_degree;
    for (std::size_t mu = 0; mu < p.fractions.size(); ++mu) {
      const std::size_t m = p.thresholds[mu];
      if (p.fractions[mu] == 0.0 || m == 0 || m > h) continue;
      const double c = h > 1 ? static_cast<double>(m - 1) / static_cast<double>(h - 1) : 0.0;
      active_.push_back({mu, c});
      if (c > 0.0 && c < 1.0) breaks_.push_back(c);
    }
    std::sort(breaks_.begin(), breaks_.end());
  }

  // Some x > a with g > 0 on [a, x), or a itself. Requires g(a) = fa - a > 0.
  double advance(double a, double fa) const {
    const std::size_t h = p_.half_degree;
    const double g = fa - a;
    std::vector<double> tangent(active_.size());
    double dg = -1.0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      const double m = static_cast<double>(p_.thresholds[active_[i].mu]);
      tangent[i] = boost::math::ibeta_derivative(m, static_cast<double>(h) - m + 1.0, a);
      dg += p_.fractions[active_[i].mu] * tangent[i];
    }
    // Window: twice the Newton step, never across an inflection.
    double b = next_break(a);
    if (dg < 0.0) b = std::min(b, a - 2.0 * g / dg);
    if (!(b > a)) return a;

    double slope = -1.0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      const Tail& t = active_[i];
      const double w = p_.fractions[t.mu];
      if (a < t.inflection) {
        slope += w * tangent[i];
      } else {
        slope += w * (binomial_upper_tail(h, b, p_.thresholds[t.mu]) -
                      binomial_upper_tail(h, a, p_.thresholds[t.mu])) /
                 (b - a);
      }
    }
    if (slope >= 0.0) return b;
    return std::min(b, a - g / slope);
  }

 private:
  struct Tail {
    std::size_t mu;
    double inflection;
  };

  double next_break(double a) const {
    for (double c : breaks_) {
      if (c > a) return c;
    }
    return 1.0;
  }

  const MeanFieldProblem& p_;
  std::vector<Tail> active_;
  std::vector<double> breaks_;
};

}  // namespace

FixedPointSolution solve_fixed_point(const MeanFieldProblem& problem, double q0) {
  FixedPointSolution s;
  const SafeStep safe(problem);
  double q = q0;
  for (std::size_t it = 1; it <= kMaxFixedPointIterations; ++it) {
    const double next = mean_field_iterate(problem, q);
    s.residual = std::abs(next - q);
    s.iterations = it;
    if (s.residual < kFixedPointTolerance) {
      q = next;
      s.converged = true;
      break;
    }
    // Plain iteration alone crawls through near-tangencies.
    q = next > q ? std::max(next, safe.advance(q, next)) : next;
  }
  s.q_star = q;
  return s;
}

FixedPointSolution solve_q_of_N(const MeanFieldProblem& problem) {
  return solve_fixed_point(problem, problem.fractions.empty() ? 0.0 : problem.fractions[0]);
}

namespace {

struct CountBox {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

// Walks all compositions inside the boxes. The innermost loop moves banks
// from the mildest compartment into the first one, which only raises the
// mean-field map, so the previous fixed point is a valid warm start.
class CompositionSum {
 public:
  CompositionSum(std::size_t n, std::span<const double> probs, std::vector<CountBox> boxes,
                 MeanFieldProblem problem)
      : n_(n), probs_(probs), boxes_(std::move(boxes)), problem_(std::move(problem)),
        counts_(probs.size(), 0) {}

  QuadratureResult run() {
    recurse(1, n_);
    QuadratureResult r;
    r.value = sum_;
    r.error = std::max(0.0, 1.0 - mass_) + unconverged_mass_;
    r.converged = unconverged_mass_ == 0.0;
    return r;
  }

 private:
  void recurse(std::size_t level, std::size_t remaining) {
    const std::size_t last = probs_.size() - 1;
    if (level == last) {
      innermost(remaining);
      return;
    }
    const CountBox& box = boxes_[level];
    for (std::size_t c = box.lo; c <= std::min(box.hi, remaining); ++c) {
      counts_[level] = c;
      recurse(level + 1, remaining - c);
    }
    counts_[level] = 0;
  }

  void innermost(std::size_t remaining) {
    const std::size_t last = probs_.size() - 1;
    const double n = static_cast<double>(n_);
    double warm = 0.0;
    for (std::size_t c1 = boxes_[0].lo; c1 <= std::min(boxes_[0].hi, remaining); ++c1) {
      const std::size_t c_last = remaining - c1;
      if (c_last < boxes_[last].lo) break;
      if (c_last > boxes_[last].hi) continue;
      counts_[0] = c1;
      counts_[last] = c_last;
      const double pmf = multinomial_pmf(CompartmentVector(counts_), probs_);
      if (pmf == 0.0) continue;
      for (std::size_t mu = 0; mu < counts_.size(); ++mu) {
        problem_.fractions[mu] = static_cast<double>(counts_[mu]) / n;
      }
      const FixedPointSolution s =
          solve_fixed_point(problem_, std::max(problem_.fractions[0], warm));
      warm = s.q_star;
      sum_ += pmf * s.q_star;
      mass_ += pmf;
      if (!s.converged) unconverged_mass_ += pmf;
    }
  }

  std::size_t n_;
  std::span<const double> probs_;
  std::vector<CountBox> boxes_;
  MeanFieldProblem problem_;
  std::vector<std::size_t> counts_;
  double sum_ = 0.0;
  double mass_ = 0.0;
  double unconverged_mass_ = 0.0;
};

}  // namespace

QuadratureResult expected_q_uncorrelated(std::size_t n_banks, const ShockDistribution& dist,
                                         std::size_t k, double leverage, ThresholdRule rule) {
  if (n_banks == 0) throw std::invalid_argument("expected_q_uncorrelated: need at least one bank");
  const std::vector<double> equities = dist.equities();
  std::vector<double> fractions(dist.probs().begin(), dist.probs().end());
  MeanFieldProblem problem = make_mean_field_problem(k, leverage, equities, fractions, rule);

  std::vector<CountBox> boxes(dist.classes());
  const double n = static_cast<double>(n_banks);
  for (std::size_t mu = 0; mu < boxes.size(); ++mu) {
    if (n_banks <= kExactEnumerationLimit) {
      boxes[mu] = {0, n_banks};
      continue;
    }
    const double p = dist.probs()[mu];
    const double mean = n * p;
    const double spread = 6.0 * std::sqrt(n * p * (1.0 - p));
    std::size_t lo = static_cast<std::size_t>(std::max(0.0, std::ceil(mean - spread)));
    std::size_t hi = static_cast<std::size_t>(std::min(n, std::floor(mean + spread)));
    // Skewed marginals (small N p) leak more than a Gaussian 6 sigma tail;
    // widen until each side drops below its share of the mass budget.
    const double budget = kTruncationMass / (2.0 * static_cast<double>(boxes.size()));
    while (hi < n_banks && binomial_upper_tail(n_banks, p, hi + 1) > budget) ++hi;
    while (lo > 0 && 1.0 - binomial_upper_tail(n_banks, p, lo) > budget) --lo;
    boxes[mu] = {lo, hi};
  }
  CompositionSum sum(n_banks, dist.probs(), std::move(boxes), std::move(problem));
  return sum.run();
}

FixedPointSolution solve_q_alpha(double alpha, const ShockDistribution& dist, std::size_t k,
                                 double leverage, ThresholdRule rule) {
  const std::vector<double> pi = conditional_probabilities(alpha, dist);
  const std::vector<double> equities = dist.equities();
  return solve_q_of_N(make_mean_field_problem(k, leverage, equities, pi, rule));
}

QuadratureResult expected_q_correlated(const ShockDistribution& dist, std::size_t k,
                                       double leverage, ThresholdRule rule) {
  const std::vector<double> equities = dist.equities();
  std::vector<double> fractions(dist.probs().begin(), dist.probs().end());
  MeanFieldProblem problem = make_mean_field_problem(k, leverage, equities, fractions, rule);
  if (dist.rho() == 0.0) {
    const FixedPointSolution s = solve_q_of_N(problem);
    return {s.q_star, s.residual, s.converged};
  }
  const LatentFactor factor = latent_factor(dist);
  bool all_converged = true;
  const auto q_of_alpha = [&](double alpha) {
    problem.fractions = conditional_probabilities(alpha, factor);
    const FixedPointSolution s = solve_q_of_N(problem);
    all_converged = all_converged && s.converged;
    return s.q_star;
  };
  QuadratureResult r = expect_normal(q_of_alpha, dist.rho());
  // A stalled fixed point sits on a measure-zero cascade boundary; flag it but keep the value.
  r.converged = r.converged && all_converged;
  return r;
}

double limit_uncorrelated(const ShockDistribution& dist, double leverage) {
  const double p1 = dist.probs()[0];
  if (!(leverage > 0.0)) return p1;
  double value = p1;
  double weight = 1.0;
  double cumulative = p1;
  for (std::size_t phi = 1; phi < dist.classes(); ++phi) {
    weight *= heaviside(cumulative - dist.equity(phi) / leverage);
    if (weight == 0.0) return value;
    value += dist.probs()[phi] * weight;
    cumulative += dist.probs()[phi];
  }
  return weight == 1.0 ? 1.0 : value;
}

std::vector<double> limit_cutoffs(const ShockDistribution& dist, double leverage) {
  std::vector<double> cut(dist.classes(), kInf);
  const double idio_var = 1.0 - dist.rho();
  for (std::size_t phi = 1; phi < dist.classes(); ++phi) {
    const double ratio = leverage > 0.0 ? dist.equity(phi) / leverage : kInf;
    if (ratio >= 1.0) {
      cut[phi] = -kInf;
    } else if (ratio <= 0.0) {
      cut[phi] = kInf;
    } else {
      cut[phi] = normal_quantile(dist.cumulative(phi - 1)) -
                 std::sqrt(idio_var) * normal_quantile(ratio);
    }
  }
  return cut;
}

QuadratureResult limit_correlated(const ShockDistribution& dist, double leverage) {
  if (dist.rho() == 0.0) return {limit_uncorrelated(dist, leverage), 0.0, true};
  const LatentFactor factor = latent_factor(dist);
  const std::vector<double> cut = limit_cutoffs(dist, leverage);

  const auto pi_of = [&](std::size_t mu) {
    return [&factor, mu](double alpha) { return conditional_probabilities(alpha, factor)[mu]; };
  };

  QuadratureResult total = expect_normal(pi_of(0), dist.rho());
  double upper = kInf;
  for (std::size_t mu = 1; mu < dist.classes(); ++mu) {
    upper = std::min(upper, cut[mu]);
    if (upper == -kInf) break;
    const QuadratureResult part = upper == kInf ? expect_normal(pi_of(mu), dist.rho())
                                                : expect_normal_below(pi_of(mu), dist.rho(), upper);
    total.value += part.value;
    total.error += part.error;
    total.converged = total.converged && part.converged;
  }
  return total;
}

Regime classify_regime(const ShockDistribution& dist, double leverage) {
  const double limit = limit_uncorrelated(dist, leverage);
  if (limit == 1.0) return Regime::kSupercritical;
  if (limit == dist.probs()[0]) return Regime::kSubcritical;
  return Regime::kPartial;
}

const char* to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::kSubcritical: return "subcritical";
    case Regime::kSupercritical: return "supercritical";
    case Regime::kPartial: return "partial";
  }
  return "unknown";
}

}  // namespace cvna
