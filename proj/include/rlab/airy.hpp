#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace rlab {

/// sign * exp(log_mag); sign is -1, 0 or +1.
struct LogReal {
  double log_mag = -INFINITY;
  double sign = 0.0;

  static LogReal from(double v) noexcept {
    if (v == 0.0) return {};
    return {std::log(std::abs(v)), v > 0 ? 1.0 : -1.0};
  }
  /// Raw value; throws when |log_mag| >= 200.
  double value() const;
  /// sign * exp(log_mag - shift)
  double shifted(double shift) const noexcept {
    return sign == 0.0 ? 0.0 : sign * std::exp(log_mag - shift);
  }
};

struct AiryValue {
  double x = 0.0;
  LogReal ai, ai_prime, bi, bi_prime;
};

/// Ai, Ai', Bi, Bi' at real x. Inside [-10, 10] the values come from a
/// Taylor-stepped table (spacing 0.25) plus one local Taylor step; outside,
/// from the asymptotic expansions truncated at the smallest term.
AiryValue airy_eval(double x);

/// Asymptotic-expansion branch alone (|x| large); exposed to cross-check the
/// table near its edge.
AiryValue airy_eval_asymptotic(double x);

/// Boundary between the tabulated region and the asymptotic expansions.
inline constexpr double kAiryTableEdge = 10.0;

/// Ai(x)Bi'(x) - Ai'(x)Bi(x), evaluated in log space (should be 1/pi).
double airy_wronskian(const AiryValue& v);

/// Deviations from the leading-order large-|x| forms, at x > 0:
///   exp_ai = |2 sqrt(pi) x^{1/4} Ai(x) e^{zeta} - 1|
///   exp_bi = |sqrt(pi) x^{1/4} Bi(x) e^{-zeta} - 1|
///   osc_ai = |sqrt(pi) x^{1/4} Ai(-x) - cos(zeta - pi/4)|
///   osc_bi = |-sqrt(pi) x^{1/4} Bi(-x) - sin(zeta - pi/4)|
/// with zeta = 2/3 x^{3/2}. The oscillatory pair is the maximum over one
/// period window [x, x + 2 pi / sqrt(x)], so the envelope is measured
/// instead of a value that happens to sit near a node of the correction.
struct AiryAsymptoticDeviation {
  double exp_ai = 0.0;
  double exp_bi = 0.0;
  double osc_ai = 0.0;
  double osc_bi = 0.0;
};
AiryAsymptoticDeviation airy_asymptotic_deviation(double x, int window_samples = 64);

/// max over (x, x') with x' <= x of |x|^{1/4}|x'|^{1/4}|Ai(x)| (Ai(x')^2 + Bi(x')^2)^{1/2}.
/// Throws OrderViolated for a pair with x' > x and InvalidArgument when empty.
double airy_modulus_bound_check(const std::vector<std::pair<double, double>>& samples);

/// C_A estimated on the n x n grid [-L, L]^2 restricted to x' <= x.
double airy_modulus_bound_grid(double L, std::size_t n);

}  // namespace rlab
