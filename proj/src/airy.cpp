#include "rlab/airy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "rlab/errors.hpp"
#include "rlab/numerics.hpp"

namespace rlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpacing = 0.25;
constexpr int kNodes = static_cast<int>(2.0 * kAiryTableEdge / kSpacing) + 1;

// Ai(0), Ai'(0)
const double kAi0 = 1.0 / (std::pow(3.0, 2.0 / 3.0) * std::tgamma(2.0 / 3.0));
const double kAip0 = -1.0 / (std::pow(3.0, 1.0 / 3.0) * std::tgamma(1.0 / 3.0));

struct Pair {
  double u, du;
};

// One Taylor step of u'' = x u from x0 to x0 + t, coefficients from
// (j)(j-1) a_j = x0 a_{j-2} + a_{j-3}.
Pair taylor_step(double x0, Pair p, double t) {
  if (t == 0.0) return p;
  std::array<double, 3> a{0.0, p.u, p.du};  // a_{j-3}, a_{j-2}, a_{j-1}
  double u = p.u + p.du * t;
  double du = p.du;
  double tj1 = t;  // t^{j-1}
  int quiet = 0;
  for (int j = 2; j < 200; ++j) {
    const double aj = (x0 * a[1] + a[0]) / (j * (j - 1.0));
    const double dterm = j * aj * tj1;
    tj1 *= t;
    const double term = aj * tj1;
    u += term;
    du += dterm;
    a = {a[1], a[2], aj};
    const bool small = std::abs(term) <= 1e-18 * std::abs(u) && std::abs(dterm) <= 1e-18 * std::abs(du);
    quiet = small ? quiet + 1 : 0;
    if (quiet >= 3) break;
  }
  return {u, du};
}

double u_coeff_next(double prev, int k) {
  return prev * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
}

// Partial sums of sum_k s_k u_k / zeta^k (and the v_k counterpart) where the
// sign pattern is selected by `mode`: 0 -> all +, 1 -> (-1)^k, 2 -> even
// terms with (-1)^{k/2}, 3 -> odd terms with (-1)^{(k-1)/2}.
struct SeriesSums {
  double u = 0.0;
  double v = 0.0;
};
SeriesSums asymptotic_sum(double zeta, int mode) {
  SeriesSums s;
  double uk = 1.0;
  double zk = 1.0;
  double last_u = std::numeric_limits<double>::infinity();
  double last_v = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 400; ++k) {
    if (k > 0) {
      uk = u_coeff_next(uk, k);
      zk *= zeta;
    }
    const double vk = k == 0 ? 1.0 : -(6.0 * k + 1.0) / (6.0 * k - 1.0) * uk;
    const double tu = uk / zk;
    const double tv = std::abs(vk) / zk;
    if (tu > last_u && tv > last_v) break;  // past the smallest term
    last_u = tu;
    last_v = tv;
    double sign = 0.0;
    switch (mode) {
      case 0: sign = 1.0; break;
      case 1: sign = (k % 2 == 0) ? 1.0 : -1.0; break;
      case 2: sign = (k % 2 == 0) ? ((k / 2) % 2 == 0 ? 1.0 : -1.0) : 0.0; break;
      case 3: sign = (k % 2 == 1) ? (((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0) : 0.0; break;
    }
    s.u += sign * uk / zk;
    s.v += sign * vk / zk;
    if (tu < 1e-17 * std::abs(s.u) && tv < 1e-17 * std::abs(s.v) && k > 0) break;
  }
  return s;
}

struct Table {
  std::array<Pair, kNodes> ai{};
  std::array<Pair, kNodes> bi{};
  double node(int i) const { return -kAiryTableEdge + kSpacing * i; }

  Table() {
    const int zero = kNodes / 2;
    // Bi in both directions from the origin (dominant for x > 0).
    bi[zero] = {std::sqrt(3.0) * kAi0, -std::sqrt(3.0) * kAip0};
    for (int i = zero; i + 1 < kNodes; ++i) bi[i + 1] = taylor_step(node(i), bi[i], kSpacing);
    for (int i = zero; i > 0; --i) bi[i - 1] = taylor_step(node(i), bi[i], -kSpacing);
    // Ai for x <= 0 from the origin; for x > 0 backward from the recessive end.
    ai[zero] = {kAi0, kAip0};
    for (int i = zero; i > 0; --i) ai[i - 1] = taylor_step(node(i), ai[i], -kSpacing);
    const double x = kAiryTableEdge;
    const double zeta = 2.0 / 3.0 * std::pow(x, 1.5);
    const auto s = asymptotic_sum(zeta, 1);
    const double pref = std::exp(-zeta) / (2.0 * std::sqrt(kPi));
    ai[kNodes - 1] = {pref / std::pow(x, 0.25) * s.u, -pref * std::pow(x, 0.25) * s.v};
    for (int i = kNodes - 1; i > zero + 1; --i) ai[i - 1] = taylor_step(node(i), ai[i], -kSpacing);
  }
};

const Table& table() {
  static const Table t;
  return t;
}

AiryValue from_table(double x) {
  const auto& t = table();
  int i = static_cast<int>(std::lround((x + kAiryTableEdge) / kSpacing));
  i = std::clamp(i, 0, kNodes - 1);
  const double x0 = t.node(i);
  const Pair a = taylor_step(x0, t.ai[i], x - x0);
  const Pair b = taylor_step(x0, t.bi[i], x - x0);
  return {x, LogReal::from(a.u), LogReal::from(a.du), LogReal::from(b.u), LogReal::from(b.du)};
}

LogReal make(double log_prefactor, double factor) {
  LogReal r = LogReal::from(factor);
  r.log_mag += log_prefactor;
  return r;
}

}  // namespace

AiryValue airy_eval_asymptotic(double x) {
  if (x == 0.0) throw Error(ErrorKind::InvalidArgument, "asymptotic branch needs x != 0");
  const double y = std::abs(x);
  const double zeta = 2.0 / 3.0 * y * std::sqrt(y);
  const double lq = 0.25 * std::log(y);
  const double lsp = 0.5 * std::log(kPi);
  AiryValue out;
  out.x = x;
  if (x > 0) {
    const auto alt = asymptotic_sum(zeta, 1);
    const auto pos = asymptotic_sum(zeta, 0);
    const double l2 = std::log(2.0);
    out.ai = make(-zeta - l2 - lsp - lq, alt.u);
    out.ai_prime = make(-zeta - l2 - lsp + lq, -alt.v);
    out.bi = make(zeta - lsp - lq, pos.u);
    out.bi_prime = make(zeta - lsp + lq, pos.v);
  } else {
    const auto even = asymptotic_sum(zeta, 2);
    const auto odd = asymptotic_sum(zeta, 3);
    const double th = zeta - kPi / 4.0;
    const double c = std::cos(th), s = std::sin(th);
    out.ai = make(-lsp - lq, c * even.u + s * odd.u);
    out.ai_prime = make(-lsp + lq, s * even.v - c * odd.v);
    out.bi = make(-lsp - lq, -s * even.u + c * odd.u);
    out.bi_prime = make(-lsp + lq, c * even.v + s * odd.v);
  }
  return out;
}

double LogReal::value() const {
  if (sign == 0.0) return 0.0;
  if (std::abs(log_mag) >= 200.0)
    throw Error(ErrorKind::InvalidArgument, "value outside raw range; use log_mag");
  return sign * std::exp(log_mag);
}

AiryValue airy_eval(double x) {
  if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "airy_eval needs finite x");
  if (std::abs(x) <= kAiryTableEdge) return from_table(x);
  return airy_eval_asymptotic(x);
}

double airy_wronskian(const AiryValue& v) {
  const double l1 = v.ai.log_mag + v.bi_prime.log_mag;
  const double l2 = v.ai_prime.log_mag + v.bi.log_mag;
  const double shift = std::max(l1, l2);
  return v.ai.sign * v.bi_prime.sign * std::exp(l1 - shift) * std::exp(shift) -
         v.ai_prime.sign * v.bi.sign * std::exp(l2 - shift) * std::exp(shift);
}

AiryAsymptoticDeviation airy_asymptotic_deviation(double x, int window_samples) {
  if (!(x > 0)) throw Error(ErrorKind::InvalidArgument, "deviation needs x > 0");
  const double lsp = 0.5 * std::log(kPi);
  AiryAsymptoticDeviation d;
  {
    const double zeta = 2.0 / 3.0 * std::pow(x, 1.5);
    const auto v = airy_eval(x);
    d.exp_ai = std::abs(std::expm1(v.ai.log_mag + std::log(2.0) + lsp + 0.25 * std::log(x) + zeta));
    d.exp_bi = std::abs(std::expm1(v.bi.log_mag + lsp + 0.25 * std::log(x) - zeta));
  }
  const double period = 2.0 * kPi / std::sqrt(x);
  for (int k = 0; k < window_samples; ++k) {
    const double y = x + period * k / window_samples;
    const double zeta = 2.0 / 3.0 * std::pow(y, 1.5);
    const auto v = airy_eval(-y);
    const double lead = lsp + 0.25 * std::log(y);
    d.osc_ai = std::max(d.osc_ai, std::abs(v.ai.shifted(-lead) - std::cos(zeta - kPi / 4.0)));
    d.osc_bi = std::max(d.osc_bi, std::abs(-v.bi.shifted(-lead) - std::sin(zeta - kPi / 4.0)));
  }
  return d;
}

namespace {

double log_quarter(double x) {
  return x == 0.0 ? -std::numeric_limits<double>::infinity() : 0.25 * std::log(std::abs(x));
}

double log_modulus(const AiryValue& v) {
  return 0.5 * numerics::log_add(2.0 * v.ai.log_mag, 2.0 * v.bi.log_mag);
}

}  // namespace

double airy_modulus_bound_check(const std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "empty sample list");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [x, xp] : samples) {
    if (xp > x)
      throw Error(ErrorKind::OrderViolated,
                  "pair (" + std::to_string(x) + ", " + std::to_string(xp) + ") has x' > x");
    const double l = log_quarter(x) + log_quarter(xp) + airy_eval(x).ai.log_mag +
                     log_modulus(airy_eval(xp));
    best = std::max(best, l);
  }
  return std::exp(best);
}

double airy_modulus_bound_grid(double L, std::size_t n) {
  if (n < 2 || !(L > 0)) throw Error(ErrorKind::InvalidArgument, "grid needs n >= 2, L > 0");
  // For each x the sup over x' <= x is a prefix maximum.
  double prefix = -std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -L + 2.0 * L * static_cast<double>(i) / static_cast<double>(n - 1);
    const auto v = airy_eval(x);
    prefix = std::max(prefix, log_quarter(x) + log_modulus(v));
    best = std::max(best, log_quarter(x) + v.ai.log_mag + prefix);
  }
  return std::exp(best);
}

}  // namespace rlab
