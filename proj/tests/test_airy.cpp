#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rlab/airy.hpp"
#include "rlab/errors.hpp"

using namespace rlab;

namespace {

// Ai(0) from the two Maclaurin series f, g: Ai = c1 f - c2 g, only f(0) = 1 survives.
double ai0_from_series() {
  return 1.0 / (std::pow(3.0, 2.0 / 3.0) * std::tgamma(2.0 / 3.0));
}

struct Ref {
  double x, ai, aip, bi, bip;
};

// Reference values from a 30-digit independent evaluation.
constexpr Ref kRefs[] = {
    {-15, 0.27821749087082892953, 0.27237420430864202083, -0.069126594531010061186,
     1.0764297530843747867},
    {-5, 0.35076100902411431979, 0.32719281855444313679, -0.13836913490160057685,
     0.77841177300189924609},
    {-0.3, 0.4309030952855808556, -0.24054512725815461017, 0.477977840109892952,
     0.4718802163006479184},
    {2, 0.034924130423274379135, -0.053090384433653631704, 3.2980949999782147103,
     4.1006820499328898894},
    {7.3, 3.3251378244377592157e-7, -9.094540388833463758e-7, 177225.05516442804238,
     472557.38639870312085},
    {15, 2.164962520737992299e-18, -8.4205679540177727661e-18, 18982099567493589.685,
     73197492034070104.962},
};

}  // namespace

TEST_CASE("values at the origin") {
  const auto v = airy_eval(0.0);
  CHECK(v.ai.value() == doctest::Approx(0.3550280538).epsilon(1e-10));
  CHECK(v.ai.value() == doctest::Approx(ai0_from_series()).epsilon(1e-14));
  CHECK(v.bi.value() / v.ai.value() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK(v.bi.sign > 0);
}

TEST_CASE("reference values") {
  for (const auto& r : kRefs) {
    CAPTURE(r.x);
    const auto v = airy_eval(r.x);
    CHECK(v.ai.value() == doctest::Approx(r.ai).epsilon(1e-11));
    CHECK(v.ai_prime.value() == doctest::Approx(r.aip).epsilon(1e-11));
    CHECK(v.bi.value() == doctest::Approx(r.bi).epsilon(1e-11));
    CHECK(v.bi_prime.value() == doctest::Approx(r.bip).epsilon(1e-11));
  }
  const auto far = airy_eval(100.0);
  CHECK(far.ai.log_mag == doctest::Approx(-669.08357542530962670).epsilon(1e-13));
  CHECK(far.bi.log_mag == doctest::Approx(664.94311342215678730).epsilon(1e-13));
}

TEST_CASE("wronskian is 1/pi across the line") {
  for (int i = 0; i < 400; ++i) {
    const double x = -60.0 + 120.0 * i / 399.0;
    CAPTURE(x);
    CHECK(std::abs(airy_wronskian(airy_eval(x)) * std::numbers::pi - 1.0) < 1e-10);
  }
}

TEST_CASE("ODE residual by second differences") {
  for (double x : {-12.0, -3.3, 0.7, 4.1, 9.9, 10.1}) {
    const double d = 1e-3;
    const double f0 = airy_eval(x).ai.value();
    const double fp = airy_eval(x + d).ai.value();
    const double fm = airy_eval(x - d).ai.value();
    CHECK(std::abs((fp - 2 * f0 + fm) / (d * d) - x * f0) < 1e-5 * (1 + std::abs(x * f0)));
  }
}

TEST_CASE("continuity across the table edge") {
  for (double x : {kAiryTableEdge - 1e-8, kAiryTableEdge + 1e-8, -kAiryTableEdge - 1e-8,
                   -kAiryTableEdge + 1e-8}) {
    CAPTURE(x);
    const auto a = airy_eval(x);
    const auto b = airy_eval_asymptotic(x);
    for (auto [p, q] : {std::pair{a.ai, b.ai}, std::pair{a.ai_prime, b.ai_prime},
                        std::pair{a.bi, b.bi}, std::pair{a.bi_prime, b.bi_prime}}) {
      CHECK(p.sign == q.sign);
      CHECK(std::abs(std::expm1(p.log_mag - q.log_mag)) < 1e-7);
    }
  }
}

TEST_CASE("no overflow at extreme arguments") {
  for (double x : {1e6, -1e6, 1e4}) {
    const auto v = airy_eval(x);
    CHECK(std::isfinite(v.ai.log_mag));
    CHECK(std::isfinite(v.bi.log_mag));
  }
  CHECK_THROWS_AS(airy_eval(1e6).ai.value(), Error);
}

TEST_CASE("asymptotic deviations shrink like x^{-3/2}") {
  const auto d10 = airy_asymptotic_deviation(10.0);
  CHECK(d10.exp_ai < 0.05);
  const auto d80 = airy_asymptotic_deviation(80.0);
  // 8x in x is a factor 8^{1.5} ~ 22.6 in the deviation
  CHECK(d80.exp_ai < d10.exp_ai / 15.0);
  CHECK(d80.exp_bi < d10.exp_bi / 15.0);
  CHECK(d80.osc_ai < d10.osc_ai / 15.0);
  CHECK(d80.osc_bi < d10.osc_bi / 15.0);
}

TEST_CASE("modulus bound") {
  CHECK(airy_modulus_bound_check({{0.0, 0.0}}) == 0.0);
  CHECK_THROWS_AS(airy_modulus_bound_check({{0.0, 1.0}}), Error);
  CHECK_THROWS_AS(airy_modulus_bound_check({}), Error);
  const double coarse = airy_modulus_bound_grid(50.0, 2001);
  const double fine = airy_modulus_bound_grid(50.0, 4001);
  CHECK(std::isfinite(fine));
  CHECK(std::abs(fine / coarse - 1.0) < 0.01);
  CHECK(airy_modulus_bound_check({{30.0, -30.0}}) <= fine);
}
