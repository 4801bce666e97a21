#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace rlab::numerics {

/// Adaptive Gauss-Kronrod quadrature on a finite interval.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double* error_estimate = nullptr);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(std::size_t n, double a, double b);

/// Maximizer of a unimodal f on [a, b] by golden-section search.
std::pair<double, double> golden_section_max(const std::function<double(double)>& f, double a,
                                             double b, double width_tol = 1e-10);

/// Root of f on [a, b] given f(a), f(b) of opposite sign. Bisection until the
/// bracket is narrower than tol.
double bisect(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

/// Least-squares slope/intercept/R^2 of y against x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// C^3 step: 0 for t <= 0, 1 for t >= 1, septic smootherstep in between.
double smooth_step(double t) noexcept;
/// k-th derivative (k <= 3) of smooth_step with respect to t.
double smooth_step_deriv(double t, int k) noexcept;

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 means hardware).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

/// Worker count from explicit request, RESOLVENT_LAB_THREADS, or hardware.
unsigned resolve_thread_count(unsigned requested);

/// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b) noexcept;

}  // namespace rlab::numerics
