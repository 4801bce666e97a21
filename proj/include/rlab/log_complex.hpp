#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "rlab/errors.hpp"

namespace rlab {

/// Represents exp(log_mag + i*phase). Products and quotients never leave the
/// log domain, so values far beyond the double range stay usable.
struct LogComplex {
  double log_mag = -std::numeric_limits<double>::infinity();
  double phase = 0.0;

  static constexpr double kMaxRaw = 200.0;

  static double wrap(double phi) noexcept {
    phi = std::remainder(phi, 2.0 * std::numbers::pi);
    if (phi <= -std::numbers::pi) phi += 2.0 * std::numbers::pi;
    return phi;
  }

  /// mantissa * exp(offset)
  static LogComplex from(std::complex<double> mantissa, double offset = 0.0) noexcept {
    const double a = std::abs(mantissa);
    if (a == 0.0) return {};
    return {std::log(a) + offset, std::arg(mantissa)};
  }

  static LogComplex from_real(double v, double offset = 0.0) noexcept {
    return from(std::complex<double>(v, 0.0), offset);
  }

  bool is_zero() const noexcept { return std::isinf(log_mag) && log_mag < 0; }

  LogComplex conj() const noexcept { return {log_mag, wrap(-phase)}; }
  LogComplex negated() const noexcept { return {log_mag, wrap(phase + std::numbers::pi)}; }
  LogComplex scaled(double log_factor) const noexcept { return {log_mag + log_factor, phase}; }

  friend LogComplex operator*(LogComplex a, LogComplex b) noexcept {
    return {a.log_mag + b.log_mag, wrap(a.phase + b.phase)};
  }
  friend LogComplex operator/(LogComplex a, LogComplex b) noexcept {
    return {a.log_mag - b.log_mag, wrap(a.phase - b.phase)};
  }

  /// exp(log_mag - shift + i phase); the caller picks shift so this is finite.
  std::complex<double> shifted(double shift) const noexcept {
    if (is_zero()) return {0.0, 0.0};
    return std::polar(std::exp(log_mag - shift), phase);
  }

  std::complex<double> to_complex() const {
    if (is_zero()) return {0.0, 0.0};
    if (std::abs(log_mag) >= kMaxRaw)
      throw Error(ErrorKind::InvalidArgument, "LogComplex magnitude outside raw range");
    return std::polar(std::exp(log_mag), phase);
  }

  /// log|Im z| (may be -inf).
  double log_abs_imag() const noexcept {
    const double s = std::abs(std::sin(phase));
    return s == 0.0 ? -std::numeric_limits<double>::infinity() : log_mag + std::log(s);
  }
};

/// Relative difference |a/b - 1| evaluated without leaving log space.
inline double relative_difference(LogComplex a, LogComplex b) noexcept {
  const double dl = a.log_mag - b.log_mag;
  const double dp = LogComplex::wrap(a.phase - b.phase);
  return std::abs(std::polar(std::exp(dl), dp) - 1.0);
}

}  // namespace rlab
