#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace specquant {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Unit-modulus exponential e^{j 2 pi theta}.
inline cplx unit_phasor(double theta) {
  return std::polar(1.0, kTwoPi * theta);
}

/// Steering atom a(xi) = (1, e^{j2pi xi}, ..., e^{j2pi (n-1) xi})^T.
inline cvec steering(double xi, Eigen::Index n) {
  cvec a(n);
  for (Eigen::Index k = 0; k < n; ++k) a(k) = unit_phasor(xi * static_cast<double>(k));
  return a;
}

/// Reduces a frequency into [-1/2, 1/2).
inline double wrap_frequency(double xi) {
  double r = xi - std::floor(xi + 0.5);
  if (r >= 0.5) r -= 1.0;
  return r;
}

/// Distance between two frequencies on the unit circle.
inline double circular_distance(double a, double b) {
  return std::abs(wrap_frequency(a - b));
}

}  // namespace specquant
