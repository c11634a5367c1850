#pragma once
// Independent reference computations used only by the tests.

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "specquant/spectrum.hpp"

namespace specquant::oracle {

/// r(m) by adaptive quadrature of the piecewise-constant density plus the
/// line sum, independent of the closed-form sinc expression.
inline cplx autocorrelation(const SpectralModel& model, long m) {
  using boost::math::quadrature::gauss_kronrod;
  cplx r{0.0, 0.0};
  for (const auto& atom : model.atoms()) r += atom.power * std::polar(1.0, kTwoPi * m * atom.xi);
  for (const auto& s : model.segments()) {
    const double density = s.power / (s.b - s.a);
    auto re = [&](double xi) { return density * std::cos(kTwoPi * m * xi); };
    auto im = [&](double xi) { return density * std::sin(kTwoPi * m * xi); };
    r += cplx(gauss_kronrod<double, 61>::integrate(re, s.a, s.b, 15, 1e-14),
              gauss_kronrod<double, 61>::integrate(im, s.a, s.b, 15, 1e-14));
  }
  return r;
}

/// Complex soft-threshold by tau.
inline cvec shrink(const cvec& v, double tau) {
  cvec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    out(i) = mag > tau ? v(i) * ((mag - tau) / mag) : cplx{0.0, 0.0};
  }
  return out;
}

/// FISTA for min (1/2)|Ac - y|^2 + mu |c|_1.
inline cvec lasso_fista(const cmat& a, const cvec& y, double mu, int iterations = 20000) {
  const double lip = Eigen::JacobiSVD<cmat>(a).singularValues()(0);
  const double step = 1.0 / (lip * lip);
  cvec c = cvec::Zero(a.cols());
  cvec z = c;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const cvec next = shrink(z - step * (a.adjoint() * (a * z - y)), step * mu);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - c);
    c = next;
    t = t_next;
  }
  return c;
}

/// min |c|_1 s.t. |Ac - y| <= eps: bisection on mu (the residual of the
/// LASSO solution grows with mu) with FISTA inner solves.
inline cvec constrained_l1(const cmat& a, const cvec& y, double eps) {
  double lo = 0.0;
  double hi = (a.adjoint() * y).cwiseAbs().maxCoeff();
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double res = (a * lasso_fista(a, y, mid, 4000) - y).norm();
    (res > eps ? hi : lo) = mid;
  }
  return lasso_fista(a, y, lo, 40000);
}

}  // namespace specquant::oracle
