#pragma once

#include <variant>
#include <vector>

#include "specquant/spectrum.hpp"

namespace specquant {

/// Relative size of the numerical noise floor: every covariance solve uses
/// observation noise at least kNoiseFloor * lambda_max(Sigma_hh).
inline constexpr double kNoiseFloor = 1e-10;

/// kNoiseFloor * lambda_max of the n x n covariance of `model`.
double noise_floor(const SpectralModel& model, Eigen::Index n);
/// max(sigma2, noise_floor(model, n)).
double effective_noise(const SpectralModel& model, double sigma2, Eigen::Index n);

/// Applies the inverse of a Hermitian positive semidefinite matrix:
/// Cholesky, or an eigen pseudo-inverse (cutoff 1e-10 * lambda_max) when
/// Cholesky fails.
class HermitianInverse {
 public:
  static constexpr double kPinvThreshold = 1e-10;

  explicit HermitianInverse(const cmat& matrix);

  bool uses_pseudo_inverse() const { return std::holds_alternative<Eigen::MatrixXcd>(impl_); }
  cmat solve(const cmat& rhs) const;
  /// c^H A^{-1} c for a column vector c.
  double quadratic_form(const cvec& c) const;

 private:
  // LLT for the regular path; V diag(1/lambda)^{1/2} for the pseudo-inverse.
  std::variant<Eigen::LLT<cmat>, cmat> impl_;
};

/**
 * Linear MMSE predictor of g = (h_N, ..., h_{N+H-1}) from y = h + z:
 * W = Sigma_gh (Sigma_hh + s I)^{-1}, s = effective_noise(sigma^2). Immutable; one instance serves
 * every trial drawn from the same model.
 */
class LinearPredictor {
 public:
  LinearPredictor(const SpectralModel& model, double sigma2, Eigen::Index n, Eigen::Index horizon);
  LinearPredictor(const SpectralModel& model, double sigma2, Eigen::Index n)
      : LinearPredictor(model, sigma2, n, n) {}

  const cmat& weights() const { return weights_; }
  double sigma2() const { return sigma2_; }
  cvec predict(const cvec& y) const;

 private:
  cmat weights_;
  double sigma2_;
};

cvec mmse_predict(const cvec& y, const SpectralModel& model, double sigma2);

/// Per-sample MMSE of h_{N+T} given y_0..y_{N-1}; factorizes once, so
/// sweeping T is cheap.
class MmseProbe {
 public:
  MmseProbe(const SpectralModel& model, double sigma2, Eigen::Index n);

  /// Uses `noise` as given, without the floor.
  static MmseProbe with_noise(const SpectralModel& model, double noise, Eigen::Index n);

  /// r(0) - c Sigma_yy^{-1} c^H with c_l = r(N + T - l).
  double at(long horizon) const;

 private:
  SpectralModel model_;
  Eigen::Index n_;
  HermitianInverse inverse_;

  struct ExactNoise {};
  MmseProbe(const SpectralModel& model, double noise, Eigen::Index n, ExactNoise);
};

double mmse_theoretical(const SpectralModel& model, double sigma2, Eigen::Index n, long horizon);

/**
 * Error of an estimator that observes the discrete part with the noise and
 * the continuous part separately. The continuous observation carries half
 * the noise floor d and the discrete one the rest, s - d/2, so the two sum
 * to y exactly and the genie never does worse than mmse_theoretical.
 */
class GenieProbe {
 public:
  GenieProbe(const SpectralModel& model, double sigma2, Eigen::Index n);
  double at(long horizon) const;

 private:
  std::vector<MmseProbe> parts_;
};

double genie_mmse(const SpectralModel& model, double sigma2, Eigen::Index n, long horizon);

/// (1/N) sum_{T=0}^{N-1} mmse_theoretical(T): expected normalized error
/// of the MMSE predictor over the prediction window.
double expected_window_mmse(const SpectralModel& model, double sigma2, Eigen::Index n);

}  // namespace specquant
