#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "specquant/types.hpp"

namespace specquant {

/// Spectral line: a jump of height `power` in F at frequency `xi`.
struct Atom {
  double xi = 0.0;
  double power = 0.0;
};

/// Uniform continuous density on [a, b) carrying total power `power`.
struct Segment {
  double a = 0.0;
  double b = 0.0;
  double power = 0.0;
};

/**
 * Mixed spectral distribution of a stationary process on [-1/2, 1/2):
 * a finite set of spectral lines plus a piecewise-constant density.
 *
 * Models built with `normalized` or `renormalize` carry unit power
 * (r(0) = 1). `component` builds sub-unit models, which is what the
 * discrete/continuous restrictions of a normalized model are.
 */
class SpectralModel {
 public:
  static constexpr double kNormTolerance = 1e-12;

  /// Throws std::invalid_argument unless total power is 1 within 1e-12.
  static SpectralModel normalized(std::vector<Atom> atoms, std::vector<Segment> segments);
  /// Rescales all weights so the total power is 1.
  static SpectralModel renormalize(std::vector<Atom> atoms, std::vector<Segment> segments);
  /// Total power may be anywhere in [0, 1].
  static SpectralModel component(std::vector<Atom> atoms, std::vector<Segment> segments);

  /// Flat density on the whole band: i.i.d. samples.
  static SpectralModel white();

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Segment>& segments() const { return segments_; }

  double total_power() const;
  /// P_c, the power in the continuous part.
  double continuous_power() const;
  double discrete_power() const { return total_power() - continuous_power(); }
  bool is_normalized() const;

  SpectralModel discrete_part() const;
  SpectralModel continuous_part() const;

  /// Spectral distribution F(xi) = power in [-1/2, xi], right-continuous.
  double distribution(double xi) const;
  double discrete_distribution(double xi) const;
  double continuous_distribution(double xi) const;

  /// Short human-readable description for diagnostics.
  std::string describe() const;

 private:
  SpectralModel(std::vector<Atom> atoms, std::vector<Segment> segments);

  std::vector<Atom> atoms_;
  std::vector<Segment> segments_;
};

/// Toeplitz Hermitian covariance, stored by its lags r(0), ..., r(n-1).
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(cvec lags) : lags_(std::move(lags)) {}

  Eigen::Index dimension() const { return lags_.size(); }
  const cvec& lags() const { return lags_; }
  /// Entry (p, q) = r(p - q).
  cplx operator()(Eigen::Index p, Eigen::Index q) const {
    return p >= q ? lags_(p - q) : std::conj(lags_(q - p));
  }
  cmat dense() const;

 private:
  cvec lags_;
};

/// r(m) = E[h_n conj(h_{n-m})], closed form over atoms and segments.
cplx autocorrelation(const SpectralModel& model, long m);

CovarianceMatrix covariance(const SpectralModel& model, Eigen::Index n);

/// n x n matrix with entry (p, q) = r(offset + p - q), i.e. E[g h^H] when g
/// starts `offset` samples after h.
cmat cross_covariance(const SpectralModel& model, long offset, Eigen::Index n);

/// sin(pi x) / (pi x), with sinc(0) = 1.
double sinc(double x);

void to_json(nlohmann::json& j, const SpectralModel& model);
/// Parses {"atoms":[{"xi","power"}], "segments":[{"a","b","power"}]}; the
/// result must be normalized.
SpectralModel spectral_model_from_json(const nlohmann::json& j);

}  // namespace specquant
