#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>

#include <boost/random/mersenne_twister.hpp>

#include "specquant/spectrum.hpp"

namespace specquant {

/// Every random stream in the project is a 64-bit Mersenne twister; normal
/// deviates come from Boost.Random so draws are identical across platforms.
using Rng = boost::random::mt19937_64;

/// SplitMix64 finalizer chained over `keys`: derives independent stream
/// seeds from a master seed and a tuple of identifiers.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

/// Bit pattern of a double, for use as a seed key.
std::uint64_t seed_key(double value);

/// i.i.d. circularly symmetric Gaussian entries with E|w|^2 = variance.
cvec complex_normal(Eigen::Index n, double variance, Rng& rng);

/// Square-root factor F with F F^H = covariance(model, n): Cholesky when the
/// covariance is numerically positive definite, otherwise the eigenvalue
/// square root with negative rounding clipped to zero. No jitter is added,
/// so rank-deficient (pure line) models are sampled exactly.
class GaussianFactor {
 public:
  GaussianFactor(const SpectralModel& model, Eigen::Index n);

  Eigen::Index dimension() const { return factor_.rows(); }
  const cmat& factor() const { return factor_; }
  /// True when the eigenvalue square root was used.
  bool spectral() const { return spectral_; }
  /// One realization F w with w standard circularly symmetric.
  cvec sample(Rng& rng) const;

 private:
  cmat factor_;
  bool spectral_ = false;
};

/// Exact draw of (h_0, ..., h_{n_total-1}).
cvec sample_process(const SpectralModel& model, Eigen::Index n_total, std::uint64_t seed);

struct NoisyObservation {
  cvec y;
  double sigma2 = 0.0;
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// sigma^2 = 10^(-snr_db/10) against unit process power; snr_db = +inf
/// yields y = h.
double noise_variance(double snr_db);
NoisyObservation add_noise(const cvec& h, double snr_db, std::uint64_t seed);

struct ProcessSample {
  cvec h;  ///< observation window h_0 .. h_{N-1}
  cvec g;  ///< future window h_N .. h_{2N-1}
  cvec y;  ///< h + z
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
};

ProcessSample draw(const SpectralModel& model, Eigen::Index n, double snr_db, std::uint64_t seed);
/// Same as `draw`, reusing a precomputed factor of dimension 2N.
ProcessSample draw(const GaussianFactor& factor, double snr_db, std::uint64_t seed);

/// Columns: index, re_h, im_h, re_y, im_y, re_g, im_g.
void write_sample_csv(const ProcessSample& sample, const std::string& path);

}  // namespace specquant
