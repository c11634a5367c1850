#include "specquant/sampler.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

namespace specquant {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = splitmix64(master);
  for (std::uint64_t k : keys) state = splitmix64(state ^ splitmix64(k));
  return state;
}

std::uint64_t seed_key(double value) { return std::bit_cast<std::uint64_t>(value); }

cvec complex_normal(Eigen::Index n, double variance, Rng& rng) {
  boost::random::normal_distribution<double> normal(0.0, std::sqrt(0.5 * variance));
  cvec w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    w(i) = {re, im};
  }
  return w;
}

GaussianFactor::GaussianFactor(const SpectralModel& model, Eigen::Index n) {
  const cmat sigma = covariance(model, n).dense();
  Eigen::LLT<cmat> llt(sigma);
  // Pivots near round-off mean Sigma is numerically singular; the Cholesky
  // factor would then carry O(sqrt(eps)) garbage in the trailing rows.
  const double pivot_floor = 1e-8 * sigma.diagonal().real().maxCoeff();
  if (llt.info() == Eigen::Success &&
      cmat(llt.matrixL()).diagonal().real().cwiseAbs2().minCoeff() > pivot_floor) {
    factor_ = llt.matrixL();
    return;
  }
  // Singular covariance (finitely many lines): V diag(sqrt(max(lambda, 0))).
  const Eigen::SelfAdjointEigenSolver<cmat> eig(sigma);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("covariance factorization failed for " + model.describe());
  // Eigenvalues inside the round-off band are zero to working precision.
  const double cutoff = double(n) * std::numeric_limits<double>::epsilon() *
                        eig.eigenvalues().cwiseAbs().maxCoeff();
  const Eigen::VectorXd lambda =
      (eig.eigenvalues().array() > cutoff).select(eig.eigenvalues(), 0.0);
  factor_ = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
  spectral_ = true;
}

cvec GaussianFactor::sample(Rng& rng) const {
  return factor_ * complex_normal(factor_.cols(), 1.0, rng);
}

cvec sample_process(const SpectralModel& model, Eigen::Index n_total, std::uint64_t seed) {
  if (n_total < 1) throw std::invalid_argument("sample_process needs n_total >= 1");
  Rng rng(seed);
  return GaussianFactor(model, n_total).sample(rng);
}

double noise_variance(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  if (!std::isfinite(snr_db)) throw std::invalid_argument("SNR must be finite or +inf");
  return std::pow(10.0, -snr_db / 10.0);
}

NoisyObservation add_noise(const cvec& h, double snr_db, std::uint64_t seed) {
  NoisyObservation out{h, noise_variance(snr_db)};
  if (out.sigma2 > 0.0) {
    Rng rng(seed);
    out.y += complex_normal(h.size(), out.sigma2, rng);
  }
  return out;
}

ProcessSample draw(const GaussianFactor& factor, double snr_db, std::uint64_t seed) {
  if (factor.dimension() % 2 != 0) throw std::invalid_argument("draw needs a factor of even dimension 2N");
  const Eigen::Index n = factor.dimension() / 2;
  Rng process_rng(derive_seed(seed, {1}));
  const cvec full = factor.sample(process_rng);
  ProcessSample s;
  s.h = full.head(n);
  s.g = full.tail(n);
  auto noisy = add_noise(s.h, snr_db, derive_seed(seed, {2}));
  s.y = std::move(noisy.y);
  s.sigma2 = noisy.sigma2;
  s.seed = seed;
  return s;
}

ProcessSample draw(const SpectralModel& model, Eigen::Index n, double snr_db, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("draw needs N >= 1");
  return draw(GaussianFactor(model, 2 * n), snr_db, seed);
}

void write_sample_csv(const ProcessSample& sample, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "index,re_h,im_h,re_y,im_y,re_g,im_g\n";
  for (Eigen::Index i = 0; i < sample.h.size(); ++i)
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", i,
                       sample.h(i).real(), sample.h(i).imag(), sample.y(i).real(),
                       sample.y(i).imag(), sample.g(i).real(), sample.g(i).imag());
}

}  // namespace specquant
