#include "specquant/mmse.hpp"

#include <algorithm>
#include <stdexcept>

namespace specquant {

namespace {

cmat observation_covariance(const SpectralModel& model, double noise, Eigen::Index n) {
  cmat sigma = covariance(model, n).dense();
  sigma.diagonal().array() += noise;
  return sigma;
}

}  // namespace

double noise_floor(const SpectralModel& model, Eigen::Index n) {
  const Eigen::SelfAdjointEigenSolver<cmat> eig(covariance(model, n).dense(), Eigen::EigenvaluesOnly);
  return kNoiseFloor * std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

double effective_noise(const SpectralModel& model, double sigma2, Eigen::Index n) {
  if (sigma2 < 0.0) throw std::invalid_argument("noise variance must be non-negative");
  return std::max(sigma2, noise_floor(model, n));
}

HermitianInverse::HermitianInverse(const cmat& matrix) {
  Eigen::LLT<cmat> llt(matrix);
  if (llt.info() == Eigen::Success) {
    impl_ = std::move(llt);
    return;
  }
  Eigen::SelfAdjointEigenSolver<cmat> eig(matrix);
  const rvec& lambda = eig.eigenvalues();
  const double cutoff = kPinvThreshold * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > cutoff) kept.push_back(i);
  cmat half(matrix.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k)
    half.col(static_cast<Eigen::Index>(k)) =
        eig.eigenvectors().col(kept[k]) / std::sqrt(lambda(kept[k]));
  impl_ = std::move(half);
}

cmat HermitianInverse::solve(const cmat& rhs) const {
  if (const auto* llt = std::get_if<Eigen::LLT<cmat>>(&impl_)) return llt->solve(rhs);
  const cmat& half = std::get<cmat>(impl_);
  return half * (half.adjoint() * rhs);
}

double HermitianInverse::quadratic_form(const cvec& c) const {
  if (const auto* llt = std::get_if<Eigen::LLT<cmat>>(&impl_)) {
    const cvec w = llt->matrixL().solve(c);
    return w.squaredNorm();
  }
  return (std::get<cmat>(impl_).adjoint() * c).squaredNorm();
}

LinearPredictor::LinearPredictor(const SpectralModel& model, double sigma2, Eigen::Index n,
                                 Eigen::Index horizon)
    : sigma2_(sigma2) {
  if (n < 1 || horizon < 1) throw std::invalid_argument("predictor dimensions must be >= 1");
  if (sigma2 < 0.0) throw std::invalid_argument("noise variance must be non-negative");
  // cross(p, q) = r(N + p - q): E[g_p conj(y_q)].
  cmat cross(horizon, n);
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index p = 0; p < horizon; ++p)
      cross(p, q) = autocorrelation(model, static_cast<long>(n + p - q));
  const HermitianInverse inverse(observation_covariance(model, effective_noise(model, sigma2, n), n));
  weights_ = inverse.solve(cross.adjoint()).adjoint();
}

cvec LinearPredictor::predict(const cvec& y) const {
  if (y.size() != weights_.cols()) throw std::invalid_argument("observation length mismatch");
  return weights_ * y;
}

cvec mmse_predict(const cvec& y, const SpectralModel& model, double sigma2) {
  return LinearPredictor(model, sigma2, y.size()).predict(y);
}

MmseProbe::MmseProbe(const SpectralModel& model, double sigma2, Eigen::Index n)
    : MmseProbe(model, effective_noise(model, sigma2, n), n, ExactNoise{}) {}

MmseProbe::MmseProbe(const SpectralModel& model, double noise, Eigen::Index n, ExactNoise)
    : model_(model), n_(n), inverse_(observation_covariance(model, noise, n)) {
  if (noise < 0.0) throw std::invalid_argument("noise variance must be non-negative");
}

MmseProbe MmseProbe::with_noise(const SpectralModel& model, double noise, Eigen::Index n) {
  return MmseProbe(model, noise, n, ExactNoise{});
}

double MmseProbe::at(long horizon) const {
  if (horizon < 0) throw std::invalid_argument("prediction horizon T must be >= 0");
  // c^H as a column: conj(r(N + T - l)) = E[y_l conj(h_{N+T})].
  cvec c(n_);
  for (Eigen::Index l = 0; l < n_; ++l)
    c(l) = std::conj(autocorrelation(model_, static_cast<long>(n_) + horizon - static_cast<long>(l)));
  const double power = model_.total_power();
  return std::clamp(power - inverse_.quadratic_form(c), 0.0, power);
}

double mmse_theoretical(const SpectralModel& model, double sigma2, Eigen::Index n, long horizon) {
  return MmseProbe(model, sigma2, n).at(horizon);
}

GenieProbe::GenieProbe(const SpectralModel& model, double sigma2, Eigen::Index n) {
  const double total = effective_noise(model, sigma2, n);
  const SpectralModel discrete = model.discrete_part();
  const SpectralModel continuous = model.continuous_part();
  if (discrete.atoms().empty() || continuous.segments().empty()) {
    parts_.push_back(MmseProbe::with_noise(model, total, n));
    return;
  }
  const double half_floor = 0.5 * noise_floor(model, n);
  parts_.push_back(MmseProbe::with_noise(discrete, total - half_floor, n));
  parts_.push_back(MmseProbe::with_noise(continuous, half_floor, n));
}

double GenieProbe::at(long horizon) const {
  double total = 0.0;
  for (const auto& p : parts_) total += p.at(horizon);
  return total;
}

double genie_mmse(const SpectralModel& model, double sigma2, Eigen::Index n, long horizon) {
  return GenieProbe(model, sigma2, n).at(horizon);
}

double expected_window_mmse(const SpectralModel& model, double sigma2, Eigen::Index n) {
  const MmseProbe probe(model, sigma2, n);
  double total = 0.0;
  for (long t = 0; t < static_cast<long>(n); ++t) total += probe.at(t);
  return total / static_cast<double>(n);
}

}  // namespace specquant
