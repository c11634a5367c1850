#include <doctest.h>

#include <boost/random/uniform_real_distribution.hpp>

#include "oracles.hpp"
#include "specquant/experiments.hpp"
#include "specquant/sampler.hpp"
#include "specquant/spectrum.hpp"

using namespace specquant;

namespace {

SpectralModel fig3_model(double pc) { return continuous_power_model(ModelTemplate{}, pc); }

double min_eigenvalue(const cmat& m) {
  const cmat sym = 0.5 * (m + m.adjoint());
  return Eigen::SelfAdjointEigenSolver<cmat>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("autocorrelation closed forms") {
  const auto white = SpectralModel::white();
  CHECK(std::abs(autocorrelation(white, 1)) < 1e-15);
  CHECK(std::abs(autocorrelation(white, 0) - 1.0) < 1e-15);

  const auto atom = SpectralModel::normalized({{-0.4, 1.0}}, {});
  CHECK(std::abs(autocorrelation(atom, 2) - unit_phasor(-0.8)) < 1e-14);

  for (double pc : {0.0, 0.3, 1.0}) CHECK(std::abs(autocorrelation(fig3_model(pc), 0) - 1.0) < 1e-14);
}

TEST_CASE("segment autocorrelation matches quadrature") {
  const auto seg = SpectralModel::component({}, {{0.05, 0.15, 0.3}});
  for (long m : {1L, 3L, -7L, 64L, 127L})
    CHECK(std::abs(autocorrelation(seg, m) - oracle::autocorrelation(seg, m)) < 1e-10);
}

TEST_CASE("Hermitian symmetry, Cauchy-Schwarz and linearity of r") {
  const auto model = fig3_model(0.3);
  const auto d = model.discrete_part();
  const auto c = model.continuous_part();
  for (long m = -40; m <= 40; ++m) {
    const cplx r = autocorrelation(model, m);
    CHECK(std::abs(autocorrelation(model, -m) - std::conj(r)) < 1e-14);
    CHECK(std::abs(r) <= 1.0 + 1e-14);
    CHECK(std::abs(r - autocorrelation(d, m) - autocorrelation(c, m)) < 1e-12);
  }
}

TEST_CASE("Riemann-Lebesgue decay of the band") {
  CHECK(std::abs(autocorrelation(fig3_model(1.0), 10000)) <= 1e-3);
}

TEST_CASE("covariance structure") {
  const auto atom = SpectralModel::normalized({{0.2, 1.0}}, {});
  const cmat c2 = covariance(atom, 2).dense();
  CHECK(std::abs(c2(0, 1) - unit_phasor(-0.2)) < 1e-14);
  CHECK(std::abs(c2(1, 0) - unit_phasor(0.2)) < 1e-14);
  CHECK(Eigen::SelfAdjointEigenSolver<cmat>(c2).eigenvalues().minCoeff() == doctest::Approx(0.0).epsilon(1e-10));

  CHECK((covariance(SpectralModel::white(), 8).dense() - cmat::Identity(8, 8)).norm() < 1e-14);

  const cmat fig = covariance(fig3_model(0.3), 64).dense();
  CHECK((fig - fig.adjoint()).norm() < 1e-13);
  CHECK(min_eigenvalue(fig) >= -1e-10);
  for (int p = 1; p < 64; ++p)
    for (int q = 1; q < 64; ++q) CHECK(fig(p, q) == fig(p - 1, q - 1));
}

TEST_CASE("random models give PSD covariances") {
  Rng rng(11);
  boost::random::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Atom> atoms;
    for (int i = 0; i < 3; ++i) atoms.push_back({u(rng) - 0.5 + 1e-3 * i, u(rng)});
    const double a = u(rng) - 0.5;
    const double b = a + 0.5 * u(rng) * (0.5 - a) + 1e-3;
    const auto model = SpectralModel::renormalize(atoms, {{a, std::min(b, 0.5), u(rng)}});
    CHECK(min_eigenvalue(covariance(model, 24).dense()) >= -1e-10);
  }
}

TEST_CASE("cross covariance") {
  CHECK(cross_covariance(SpectralModel::white(), 16, 16).norm() < 1e-14);

  const auto atom = SpectralModel::normalized({{0.13, 1.0}}, {});
  const cmat x = cross_covariance(atom, 16, 16);
  CHECK((x.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-13);

  const auto model = fig3_model(0.3);
  const cmat f = cross_covariance(model, 64, 64);
  double worst = 0.0;
  for (int p = 0; p < 64; p += 7)
    for (int q = 0; q < 64; q += 5)
      worst = std::max(worst, std::abs(f(p, q) - oracle::autocorrelation(model, 64 + p - q)));
  CHECK(worst < 1e-10);
}

TEST_CASE("validation and normalization") {
  CHECK_THROWS_AS(SpectralModel::normalized({{0.1, 0.5}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralModel::component({{0.1, -0.5}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralModel::component({}, {{0.2, 0.1, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralModel::component({}, {{0.0, 0.2, 0.3}, {0.1, 0.3, 0.3}}), std::invalid_argument);
  const auto wrapped = SpectralModel::normalized({{0.75, 1.0}}, {});
  CHECK(wrapped.atoms()[0].xi == doctest::Approx(-0.25));
  const auto scaled = SpectralModel::renormalize({{0.1, 2.0}}, {{0.2, 0.3, 2.0}});
  CHECK(scaled.is_normalized());
  CHECK(scaled.continuous_power() == doctest::Approx(0.5));
}

TEST_CASE("distribution function") {
  const auto model = fig3_model(0.3);
  CHECK(model.distribution(0.5) == doctest::Approx(1.0));
  CHECK(model.distribution(-0.45) == doctest::Approx(0.0));
  CHECK(model.distribution(-0.4) == doctest::Approx(0.35));
  CHECK(model.distribution(0.1) == doctest::Approx(0.7 + 0.15));
}

TEST_CASE("JSON round trip") {
  const auto model = fig3_model(0.3);
  nlohmann::json j = model;
  const auto back = spectral_model_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.atoms().size() == model.atoms().size());
  for (std::size_t i = 0; i < back.atoms().size(); ++i) {
    CHECK(back.atoms()[i].xi == doctest::Approx(model.atoms()[i].xi).epsilon(1e-15));
    CHECK(back.atoms()[i].power == doctest::Approx(model.atoms()[i].power).epsilon(1e-15));
  }
  CHECK(back.segments()[0].a == model.segments()[0].a);
  CHECK_THROWS_AS(spectral_model_from_json(nlohmann::json::parse(R"({"atoms":[],"bogus":1})")),
                  std::invalid_argument);
  CHECK_THROWS(spectral_model_from_json(nlohmann::json::parse(R"({"atoms":[{"xi":0.1,"power":0.4}]})")));
}
