#include <doctest.h>

#include "oracles.hpp"
#include "specquant/experiments.hpp"
#include "specquant/quantizer.hpp"
#include "specquant/sampler.hpp"

using namespace specquant;

namespace {

cvec lines(const std::vector<double>& freqs, const std::vector<cplx>& amps, Eigen::Index n) {
  cvec y = cvec::Zero(n);
  for (std::size_t i = 0; i < freqs.size(); ++i) y += amps[i] * steering(freqs[i], n);
  return y;
}

}  // namespace

TEST_CASE("extrapolate") {
  const cvec g = extrapolate({{0.0}, {cplx(1.0, 0.0)}}, 8, 5);
  CHECK((g - cvec::Ones(5)).norm() < 1e-15);
  const cvec h = extrapolate({{0.25}, {cplx(1.0, 0.0)}}, 4, 1);
  CHECK(std::abs(h(0) - 1.0) < 1e-14);
  CHECK(extrapolate({}, 8, 3).norm() == 0.0);
}

TEST_CASE("spectrum JSON") {
  const QuantizedSpectrum spec{{-0.25, 0.125}, {cplx(1.0, -2.0), cplx(0.5, 0.0)}};
  nlohmann::json j = spec;
  CHECK(j.dump() == R"({"coefs":[{"im":-2.0,"re":1.0},{"im":0.0,"re":0.5}],"freqs":[-0.25,0.125]})");
  const auto back = quantized_spectrum_from_json(j);
  CHECK(back.freqs == spec.freqs);
  CHECK(back.coefs == spec.coefs);
  CHECK_THROWS_AS(quantized_spectrum_from_json(nlohmann::json::parse(R"({"freqs":[0.1],"coefs":[]})")),
                  std::invalid_argument);
}

TEST_CASE("localize") {
  const cvec y = 1.3 * steering(0.1, 32);
  auto sol = solve_atomic(y, 0.0);
  recover_dual(y, sol, 0.0);
  const auto freqs = localize(sol.q_star);
  REQUIRE(freqs.size() == 1);
  CHECK(freqs[0] == doctest::Approx(0.1).epsilon(1e-4));

  CHECK(localize(0.5 * cvec::Unit(32, 0)).empty());
}

TEST_CASE("localized peaks are merged and sorted") {
  // |Q| = |a(xi)^H (a(0.2) + a(0.2 + 1/(8N)))| / norm: two maxima inside the merge radius.
  const Eigen::Index n = 16;
  cvec q = steering(0.2, n) + steering(0.2 + 1.0 / (8 * n), n);
  q /= max_modulus(q, kDualGridSize).magnitude;
  const auto peaks = localize_peaks(q);
  for (std::size_t i = 1; i < peaks.size(); ++i) CHECK(peaks[i].xi - peaks[i - 1].xi >= 1.0 / (4 * n));
}

TEST_CASE("fit: exact single line and the zero solution") {
  const cplx c(0.7, -0.2);
  const cvec y = c * steering(0.33, 16);
  const auto fit = fit_coefficients({0.33}, y, 0.0);
  CHECK(std::abs(fit.coefs(0) - c) < 1e-9);
  const auto zero = fit_coefficients({0.33, -0.1}, y, y.norm());
  CHECK(zero.coefs.norm() == 0.0);
}

TEST_CASE("fit matches the proximal-gradient oracle") {
  Rng rng(21);
  const std::vector<double> freqs{-0.37, -0.12, 0.08, 0.29};
  const Eigen::Index n = 16;
  for (int trial = 0; trial < 3; ++trial) {
    const cvec amps = complex_normal(4, 1.0, rng);
    const cvec y = lines(freqs, {amps(0), amps(1), amps(2), amps(3)}, n) + complex_normal(n, 0.05, rng);
    const double eps = default_epsilon(0.05, n);
    const auto fit = fit_coefficients(freqs, y, eps);
    const cmat a = atom_matrix(freqs, n);
    const cvec ref = oracle::constrained_l1(a, y, eps);
    CHECK((fit.coefs - ref).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((a * fit.coefs - y).norm() <= eps + 1e-6);
    CHECK(fit.duality_gap <= 1e-6 * std::max(1.0, fit.coefs.cwiseAbs().sum()));

    const cvec ls = a.colPivHouseholderQr().solve(y);
    CHECK(fit.coefs.cwiseAbs().sum() <= ls.cwiseAbs().sum() + 1e-6);
  }
}

TEST_CASE("fit relaxes an infeasible radius") {
  const cvec y = steering(0.1, 16) + steering(-0.3, 16);
  const auto fit = fit_coefficients({0.1}, y, 0.5);
  CHECK(fit.relaxed);
  CHECK(fit.epsilon_used > 0.5);
  CHECK((atom_matrix({0.1}, 16) * fit.coefs - y).norm() <= fit.epsilon_used + 1e-6);
}

TEST_CASE("zero observation predicts zero") {
  const auto pred = blind_predict(cvec::Zero(16), 0.01, 16);
  CHECK(pred.g_hat.norm() == 0.0);
  CHECK(pred.spectrum.empty());
}

TEST_CASE("noiseless two lines: exact recovery and prediction") {
  const Eigen::Index n = 64;
  const std::vector<double> truth{-0.4, -0.2};
  const std::vector<cplx> amps{cplx(0.8, 0.3), cplx(-0.5, 0.6)};
  const cvec y = lines(truth, amps, n);
  const auto pred = blind_predict(y, 0.0, n);
  REQUIRE(pred.spectrum.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(pred.spectrum.freqs[i] - truth[i]) < 1e-3);
    CHECK(std::abs(pred.spectrum.coefs[i] - amps[i]) < 1e-2 * std::abs(amps[i]));
  }
  const cvec g = extrapolate({truth, amps}, n, n);
  CHECK(normalized_error(pred.g_hat, g) <= 1e-4);
  CHECK(pred.g_hat.cwiseAbs().maxCoeff() <= pred.fit.coefs.cwiseAbs().sum() + 1e-12);
}

TEST_CASE("translation covariance") {
  const Eigen::Index n = 32;
  const std::vector<double> truth{-0.3, 0.05};
  const std::vector<cplx> amps{cplx(1.0, 0.2), cplx(0.4, -0.7)};
  Rng rng(8);
  const cvec y = lines(truth, amps, n) + complex_normal(n, 0.01, rng);
  const double shift = 0.137;
  cvec shifted = y;
  for (Eigen::Index k = 0; k < n; ++k) shifted(k) *= unit_phasor(shift * k);
  const auto a = blind_predict(y, 0.01, n);
  const auto b = blind_predict(shifted, 0.01, n);
  REQUIRE(a.spectrum.size() == b.spectrum.size());
  for (std::size_t i = 0; i < a.spectrum.size(); ++i) {
    // Match each recovered line of `a` with its shifted counterpart in `b`.
    const double target = wrap_frequency(a.spectrum.freqs[i] + shift);
    std::size_t best = 0;
    for (std::size_t j = 1; j < b.spectrum.size(); ++j)
      if (circular_distance(b.spectrum.freqs[j], target) < circular_distance(b.spectrum.freqs[best], target)) best = j;
    CHECK(circular_distance(b.spectrum.freqs[best], target) < 1e-4);
    CHECK(std::abs(std::abs(b.spectrum.coefs[best]) - std::abs(a.spectrum.coefs[i])) < 1e-4);
  }
}

TEST_CASE("two lines and a band: certificate peaks at the lines and inside the band") {
  ModelTemplate tmpl;
  tmpl.band = {0.2, 0.3, 0.0};
  const auto model = continuous_power_model(tmpl, 0.3);
  const auto sample = draw(model, 64, 20.0, 1);
  const auto pred = blind_predict(sample.y, sample.sigma2, 64);
  CHECK(pred.converged);
  CHECK(pred.max_abs_q <= 1.0 + 1e-3);
  CHECK(pred.min_peak_abs_q >= 0.99);
  auto near = [&](double xi) {
    return std::any_of(pred.spectrum.freqs.begin(), pred.spectrum.freqs.end(),
                       [&](double f) { return circular_distance(f, xi) <= 1.0 / 128; });
  };
  CHECK(near(-0.4));
  CHECK(near(-0.2));
  const auto in_band = std::count_if(pred.spectrum.freqs.begin(), pred.spectrum.freqs.end(),
                                     [](double f) { return f >= 0.2 && f < 0.3; });
  CHECK(in_band >= 1);
}
