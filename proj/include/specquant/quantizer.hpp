#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "specquant/atomic.hpp"
#include "specquant/dual_polynomial.hpp"

namespace specquant {

/// Discrete measure sum_i c_i delta_{xi_i} recovered from the observation.
struct QuantizedSpectrum {
  std::vector<double> freqs;  ///< strictly increasing, in [-1/2, 1/2)
  std::vector<cplx> coefs;

  std::size_t size() const { return freqs.size(); }
  bool empty() const { return freqs.empty(); }
};

void to_json(nlohmann::json& j, const QuantizedSpectrum& spec);
QuantizedSpectrum quantized_spectrum_from_json(const nlohmann::json& j);

struct LocalizeOptions {
  double threshold = 1e-2;  ///< keep peaks with |Q| >= 1 - threshold
  int grid_size = kDualGridSize;
  /// Peaks closer than merge_radius_scale / N are merged.
  double merge_radius_scale = 0.25;
};

/// Frequencies where |Q| touches 1: grid local maxima above 1 - threshold,
/// refined by Brent's method, then merged within 1/(4N) keeping the larger.
std::vector<Peak> localize_peaks(const cvec& q, const LocalizeOptions& opts = {});
std::vector<double> localize(const cvec& q, const LocalizeOptions& opts = {});

/// Active-atom matrix A = [a(xi_1) ... a(xi_l)] with n rows.
cmat atom_matrix(const std::vector<double>& freqs, Eigen::Index n);

struct CoefficientFit {
  cvec coefs;
  double duality_gap = 0.0;     ///< certified gap of the constrained l1 problem
  double epsilon_used = 0.0;    ///< equals epsilon unless relaxed
  bool relaxed = false;         ///< epsilon was below the least-squares residual
  int lasso_solves = 0;
};

/// c* = argmin |c|_1 s.t. |A c - y|_2 <= epsilon, by bisection on the
/// multiplier of the Lagrangian form (each solved by ADMM with complex
/// soft-thresholding).
CoefficientFit fit_coefficients(const std::vector<double>& freqs, const cvec& y, double epsilon);

/// g_n = sum_i c_i e^{j 2 pi (N + n) xi_i}, n = 0..horizon-1.
cvec extrapolate(const QuantizedSpectrum& spec, Eigen::Index n, Eigen::Index horizon);

struct BlindOptions {
  AdmmOptions admm;
  LocalizeOptions localize;
  double epsilon_scale = 1.0;  ///< multiplier on default_epsilon
};

struct BlindPrediction {
  cvec g_hat;
  QuantizedSpectrum spectrum;
  AtomicSolution solution;
  CoefficientFit fit;
  double epsilon = 0.0;
  double max_abs_q = 0.0;       ///< grid max of |Q| after normalization
  double min_peak_abs_q = 1.0;  ///< smallest |Q| among retained peaks
  bool converged = false;
};

/// solve_atomic -> recover_dual -> localize -> fit_coefficients -> extrapolate.
/// Uses only y and sigma^2; no model information.
BlindPrediction blind_predict(const cvec& y, double sigma2, Eigen::Index horizon,
                              const BlindOptions& opts = {});

/// (xi, |Q(xi)|) over the dual grid.
void write_dual_trace_csv(const cvec& q, int grid_size, const std::string& path);

}  // namespace specquant
