#pragma once

#include <optional>
#include <string>
#include <vector>

#include "specquant/types.hpp"

namespace specquant {

struct AdmmOptions {
  double tolerance = 1e-5;     ///< primal and dual residual bound, relative to problem scale
  int max_iter = 20000;
  double rho = 0.1;            ///< initial penalty, in units of the normalized problem
  double balance_ratio = 10.0; ///< residual-balancing trigger
  double rho_factor = 2.0;
  int balance_every = 1;
  double relaxation = 1.6;     ///< over-relaxation factor in (0, 2)
  bool record_trace = false;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Output of the atomic-norm denoising SDP
///   min (1/2N) tr Toep(u) + t/2  s.t. [[Toep(u), x], [x^H, t]] >= 0, |x - y| <= eps.
struct AtomicSolution {
  cvec x_star;
  cvec u_star;          ///< first column of Toep(u*)
  double lambda_star = 0.0;
  cvec q_star;          ///< filled by recover_dual
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  std::vector<IterationRecord> trace;

  /// Assembles the (N+1) x (N+1) block matrix from u*, x*, lambda*.
  cmat block_matrix() const;
};

/// Hermitian Toeplitz matrix with first column u.
cmat toeplitz(const cvec& u);

/// sigma * sqrt(N + 2 sqrt(N)): an upper quantile of |z| for circularly
/// symmetric noise with per-sample variance sigma^2.
double default_epsilon(double sigma2, Eigen::Index n);

AtomicSolution solve_atomic(const cvec& y, double epsilon, const AdmmOptions& opts = {});

/// Dual of atomic-norm interpolation (used when x* = y):
///   max Re(q^H x) s.t. [[H, -q], [-q^H, 1]] >= 0, sum_k H_{k,k+j} = delta_j.
/// Returns q.
struct DualSdpResult {
  cvec q;
  int iterations = 0;
  bool converged = false;
};
DualSdpResult solve_dual_sdp(const cvec& x, const AdmmOptions& opts = {});

inline constexpr int kDualGridSize = 1 << 14;

/**
 * Dual vector certifying x*. With an active noise ball q* = (y - x*) / s,
 * s chosen so max_xi |Q(xi)| = 1 (grid search plus local refinement).
 * When x* = y the dual SDP is solved instead and normalized the same way.
 * When x* = 0 the certificate is q = 0.
 * Writes q_star into `solution` and returns it.
 */
const cvec& recover_dual(const cvec& y, AtomicSolution& solution, double epsilon,
                         const AdmmOptions& opts = {});

/// Basis-pursuit upper bound of |x|_D on a uniform grid of `grid_size`
/// frequencies: min |c|_1 s.t. sum_k c_k a(k / grid_size - 1/2) = x.
/// Returns nullopt when the grid cannot represent x.
std::optional<double> atomic_norm_grid_oracle(const cvec& x, int grid_size);

void write_iteration_log(const AtomicSolution& solution, const std::string& path);

}  // namespace specquant
