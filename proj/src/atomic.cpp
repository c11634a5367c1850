#include "specquant/atomic.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "specquant/dual_polynomial.hpp"

namespace specquant {

namespace {

/// Eigenvalue clipping onto the PSD cone.
class PsdProjector {
 public:
  explicit PsdProjector(Eigen::Index n) : eig_(n) {}

  cmat operator()(const cmat& v) {
    eig_.compute(v);
    const rvec& lambda = eig_.eigenvalues();  // ascending
    Eigen::Index first = 0;
    while (first < lambda.size() && lambda(first) <= 0.0) ++first;
    const Eigen::Index count = lambda.size() - first;
    if (count == 0) return cmat::Zero(v.rows(), v.cols());
    const auto vecs = eig_.eigenvectors().rightCols(count);
    return vecs * lambda.tail(count).asDiagonal() * vecs.adjoint();
  }

 private:
  Eigen::SelfAdjointEigenSolver<cmat> eig_;
};

cvec project_ball(const cvec& v, const cvec& center, double radius) {
  const cvec d = v - center;
  const double norm = d.norm();
  if (norm <= radius) return v;
  return center + (radius / norm) * d;
}

void assemble(cmat& block, const cvec& u, const cvec& x, double t) {
  const Eigen::Index n = x.size();
  block.topLeftCorner(n, n) = toeplitz(u);
  block.col(n).head(n) = x;
  block.row(n).head(n) = x.adjoint();
  block(n, n) = t;
}

/// Orthogonal projection of a Hermitian matrix's top-left block onto
/// Hermitian Toeplitz matrices: the average along each diagonal.
cvec diagonal_means(const cmat& w, Eigen::Index n) {
  cvec u(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    cplx sum{0.0, 0.0};
    for (Eigen::Index i = 0; i + k < n; ++i) sum += w(i + k, i) + std::conj(w(i, i + k));
    u(k) = sum / (2.0 * static_cast<double>(n - k));
  }
  u(0) = u(0).real();
  return u;
}

void hermitianize(cmat& m) { m = (0.5 * (m + m.adjoint())).eval(); }

}  // namespace

cmat toeplitz(const cvec& u) {
  const Eigen::Index n = u.size();
  cmat t(n, n);
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index p = 0; p < n; ++p) t(p, q) = p >= q ? u(p - q) : std::conj(u(q - p));
  return t;
}

cmat AtomicSolution::block_matrix() const {
  const Eigen::Index n = x_star.size();
  cmat block(n + 1, n + 1);
  assemble(block, u_star, x_star, lambda_star);
  return block;
}

double default_epsilon(double sigma2, Eigen::Index n) {
  const double dn = static_cast<double>(n);
  return std::sqrt(sigma2) * std::sqrt(dn + 2.0 * std::sqrt(dn));
}

AtomicSolution solve_atomic(const cvec& y, double epsilon, const AdmmOptions& opts) {
  const Eigen::Index n = y.size();
  if (n < 4) throw std::invalid_argument("solve_atomic needs N >= 4");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");

  AtomicSolution sol;
  const double scale = y.norm();
  if (scale <= epsilon) {
    sol.x_star = cvec::Zero(n);
    sol.u_star = cvec::Zero(n);
    sol.converged = true;
    return sol;
  }

  // Work on y / |y|; every primal quantity scales linearly back.
  const cvec yn = y / scale;
  const double radius = epsilon / scale;
  const Eigen::Index dim = n + 1;

  cmat z = cmat::Zero(dim, dim);
  cmat dual = cmat::Zero(dim, dim);
  cmat block(dim, dim);
  cmat z_prev(dim, dim);
  cvec x(n), u(n);
  double t = 0.0;
  double rho = opts.rho;
  PsdProjector project(dim);

  double best_score = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    const cmat w = z + dual / rho;
    x = project_ball(0.5 * (w.col(n).head(n) + w.row(n).head(n).adjoint()), yn, radius);
    t = w(n, n).real() - 0.5 / rho;
    u = diagonal_means(w, n);
    u(0) -= 0.5 / (rho * static_cast<double>(n));
    assemble(block, u, x, t);

    z_prev = z;
    const cmat relaxed = opts.relaxation * block + (1.0 - opts.relaxation) * z_prev;
    cmat v = relaxed - dual / rho;
    hermitianize(v);
    z = project(v);
    dual += rho * (z - relaxed);

    const double primal = (z - block).norm();
    const double dual_res = rho * (z - z_prev).norm();
    const double primal_scale = std::max({1.0, block.norm(), z.norm()});
    const double dual_scale = std::max(1.0, dual.norm());
    const double objective = 0.5 * (u(0).real() + t);
    if (opts.record_trace) sol.trace.push_back({it, scale * objective, primal, dual_res});

    const double score =
        std::max(primal / (opts.tolerance * primal_scale), dual_res / (opts.tolerance * dual_scale));
    if (score < best_score) {
      best_score = score;
      sol.x_star = scale * x;
      sol.u_star = scale * u;
      sol.lambda_star = scale * t;
      sol.objective = scale * objective;
      sol.iterations = it;
      sol.primal_residual = primal;
      sol.dual_residual = dual_res;
    }
    if (score <= 1.0) {
      sol.converged = true;
      break;
    }

    if (it % opts.balance_every != 0) continue;
    if (primal > opts.balance_ratio * dual_res)
      rho *= opts.rho_factor;
    else if (dual_res > opts.balance_ratio * primal)
      rho /= opts.rho_factor;
  }
  if (!sol.converged) sol.iterations = opts.max_iter;

  // Lift the diagonal by the most negative eigenvalue so the returned
  // point is exactly feasible; the objective moves by the same amount.
  const cmat final_block = sol.block_matrix();
  const double lambda_min =
      Eigen::SelfAdjointEigenSolver<cmat>(final_block, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (lambda_min < 0.0) {
    sol.u_star(0) -= lambda_min;
    sol.lambda_star -= lambda_min;
    sol.objective -= lambda_min;
  }
  return sol;
}

DualSdpResult solve_dual_sdp(const cvec& x, const AdmmOptions& opts) {
  const Eigen::Index n = x.size();
  const Eigen::Index dim = n + 1;
  DualSdpResult result;
  const double norm = x.norm();
  if (norm == 0.0) {
    result.q = cvec::Zero(n);
    result.converged = true;
    return result;
  }
  const cvec xn = x / norm;

  // <C, V> = Re(x^H V[0:n, n]); q = -V[0:n, n].
  cmat cost = cmat::Zero(dim, dim);
  cost.col(n).head(n) = 0.5 * xn;
  cost.row(n).head(n) = 0.5 * xn.adjoint();

  auto project_affine = [n](cmat& v) {
    // Diagonal sums of the H block: 1 on the main diagonal, 0 elsewhere.
    for (Eigen::Index j = 0; j < n; ++j) {
      cplx sum{0.0, 0.0};
      for (Eigen::Index k = 0; k + j < n; ++k) sum += v(k, k + j);
      const cplx shift = (sum - (j == 0 ? cplx{1.0, 0.0} : cplx{})) / static_cast<double>(n - j);
      for (Eigen::Index k = 0; k + j < n; ++k) {
        v(k, k + j) -= shift;
        if (j > 0) v(k + j, k) = std::conj(v(k, k + j));
      }
    }
    for (Eigen::Index k = 0; k < n; ++k) v(k, k) = v(k, k).real();
    v(n, n) = 1.0;
  };

  cmat z = cmat::Identity(dim, dim) / static_cast<double>(n);
  z(n, n) = 1.0;
  cmat dual = cmat::Zero(dim, dim);
  cmat z_prev(dim, dim);
  double rho = opts.rho;
  PsdProjector project(dim);

  for (int it = 1; it <= opts.max_iter; ++it) {
    cmat v = z - (cost + dual) / rho;
    hermitianize(v);
    project_affine(v);
    z_prev = z;
    cmat w = v + dual / rho;
    hermitianize(w);
    z = project(w);
    dual += rho * (v - z);

    const double primal = (v - z).norm();
    const double dual_res = rho * (z - z_prev).norm();
    result.iterations = it;
    if (primal <= opts.tolerance * std::max({1.0, v.norm(), z.norm()}) &&
        dual_res <= opts.tolerance * std::max(1.0, dual.norm())) {
      result.converged = true;
      break;
    }
    if (primal > opts.balance_ratio * dual_res)
      rho *= opts.rho_factor;
    else if (dual_res > opts.balance_ratio * primal)
      rho /= opts.rho_factor;
  }
  result.q = -z.col(n).head(n);
  return result;
}

const cvec& recover_dual(const cvec& y, AtomicSolution& solution, double epsilon,
                         const AdmmOptions& opts) {
  // x* = 0 (|y| <= eps): q = 0 attains the dual value 0 and certifies an
  // empty support.
  if (solution.x_star.isZero(0.0)) {
    solution.q_star = cvec::Zero(y.size());
    return solution.q_star;
  }
  const cvec residual = y - solution.x_star;
  cvec q;
  if (residual.norm() > 1e-12 * std::max(1.0, y.norm()) && epsilon > 0.0) {
    q = residual;
  } else {
    q = solve_dual_sdp(solution.x_star, opts).q;
  }
  const double peak = max_modulus(q, kDualGridSize).magnitude;
  if (peak > 0.0) q /= peak;
  solution.q_star = std::move(q);
  return solution.q_star;
}

std::optional<double> atomic_norm_grid_oracle(const cvec& x, int grid_size) {
  const Eigen::Index n = x.size();
  if (grid_size < 4 * n) throw std::invalid_argument("grid oracle needs grid_size >= 4N");
  const double norm = x.norm();
  if (norm == 0.0) return 0.0;
  const cvec xn = x / norm;

  // Column generation: basis pursuit restricted to a working set of grid
  // atoms, priced on the full grid through the dual polynomial. The upper
  // bound is the l1 norm of an exactly feasible restricted solution; the
  // lower bound is Re(q^H x) / max_k |a_k^H q| for the restricted dual q.
  std::vector<int> active;
  auto add = [&](int k) {
    k = ((k % grid_size) + grid_size) % grid_size;
    if (std::find(active.begin(), active.end(), k) == active.end()) active.push_back(k);
  };
  const int coarse = static_cast<int>(8 * n);
  for (int i = 0; i < coarse; ++i) add(static_cast<int>(static_cast<long>(i) * grid_size / coarse));
  for (int k : local_maxima(dual_polynomial_grid(xn, grid_size).cwiseAbs())) add(k);

  cvec z_full;  // warm start, indexed like `active`
  cvec w_full;
  double upper = std::numeric_limits<double>::infinity();
  double lower = 0.0;
  for (int round = 0; round < 40; ++round) {
    const auto l = static_cast<Eigen::Index>(active.size());
    cmat dict(n, l);
    for (Eigen::Index j = 0; j < l; ++j) dict.col(j) = steering(grid_frequency(active[j], grid_size), n);
    const Eigen::LLT<cmat> gram(dict * dict.adjoint());
    if (gram.info() != Eigen::Success) return std::nullopt;
    auto project = [&](const cvec& v) -> cvec { return v - dict.adjoint() * gram.solve(dict * v - xn); };

    cvec z = cvec::Zero(l);
    cvec w = cvec::Zero(l);
    if (z_full.size() > 0) {
      z.head(z_full.size()) = z_full;
      w.head(w_full.size()) = w_full;
    } else {
      z = project(z);
    }
    double rho = 1.0;
    cvec q = cvec::Zero(n);
    double round_upper = std::numeric_limits<double>::infinity();
    double round_lower = 0.0;
    for (int it = 1; it <= 50000; ++it) {
      const cvec c = project(z - w);
      const cvec z_prev = z;
      cvec v = c + w;
      for (Eigen::Index i = 0; i < l; ++i) {
        const double mag = std::abs(v(i));
        v(i) = mag > 1.0 / rho ? v(i) * (1.0 - 1.0 / (rho * mag)) : cplx{};
      }
      z = v;
      w += c - z;
      if (it % 50 != 0) continue;

      round_upper = std::min(round_upper, project(z).cwiseAbs().sum());
      // rho * w approximates a_k^H q on the working set.
      q = gram.solve(dict * (rho * w));
      const double restricted_peak = (dict.adjoint() * q).cwiseAbs().maxCoeff();
      if (restricted_peak > 0.0) round_lower = std::max(round_lower, q.dot(xn).real() / restricted_peak);
      if (round_upper - round_lower <= 1e-7 * round_upper) break;

      const double primal_res = (c - z).norm();
      const double dual_res = rho * (z - z_prev).norm();
      if (primal_res > 10.0 * dual_res) {
        rho *= 2.0;
        w /= 2.0;
      } else if (dual_res > 10.0 * primal_res) {
        rho /= 2.0;
        w *= 2.0;
      }
    }
    upper = std::min(upper, round_upper);
    z_full = z;
    w_full = w;

    const rvec priced = dual_polynomial_grid(q, grid_size).cwiseAbs();
    const double peak = priced.maxCoeff();
    if (peak > 0.0) lower = std::max(lower, q.dot(xn).real() / peak);
    if (upper - lower <= 1e-6 * upper) break;

    const double restricted_peak = (dict.adjoint() * q).cwiseAbs().maxCoeff();
    std::size_t before = active.size();
    for (int k : local_maxima(priced))
      if (priced(k) > restricted_peak * (1.0 + 1e-9)) {
        add(k - 1);
        add(k);
        add(k + 1);
      }
    if (active.size() == before) break;
  }
  if (upper - lower <= 1e-3 * upper) return norm * 0.5 * (upper + lower);
  return std::nullopt;
}

void write_iteration_log(const AtomicSolution& solution, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iter,objective,primal_res,dual_res\n";
  for (const auto& r : solution.trace)
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", r.iter, r.objective, r.primal_residual,
                       r.dual_residual);
}

}  // namespace specquant
