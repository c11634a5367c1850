#include "specquant/quantizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

namespace specquant {

namespace {

cvec soft_threshold(const cvec& v, double tau) {
  cvec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    out(i) = mag > tau ? v(i) * (1.0 - tau / mag) : cplx{};
  }
  return out;
}

/// min 1/2 |B c - b|^2 + mu |c|_1 by ADMM on the split c = z, with the
/// Gram system refactored whenever the penalty changes.
class LassoSolver {
 public:
  LassoSolver(const cmat& b_mat, const cvec& b_vec)
      : b_mat_(b_mat), b_vec_(b_vec), gram_(b_mat.adjoint() * b_mat), rhs_(b_mat.adjoint() * b_vec) {
    const rvec spectrum = Eigen::SelfAdjointEigenSolver<cmat>(gram_, Eigen::EigenvaluesOnly).eigenvalues();
    const double top = std::max(spectrum.maxCoeff(), 1e-300);
    const double bottom = std::max(spectrum.minCoeff(), 1e-6 * top);
    rho_ = std::sqrt(top * bottom);
    refactor();
    z_ = cvec::Zero(b_mat.cols());
    w_ = cvec::Zero(b_mat.cols());
  }

  /// Warm-started from the previous call. Returns the sparse iterate z.
  const cvec& solve(double mu) {
    const double tol = 1e-13 * std::max(1.0, b_vec_.squaredNorm());
    // The scaled multiplier w is tied to mu / rho; rescale for the new mu.
    if (last_mu_ > 0.0) w_ *= mu / last_mu_;
    last_mu_ = mu;
    for (int it = 1; it <= 20000; ++it) {
      const cvec c = llt_.solve(rhs_ + rho_ * (z_ - w_));
      const cvec z_prev = z_;
      z_ = soft_threshold(c + w_, mu / rho_);
      w_ += c - z_;
      if (it % 10 == 0 && gap(mu) <= tol) break;
      const double primal = (c - z_).norm();
      const double dual = rho_ * (z_ - z_prev).norm();
      if (primal > 10.0 * dual || dual > 10.0 * primal) {
        const double factor = primal > dual ? 2.0 : 0.5;
        rho_ *= factor;
        w_ /= factor;
        refactor();
      }
    }
    return z_;
  }

  double residual_norm() const { return (b_mat_ * z_ - b_vec_).norm(); }

 private:
  double gap(double mu) const {
    const cvec r = b_vec_ - b_mat_ * z_;
    const double primal = 0.5 * r.squaredNorm() + mu * z_.cwiseAbs().sum();
    const double peak = (b_mat_.adjoint() * r).cwiseAbs().maxCoeff();
    const cvec theta = peak > mu ? cvec(r * (mu / peak)) : r;
    const double dual = theta.dot(b_vec_).real() - 0.5 * theta.squaredNorm();
    return primal - dual;
  }

  void refactor() {
    cmat shifted = gram_;
    shifted.diagonal().array() += rho_;
    llt_.compute(shifted);
  }

  const cmat& b_mat_;
  const cvec& b_vec_;
  cmat gram_;
  cvec rhs_;
  double rho_ = 1.0;
  double last_mu_ = 0.0;
  Eigen::LLT<cmat> llt_;
  cvec z_;
  cvec w_;
};

/// Lower bound of min |c|_1 s.t. |B c - b| <= radius from the dual
/// max Re(w^H b) - radius |w| s.t. |B^H w|_inf <= 1, with w taken along the
/// residual direction.
double constrained_dual_bound(const cmat& b_mat, const cvec& b_vec, const cvec& c, double radius) {
  cvec w = b_vec - b_mat * c;
  const double peak = (b_mat.adjoint() * w).cwiseAbs().maxCoeff();
  if (peak <= 0.0) return 0.0;
  w /= peak;
  return w.dot(b_vec).real() - radius * w.norm();
}

}  // namespace

void to_json(nlohmann::json& j, const QuantizedSpectrum& spec) {
  j = nlohmann::json::object();
  j["freqs"] = spec.freqs;
  j["coefs"] = nlohmann::json::array();
  for (const auto& c : spec.coefs) j["coefs"].push_back({{"re", c.real()}, {"im", c.imag()}});
}

QuantizedSpectrum quantized_spectrum_from_json(const nlohmann::json& j) {
  QuantizedSpectrum spec;
  try {
    spec.freqs = j.at("freqs").get<std::vector<double>>();
    for (const auto& c : j.at("coefs")) spec.coefs.emplace_back(c.at("re").get<double>(), c.at("im").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed quantized spectrum JSON: ") + e.what());
  }
  if (spec.freqs.size() != spec.coefs.size())
    throw std::invalid_argument("quantized spectrum needs one coefficient per frequency");
  return spec;
}

std::vector<Peak> localize_peaks(const cvec& q, const LocalizeOptions& opts) {
  const rvec magnitude = dual_polynomial_grid(q, opts.grid_size).cwiseAbs();
  const double floor = 1.0 - opts.threshold;
  const double half_width = 1.0 / opts.grid_size;
  std::vector<Peak> candidates;
  for (int k : local_maxima(magnitude)) {
    if (magnitude(k) < floor) continue;
    candidates.push_back(refine_peak(q, grid_frequency(k, opts.grid_size), half_width));
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
  const double radius = opts.merge_radius_scale / static_cast<double>(q.size());
  std::vector<Peak> kept;
  for (const auto& p : candidates) {
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
      return circular_distance(k.xi, p.xi) < radius;
    });
    if (!clash) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.xi < b.xi; });
  return kept;
}

std::vector<double> localize(const cvec& q, const LocalizeOptions& opts) {
  std::vector<double> freqs;
  for (const auto& p : localize_peaks(q, opts)) freqs.push_back(p.xi);
  return freqs;
}

cmat atom_matrix(const std::vector<double>& freqs, Eigen::Index n) {
  cmat a(n, static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t i = 0; i < freqs.size(); ++i) a.col(static_cast<Eigen::Index>(i)) = steering(freqs[i], n);
  return a;
}

CoefficientFit fit_coefficients(const std::vector<double>& freqs, const cvec& y, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  const Eigen::Index n = y.size();
  const auto l = static_cast<Eigen::Index>(freqs.size());
  CoefficientFit fit;
  fit.coefs = cvec::Zero(l);
  fit.epsilon_used = epsilon;
  if (l == 0 || y.norm() <= epsilon) return fit;

  const cmat a = atom_matrix(freqs, n);
  cmat b_mat;
  cvec b_vec;
  double radius = epsilon;
  if (l <= n) {
    // |A c - y|^2 = |R c - Q^H y|^2 + r_ls^2: work in the l-dimensional range.
    Eigen::HouseholderQR<cmat> qr(a);
    const cmat q_thin = qr.householderQ() * cmat::Identity(n, l);
    b_mat = qr.matrixQR().topRows(l).triangularView<Eigen::Upper>();
    b_vec = q_thin.adjoint() * y;
    const double ls_residual = (y - q_thin * b_vec).norm();
    if (ls_residual >= epsilon) {
      fit.relaxed = true;
      fit.epsilon_used = ls_residual + 1e-9;
    }
    radius = std::sqrt(fit.epsilon_used * fit.epsilon_used - ls_residual * ls_residual);
  } else {
    b_mat = a;
    b_vec = y;
  }
  if (b_vec.norm() <= radius) return fit;

  // Exact fit through the range of B: always feasible, and the fallback
  // when no Lagrangian iterate lands inside the ball.
  const cvec exact = l <= n ? cvec(b_mat.triangularView<Eigen::Upper>().solve(b_vec))
                            : cvec(b_mat.completeOrthogonalDecomposition().solve(b_vec));
  cvec feasible = exact;
  double best_l1 = feasible.cwiseAbs().sum();

  LassoSolver lasso(b_mat, b_vec);
  const double mu_max = (b_mat.adjoint() * b_vec).cwiseAbs().maxCoeff();
  auto excess = [&](double mu) {
    ++fit.lasso_solves;
    const cvec& c = lasso.solve(mu);
    const double r = lasso.residual_norm();
    // Pull an outside iterate toward the exact fit until |B c - b| = radius;
    // the residual is affine along the segment, so the blend is feasible.
    const double theta = r > radius ? 1.0 - radius / r : 0.0;
    const cvec candidate = (1.0 - theta) * c + theta * exact;
    const double l1 = candidate.cwiseAbs().sum();
    if (l1 < best_l1) {
      feasible = candidate;
      best_l1 = l1;
    }
    return r - radius;
  };

  // Residual is increasing in mu: -radius at mu = 0 (range solution) and
  // |b| - radius > 0 at mu_max.
  std::uintmax_t max_iter = 100;
  const auto tol = [](double lo, double hi) {
    return std::abs(hi - lo) <= 1e-14 * std::max(std::abs(lo), std::abs(hi));
  };
  const double lo_excess = excess(1e-12 * mu_max);
  if (lo_excess < 0.0) {
    const double hi_excess = (b_vec.norm() - radius);
    boost::math::tools::toms748_solve(
        [&](double mu) {
          const double e = excess(mu);
          // Stop as soon as the constraint is met to relative precision.
          return std::abs(e) <= 1e-12 * std::max(radius, 1e-300) ? 0.0 : e;
        },
        1e-12 * mu_max, mu_max, lo_excess, hi_excess, tol, max_iter);
  }
  fit.coefs = feasible;
  const double primal = feasible.cwiseAbs().sum();
  fit.duality_gap = std::max(0.0, primal - constrained_dual_bound(b_mat, b_vec, feasible, radius));
  return fit;
}

cvec extrapolate(const QuantizedSpectrum& spec, Eigen::Index n, Eigen::Index horizon) {
  if (spec.freqs.size() != spec.coefs.size())
    throw std::invalid_argument("quantized spectrum needs one coefficient per frequency");
  cvec g = cvec::Zero(horizon);
  for (std::size_t i = 0; i < spec.freqs.size(); ++i)
    for (Eigen::Index k = 0; k < horizon; ++k)
      g(k) += spec.coefs[i] * unit_phasor(static_cast<double>(n + k) * spec.freqs[i]);
  return g;
}

BlindPrediction blind_predict(const cvec& y, double sigma2, Eigen::Index horizon,
                              const BlindOptions& opts) {
  const Eigen::Index n = y.size();
  BlindPrediction out;
  out.epsilon = opts.epsilon_scale * default_epsilon(sigma2, n);
  out.solution = solve_atomic(y, out.epsilon, opts.admm);
  out.converged = out.solution.converged;
  const cvec& q = recover_dual(y, out.solution, out.epsilon, opts.admm);

  const auto peaks = localize_peaks(q, opts.localize);
  out.max_abs_q = dual_polynomial_grid(q, opts.localize.grid_size).cwiseAbs().maxCoeff();
  std::vector<double> freqs;
  for (const auto& p : peaks) {
    freqs.push_back(p.xi);
    out.min_peak_abs_q = std::min(out.min_peak_abs_q, p.magnitude);
  }

  out.fit = fit_coefficients(freqs, y, out.epsilon);
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const cplx c = out.fit.coefs(static_cast<Eigen::Index>(i));
    if (c == cplx{}) continue;
    out.spectrum.freqs.push_back(freqs[i]);
    out.spectrum.coefs.push_back(c);
  }
  out.g_hat = extrapolate(out.spectrum, n, horizon);
  return out;
}

void write_dual_trace_csv(const cvec& q, int grid_size, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const cvec values = dual_polynomial_grid(q, grid_size);
  out << "xi,abs_Q\n";
  for (int k = 0; k < grid_size; ++k)
    out << fmt::format("{:.17g},{:.17g}\n", grid_frequency(k, grid_size), std::abs(values(k)));
}

}  // namespace specquant
