#include "specquant/dual_polynomial.hpp"

#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace specquant {

cplx dual_polynomial(const cvec& q, double xi) {
  cplx sum{0.0, 0.0};
  for (Eigen::Index n = 0; n < q.size(); ++n)
    sum += q(n) * unit_phasor(-static_cast<double>(n) * xi);
  return sum;
}

cvec dual_polynomial_grid(const cvec& q, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("grid size must be positive");
  cvec values(grid_size);
  const Eigen::Index last = q.size() - 1;
  for (int k = 0; k < grid_size; ++k) {
    const cplx z = unit_phasor(-grid_frequency(k, grid_size));
    cplx acc = last >= 0 ? q(last) : cplx{};
    for (Eigen::Index n = last - 1; n >= 0; --n) acc = acc * z + q(n);
    values(k) = acc;
  }
  return values;
}

Peak refine_peak(const cvec& q, double center, double half_width) {
  auto negative_power = [&q](double xi) { return -std::norm(dual_polynomial(q, xi)); };
  // 40 bits puts the bracket well below 1e-9 in frequency.
  const auto [xi, value] = boost::math::tools::brent_find_minima(
      negative_power, center - half_width, center + half_width, 40);
  return {wrap_frequency(xi), std::sqrt(-value)};
}

std::vector<int> local_maxima(const rvec& magnitude) {
  const auto m = static_cast<int>(magnitude.size());
  std::vector<int> peaks;
  for (int k = 0; k < m; ++k) {
    const double left = magnitude((k + m - 1) % m);
    const double right = magnitude((k + 1) % m);
    if (magnitude(k) >= left && magnitude(k) > right) peaks.push_back(k);
  }
  return peaks;
}

Peak max_modulus(const cvec& q, int grid_size) {
  const rvec magnitude = dual_polynomial_grid(q, grid_size).cwiseAbs();
  Eigen::Index arg = 0;
  const double grid_max = magnitude.maxCoeff(&arg);
  Peak best{grid_frequency(static_cast<int>(arg), grid_size), grid_max};
  const double half_width = 1.0 / grid_size;
  for (int k : local_maxima(magnitude)) {
    if (magnitude(k) < grid_max - 1e-3 * grid_max) continue;
    const Peak p = refine_peak(q, grid_frequency(k, grid_size), half_width);
    if (p.magnitude > best.magnitude) best = p;
  }
  return best;
}

}  // namespace specquant
