#pragma once

#include <vector>

#include "specquant/types.hpp"

namespace specquant {

/// Q(xi) = sum_n q_n e^{-j 2 pi n xi} = a(xi)^H q. Evaluated term by term.
cplx dual_polynomial(const cvec& q, double xi);

/// Q on the uniform grid xi_k = -1/2 + k / grid_size, k = 0..grid_size-1
/// (Horner recurrence per point).
cvec dual_polynomial_grid(const cvec& q, int grid_size);

inline double grid_frequency(int k, int grid_size) {
  return -0.5 + static_cast<double>(k) / static_cast<double>(grid_size);
}

struct Peak {
  double xi = 0.0;
  double magnitude = 0.0;  ///< |Q(xi)|
};

/// Maximizes |Q|^2 on [center - half_width, center + half_width] (Brent).
Peak refine_peak(const cvec& q, double center, double half_width);

/// Indices of cyclic local maxima of a sampled magnitude curve
/// (>= left neighbour, > right neighbour).
std::vector<int> local_maxima(const rvec& magnitude);

/// max_xi |Q(xi)|: grid search followed by refinement of every local
/// maximum that is within 1e-3 of the grid maximum.
Peak max_modulus(const cvec& q, int grid_size);

}  // namespace specquant
