#pragma once

#include <vector>

namespace isentrope {

struct SpectralBounds {
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
};

// Two-sided bounds on the spectral radius of the nonnegative integer matrix
// whose row u lists the column index of every unit entry (repeats add up).
// Each strongly connected component is handled separately; on a component
// the iteration runs on B + I, which is primitive, and the Collatz-Wielandt
// quotients min/max (Mx)_i / x_i bracket its spectral radius.
SpectralBounds spectral_radius(const std::vector<std::vector<int>>& adjacency,
                               double rel_tol = 1e-12, int max_iterations = 10'000);

}  // namespace isentrope
