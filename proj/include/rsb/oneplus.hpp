#pragma once

#include <cstdint>
#include <vector>

namespace rsb {

/// Atomic measure on the grid {i/div : i = 0..div}.
struct GridMeasure {
  int div = 1;
  std::vector<double> weights;  // div+1 entries, nonnegative, summing to 1

  void validate(double simplex_tol = 1e-12) const;
};

/// Refined 1-RSB bound with activity atoms at 0, 1-1/sqrt(lambda), 1-1/lambda
/// carrying masses q0, q_half, 1-q0-q_half.
double eval_three_atom(int d, double lambda0, double q0, double q_half);

struct ThreeAtomPoint {
  double lambda0 = 0.0;
  double q_half = 0.0;
  double bound = 0.0;
};

/// Solves the two stationarity relations for (lambda0, q_half) given q0,
/// leaving a one-parameter family; the caller minimizes over q0.
ThreeAtomPoint reduce_to_q0(int d, double q0);

/// Minimizes reduce_to_q0(d, .).bound over q0 in [lo, hi].
ThreeAtomPoint minimize_three_atom(int d, double lo, double hi);

/// Grid-measure bound. Star term uses a partial-sum DP with integer exponent
/// bookkeeping, O(d * div^2); edge term uses suffix sums, O(div).
double eval_grid_bound(int d, double lambda0, const GridMeasure& tau);

struct GridGradient {
  double d_lambda0 = 0.0;
  std::vector<double> d_weights;  // unprojected partials per atom
};

GridGradient eval_grid_gradient(int d, double lambda0, const GridMeasure& tau);

struct GridOptimum {
  double lambda0 = 0.0;
  GridMeasure tau;
  double bound = 0.0;
  double grad_norm = 0.0;  // in the unconstrained coordinates
};

/// Minimizes eval_grid_bound over (lambda0, tau) via the shared local
/// optimizer on softmax-reparameterized weights. Deterministic per seed.
/// Even div values warm-start from the div/2 optimum embedded on the
/// finer grid, so refinement never loses ground.
GridOptimum optimize_grid(int d, int div, std::uint64_t seed);

}  // namespace rsb
