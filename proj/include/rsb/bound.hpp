#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rsb/params.hpp"

namespace rsb {

/// Result of one bound evaluation.
///
/// bound == (log_r_star - (d/2) * log_r_edge) / normalizer, with
/// normalizer == m_1 * ... * m_{r-1} * log(lambda0).
struct BoundReport {
  double bound = 0.0;
  double log_r_star = 0.0;
  double log_r_edge = 0.0;
  double normalizer = 0.0;
  std::optional<std::vector<double>> gradient;  // unconstrained coordinates
};

enum class EvalPath {
  Auto,         // r == 2 and d >= 8 routes to the multinomial fast path
  Generic,      // full tensor recursion
  Multinomial,  // r == 2 only
};

struct EvalOptions {
  EvalPath path = EvalPath::Auto;
  /// Cap on the element count of the widest tensor level, leaf_count^degree.
  std::size_t element_cap = 100'000'000;
};

/// Replica symmetric bound, valid for lambda > 0 (!= 1) and x in [0,1).
double eval_rs(int d, double lambda, double x);

/// 1-RSB bound for lambda0 > 1 and q in [0,1].
double eval_1rsb(int d, double lambda0, double q);

/// Discrete r-RSB bound via the recursive star/edge tensors.
BoundReport eval_bound(const ParamShape& shape, const RsbParams& params,
                       const EvalOptions& opts = {});

/// 2-RSB bound via the composition/multinomial scheme:
/// O(C(d+n-1, n-1)) terms for the star sum instead of n^d.
double eval_2rsb_multinomial(int d, double lambda0, double m,
                             const std::vector<double>& p,
                             const std::vector<double>& q);

/// Analytic gradient of eval_bound composed with from_unconstrained, in
/// unconstrained coordinates. Requires a strictly interior point.
std::vector<double> eval_gradient(const ParamShape& shape, const RsbParams& params,
                                  const EvalOptions& opts = {});

/// Constrained-space partials (internal building block, exposed for tests).
struct ConstrainedGradient {
  double d_lambda0 = 0.0;
  std::vector<double> d_m;
  std::vector<std::vector<double>> d_p;  // same layout as RsbParams::p
  std::vector<double> d_q;
};
ConstrainedGradient eval_constrained_gradient(const ParamShape& shape,
                                              const RsbParams& params,
                                              const EvalOptions& opts = {});

/// Chain rule through the reparameterization. `g` holds constrained partials
/// at `params`; the result lives in the vector_layout coordinate order.
std::vector<double> chain_to_unconstrained(const ParamShape& shape,
                                           const RsbParams& params,
                                           const ConstrainedGradient& g);

}  // namespace rsb
