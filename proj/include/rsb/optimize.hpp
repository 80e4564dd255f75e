#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rsb/bound.hpp"
#include "rsb/params.hpp"

namespace rsb {

enum class PenaltyMode {
  AwayFromOne,      // penalize m_k near 1 (default; keeps depth from collapsing)
  DistanceFromOne,  // penalize (1 - m_k)^2
};

enum class LocalMethod { Bfgs, ConjugateGradient };

struct OptimizeConfig {
  int restarts = 100;
  int hop_count = 0;
  double hop_scale = 0.3;       // perturbation std in unconstrained coordinates
  double temperature = 1e-6;    // Metropolis scale for basin hopping
  double penalty_weight = 1e-3;
  double penalty_off_threshold = 1e300;  // bound below this switches penalty off
  PenaltyMode penalty_mode = PenaltyMode::AwayFromOne;
  double grad_tol = 1e-10;
  int max_iters = 5000;
  double start_scale = 1.5;  // std of random unconstrained starts
  std::uint64_t seed = 0;
  int jobs = 1;
  LocalMethod method = LocalMethod::Bfgs;
};

struct LocalResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool degraded = false;  // line search failed before reaching grad_tol
};

/// One record per local run inside a multi-start or basin-hopping trace.
struct RunRecord {
  std::uint64_t start_hash = 0;  // FNV-1a of the start vector bytes
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool degraded = false;
  bool accepted = true;  // Metropolis decision (always true for multi-start)
};

struct OptimizeTrace {
  std::vector<RunRecord> records;
  UnconstrainedVector best_x;
  BoundReport best;
  /// Leaf pairs whose atoms coincide at the reported optimum (mergeable).
  std::vector<std::pair<std::size_t, std::size_t>> coincident_atoms;
};

using Objective = std::function<double(const std::vector<double>&)>;
using Gradient = std::function<std::vector<double>(const std::vector<double>&)>;

/// Quasi-Newton (BFGS) descent with backtracking line search; conjugate
/// gradient selectable through cfg.method.
LocalResult local_minimize(const Objective& f, const Gradient& g,
                           const std::vector<double>& start, const OptimizeConfig& cfg);

/// cfg.restarts independent local runs from N(0, start_scale^2) starts.
/// Deterministic per seed and independent of cfg.jobs.
OptimizeTrace multi_start(const ParamShape& shape, const OptimizeConfig& cfg);

/// Basin hopping: perturb, minimize, Metropolis-accept; returns the best
/// visited minimum.
OptimizeTrace basin_hop(const ParamShape& shape, const UnconstrainedVector& start,
                        const OptimizeConfig& cfg);

/// Bound plus the boundary-avoidance penalty on the Parisi parameters.
double penalized_objective(const ParamShape& shape, const RsbParams& params, double weight,
                           PenaltyMode mode = PenaltyMode::AwayFromOne);

std::uint64_t fnv1a(const void* data, std::size_t bytes);

}  // namespace rsb
