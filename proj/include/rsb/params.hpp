#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rsb {

/// Shape of a discrete r-RSB parameter tree: degree d, depth r and the
/// per-level branching sizes [n_1, ..., n_{r-1}] (empty for r = 1).
///
/// Sequences of length k are enumerated lexicographically; node i at level k
/// has children i*n_{k+1} + j, j = 0..n_{k+1}-1. This ordering is part of the
/// file-format contract: published p/q lists are order-sensitive.
struct ParamShape {
  int degree = 3;
  int depth = 1;
  std::vector<int> branching;  // size depth-1

  /// |S_k| = n_1 * ... * n_k (1 for k = 0).
  std::size_t level_size(int k) const {
    std::size_t s = 1;
    for (int i = 0; i < k; ++i) s *= static_cast<std::size_t>(branching[i]);
    return s;
  }

  /// Number of leaf atoms, |S_{r-1}|.
  std::size_t leaf_count() const { return level_size(depth - 1); }

  /// Dimension of the unconstrained optimization vector:
  /// (r-1) + 2 * n_1 * ... * n_{r-1}.
  std::size_t free_dim() const {
    return static_cast<std::size_t>(depth - 1) + 2 * leaf_count();
  }

  void validate() const;  // throws Error(Shape) on structural violations

  bool operator==(const ParamShape&) const = default;
};

/// One point in the domain of the r-RSB bound.
///
/// p[k-1] holds the branch probabilities for level k (k = 1..r-1), flat over
/// S_k in lexicographic order; siblings of a common parent are consecutive
/// and sum to 1. q holds the leaf atoms over S_{r-1}.
struct RsbParams {
  double lambda0 = 2.0;
  std::vector<double> parisi;          // m_1..m_{r-1}
  std::vector<std::vector<double>> p;  // per level, flat
  std::vector<double> q;               // per leaf

  /// Checks every invariant against `shape`; throws Error(Domain/Shape).
  /// `simplex_tol` bounds the allowed deviation of sibling sums from 1.
  void validate(const ParamShape& shape, double simplex_tol = 1e-12) const;

  bool strictly_interior(const ParamShape& shape, std::string* offending = nullptr) const;
};

struct UnconstrainedVector {
  std::vector<double> coords;
};

/// Maps an unconstrained vector onto feasible RsbParams:
///   lambda0 = 1 + exp(v0), m_k = sigmoid, sibling groups of p through a
///   pinned-reference softmax, q = sigmoid.
RsbParams from_unconstrained(const ParamShape& shape, const UnconstrainedVector& v);

/// Inverse of from_unconstrained on the open interior.
UnconstrainedVector to_unconstrained(const ParamShape& shape, const RsbParams& params);

/// Coordinate layout of the unconstrained vector (shared with the gradient
/// chain rule): [lambda0] [m_1..m_{r-1}] [p logits, levels in order, groups in
/// order, siblings 1..n_k-1 (sibling 0 pinned)] [q logits, leaf order].
struct VectorLayout {
  std::size_t lambda0_index = 0;
  std::size_t m_offset = 1;
  std::size_t p_offset = 0;  // first p logit
  std::size_t q_offset = 0;  // first q logit
  std::size_t dim = 0;
};
VectorLayout vector_layout(const ParamShape& shape);

/// JSON parameter-file I/O (schema documented in the README).
/// Numbers are written with 17 significant digits; sibling sums are checked to
/// `simplex_tol` (file defaults are coarser than the in-memory invariant) and
/// renormalized exactly after ingestion.
std::pair<ParamShape, RsbParams> load_params(const std::string& text,
                                             double simplex_tol = 1e-9);
std::string save_params(const ParamShape& shape, const RsbParams& params);

std::pair<ParamShape, RsbParams> load_params_file(const std::string& path,
                                                  double simplex_tol = 1e-9);
void save_params_file(const std::string& path, const ParamShape& shape,
                      const RsbParams& params);

}  // namespace rsb
