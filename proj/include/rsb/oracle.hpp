#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rsb/params.hpp"

namespace rsb {

/// Explicit graph, possibly with loops and parallel edges (the configuration
/// model produces both). A loop makes its vertex unusable in any independent
/// set.
struct GraphInstance {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;

  void validate() const;
};

GraphInstance load_graph(const std::string& path);
void save_graph(const GraphInstance& g, const std::string& path);

/// Reference evaluator: the bound computed by direct nested summation over
/// all sequence tuples, with none of the block-summation structure the fast
/// path exploits. Capacity-limited to (prod n_k)^d <= 1e6.
double naive_rsb_bound(const ParamShape& shape, const RsbParams& params);

/// Hard-core partition function Z = sum over independent sets I of
/// lambda^|I|, exact for vertex_count <= 40.
double partition_function(const GraphInstance& g, double lambda);
double log_partition_function(const GraphInstance& g, double lambda);

/// Exact maximum independent set size, vertex_count <= 40.
int independence_number(const GraphInstance& g);

/// Configuration-model random d-regular multigraph on n vertices; with
/// require_simple, resamples until loop- and multi-edge-free (n*d <= 1e4).
GraphInstance random_regular(int n, int d, std::uint64_t seed, bool require_simple = false);

struct SanityBand {
  std::vector<double> ratios;  // alpha(G)/n per sampled simple graph
  double mean = 0.0;
  double max = 0.0;
};

/// Empirical distribution of alpha/n over simple random d-regular graphs.
SanityBand sanity_band(int d, int n, int samples, std::uint64_t seed);

}  // namespace rsb
