#include "rsb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rsb/error.hpp"
#include "rsb/rng.hpp"

namespace rsb {

void GraphInstance::validate() const {
  if (vertex_count < 0) fail(ErrorKind::Domain, "vertex count must be nonnegative");
  for (const auto& e : edges)
    if (e.first < 0 || e.first >= vertex_count || e.second < 0 || e.second >= vertex_count)
      fail(ErrorKind::Domain, "edge endpoint out of range");
}

GraphInstance load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Schema, "cannot open graph file " + path);
  GraphInstance g;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int u = 0, v = 0;
    if (!(ls >> u)) continue;
    if (!(ls >> v)) fail(ErrorKind::Schema, "dangling endpoint in graph file " + path);
    if (u < 0 || v < 0) fail(ErrorKind::Schema, "negative vertex index in graph file " + path);
    g.edges.emplace_back(u, v);
    g.vertex_count = std::max(g.vertex_count, std::max(u, v) + 1);
  }
  return g;
}

void save_graph(const GraphInstance& g, const std::string& path) {
  g.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Schema, "cannot write graph file " + path);
  for (const auto& e : g.edges) out << e.first << ' ' << e.second << '\n';
}

namespace {

// Recursively expands the nested sums defining the bound: a tuple of nodes
// at one level is replaced by the weighted sum over all child tuples of the
// next level raised to that level's Parisi exponent.
double naive_level(const ParamShape& shape, const RsbParams& params, int axes, bool star, int k,
                   std::vector<std::size_t>& nodes) {
  const int r = shape.depth;
  if (k == r - 1) {
    if (star) {
      double prod = 1.0;
      for (int a = 0; a < axes; ++a) prod *= 1.0 - params.q[nodes[a]];
      return 1.0 + (params.lambda0 - 1.0) * prod;
    }
    return 1.0 - (1.0 - 1.0 / params.lambda0) * params.q[nodes[0]] * params.q[nodes[1]];
  }
  const std::size_t n = static_cast<std::size_t>(shape.branching[k]);
  const double m = params.parisi[r - 2 - k];
  std::vector<std::size_t> child(axes, 0);
  std::vector<std::size_t> digits(axes, 0);
  double sum = 0.0;
  while (true) {
    double pprod = 1.0;
    for (int a = 0; a < axes; ++a) {
      child[a] = nodes[a] * n + digits[a];
      pprod *= params.p[k][child[a]];
    }
    sum += pprod * std::pow(naive_level(shape, params, axes, star, k + 1, child), m);
    int a = axes - 1;
    while (a >= 0 && ++digits[a] == n) digits[a--] = 0;
    if (a < 0) break;
  }
  return sum;
}

}  // namespace

double naive_rsb_bound(const ParamShape& shape, const RsbParams& params) {
  shape.validate();
  params.validate(shape);
  double tuples = 1.0;
  for (int n : shape.branching) tuples *= n;
  if (std::pow(tuples, shape.degree) > 1e6)
    fail(ErrorKind::Capacity, "naive summation above 1e6 tuples");

  std::vector<std::size_t> root_star(shape.degree, 0), root_edge(2, 0);
  const double r_star = naive_level(shape, params, shape.degree, true, 0, root_star);
  const double r_edge = naive_level(shape, params, 2, false, 0, root_edge);
  double norm = std::log(params.lambda0);
  for (double m : params.parisi) norm *= m;
  return (std::log(r_star) - 0.5 * shape.degree * std::log(r_edge)) / norm;
}

namespace {

struct BitGraph {
  int n = 0;
  std::vector<std::uint64_t> adj;    // neighbor mask, excludes the vertex itself
  std::uint64_t looped = 0;          // vertices with a self-loop

  explicit BitGraph(const GraphInstance& g) {
    g.validate();
    if (g.vertex_count > 40) fail(ErrorKind::Capacity, "exact graph routines cap at 40 vertices");
    n = g.vertex_count;
    adj.assign(n, 0);
    for (const auto& e : g.edges) {
      if (e.first == e.second) {
        looped |= 1ULL << e.first;
        continue;
      }
      adj[e.first] |= 1ULL << e.second;
      adj[e.second] |= 1ULL << e.first;
    }
  }
};

int pick_branch_vertex(const BitGraph& g, std::uint64_t mask) {
  int best = -1, best_deg = -1;
  for (std::uint64_t m = mask; m;) {
    const int v = __builtin_ctzll(m);
    m &= m - 1;
    const int deg = __builtin_popcountll(g.adj[v] & mask);
    if (deg > best_deg) {
      best_deg = deg;
      best = v;
    }
  }
  return best;
}

double hardcore_z(const BitGraph& g, std::uint64_t mask, double lambda) {
  if (mask == 0) return 1.0;
  // Looped vertices are unselectable and contribute a factor of 1; vertices
  // isolated within the loop-free remainder factor out as (1 + lambda).
  const std::uint64_t active = mask & ~g.looped;
  double factor = 1.0;
  std::uint64_t rest = active;
  for (std::uint64_t m = active; m;) {
    const int v = __builtin_ctzll(m);
    m &= m - 1;
    if ((g.adj[v] & active) == 0) {
      factor *= 1.0 + lambda;
      rest &= ~(1ULL << v);
    }
  }
  if (rest == 0) return factor;
  const int v = pick_branch_vertex(g, rest);
  const std::uint64_t bit = 1ULL << v;
  return factor * (hardcore_z(g, rest & ~bit, lambda) +
                   lambda * hardcore_z(g, rest & ~bit & ~g.adj[v], lambda));
}

int alpha_rec(const BitGraph& g, std::uint64_t mask, int best_so_far, int current) {
  if (mask == 0) return current;
  if (current + __builtin_popcountll(mask) <= best_so_far) return best_so_far;  // prune
  const int v = pick_branch_vertex(g, mask);
  const std::uint64_t bit = 1ULL << v;
  // include v
  int best = alpha_rec(g, mask & ~bit & ~g.adj[v], best_so_far, current + 1);
  best = std::max(best, best_so_far);
  // exclude v (only useful if v has neighbors left, otherwise inclusion wins)
  if (g.adj[v] & mask) best = std::max(best, alpha_rec(g, mask & ~bit, best, current));
  return best;
}

}  // namespace

double partition_function(const GraphInstance& g, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorKind::Domain, "activity must be positive");
  BitGraph bg(g);
  const std::uint64_t full = bg.n == 0 ? 0 : (bg.n == 64 ? ~0ULL : (1ULL << bg.n) - 1);
  return hardcore_z(bg, full, lambda);
}

double log_partition_function(const GraphInstance& g, double lambda) {
  return std::log(partition_function(g, lambda));
}

int independence_number(const GraphInstance& g) {
  BitGraph bg(g);
  std::uint64_t full = bg.n == 0 ? 0 : (1ULL << bg.n) - 1;
  full &= ~bg.looped;
  return alpha_rec(bg, full, 0, 0);
}

GraphInstance random_regular(int n, int d, std::uint64_t seed, bool require_simple) {
  if (n < 0 || d < 0) fail(ErrorKind::Domain, "sizes must be nonnegative");
  if (n > 100000) fail(ErrorKind::Capacity, "vertex count above 1e5");
  if ((static_cast<long long>(n) * d) % 2 != 0)
    fail(ErrorKind::Domain, "n*d must be even for a d-regular graph");
  if (require_simple && n * d > 10000)
    fail(ErrorKind::Capacity, "simple-rejection capped at n*d <= 1e4");

  Rng rng(seed);
  std::vector<int> stubs(static_cast<std::size_t>(n) * d);
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < d; ++i) stubs[static_cast<std::size_t>(v) * d + i] = v;

  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (std::size_t i = stubs.size(); i > 1; --i)
      std::swap(stubs[i - 1], stubs[rng.below(i)]);
    GraphInstance g;
    g.vertex_count = n;
    bool simple = true;
    std::vector<std::pair<int, int>> seen;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      int u = stubs[i], v = stubs[i + 1];
      if (u > v) std::swap(u, v);
      g.edges.emplace_back(u, v);
      if (require_simple && u == v) simple = false;
    }
    if (require_simple && simple) {
      auto sorted = g.edges;
      std::sort(sorted.begin(), sorted.end());
      simple = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    }
    if (!require_simple || simple) return g;
  }
  fail(ErrorKind::Numeric, "simple pairing not found within the retry budget");
}

SanityBand sanity_band(int d, int n, int samples, std::uint64_t seed) {
  if (n > 36) fail(ErrorKind::Capacity, "sanity band caps exact alpha at 36 vertices");
  if (samples > 1000) fail(ErrorKind::Capacity, "sanity band caps at 1000 samples");
  SanityBand band;
  for (int s = 0; s < samples; ++s) {
    auto g = random_regular(n, d, Rng::derive(seed, static_cast<std::uint64_t>(s)), true);
    const double ratio = double(independence_number(g)) / n;
    band.ratios.push_back(ratio);
    band.mean += ratio;
    band.max = std::max(band.max, ratio);
  }
  if (samples > 0) band.mean /= samples;
  return band;
}

}  // namespace rsb
