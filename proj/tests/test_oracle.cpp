#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "rsb/bound.hpp"
#include "rsb/error.hpp"
#include "rsb/oracle.hpp"
#include "rsb/params.hpp"
#include "rsb/rng.hpp"

using namespace rsb;

namespace {

GraphInstance cycle(int n) {
  GraphInstance g;
  g.vertex_count = n;
  for (int i = 0; i < n; ++i) g.edges.emplace_back(i, (i + 1) % n);
  return g;
}

GraphInstance complete(int n) {
  GraphInstance g;
  g.vertex_count = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  return g;
}

GraphInstance petersen() {
  GraphInstance g;
  g.vertex_count = 10;
  for (int i = 0; i < 5; ++i) {
    g.edges.emplace_back(i, (i + 1) % 5);        // outer cycle
    g.edges.emplace_back(i, i + 5);              // spokes
    g.edges.emplace_back(5 + i, 5 + (i + 2) % 5);  // inner pentagram
  }
  return g;
}

GraphInstance k33() {
  GraphInstance g;
  g.vertex_count = 6;
  for (int i = 0; i < 3; ++i)
    for (int j = 3; j < 6; ++j) g.edges.emplace_back(i, j);
  return g;
}

// Independent-set counts by size via subset enumeration, n <= 20.
std::vector<long long> is_counts(const GraphInstance& g) {
  std::vector<std::uint32_t> adj(g.vertex_count, 0);
  for (const auto& e : g.edges) {
    if (e.first == e.second) {
      adj[e.first] |= 1u << e.first;
      continue;
    }
    adj[e.first] |= 1u << e.second;
    adj[e.second] |= 1u << e.first;
  }
  std::vector<long long> counts(g.vertex_count + 1, 0);
  for (std::uint32_t s = 0; s < (1u << g.vertex_count); ++s) {
    bool ok = true;
    for (int v = 0; v < g.vertex_count && ok; ++v)
      if ((s >> v) & 1u) ok = (adj[v] & s) == 0;
    if (ok) ++counts[__builtin_popcount(s)];
  }
  return counts;
}

ParamShape shape_of(int d, std::vector<int> branching) {
  ParamShape s;
  s.degree = d;
  s.branching = std::move(branching);
  s.depth = static_cast<int>(s.branching.size()) + 1;
  return s;
}

RsbParams random_point(const ParamShape& s, Rng& rng) {
  UnconstrainedVector v;
  v.coords.resize(s.free_dim());
  for (auto& x : v.coords) x = rng.normal() * 1.2;
  return from_unconstrained(s, v);
}

}  // namespace

TEST_CASE("naive summation matches the fast evaluator on the worked example") {
  auto s = shape_of(3, {4});
  RsbParams p;
  p.lambda0 = 19.3;
  p.parisi = {0.557};
  p.p = {{0.2493, 0.2778, 0.2880, 0.1849}};
  p.q = {0.1184, 0.5947, 0.8876, 0.9827};
  const double naive = naive_rsb_bound(s, p);
  const double fast = eval_bound(s, p).bound;
  CHECK(std::abs(naive - fast) <= 1e-12 * std::abs(fast));
}

TEST_CASE("naive summation of a flat tree is the closed two-atom form") {
  auto s = shape_of(5, {});
  RsbParams p;
  p.lambda0 = 12.0;
  p.parisi = {};
  p.p = {};
  p.q = {0.7};
  CHECK(naive_rsb_bound(s, p) == doctest::Approx(eval_1rsb(5, 12.0, 0.7)).epsilon(1e-14));
}

TEST_CASE("naive summation matches on random two-level trees") {
  auto s = shape_of(4, {3, 2});
  Rng rng(555);
  for (int t = 0; t < 50; ++t) {
    auto p = random_point(s, rng);
    const double naive = naive_rsb_bound(s, p);
    const double fast = eval_bound(s, p).bound;
    CHECK(std::abs(naive - fast) <= 1e-12 * std::max(1.0, std::abs(fast)));
  }
}

TEST_CASE("naive summation refuses oversized shapes") {
  auto s = shape_of(8, {4, 3, 2});  // 24^8 tuples
  Rng rng(1);
  auto p = random_point(s, rng);
  CHECK_THROWS_AS(naive_rsb_bound(s, p), Error);
}

TEST_CASE("partition function on elementary graphs") {
  GraphInstance empty;
  empty.vertex_count = 12;
  CHECK(partition_function(empty, 1.0) == doctest::Approx(4096.0).epsilon(1e-14));

  GraphInstance edge;
  edge.vertex_count = 2;
  edge.edges = {{0, 1}};
  for (double lam : {0.5, 1.0, 3.0, 10.0})
    CHECK(partition_function(edge, lam) == doctest::Approx(1.0 + 2.0 * lam).epsilon(1e-14));

  CHECK(partition_function(cycle(5), 1.0) == doctest::Approx(11.0).epsilon(1e-14));

  GraphInstance loop;
  loop.vertex_count = 1;
  loop.edges = {{0, 0}};
  CHECK(partition_function(loop, 7.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("partition function counts independent sets by size") {
  Rng rng(2024);
  for (int t = 0; t < 12; ++t) {
    GraphInstance g;
    g.vertex_count = 8 + int(rng.below(6));
    for (int i = 0; i < g.vertex_count; ++i)
      for (int j = i + 1; j < g.vertex_count; ++j)
        if (rng.uniform() < 0.25) g.edges.emplace_back(i, j);
    auto counts = is_counts(g);
    for (double lam : {1.0, 2.0, 3.5}) {
      double direct = 0.0;
      for (std::size_t k = 0; k < counts.size(); ++k) direct += counts[k] * std::pow(lam, double(k));
      CHECK(partition_function(g, lam) == doctest::Approx(direct).epsilon(1e-12));
    }
    const int alpha = independence_number(g);
    CHECK(counts[alpha] >= 1);
    for (std::size_t k = alpha + 1; k < counts.size(); ++k) CHECK(counts[k] == 0);
  }
}

TEST_CASE("independence numbers of named graphs") {
  CHECK(independence_number(cycle(5)) == 2);
  CHECK(independence_number(complete(4)) == 1);
  CHECK(independence_number(k33()) == 3);
  CHECK(independence_number(petersen()) == 4);
}

TEST_CASE("activity bound on the independence number") {
  for (const auto& g : {cycle(5), petersen(), k33(), complete(4)}) {
    const int alpha = independence_number(g);
    for (double lam : {2.0, 5.0, 10.0})
      CHECK(double(alpha) <= log_partition_function(g, lam) / std::log(lam) + 1e-12);
  }
}

TEST_CASE("exact routines refuse more than 40 vertices") {
  GraphInstance g;
  g.vertex_count = 41;
  CHECK_THROWS_AS(independence_number(g), Error);
  CHECK_THROWS_AS(partition_function(g, 1.0), Error);
}

TEST_CASE("configuration model output is d-regular and reproducible") {
  auto g = random_regular(32, 3, 77);
  CHECK(g.vertex_count == 32);
  CHECK(g.edges.size() == 48);
  std::vector<int> deg(32, 0);
  for (const auto& e : g.edges) {
    ++deg[e.first];
    ++deg[e.second];
  }
  for (int v = 0; v < 32; ++v) CHECK(deg[v] == 3);

  auto h = random_regular(32, 3, 77);
  CHECK(g.edges == h.edges);
  auto other = random_regular(32, 3, 78);
  CHECK(g.edges != other.edges);
}

TEST_CASE("simple rejection on four vertices yields the complete graph") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto g = random_regular(4, 3, seed, true);
    auto sorted = g.edges;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == complete(4).edges);
  }
}

TEST_CASE("odd stub counts are rejected") {
  CHECK_THROWS_AS(random_regular(5, 3, 1), Error);
}

TEST_CASE("sanity band for cubic graphs sits in the expected window") {
  auto band = sanity_band(3, 32, 100, 11);
  CHECK(band.ratios.size() == 100);
  CHECK(band.mean > 0.40);
  CHECK(band.mean < 0.48);
  CHECK(band.max <= 0.5);

  auto empty = sanity_band(3, 32, 0, 11);
  CHECK(empty.ratios.empty());
  CHECK(empty.mean == 0.0);
}

TEST_CASE("graph files round trip") {
  auto g = petersen();
  const char* path = "oracle_roundtrip.txt";
  save_graph(g, path);
  auto loaded = load_graph(path);
  CHECK(loaded.vertex_count == g.vertex_count);
  CHECK(loaded.edges == g.edges);
  std::remove(path);
}
