#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rsb/error.hpp"
#include "rsb/params.hpp"
#include "rsb/rng.hpp"

using namespace rsb;

namespace {

ParamShape shape_of(int d, std::vector<int> branching) {
  ParamShape s;
  s.degree = d;
  s.branching = std::move(branching);
  s.depth = static_cast<int>(s.branching.size()) + 1;
  return s;
}

// the degree-3, n=4 2-RSB example set used throughout the suites
RsbParams example_d3_params() {
  RsbParams p;
  p.lambda0 = 19.3;
  p.parisi = {0.557};
  p.p = {{0.2493, 0.2778, 0.2880, 0.1849}};
  p.q = {0.1184, 0.5947, 0.8876, 0.9827};
  return p;
}

}  // namespace

TEST_CASE("free_dim matches the parameter-count formula") {
  CHECK(shape_of(3, {}).free_dim() == 2);
  CHECK(shape_of(3, {4}).free_dim() == 9);
  CHECK(shape_of(3, {5, 4}).free_dim() == 42);
  CHECK(shape_of(3, {4, 2, 2, 2}).free_dim() == 68);
  // property: random shapes with r <= 5 and product <= 64
  Rng rng(20240517);
  for (int trial = 0; trial < 200; ++trial) {
    int r = 1 + static_cast<int>(rng.below(5));
    std::vector<int> branching;
    std::size_t prod = 1;
    for (int k = 0; k < r - 1; ++k) {
      int n = 1 + static_cast<int>(rng.below(4));
      if (prod * n > 64) n = 1;
      prod *= n;
      branching.push_back(n);
    }
    auto s = shape_of(3, branching);
    CHECK(s.free_dim() == static_cast<std::size_t>(r - 1) + 2 * prod);
    UnconstrainedVector v;
    v.coords.assign(s.free_dim(), 0.25);
    auto params = from_unconstrained(s, v);
    CHECK(to_unconstrained(s, params).coords.size() == s.free_dim());
  }
}

TEST_CASE("from_unconstrained at the origin") {
  auto s = shape_of(3, {});
  UnconstrainedVector v{{0.0, 0.0}};
  auto p = from_unconstrained(s, v);
  CHECK(p.lambda0 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p.q[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("sibling groups are exactly normalized") {
  auto s = shape_of(3, {4});
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    UnconstrainedVector v;
    for (std::size_t i = 0; i < s.free_dim(); ++i) v.coords.push_back(rng.normal() * 3);
    auto p = from_unconstrained(s, v);
    double sum = p.p[0][0] + p.p[0][1] + p.p[0][2] + p.p[0][3];
    CHECK(std::abs(sum - 1.0) < 1e-15);
  }
}

TEST_CASE("round trip on the published degree-3 example") {
  auto s = shape_of(3, {4});
  auto p = example_d3_params();
  auto v = to_unconstrained(s, p);
  auto back = from_unconstrained(s, v);
  CHECK(back.lambda0 == doctest::Approx(p.lambda0).epsilon(1e-12));
  CHECK(back.parisi[0] == doctest::Approx(p.parisi[0]).epsilon(1e-12));
  for (int i = 0; i < 4; ++i) {
    CHECK(back.p[0][i] == doctest::Approx(p.p[0][i]).epsilon(1e-12));
    CHECK(back.q[i] == doctest::Approx(p.q[i]).epsilon(1e-12));
  }
}

TEST_CASE("round trip v -> params -> v on the interior") {
  Rng rng(99);
  for (auto branching : {std::vector<int>{}, {4}, {3, 2}, {2, 2, 2}}) {
    auto s = shape_of(3, branching);
    for (int trial = 0; trial < 40; ++trial) {
      UnconstrainedVector v;
      for (std::size_t i = 0; i < s.free_dim(); ++i)
        v.coords.push_back((rng.uniform() * 2 - 1) * 8);
      auto p = from_unconstrained(s, v);
      auto v2 = to_unconstrained(s, p);
      for (std::size_t i = 0; i < v.coords.size(); ++i)
        CHECK(v2.coords[i] == doctest::Approx(v.coords[i]).epsilon(1e-11));
    }
  }
}

TEST_CASE("invariants hold under large-magnitude fuzz") {
  Rng rng(123);
  for (auto branching : {std::vector<int>{}, {4}, {3, 2}, {2, 2, 2}}) {
    auto s = shape_of(3, branching);
    for (int trial = 0; trial < 40; ++trial) {
      UnconstrainedVector v;
      for (std::size_t i = 0; i < s.free_dim(); ++i)
        v.coords.push_back((rng.uniform() * 2 - 1) * 50);
      auto p = from_unconstrained(s, v);
      CHECK_NOTHROW(p.validate(s));  // holds by construction
    }
  }
}

TEST_CASE("uniform p maps to equal logits") {
  auto s = shape_of(3, {4});
  RsbParams p = example_d3_params();
  p.p[0] = {0.25, 0.25, 0.25, 0.25};
  auto v = to_unconstrained(s, p);
  auto lay = vector_layout(s);
  for (int j = 0; j < 3; ++j) CHECK(v.coords[lay.p_offset + j] == doctest::Approx(0.0));
}

TEST_CASE("boundary parameters are rejected by to_unconstrained") {
  auto s = shape_of(3, {4});
  auto p = example_d3_params();
  p.q[2] = 1.0;
  CHECK_THROWS_AS(to_unconstrained(s, p), Error);
  try {
    to_unconstrained(s, p);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Boundary);
    CHECK(std::string(e.what()).find("q[2]") != std::string::npos);
  }
}

TEST_CASE("shape and domain errors") {
  auto s = shape_of(3, {4});
  UnconstrainedVector short_v{{0.0, 0.0}};
  CHECK_THROWS_AS(from_unconstrained(s, short_v), Error);
  UnconstrainedVector bad_v;
  bad_v.coords.assign(s.free_dim(), 0.0);
  bad_v.coords[3] = std::nan("");
  CHECK_THROWS_AS(from_unconstrained(s, bad_v), Error);
}

TEST_CASE("parameter file round trip") {
  auto s = shape_of(3, {4});
  auto p = example_d3_params();
  auto text = save_params(s, p);
  auto [s2, p2] = load_params(text);
  CHECK(s2 == s);
  CHECK(p2.lambda0 == 19.3);
  CHECK(p2.parisi[0] == 0.557);
  for (int i = 0; i < 4; ++i) CHECK(p2.q[i] == p.q[i]);
  // save . load == identity
  CHECK(save_params(s2, p2) == text);
}

TEST_CASE("parameter file with deeper tree round trips") {
  auto s = shape_of(4, {3, 2});
  UnconstrainedVector v;
  Rng rng(4242);
  for (std::size_t i = 0; i < s.free_dim(); ++i) v.coords.push_back(rng.normal());
  auto p = from_unconstrained(s, v);
  auto [s2, p2] = load_params(save_params(s, p));
  CHECK(s2 == s);
  for (std::size_t i = 0; i < p.q.size(); ++i)
    CHECK(p2.q[i] == doctest::Approx(p.q[i]).epsilon(1e-16));
  for (std::size_t k = 0; k < p.p.size(); ++k)
    for (std::size_t i = 0; i < p.p[k].size(); ++i)
      CHECK(p2.p[k][i] == doctest::Approx(p.p[k][i]).epsilon(1e-15));
}

TEST_CASE("simplex violation in a file is rejected") {
  std::string text = R"({
    "degree": 3, "shape": [2], "lambda0": 19.3, "m": [0.5],
    "p": [[[0.9, 0.6]]], "q": [0.1, 0.9]
  })";
  CHECK_THROWS_AS(load_params(text), Error);
}

TEST_CASE("schema violations are rejected") {
  CHECK_THROWS_AS(load_params("not json"), Error);
  CHECK_THROWS_AS(load_params(R"({"degree": 3})"), Error);
  // out-of-range scalar
  std::string text = R"({
    "degree": 3, "shape": [], "lambda0": 0.5, "m": [], "p": [], "q": [0.5]
  })";
  CHECK_THROWS_AS(load_params(text), Error);
}
