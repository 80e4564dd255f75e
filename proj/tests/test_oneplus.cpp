#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rsb/bound.hpp"
#include "rsb/error.hpp"
#include "rsb/oneplus.hpp"
#include "rsb/rng.hpp"

using namespace rsb;

namespace {

GridMeasure random_measure(int div, Rng& rng) {
  GridMeasure tau;
  tau.div = div;
  tau.weights.resize(div + 1);
  double sum = 0.0;
  for (auto& w : tau.weights) {
    w = 0.05 + rng.uniform();
    sum += w;
  }
  for (auto& w : tau.weights) w /= sum;
  return tau;
}

// Direct enumeration over all (div+1)^d star tuples and (div+1)^2 edge pairs.
double brute_force_bound(int d, double lambda0, const GridMeasure& tau) {
  const int n = tau.div + 1;
  double star = 0.0;
  std::vector<int> idx(d, 0);
  while (true) {
    double w = 1.0;
    int sum = 0;
    for (int k = 0; k < d; ++k) {
      w *= tau.weights[idx[k]];
      sum += idx[k];
    }
    const double expo = std::max(0.0, 1.0 - double(sum) / tau.div);
    star += w * std::pow(lambda0, expo);
    int k = d - 1;
    while (k >= 0 && ++idx[k] == n) idx[k--] = 0;
    if (k < 0) break;
  }
  double edge = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      edge += tau.weights[i] * tau.weights[j] *
              std::pow(lambda0, -double(std::min(i, j)) / tau.div);
  return (std::log(star) - 0.5 * d * std::log(edge)) / std::log(lambda0);
}

// Partials of log S - (d/2) log E in (q0, q_half) at fixed lambda0.
void three_atom_partials(int d, double lambda0, double q0, double q_half, double* dq0,
                         double* dqh) {
  const double q1 = 1.0 - q0 - q_half;
  const double rt = std::sqrt(lambda0);
  const double s = 1.0 + (rt - 1.0) * d * std::pow(q0, d - 1) * q_half +
                   (lambda0 - 1.0) * std::pow(q0, d);
  const double e = 1.0 + (1.0 / rt - 1.0) * (1.0 - q0) * (1.0 - q0) +
                   (1.0 / lambda0 - 1.0 / rt) * q1 * q1;
  const double s_q0 = (rt - 1.0) * d * (d - 1) * std::pow(q0, d - 2) * q_half +
                      (lambda0 - 1.0) * d * std::pow(q0, d - 1);
  const double s_qh = (rt - 1.0) * d * std::pow(q0, d - 1);
  const double e_q0 = -2.0 * (1.0 / rt - 1.0) * (1.0 - q0) - 2.0 * (1.0 / lambda0 - 1.0 / rt) * q1;
  const double e_qh = -2.0 * (1.0 / lambda0 - 1.0 / rt) * q1;
  *dq0 = s_q0 / s - 0.5 * d * e_q0 / e;
  *dqh = s_qh / s - 0.5 * d * e_qh / e;
}

}  // namespace

TEST_CASE("three atoms with q_half=0 collapse to the two-atom bound") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const int d = 3 + int(rng.below(10));
    const double lambda0 = 2.0 + 40.0 * rng.uniform();
    const double q0 = 0.05 + 0.9 * rng.uniform();
    CHECK(eval_three_atom(d, lambda0, q0, 0.0) ==
          doctest::Approx(eval_1rsb(d, lambda0, 1.0 - q0)).epsilon(1e-14));
  }
}

TEST_CASE("all mass at zero gives bound 1") {
  CHECK(eval_three_atom(3, 19.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eval_three_atom(7, 4.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("three-atom domain errors") {
  CHECK_THROWS_AS(eval_three_atom(3, 1.0, 0.5, 0.1), Error);
  CHECK_THROWS_AS(eval_three_atom(3, 19.0, 0.7, 0.4), Error);
  CHECK_THROWS_AS(eval_three_atom(3, 19.0, -0.1, 0.1), Error);
}

TEST_CASE("stationarity reduction solves both partials") {
  for (double q0 : {0.36, 0.40, 0.44}) {
    auto pt = reduce_to_q0(3, q0);
    double dq0 = 0.0, dqh = 0.0;
    three_atom_partials(3, pt.lambda0, q0, pt.q_half, &dq0, &dqh);
    CHECK(std::abs(dqh) < 1e-10);
    CHECK(std::abs(dq0) < 1e-10);
  }
  for (double q0 : {0.67, 0.70, 0.73}) {
    auto pt = reduce_to_q0(10, q0);
    double dq0 = 0.0, dqh = 0.0;
    three_atom_partials(10, pt.lambda0, q0, pt.q_half, &dq0, &dqh);
    CHECK(std::abs(dqh) < 1e-10);
    CHECK(std::abs(dq0) < 1e-10);
  }
}

TEST_CASE("degree-3 three-atom minimum") {
  auto pt = minimize_three_atom(3, 0.05, 0.95);
  CHECK(pt.bound == doctest::Approx(0.450851131).epsilon(1e-8));
}

TEST_CASE("degree-17 three-atom minimum") {
  // Frozen from two independent routes: the stationarity reduction and a
  // free three-parameter quasi-Newton minimization agree on this value.
  auto pt = minimize_three_atom(17, 0.5, 0.999);
  CHECK(pt.bound == doctest::Approx(0.213501917225702).epsilon(1e-9));
}

TEST_CASE("degree-17 fine grid approaches the published refinement") {
  auto o = optimize_grid(17, 8, 2);
  CHECK(o.bound <= 0.213501905193 + 2e-9);
  auto pt = minimize_three_atom(17, 0.5, 0.999);
  CHECK(o.bound <= pt.bound + 1e-10);  // refinement beats three atoms
}

TEST_CASE("single-interval grid equals the two-atom bound") {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const int d = 3 + int(rng.below(10));
    const double lambda0 = 2.0 + 40.0 * rng.uniform();
    const double q = 0.05 + 0.9 * rng.uniform();
    GridMeasure tau;
    tau.div = 1;
    tau.weights = {1.0 - q, q};
    CHECK(eval_grid_bound(d, lambda0, tau) ==
          doctest::Approx(eval_1rsb(d, lambda0, q)).epsilon(1e-14));
  }
}

TEST_CASE("half-resolution grid matches the three-atom form at stationarity") {
  for (double q0 : {0.36, 0.40, 0.44}) {
    auto pt = reduce_to_q0(3, q0);
    GridMeasure tau;
    tau.div = 2;
    tau.weights = {q0, pt.q_half, 1.0 - q0 - pt.q_half};
    const double grid = eval_grid_bound(3, pt.lambda0, tau);
    const double atoms = eval_three_atom(3, pt.lambda0, q0, pt.q_half);
    CHECK(std::abs(grid - atoms) < 1e-12);
  }
}

TEST_CASE("partial-sum DP agrees with direct enumeration") {
  Rng rng(123);
  for (int d = 2; d <= 5; ++d) {
    for (int div = 1; div <= 4; ++div) {
      for (int t = 0; t < 8; ++t) {
        auto tau = random_measure(div, rng);
        const double lambda0 = 1.5 + 30.0 * rng.uniform();
        const double fast = eval_grid_bound(d, lambda0, tau);
        const double slow = brute_force_bound(d, lambda0, tau);
        CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
      }
    }
  }
}

TEST_CASE("grid gradient matches finite differences") {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const int d = 3 + int(rng.below(6));
    const int div = 1 + int(rng.below(5));
    auto tau = random_measure(div, rng);
    const double lambda0 = 3.0 + 25.0 * rng.uniform();
    auto g = eval_grid_gradient(d, lambda0, tau);

    const double h = 1e-6;
    const double fd_l = (eval_grid_bound(d, lambda0 + h, tau) -
                         eval_grid_bound(d, lambda0 - h, tau)) /
                        (2 * h);
    CHECK(std::abs(fd_l - g.d_lambda0) < 1e-6 * std::max(1.0, std::abs(g.d_lambda0)));

    // Weight partials are unprojected; compare along simplex-preserving
    // directions w_i += h, w_j -= h.
    for (int i = 0; i <= div; ++i) {
      const int j = (i + 1) % (div + 1);
      auto up = tau, dn = tau;
      up.weights[i] += h;
      up.weights[j] -= h;
      dn.weights[i] -= h;
      dn.weights[j] += h;
      const double fd = (eval_grid_bound(d, lambda0, up) - eval_grid_bound(d, lambda0, dn)) /
                        (2 * h);
      const double an = g.d_weights[i] - g.d_weights[j];
      CHECK(std::abs(fd - an) < 1e-5 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("optimized grid bounds for degree 3") {
  auto o1 = optimize_grid(3, 1, 2);
  CHECK(o1.bound == doctest::Approx(0.45085965358).epsilon(1e-9));
  auto o2 = optimize_grid(3, 2, 2);
  CHECK(o2.bound == doctest::Approx(0.45085113089).epsilon(1e-9));
  auto o4 = optimize_grid(3, 4, 2);
  CHECK(o4.bound == doctest::Approx(0.45084699561).epsilon(1e-8));
  auto o8 = optimize_grid(3, 8, 2);
  CHECK(o8.bound <= 0.45084570075 + 1e-7);
  auto o16 = optimize_grid(3, 16, 2);
  CHECK(o16.bound <= 0.45084535605 + 1e-7);

  CHECK(o2.bound <= o1.bound + 1e-10);
  CHECK(o4.bound <= o2.bound + 1e-10);
  CHECK(o8.bound <= o4.bound + 1e-10);
  CHECK(o16.bound <= o8.bound + 1e-10);
}

TEST_CASE("optimize_grid is deterministic per seed") {
  auto a = optimize_grid(4, 4, 99);
  auto b = optimize_grid(4, 4, 99);
  CHECK(a.bound == b.bound);
  CHECK(a.lambda0 == b.lambda0);
  CHECK(a.tau.weights == b.tau.weights);
}

TEST_CASE("grid measure validation") {
  GridMeasure bad;
  bad.div = 2;
  bad.weights = {0.5, 0.5};  // wrong length
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.weights = {0.5, 0.6, 0.1};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.weights = {0.5, -0.1, 0.6};
  CHECK_THROWS_AS(bad.validate(), Error);
}
