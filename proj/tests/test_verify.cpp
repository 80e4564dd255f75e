#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rsb/bound.hpp"
#include "rsb/catalog.hpp"
#include "rsb/error.hpp"
#include "rsb/optimize.hpp"
#include "rsb/params.hpp"
#include "rsb/rng.hpp"
#include "rsb/verify.hpp"

using namespace rsb;

namespace {

ParamShape shape_of(int d, std::vector<int> branching) {
  ParamShape s;
  s.degree = d;
  s.branching = std::move(branching);
  s.depth = static_cast<int>(s.branching.size()) + 1;
  return s;
}

RsbParams worked_example() {
  RsbParams p;
  p.lambda0 = 19.3;
  p.parisi = {0.557};
  p.p = {{0.2493, 0.2778, 0.2880, 0.1849}};
  p.q = {0.1184, 0.5947, 0.8876, 0.9827};
  return p;
}

RsbParams random_point(const ParamShape& s, Rng& rng) {
  UnconstrainedVector v;
  v.coords.resize(s.free_dim());
  for (auto& x : v.coords) x = rng.normal() * 1.2;
  return from_unconstrained(s, v);
}

CatalogEntry entry_of(int degree, const std::string& method, std::vector<int> shape,
                      const std::string& published, const std::string& file) {
  CatalogEntry e;
  e.degree = degree;
  e.method = method;
  e.shape = std::move(shape);
  e.published = published;
  e.params_file = file;
  return e;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / "rsb_verify_test") {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("worked example certifies below 0.45079 with a tight interval") {
  auto s = shape_of(3, {4});
  auto p = worked_example();
  auto cert = certify_bound(s, p);
  CHECK(cert.upper < 0.45079);
  CHECK(cert.lower > 0.45078);
  CHECK(cert.width() < 1e-12);
  const double eval = eval_bound(s, p).bound;
  CHECK(eval >= cert.lower - 1e-12);
  CHECK(eval <= cert.upper + 1e-12);
}

TEST_CASE("all-zero atoms certify to exactly one") {
  auto s = shape_of(5, {});
  RsbParams p;
  p.lambda0 = 12.0;
  p.q = {0.0};
  auto cert = certify_bound(s, p);
  CHECK(cert.lower <= 1.0);
  CHECK(cert.upper >= 1.0);
  CHECK(cert.width() < 1e-15);

  auto s2 = shape_of(3, {3});
  RsbParams p2;
  p2.lambda0 = 7.0;
  p2.parisi = {0.5};
  p2.p = {{0.2, 0.3, 0.5}};
  p2.q = {0.0, 0.0, 0.0};
  auto cert2 = certify_bound(s2, p2);
  CHECK(cert2.lower <= 1.0);
  CHECK(cert2.upper >= 1.0);
  CHECK(cert2.width() < 1e-14);
}

TEST_CASE("certified intervals enclose the double evaluation") {
  Rng rng(321);
  for (const auto& br : {std::vector<int>{}, {2}, {5}, {3, 2}, {2, 2, 2}}) {
    auto s = shape_of(3, br);
    for (int t = 0; t < 6; ++t) {
      auto p = random_point(s, rng);
      auto cert = certify_bound(s, p);
      const double eval = eval_bound(s, p).bound;
      CHECK(cert.width() < 1e-12);
      CHECK(eval >= cert.lower - 1e-10 * std::max(1.0, std::abs(eval)));
      CHECK(eval <= cert.upper + 1e-10 * std::max(1.0, std::abs(eval)));
    }
  }
}

TEST_CASE("one-level certification brackets the closed form") {
  auto s = shape_of(5, {});
  RsbParams p;
  p.lambda0 = 12.0;
  p.q = {0.7};
  auto cert = certify_bound(s, p);
  const double v = eval_1rsb(5, 12.0, 0.7);
  CHECK(v >= cert.lower - 1e-15);
  CHECK(v <= cert.upper + 1e-15);
  CHECK(cert.width() < 1e-15);
}

TEST_CASE("higher working precision narrows the interval") {
  auto s = shape_of(4, {3, 2});
  Rng rng(9);
  auto p = random_point(s, rng);
  VerifyOptions coarse;
  coarse.precision_digits = 30;
  VerifyOptions fine;
  fine.precision_digits = 60;
  auto a = certify_bound(s, p, coarse);
  auto b = certify_bound(s, p, fine);
  // double output floors both widths at one ulp of the bound
  CHECK(b.width() <= a.width());
  CHECK(a.width() < 1e-12);
  CHECK(b.lower >= a.lower - 1e-15);
  CHECK(b.upper <= a.upper + 1e-15);
}

TEST_CASE("certification rejects invalid inputs") {
  auto s = shape_of(3, {4});
  auto p = worked_example();

  auto bad_lambda = p;
  bad_lambda.lambda0 = 0.9;
  CHECK_THROWS_AS(certify_bound(s, bad_lambda), Error);

  auto bad_m = p;
  bad_m.parisi = {1.0};
  CHECK_THROWS_AS(certify_bound(s, bad_m), Error);

  auto bad_q = p;
  bad_q.q[2] = 1.5;
  CHECK_THROWS_AS(certify_bound(s, bad_q), Error);

  VerifyOptions weak;
  weak.precision_digits = 10;
  CHECK_THROWS_AS(certify_bound(s, p, weak), Error);

  // boundary atoms are allowed here even though the optimizer domain is open
  auto boundary = p;
  boundary.q[0] = 0.0;
  boundary.q[3] = 1.0;
  CHECK_NOTHROW(certify_bound(s, boundary));
}

TEST_CASE("catalog transcription checksum is frozen") {
  CHECK(catalog_checksum() == 159446215816758141ULL);
  CHECK(best_bounds_catalog().size() == 50);
  CHECK(degree3_catalog().size() == 26);
}

TEST_CASE("published value helpers parse the decimal strings") {
  const auto& cat = best_bounds_catalog();
  CHECK(published_value(cat.front()) == doctest::Approx(0.45906).epsilon(1e-12));
  CHECK(published_ulp(cat.front()) == doctest::Approx(1e-5).epsilon(1e-9));
  for (const auto& e : cat) {
    CHECK(published_value(e) > 0.19);
    CHECK(published_value(e) < 0.46);
    CHECK(published_ulp(e) <= 1e-5);
  }
}

TEST_CASE("published bounds weakly decrease along the method hierarchy") {
  CHECK(cross_check_hierarchy(best_bounds_catalog()).empty());
  CHECK(cross_check_hierarchy(degree3_catalog()).empty());

  auto broken = best_bounds_catalog();
  // push the degree-3 two-level bound above the one-level bound
  for (auto& e : broken)
    if (e.degree == 3 && e.method == "2") e.published = "0.450859700";
  auto violations = cross_check_hierarchy(broken);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("degree 3") != std::string::npos);

  std::vector<CatalogEntry> single = {best_bounds_catalog()[2]};
  CHECK(cross_check_hierarchy(single).empty());
}

TEST_CASE("degree-3 study columns are strictly decreasing") {
  const auto& cat = degree3_catalog();
  auto column = [&](const std::string& method) {
    std::vector<double> vals;
    for (const auto& e : cat)
      if (e.method == method) vals.push_back(published_value(e));
    return vals;
  };
  for (const auto& method : {std::string("2"), std::string("1+")}) {
    auto vals = column(method);
    CHECK(vals.size() >= 8);
    for (std::size_t i = 1; i < vals.size(); ++i) CHECK(vals[i] < vals[i - 1]);
  }
}

TEST_CASE("verify_catalog passes a re-derived one-level optimum and flags corruption") {
  TempDir tmp;
  auto s = shape_of(3, {});
  OptimizeConfig cfg;
  cfg.restarts = 30;
  cfg.seed = 5;
  auto trace = multi_start(s, cfg);
  RsbParams best = from_unconstrained(s, trace.best_x);
  save_params_file((tmp.path / "d03_r1.json").string(), s, best);

  auto corrupted = best;
  corrupted.q[0] += 0.01;
  save_params_file((tmp.path / "d03_r1_bad.json").string(), s, corrupted);

  std::vector<CatalogEntry> entries = {
      entry_of(3, "1", {}, "0.450859654", "d03_r1.json"),
      entry_of(3, "1", {}, "0.450859654", "d03_r1_bad.json"),
      entry_of(3, "1", {}, "0.450859654", "d03_r1_missing.json"),
      entry_of(3, "RS", {}, "0.45906", ""),
  };
  auto report = verify_catalog(entries, tmp.path.string());
  CHECK(report.passed == 1);
  CHECK(report.failed == 1);
  CHECK(report.skipped == 2);
  CHECK_FALSE(report.all_ok());

  int pass_seen = 0;
  for (const auto& r : report.results) {
    if (r.status == VerifyStatus::Pass) {
      ++pass_seen;
      CHECK(r.certified_upper <= 0.450859654 + 1e-9);
      CHECK(r.certified_width < 1e-12);
    }
    if (r.status == VerifyStatus::Fail) CHECK(!r.message.empty());
  }
  CHECK(pass_seen == 1);

  const std::string text = render_report(report);
  CHECK(text.find("PASS") != std::string::npos);
  CHECK(text.find("FAIL") != std::string::npos);
  CHECK(text.find("SKIPPED") != std::string::npos);
  const std::string json = report_json(report);
  CHECK(json.find("\"passed\":1") != std::string::npos);
  CHECK(json.find("\"failed\":1") != std::string::npos);
}

TEST_CASE("verify_catalog rejects a parameter file with the wrong shape") {
  TempDir tmp;
  auto s = shape_of(3, {2});
  Rng rng(77);
  auto p = random_point(s, rng);
  save_params_file((tmp.path / "d04_r2_2.json").string(), s, p);
  std::vector<CatalogEntry> entries = {
      entry_of(4, "2", {2}, "0.411100755", "d04_r2_2.json"),
  };
  auto report = verify_catalog(entries, tmp.path.string());
  CHECK(report.failed == 1);
  CHECK(report.results[0].message.find("shape") != std::string::npos);
}

TEST_CASE("verify_catalog is deterministic across worker counts") {
  TempDir tmp;
  auto s = shape_of(3, {});
  RsbParams p;
  p.lambda0 = 17.5;
  p.q = {0.42};
  save_params_file((tmp.path / "d03_r1.json").string(), s, p);
  std::vector<CatalogEntry> entries;
  for (int i = 0; i < 6; ++i)
    entries.push_back(entry_of(3, "1", {}, "0.450859654", "d03_r1.json"));
  VerifyOptions serial;
  VerifyOptions parallel;
  parallel.jobs = 4;
  auto a = verify_catalog(entries, tmp.path.string(), serial);
  auto b = verify_catalog(entries, tmp.path.string(), parallel);
  CHECK(report_json(a) == report_json(b));
}
