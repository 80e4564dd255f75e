// Command-line front end: evaluation, optimization, certification, table
// reproduction and the exact small-graph oracles.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rsb/bound.hpp"
#include "rsb/catalog.hpp"
#include "rsb/error.hpp"
#include "rsb/oneplus.hpp"
#include "rsb/optimize.hpp"
#include "rsb/oracle.hpp"
#include "rsb/params.hpp"
#include "rsb/verify.hpp"

using nlohmann::json;
using namespace rsb;

namespace {

constexpr const char* kArtifactVersion = "1.0.0";

std::string fmt(double x, int digits = 15) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::vector<int> parse_shape(const std::string& text) {
  std::vector<int> shape;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    shape.push_back(std::atoi(item.c_str()));
  }
  return shape;
}

ParamShape make_shape(int degree, const std::vector<int>& branching) {
  ParamShape s;
  s.degree = degree;
  s.branching = branching;
  s.depth = static_cast<int>(branching.size()) + 1;
  s.validate();
  return s;
}

int default_jobs() {
  if (const char* env = std::getenv("RSB_JOBS")) {
    const int j = std::atoi(env);
    if (j >= 1) return j;
  }
  return 1;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return buf;
}

// Every run records what it did; reruns with equal manifests must produce
// equal numeric outputs.
struct Manifest {
  json doc;
  std::string path;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Manifest(const std::string& subcommand, const std::string& out_path) : path(out_path) {
    doc["artifact_version"] = kArtifactVersion;
    doc["subcommand"] = subcommand;
    doc["flags"] = json::object();
    doc["input_hashes"] = json::object();
    doc["outputs"] = json::object();
  }
  void flag(const std::string& name, const json& value) { doc["flags"][name] = value; }
  void input(const std::string& file) { doc["input_hashes"][file] = file_hash(file); }
  void output(const std::string& name, const json& value) { doc["outputs"][name] = value; }
  void write() {
    doc["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (path.empty()) return;
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
  }
};

int run_eval(const std::string& file, bool certify, int precision, bool gradient,
             const std::string& path_choice, Manifest& man) {
  man.input(file);
  auto [shape, params] = load_params_file(file);
  EvalOptions opts;
  if (path_choice == "generic") opts.path = EvalPath::Generic;
  if (path_choice == "multinomial") opts.path = EvalPath::Multinomial;
  auto report = eval_bound(shape, params, opts);
  std::printf("bound          %s\n", fmt(report.bound).c_str());
  std::printf("log_r_star     %s\n", fmt(report.log_r_star).c_str());
  std::printf("log_r_edge     %s\n", fmt(report.log_r_edge).c_str());
  std::printf("normalizer     %s\n", fmt(report.normalizer).c_str());
  man.output("bound", report.bound);
  if (gradient) {
    auto g = eval_gradient(shape, params, opts);
    double norm = 0.0;
    for (double x : g) norm += x * x;
    norm = std::sqrt(norm);
    std::printf("gradient_norm  %s\n", fmt(norm).c_str());
    man.output("gradient_norm", norm);
  }
  if (certify) {
    VerifyOptions vopts;
    vopts.precision_digits = precision;
    auto cert = certify_bound(shape, params, vopts);
    std::printf("certified      [%s, %s]\n", fmt(cert.lower, 17).c_str(),
                fmt(cert.upper, 17).c_str());
    std::printf("width          %s\n", fmt(cert.width(), 3).c_str());
    man.output("certified_lower", cert.lower);
    man.output("certified_upper", cert.upper);
  }
  return 0;
}

int run_optimize(int degree, const std::string& shape_text, int restarts, int hops,
                 std::uint64_t seed, int jobs, const std::string& out,
                 const std::string& penalty_mode, bool trace, Manifest& man) {
  auto shape = make_shape(degree, parse_shape(shape_text));
  OptimizeConfig cfg;
  cfg.restarts = restarts;
  cfg.hop_count = hops;
  cfg.seed = seed;
  cfg.jobs = jobs;
  if (penalty_mode == "distance") cfg.penalty_mode = PenaltyMode::DistanceFromOne;
  auto result = multi_start(shape, cfg);
  if (hops > 0) {
    auto hopped = basin_hop(shape, result.best_x, cfg);
    if (hopped.best.bound < result.best.bound) result = std::move(hopped);
  }
  if (trace) {
    for (const auto& rec : result.records)
      std::printf("run %016llx  value %s  grad %s  iters %d%s%s\n",
                  static_cast<unsigned long long>(rec.start_hash), fmt(rec.value).c_str(),
                  fmt(rec.grad_norm, 3).c_str(), rec.iterations,
                  rec.degraded ? "  degraded" : "", rec.accepted ? "" : "  rejected");
  }
  std::printf("bound          %s\n", fmt(result.best.bound).c_str());
  std::printf("runs           %zu\n", result.records.size());
  man.output("bound", result.best.bound);
  man.output("runs", result.records.size());
  if (!result.coincident_atoms.empty()) {
    std::printf("coincident     %zu atom pairs (shape may be reducible)\n",
                result.coincident_atoms.size());
    man.output("coincident_atom_pairs", result.coincident_atoms.size());
  }
  if (!out.empty()) {
    auto params = from_unconstrained(shape, result.best_x);
    save_params_file(out, shape, params);
    std::printf("params         %s\n", out.c_str());
    man.output("params_file", out);
  }
  return 0;
}

int run_grid(int degree, int div, std::uint64_t seed, Manifest& man) {
  auto opt = optimize_grid(degree, div, seed);
  std::printf("bound          %s\n", fmt(opt.bound).c_str());
  std::printf("lambda0        %s\n", fmt(opt.lambda0).c_str());
  std::printf("grad_norm      %s\n", fmt(opt.grad_norm, 3).c_str());
  std::printf("weights       ");
  for (double w : opt.tau.weights) std::printf(" %s", fmt(w, 12).c_str());
  std::printf("\n");
  man.output("bound", opt.bound);
  man.output("lambda0", opt.lambda0);
  return 0;
}

std::vector<CatalogEntry> filtered_catalog(int degree) {
  std::vector<CatalogEntry> entries;
  for (const auto& e : best_bounds_catalog())
    if (degree == 0 || e.degree == degree) entries.push_back(e);
  return entries;
}

int run_verify(const std::string& params_dir, int degree, bool as_json, int jobs,
               int precision, Manifest& man) {
  auto entries = filtered_catalog(degree);
  for (const auto& e : entries)
    if (!e.params_file.empty()) man.input(params_dir + "/" + e.params_file);
  VerifyOptions opts;
  opts.jobs = jobs;
  opts.precision_digits = precision;
  auto report = verify_catalog(entries, params_dir, opts);
  auto violations = cross_check_hierarchy(entries);
  if (as_json) {
    std::printf("%s\n", report_json(report).c_str());
  } else {
    std::printf("%s", render_report(report).c_str());
    for (const auto& v : violations) std::printf("hierarchy violation: %s\n", v.c_str());
  }
  man.output("passed", report.passed);
  man.output("failed", report.failed);
  man.output("skipped", report.skipped);
  man.output("hierarchy_violations", violations.size());
  return (report.all_ok() && violations.empty()) ? 0 : 1;
}

int run_table(const std::string& params_dir, Manifest& man) {
  VerifyOptions opts;
  auto best = verify_catalog(best_bounds_catalog(), params_dir, opts);
  std::printf("best bounds by degree and method\n");
  std::printf("%s\n", render_report(best).c_str());

  std::printf("degree-3 study (published values)\n");
  std::printf("method  shape/div    published\n");
  for (const auto& e : degree3_catalog()) {
    std::string key;
    if (e.div > 0)
      key = "div=" + std::to_string(e.div);
    else {
      key = "[";
      for (std::size_t i = 0; i < e.shape.size(); ++i)
        key += (i ? "," : "") + std::to_string(e.shape[i]);
      key += "]";
    }
    std::printf("%-7s %-12s %s\n", e.method.c_str(), key.c_str(), e.published.c_str());
  }
  man.output("entries", best.results.size() + degree3_catalog().size());
  return 0;
}

struct OracleArgs {
  CLI::App* zg = nullptr;
  CLI::App* alpha = nullptr;
  CLI::App* band = nullptr;
  CLI::App* gen = nullptr;
  std::string zg_graph, alpha_graph, gen_out;
  double zg_lambda = 1.0;
  int band_d = 3, band_n = 30, band_samples = 50;
  int gen_d = 3, gen_n = 20;
  std::uint64_t band_seed = 1, gen_seed = 1;
  bool gen_simple = false;
};

void add_oracle(CLI::App& app, OracleArgs& a) {
  auto* oracle = app.add_subcommand("oracle", "exact small-graph reference computations");
  oracle->require_subcommand(1);

  a.zg = oracle->add_subcommand("zg", "hard-core partition function");
  a.zg->add_option("--graph", a.zg_graph, "graph file")->required();
  a.zg->add_option("--lambda", a.zg_lambda, "activity (default 1)");

  a.alpha = oracle->add_subcommand("alpha", "maximum independent set size");
  a.alpha->add_option("--graph", a.alpha_graph, "graph file")->required();

  a.band = oracle->add_subcommand("band", "independence ratios of random regular graphs");
  a.band->add_option("-d,--degree", a.band_d, "degree");
  a.band->add_option("-n,--vertices", a.band_n, "vertices per sample");
  a.band->add_option("--samples", a.band_samples, "sample count");
  a.band->add_option("--seed", a.band_seed, "rng seed");

  a.gen = oracle->add_subcommand("gen", "sample a configuration-model graph");
  a.gen->add_option("-d,--degree", a.gen_d, "degree");
  a.gen->add_option("-n,--vertices", a.gen_n, "vertices");
  a.gen->add_option("--seed", a.gen_seed, "rng seed");
  a.gen->add_option("--out", a.gen_out, "output graph file")->required();
  a.gen->add_flag("--simple", a.gen_simple, "resample until simple");
}

int run_oracle(const OracleArgs& a, Manifest& man) {
  if (a.zg->parsed()) {
    man.input(a.zg_graph);
    auto g = load_graph(a.zg_graph);
    const double z = partition_function(g, a.zg_lambda);
    std::printf("Z(%s) = %s\n", fmt(a.zg_lambda, 6).c_str(), fmt(z).c_str());
    man.output("z", z);
  } else if (a.alpha->parsed()) {
    man.input(a.alpha_graph);
    auto g = load_graph(a.alpha_graph);
    const int alpha = independence_number(g);
    std::printf("alpha = %d\n", alpha);
    std::printf("ratio = %s\n", fmt(double(alpha) / g.vertex_count).c_str());
    man.output("alpha", alpha);
  } else if (a.band->parsed()) {
    man.flag("seed", a.band_seed);
    auto stats = sanity_band(a.band_d, a.band_n, a.band_samples, a.band_seed);
    std::printf("samples  %zu\n", stats.ratios.size());
    std::printf("mean     %s\n", fmt(stats.mean).c_str());
    std::printf("max      %s\n", fmt(stats.max).c_str());
    man.output("mean", stats.mean);
    man.output("max", stats.max);
  } else if (a.gen->parsed()) {
    man.flag("seed", a.gen_seed);
    auto g = random_regular(a.gen_n, a.gen_d, a.gen_seed, a.gen_simple);
    save_graph(g, a.gen_out);
    std::printf("wrote %s (%d vertices, %zu edges)\n", a.gen_out.c_str(), g.vertex_count,
                g.edges.size());
    man.output("graph_file", a.gen_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete RSB bounds on the independence ratio of random regular graphs"};
  app.require_subcommand(1);
  std::string manifest_path = "rsb_manifest.json";
  app.add_option("--manifest", manifest_path, "run manifest output path (empty disables)");

  // eval
  std::string eval_file, eval_path = "auto";
  bool eval_certify = false, eval_gradient = false;
  int eval_precision = 36;
  auto* eval = app.add_subcommand("eval", "evaluate the bound at a parameter file");
  eval->add_option("file", eval_file, "parameter file")->required();
  eval->add_flag("--certify", eval_certify, "interval-arithmetic certification");
  eval->add_option("--precision", eval_precision, "certified digits (default 36)");
  eval->add_flag("--gradient", eval_gradient, "print the gradient norm");
  eval->add_option("--path", eval_path, "auto|generic|multinomial")
      ->check(CLI::IsMember({"auto", "generic", "multinomial"}));

  // optimize
  int opt_degree = 3, opt_restarts = 100, opt_hops = 0, opt_jobs = default_jobs();
  std::uint64_t opt_seed = 0;
  std::string opt_shape, opt_out, opt_penalty = "away";
  bool opt_trace = false;
  auto* opt = app.add_subcommand("optimize", "multi-start / basin-hopping bound search");
  opt->add_option("-d,--degree", opt_degree, "graph degree")->required();
  opt->add_option("--shape", opt_shape, "branching list, e.g. 3,2 (empty for one level)");
  opt->add_option("--restarts", opt_restarts, "multi-start count");
  opt->add_option("--hops", opt_hops, "basin-hopping steps after multi-start");
  opt->add_option("--seed", opt_seed, "rng seed");
  opt->add_option("--jobs", opt_jobs, "worker threads (env RSB_JOBS)");
  opt->add_option("--out", opt_out, "write the best parameters here");
  opt->add_option("--penalty-mode", opt_penalty, "away|distance")
      ->check(CLI::IsMember({"away", "distance"}));
  opt->add_flag("--trace", opt_trace, "print one line per local run");

  // grid
  int grid_degree = 3, grid_div = 2;
  std::uint64_t grid_seed = 0;
  auto* grid = app.add_subcommand("grid", "refined one-level bound on an atom grid");
  grid->add_option("-d,--degree", grid_degree, "graph degree")->required();
  grid->add_option("--div", grid_div, "grid resolution");
  grid->add_option("--seed", grid_seed, "rng seed");

  // verify
  std::string verify_dir = "data/params";
  int verify_degree = 0, verify_jobs = default_jobs(), verify_precision = 36;
  bool verify_json = false;
  auto* verify = app.add_subcommand("verify", "certify shipped parameters against the catalog");
  verify->add_option("--params-dir", verify_dir, "parameter file directory");
  verify->add_option("--degree", verify_degree, "restrict to one degree");
  verify->add_flag("--json", verify_json, "machine-readable report");
  verify->add_option("--jobs", verify_jobs, "worker threads (env RSB_JOBS)");
  verify->add_option("--precision", verify_precision, "certified digits");

  // table
  std::string table_dir = "data/params";
  auto* table = app.add_subcommand("table", "published tables next to certified values");
  table->add_option("--params-dir", table_dir, "parameter file directory");

  OracleArgs oracle_args;
  add_oracle(app, oracle_args);

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  Manifest man(sub, manifest_path);
  for (const auto* s : app.get_subcommands())
    for (const auto* o : s->get_options())
      if (!o->get_name().empty() && o->count() > 0) man.flag(o->get_name(), o->results());

  int rc = 0;
  try {
    if (eval->parsed()) {
      rc = run_eval(eval_file, eval_certify, eval_precision, eval_gradient, eval_path, man);
    } else if (opt->parsed()) {
      man.flag("seed", opt_seed);
      rc = run_optimize(opt_degree, opt_shape, opt_restarts, opt_hops, opt_seed, opt_jobs,
                        opt_out, opt_penalty, opt_trace, man);
    } else if (grid->parsed()) {
      man.flag("seed", grid_seed);
      rc = run_grid(grid_degree, grid_div, grid_seed, man);
    } else if (verify->parsed()) {
      rc = run_verify(verify_dir, verify_degree, verify_json, verify_jobs, verify_precision,
                      man);
    } else if (table->parsed()) {
      rc = run_table(table_dir, man);
    } else {
      rc = run_oracle(oracle_args, man);
    }
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    rc = err.kind() == ErrorKind::Capacity ? 3 : 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    rc = 2;
  }
  man.output("exit_code", rc);
  man.write();
  return rc;
}
