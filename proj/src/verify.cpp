#include "rsb/verify.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "rsb/error.hpp"

namespace rsb {

namespace {

// Closed interval with outward-rounded endpoints.
class Iv {
 public:
  explicit Iv(mpfr_prec_t prec) {
    mpfr_init2(lo_, prec);
    mpfr_init2(hi_, prec);
    mpfr_set_zero(lo_, 1);
    mpfr_set_zero(hi_, 1);
  }
  Iv(const Iv& o) {
    mpfr_init2(lo_, mpfr_get_prec(o.lo_));
    mpfr_init2(hi_, mpfr_get_prec(o.hi_));
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }
  Iv(Iv&& o) noexcept {
    mpfr_init2(lo_, mpfr_get_prec(o.lo_));
    mpfr_init2(hi_, mpfr_get_prec(o.hi_));
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
  }
  Iv& operator=(const Iv& o) {
    if (this != &o) {
      mpfr_set_prec(lo_, mpfr_get_prec(o.lo_));
      mpfr_set_prec(hi_, mpfr_get_prec(o.hi_));
      mpfr_set(lo_, o.lo_, MPFR_RNDD);
      mpfr_set(hi_, o.hi_, MPFR_RNDU);
    }
    return *this;
  }
  Iv& operator=(Iv&& o) noexcept {
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
    return *this;
  }
  ~Iv() {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
  }

  mpfr_prec_t prec() const { return mpfr_get_prec(lo_); }

  static Iv exact(double x, mpfr_prec_t prec) {
    Iv r(prec);
    mpfr_set_d(r.lo_, x, MPFR_RNDD);
    mpfr_set_d(r.hi_, x, MPFR_RNDU);
    return r;
  }
  static Iv exact_ui(unsigned long x, mpfr_prec_t prec) {
    Iv r(prec);
    mpfr_set_ui(r.lo_, x, MPFR_RNDD);
    mpfr_set_ui(r.hi_, x, MPFR_RNDU);
    return r;
  }
  static Iv from_decimal(const std::string& s, mpfr_prec_t prec) {
    Iv r(prec);
    mpfr_set_str(r.lo_, s.c_str(), 10, MPFR_RNDD);
    mpfr_set_str(r.hi_, s.c_str(), 10, MPFR_RNDU);
    return r;
  }

  friend Iv operator+(const Iv& a, const Iv& b) {
    Iv r(a.prec());
    mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
  }
  friend Iv operator-(const Iv& a, const Iv& b) {
    Iv r(a.prec());
    mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
    return r;
  }
  friend Iv operator*(const Iv& a, const Iv& b) {
    Iv r(a.prec());
    mpfr_t t;
    mpfr_init2(t, a.prec());
    // lower endpoint: min over the four corner products, rounded down
    mpfr_mul(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_mul(t, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_mul(t, a.hi_, b.lo_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_mul(t, a.hi_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    // upper endpoint: max over the four, rounded up
    mpfr_mul(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
    mpfr_mul(t, a.lo_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_mul(t, a.hi_, b.lo_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_mul(t, a.hi_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_clear(t);
    return r;
  }
  friend Iv operator/(const Iv& a, const Iv& b) {
    if (mpfr_sgn(b.lo_) <= 0 && mpfr_sgn(b.hi_) >= 0)
      fail(ErrorKind::Numeric, "interval division by an interval containing zero");
    Iv r(a.prec());
    mpfr_t t;
    mpfr_init2(t, a.prec());
    mpfr_div(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_div(t, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(t, a.hi_, b.lo_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(t, a.hi_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
    mpfr_div(t, a.lo_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_div(t, a.hi_, b.lo_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_div(t, a.hi_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_clear(t);
    return r;
  }

  Iv log() const {
    if (mpfr_sgn(lo_) <= 0) fail(ErrorKind::Numeric, "interval log of a nonpositive value");
    Iv r(prec());
    mpfr_log(r.lo_, lo_, MPFR_RNDD);
    mpfr_log(r.hi_, hi_, MPFR_RNDU);
    return r;
  }
  Iv exp() const {
    Iv r(prec());
    mpfr_exp(r.lo_, lo_, MPFR_RNDD);
    mpfr_exp(r.hi_, hi_, MPFR_RNDU);
    return r;
  }
  /// x^m = exp(m log x), x > 0; sound for any sign pattern of log x.
  Iv pow(const Iv& m) const { return (m * log()).exp(); }
  /// Integer power of a nonnegative interval (monotone on endpoints).
  Iv pow_ui(unsigned long n) const {
    if (mpfr_sgn(lo_) < 0) fail(ErrorKind::Numeric, "integer power of a negative interval");
    Iv r(prec());
    mpfr_pow_ui(r.lo_, lo_, n, MPFR_RNDD);
    mpfr_pow_ui(r.hi_, hi_, n, MPFR_RNDU);
    return r;
  }

  bool equals(const Iv& o) const {
    return mpfr_equal_p(lo_, o.lo_) && mpfr_equal_p(hi_, o.hi_);
  }
  bool lo_positive() const { return mpfr_sgn(lo_) > 0; }
  double lower_d() const { return mpfr_get_d(lo_, MPFR_RNDD); }
  double upper_d() const { return mpfr_get_d(hi_, MPFR_RNDU); }

 private:
  mpfr_t lo_, hi_;
};

struct IvParams {
  Iv lambda0;
  std::vector<Iv> parisi;
  std::vector<std::vector<Iv>> p;
  std::vector<Iv> q;
};

// Converts doubles exactly, then renormalizes each sibling group in interval
// arithmetic so the enclosure covers an exact simplex point.
IvParams lift_params(const ParamShape& shape, const RsbParams& params, mpfr_prec_t prec) {
  IvParams iv{Iv::exact(params.lambda0, prec), {}, {}, {}};
  for (double m : params.parisi) iv.parisi.push_back(Iv::exact(m, prec));
  for (int k = 1; k < shape.depth; ++k) {
    const auto& level = params.p[k - 1];
    const std::size_t n = static_cast<std::size_t>(shape.branching[k - 1]);
    std::vector<Iv> lifted;
    for (std::size_t g = 0; g < level.size(); g += n) {
      Iv sum(prec);
      for (std::size_t j = 0; j < n; ++j) sum = sum + Iv::exact(level[g + j], prec);
      for (std::size_t j = 0; j < n; ++j) lifted.push_back(Iv::exact(level[g + j], prec) / sum);
    }
    iv.p.push_back(std::move(lifted));
  }
  for (double q : params.q) iv.q.push_back(Iv::exact(q, prec));
  return iv;
}

// Leaf value of the recursion for one multi-index.
Iv leaf_value(const IvParams& iv, bool star, const std::size_t* dig, int axes,
              mpfr_prec_t prec) {
  const Iv one = Iv::exact_ui(1, prec);
  if (star) {
    Iv prod = one;
    for (int a = 0; a < axes; ++a) prod = prod * (one - iv.q[dig[a]]);
    return one + (iv.lambda0 - one) * prod;
  }
  const Iv c = one - one / iv.lambda0;
  return one - c * iv.q[dig[0]] * iv.q[dig[1]];
}

// Full interval recursion for arbitrary depth. The leaf level is streamed
// (never materialized) and identical multisets of leaf indices share one
// evaluation, since both the leaf value and the sibling weights are
// symmetric under axis permutation.
Iv forward_interval(const ParamShape& shape, const IvParams& iv, int axes, bool star,
                    mpfr_prec_t prec) {
  const int r = shape.depth;
  const std::size_t leaf_side = shape.leaf_count();
  double total = 1.0;
  for (int a = 0; a < axes; ++a) total *= double(leaf_side);
  if (total > 2e7) fail(ErrorKind::Capacity, "interval recursion above 2e7 leaf tuples");

  if (r == 1) {
    std::vector<std::size_t> dig(axes, 0);
    return leaf_value(iv, star, dig.data(), axes, prec);
  }

  // leaf level -> level r-2, with multiset memoization
  const Iv m0 = iv.parisi[0];
  const auto& pv = iv.p[r - 2];
  const std::size_t n_last = static_cast<std::size_t>(shape.branching[r - 2]);
  const std::size_t out_side = shape.level_size(r - 2);
  std::size_t out_total = 1;
  for (int a = 0; a < axes; ++a) out_total *= out_side;
  std::vector<Iv> out(out_total, Iv(prec));

  std::map<std::vector<std::size_t>, Iv> memo;
  std::vector<std::size_t> dig(axes, 0), key(axes, 0);
  while (true) {
    key.assign(dig.begin(), dig.end());
    std::sort(key.begin(), key.end());
    auto it = memo.find(key);
    if (it == memo.end()) {
      Iv pprod = Iv::exact_ui(1, prec);
      for (int a = 0; a < axes; ++a) pprod = pprod * pv[dig[a]];
      Iv term = pprod * leaf_value(iv, star, dig.data(), axes, prec).pow(m0);
      it = memo.emplace(key, std::move(term)).first;
    }
    std::size_t g = 0;
    for (int a = 0; a < axes; ++a) g = g * out_side + dig[a] / n_last;
    out[g] = out[g] + it->second;
    int a = axes - 1;
    while (a >= 0 && ++dig[a] == leaf_side) dig[a--] = 0;
    if (a < 0) break;
  }

  // remaining levels, dense
  for (int k = r - 2; k >= 1; --k) {
    const Iv& m = iv.parisi[r - 1 - k];
    const auto& pk = iv.p[k - 1];
    const std::size_t n = static_cast<std::size_t>(shape.branching[k - 1]);
    const std::size_t in_side = shape.level_size(k);
    const std::size_t next_side = shape.level_size(k - 1);
    std::size_t next_total = 1;
    for (int a = 0; a < axes; ++a) next_total *= next_side;
    std::vector<Iv> next(next_total, Iv(prec));
    std::vector<std::size_t> idx(axes, 0);
    std::size_t in_total = 1;
    for (int a = 0; a < axes; ++a) in_total *= in_side;
    for (std::size_t flat = 0; flat < in_total; ++flat) {
      Iv pprod = Iv::exact_ui(1, prec);
      for (int a = 0; a < axes; ++a) pprod = pprod * pk[idx[a]];
      std::size_t g = 0;
      for (int a = 0; a < axes; ++a) g = g * next_side + idx[a] / n;
      next[g] = next[g] + pprod * out[flat].pow(m);
      int a = axes - 1;
      while (a >= 0 && ++idx[a] == in_side) idx[a--] = 0;
      if (a >= 0 || flat + 1 == in_total) continue;
    }
    out = std::move(next);
  }
  return out[0];
}

unsigned long multinomial(int d, const std::vector<int>& a) {
  unsigned long num = 1;
  int placed = 0;
  // product of binomials keeps intermediates within 64 bits for d <= 19
  for (int part : a) {
    for (int i = 1; i <= part; ++i) {
      ++placed;
      num = num * static_cast<unsigned long>(placed) / static_cast<unsigned long>(i);
    }
  }
  (void)d;
  return num;
}

template <class F>
void for_each_composition(int d, int n, std::vector<int>& a, int pos, F&& f) {
  if (pos == n - 1) {
    a[pos] = d;
    f(a);
    return;
  }
  for (int take = d; take >= 0; --take) {
    a[pos] = take;
    for_each_composition(d - take, n, a, pos + 1, f);
  }
}

// Two-level bound via the composition expansion, d+n-1 choose n-1 terms.
void interval_two_level(const ParamShape& shape, const IvParams& iv, mpfr_prec_t prec,
                        Iv* r_star, Iv* r_edge) {
  const int d = shape.degree;
  const int n = shape.branching[0];
  const Iv one = Iv::exact_ui(1, prec);
  const Iv& m = iv.parisi[0];
  const auto& p = iv.p[0];

  Iv star(prec);
  std::vector<int> a(n, 0);
  for_each_composition(d, n, a, 0, [&](const std::vector<int>& comp) {
    Iv pw = Iv::exact_ui(multinomial(d, comp), prec);
    Iv tprod = one;
    for (int i = 0; i < n; ++i) {
      if (comp[i] == 0) continue;
      pw = pw * p[i].pow_ui(comp[i]);
      tprod = tprod * (one - iv.q[i]).pow_ui(comp[i]);
    }
    star = star + pw * (one + (iv.lambda0 - one) * tprod).pow(m);
  });

  Iv edge(prec);
  const Iv c = one - one / iv.lambda0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      edge = edge + p[i] * p[j] * (one - c * iv.q[i] * iv.q[j]).pow(m);
  *r_star = star;
  *r_edge = edge;
}

void check_certifiable(const ParamShape& shape, const RsbParams& params) {
  shape.validate();
  if (!(params.lambda0 > 1.0)) fail(ErrorKind::Domain, "lambda0 must be > 1");
  if (params.parisi.size() != static_cast<std::size_t>(shape.depth - 1))
    fail(ErrorKind::Shape, "wrong number of Parisi parameters");
  for (double m : params.parisi)
    if (!(m > 0.0 && m < 1.0)) fail(ErrorKind::Domain, "Parisi parameters must lie in (0,1)");
  if (params.q.size() != shape.leaf_count()) fail(ErrorKind::Shape, "wrong number of atoms");
  for (double q : params.q)
    if (!(q >= 0.0 && q <= 1.0))
      fail(ErrorKind::Domain, "atoms must lie in [0,1] for certification");
  if (params.p.size() != static_cast<std::size_t>(shape.depth - 1))
    fail(ErrorKind::Shape, "wrong number of probability levels");
  for (int k = 1; k < shape.depth; ++k) {
    if (params.p[k - 1].size() != shape.level_size(k))
      fail(ErrorKind::Shape, "wrong probability count at a level");
    for (double x : params.p[k - 1])
      if (!(x > 0.0)) fail(ErrorKind::Domain, "probabilities must be positive");
  }
}

}  // namespace

CertifiedValue certify_bound(const ParamShape& shape, const RsbParams& params,
                             const VerifyOptions& opts) {
  check_certifiable(shape, params);
  if (opts.precision_digits < 30)
    fail(ErrorKind::Precision, "certification requires at least 30 significant digits");
  const mpfr_prec_t prec = static_cast<mpfr_prec_t>(opts.precision_digits * 3.33) + 16;

  auto iv = lift_params(shape, params, prec);
  Iv r_star(prec), r_edge(prec);
  if (shape.depth == 2) {
    interval_two_level(shape, iv, prec, &r_star, &r_edge);
  } else {
    r_star = forward_interval(shape, iv, shape.degree, true, prec);
    r_edge = forward_interval(shape, iv, 2, false, prec);
  }

  Iv norm = iv.lambda0.log();
  for (const Iv& m : iv.parisi) norm = norm * m;
  const Iv half_d = Iv::exact_ui(shape.degree, prec) / Iv::exact_ui(2, prec);
  const Iv bound = (r_star.log() - half_d * r_edge.log()) / norm;

  CertifiedValue out;
  out.lower = bound.lower_d();
  out.upper = bound.upper_d();
  if (!(out.upper - out.lower <= opts.width_limit))
    fail(ErrorKind::Precision,
         "certified interval too wide; raise the working precision");
  return out;
}

namespace {

int method_rank(const std::string& m) {
  if (m == "RS") return 0;
  if (m == "1") return 1;
  if (m == "1+") return 2;
  return 2 + std::atoi(m.c_str());  // "2" -> 4, "3" -> 5, ...
}

std::string shape_text(const std::vector<int>& shape) {
  if (shape.empty()) return "-";
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

VerifyResult verify_entry(const CatalogEntry& e, const std::string& params_dir,
                          const VerifyOptions& opts) {
  VerifyResult res;
  res.entry = e;
  if (e.params_file.empty()) {
    res.status = VerifyStatus::Skipped;
    res.message = "no parameter file applies to this entry";
    return res;
  }
  const std::string path = params_dir + "/" + e.params_file;
  if (!std::ifstream(path)) {
    res.status = VerifyStatus::Skipped;
    res.message = "parameter file not found: " + e.params_file;
    return res;
  }
  try {
    auto [shape, params] = load_params_file(path);
    if (shape.degree != e.degree || shape.branching != e.shape)
      fail(ErrorKind::Schema, "parameter file shape does not match the catalog entry");
    auto cert = certify_bound(shape, params, opts);
    res.certified_upper = cert.upper;
    res.certified_width = cert.width();
    const double threshold = published_value(e) + published_ulp(e);
    if (cert.upper <= threshold) {
      res.status = VerifyStatus::Pass;
    } else {
      res.status = VerifyStatus::Fail;
      std::ostringstream msg;
      msg.precision(15);
      msg << "certified upper " << cert.upper << " exceeds published " << e.published
          << " + 1 ulp";
      res.message = msg.str();
    }
  } catch (const Error& err) {
    res.status = VerifyStatus::Fail;
    res.message = err.what();
  }
  return res;
}

}  // namespace

VerifyReport verify_catalog(const std::vector<CatalogEntry>& entries,
                            const std::string& params_dir, const VerifyOptions& opts) {
  std::vector<CatalogEntry> sorted = entries;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
    if (a.degree != b.degree) return a.degree < b.degree;
    return method_rank(a.method) < method_rank(b.method);
  });

  VerifyReport report;
  report.results.resize(sorted.size());
  const int jobs = std::max(1, opts.jobs);
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < sorted.size(); i += step)
      report.results[i] = verify_entry(sorted[i], params_dir, opts);
  };
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work, static_cast<std::size_t>(j), jobs);
    for (auto& t : pool) t.join();
  }
  for (const auto& r : report.results) {
    if (r.status == VerifyStatus::Pass) ++report.passed;
    if (r.status == VerifyStatus::Fail) ++report.failed;
    if (r.status == VerifyStatus::Skipped) ++report.skipped;
  }
  return report;
}

std::vector<std::string> cross_check_hierarchy(const std::vector<CatalogEntry>& entries) {
  // best published value per (degree, method rank); McKay is a reference
  // bound outside the RSB chain
  std::map<int, std::map<int, const CatalogEntry*>> by_degree;
  for (const auto& e : entries) {
    if (e.method == "McKay") continue;
    auto& slot = by_degree[e.degree][method_rank(e.method)];
    if (!slot || published_value(e) < published_value(*slot)) slot = &e;
  }
  std::vector<std::string> violations;
  for (const auto& [degree, chain] : by_degree) {
    const CatalogEntry* prev = nullptr;
    for (const auto& [rank, e] : chain) {
      if (prev && published_value(*prev) < published_value(*e)) {
        std::ostringstream msg;
        msg << "degree " << degree << ": method " << prev->method << " (" << prev->published
            << ") below method " << e->method << " (" << e->published << ")";
        violations.push_back(msg.str());
      }
      prev = e;
    }
  }
  return violations;
}

std::string render_report(const VerifyReport& report) {
  std::ostringstream out;
  out << "degree  method  shape        published        certified-upper    status\n";
  for (const auto& r : report.results) {
    char line[160];
    const char* status = r.status == VerifyStatus::Pass     ? "PASS"
                         : r.status == VerifyStatus::Fail   ? "FAIL"
                                                            : "SKIPPED";
    std::snprintf(line, sizeof line, "%-7d %-7s %-12s %-16s %-18.12f %s\n", r.entry.degree,
                  r.entry.method.c_str(), shape_text(r.entry.shape).c_str(),
                  r.entry.published.c_str(),
                  r.status == VerifyStatus::Skipped ? 0.0 : r.certified_upper, status);
    out << line;
  }
  out << "passed " << report.passed << ", failed " << report.failed << ", skipped "
      << report.skipped << "\n";
  return out.str();
}

std::string report_json(const VerifyReport& report) {
  std::ostringstream out;
  out << "{\"results\":[";
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    if (i) out << ",";
    const char* status = r.status == VerifyStatus::Pass     ? "PASS"
                         : r.status == VerifyStatus::Fail   ? "FAIL"
                                                            : "SKIPPED";
    out << "{\"degree\":" << r.entry.degree << ",\"method\":\"" << r.entry.method
        << "\",\"shape\":\"" << shape_text(r.entry.shape) << "\",\"published\":\""
        << r.entry.published << "\",\"status\":\"" << status << "\"";
    if (r.status != VerifyStatus::Skipped) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", r.certified_upper);
      out << ",\"certified_upper\":" << buf;
      std::snprintf(buf, sizeof buf, "%.17g", r.certified_width);
      out << ",\"certified_width\":" << buf;
    }
    if (!r.message.empty()) out << ",\"message\":\"" << r.message << "\"";
    out << "}";
  }
  out << "],\"passed\":" << report.passed << ",\"failed\":" << report.failed
      << ",\"skipped\":" << report.skipped << "}";
  return out.str();
}

}  // namespace rsb
