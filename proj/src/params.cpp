#include "rsb/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rsb/error.hpp"

namespace rsb {

namespace {

// Clamped to the open interval so that extreme logits (|x| beyond ~36) still
// map to strictly feasible parameters in double precision.
double sigmoid(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    double e = std::exp(x);
    y = e / (1.0 + e);
  }
  constexpr double lo = 1e-300;
  constexpr double hi = 0x1.fffffffffffffp-1;  // largest double below 1
  return std::min(std::max(y, lo), hi);
}

double logit(double y) { return std::log(y / (1.0 - y)); }

}  // namespace

void ParamShape::validate() const {
  if (degree < 3) fail(ErrorKind::Shape, "degree must be >= 3, got " + std::to_string(degree));
  if (depth < 1) fail(ErrorKind::Shape, "depth must be >= 1, got " + std::to_string(depth));
  if (static_cast<int>(branching.size()) != depth - 1)
    fail(ErrorKind::Shape, "branching must have depth-1 entries");
  for (int n : branching)
    if (n < 1) fail(ErrorKind::Shape, "branching sizes must be >= 1");
}

void RsbParams::validate(const ParamShape& shape, double simplex_tol) const {
  shape.validate();
  const int r = shape.depth;
  if (!(lambda0 > 1.0)) fail(ErrorKind::Domain, "lambda0 must be > 1");
  if (static_cast<int>(parisi.size()) != r - 1)
    fail(ErrorKind::Shape, "parisi must have depth-1 entries");
  for (double m : parisi)
    if (!(m > 0.0 && m < 1.0)) fail(ErrorKind::Domain, "Parisi parameters must lie in (0,1)");
  if (static_cast<int>(p.size()) != r - 1) fail(ErrorKind::Shape, "p must have depth-1 levels");
  for (int k = 1; k <= r - 1; ++k) {
    const auto& level = p[k - 1];
    if (level.size() != shape.level_size(k))
      fail(ErrorKind::Shape, "p level " + std::to_string(k) + " has wrong size");
    const int n = shape.branching[k - 1];
    for (std::size_t g = 0; g < shape.level_size(k - 1); ++g) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        double v = level[g * n + j];
        if (!(v >= 0.0)) fail(ErrorKind::Domain, "p entries must be >= 0");
        sum += v;
      }
      if (std::abs(sum - 1.0) > simplex_tol)
        fail(ErrorKind::Domain, "sibling group at level " + std::to_string(k) + ", parent " +
                                    std::to_string(g) + " sums to " + std::to_string(sum));
    }
  }
  if (q.size() != shape.leaf_count()) fail(ErrorKind::Shape, "q has wrong size");
  for (double v : q)
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::Domain, "q entries must lie in [0,1]");
}

bool RsbParams::strictly_interior(const ParamShape& shape, std::string* offending) const {
  auto report = [&](const std::string& what) {
    if (offending) *offending = what;
    return false;
  };
  if (!(lambda0 > 1.0)) return report("lambda0");
  for (std::size_t k = 0; k < parisi.size(); ++k)
    if (!(parisi[k] > 0.0 && parisi[k] < 1.0)) return report("m_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < p.size(); ++k)
    for (std::size_t i = 0; i < p[k].size(); ++i)
      if (!(p[k][i] > 0.0)) return report("p[level " + std::to_string(k + 1) + "][" + std::to_string(i) + "]");
  (void)shape;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (!(q[i] > 0.0 && q[i] < 1.0)) return report("q[" + std::to_string(i) + "]");
  return true;
}

VectorLayout vector_layout(const ParamShape& shape) {
  VectorLayout lay;
  const int r = shape.depth;
  lay.lambda0_index = 0;
  lay.m_offset = 1;
  lay.p_offset = 1 + static_cast<std::size_t>(r - 1);
  std::size_t p_free = shape.leaf_count() - 1;  // sum over levels of |S_{k-1}|(n_k - 1)
  lay.q_offset = lay.p_offset + p_free;
  lay.dim = lay.q_offset + shape.leaf_count();
  // dim == 1 + (r-1) + (L-1) + L == (r-1) + 2L == free_dim + 1 - 1; see Eq. count
  return lay;
}

RsbParams from_unconstrained(const ParamShape& shape, const UnconstrainedVector& v) {
  shape.validate();
  const auto lay = vector_layout(shape);
  if (v.coords.size() != lay.dim)
    fail(ErrorKind::Shape, "unconstrained vector has length " + std::to_string(v.coords.size()) +
                               ", expected " + std::to_string(lay.dim));
  for (double x : v.coords)
    if (!std::isfinite(x)) fail(ErrorKind::Domain, "non-finite coordinate in unconstrained vector");

  const int r = shape.depth;
  RsbParams params;
  // the max keeps lambda0 strictly above 1 even when exp underflows next to 1
  params.lambda0 = 1.0 + std::max(std::exp(v.coords[lay.lambda0_index]), 0x1p-50);
  params.parisi.resize(r - 1);
  for (int k = 0; k < r - 1; ++k) params.parisi[k] = sigmoid(v.coords[lay.m_offset + k]);

  params.p.resize(r - 1);
  std::size_t pc = lay.p_offset;
  for (int k = 1; k <= r - 1; ++k) {
    const int n = shape.branching[k - 1];
    const std::size_t groups = shape.level_size(k - 1);
    auto& level = params.p[k - 1];
    level.resize(groups * n);
    for (std::size_t g = 0; g < groups; ++g) {
      // pinned-reference softmax: sibling 0 has logit 0.
      double zmax = 0.0;
      for (int j = 1; j < n; ++j) zmax = std::max(zmax, v.coords[pc + j - 1]);
      // numerators floored so extreme logit spreads keep every weight > 0
      constexpr double floor = 1e-290;
      double denom = std::max(std::exp(-zmax), floor);
      level[g * n + 0] = denom;
      for (int j = 1; j < n; ++j) {
        level[g * n + j] = std::max(std::exp(v.coords[pc + j - 1] - zmax), floor);
        denom += level[g * n + j];
      }
      for (int j = 0; j < n; ++j) level[g * n + j] /= denom;
      pc += static_cast<std::size_t>(n - 1);
    }
  }

  params.q.resize(shape.leaf_count());
  for (std::size_t i = 0; i < params.q.size(); ++i)
    params.q[i] = sigmoid(v.coords[lay.q_offset + i]);
  return params;
}

UnconstrainedVector to_unconstrained(const ParamShape& shape, const RsbParams& params) {
  params.validate(shape);
  std::string offending;
  if (!params.strictly_interior(shape, &offending))
    fail(ErrorKind::Boundary, "parameter on the boundary of the feasible set: " + offending);

  const auto lay = vector_layout(shape);
  const int r = shape.depth;
  UnconstrainedVector v;
  v.coords.resize(lay.dim);
  v.coords[lay.lambda0_index] = std::log(params.lambda0 - 1.0);
  for (int k = 0; k < r - 1; ++k) v.coords[lay.m_offset + k] = logit(params.parisi[k]);

  std::size_t pc = lay.p_offset;
  for (int k = 1; k <= r - 1; ++k) {
    const int n = shape.branching[k - 1];
    const std::size_t groups = shape.level_size(k - 1);
    for (std::size_t g = 0; g < groups; ++g) {
      const double ref = params.p[k - 1][g * n + 0];
      for (int j = 1; j < n; ++j)
        v.coords[pc + j - 1] = std::log(params.p[k - 1][g * n + j] / ref);
      pc += static_cast<std::size_t>(n - 1);
    }
  }
  for (std::size_t i = 0; i < params.q.size(); ++i)
    v.coords[lay.q_offset + i] = logit(params.q[i]);
  return v;
}

// ---------------------------------------------------------------------------
// Parameter-file I/O
// ---------------------------------------------------------------------------

using nlohmann::json;

std::pair<ParamShape, RsbParams> load_params(const std::string& text, double simplex_tol) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, std::string("invalid JSON: ") + e.what());
  }
  try {
    ParamShape shape;
    shape.degree = doc.at("degree").get<int>();
    shape.branching = doc.at("shape").get<std::vector<int>>();
    shape.depth = static_cast<int>(shape.branching.size()) + 1;
    shape.validate();

    RsbParams params;
    params.lambda0 = doc.at("lambda0").get<double>();
    params.parisi = doc.at("m").get<std::vector<double>>();

    const auto& p_doc = doc.at("p");
    if (!p_doc.is_array() || static_cast<int>(p_doc.size()) != shape.depth - 1)
      fail(ErrorKind::Schema, "p must be an array with one entry per level");
    params.p.resize(shape.depth - 1);
    for (int k = 1; k <= shape.depth - 1; ++k) {
      const auto& level_doc = p_doc[k - 1];
      const int n = shape.branching[k - 1];
      const std::size_t groups = shape.level_size(k - 1);
      if (!level_doc.is_array() || level_doc.size() != groups)
        fail(ErrorKind::Schema, "p level " + std::to_string(k) + " must have " +
                                    std::to_string(groups) + " groups");
      auto& level = params.p[k - 1];
      level.reserve(groups * n);
      for (const auto& group : level_doc) {
        if (!group.is_array() || static_cast<int>(group.size()) != n)
          fail(ErrorKind::Schema, "each p group at level " + std::to_string(k) + " must have " +
                                      std::to_string(n) + " entries");
        for (const auto& x : group) level.push_back(x.get<double>());
      }
    }
    params.q = doc.at("q").get<std::vector<double>>();

    params.validate(shape, simplex_tol);
    // renormalize sibling groups exactly; files carry fewer digits than the
    // internal invariant requires
    for (int k = 1; k <= shape.depth - 1; ++k) {
      const int n = shape.branching[k - 1];
      auto& level = params.p[k - 1];
      for (std::size_t g = 0; g < shape.level_size(k - 1); ++g) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += level[g * n + j];
        for (int j = 0; j < n; ++j) level[g * n + j] /= sum;
      }
    }
    return {shape, params};
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, std::string("parameter document: ") + e.what());
  }
}

namespace {

void write_number(std::ostream& os, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  os << buf;
}

}  // namespace

std::string save_params(const ParamShape& shape, const RsbParams& params) {
  params.validate(shape, 1e-9);
  // hand-rolled serialization: nlohmann prints shortest round-trip decimals,
  // the file contract asks for >= 17 significant digits
  std::ostringstream os;
  os << "{\n  \"degree\": " << shape.degree << ",\n  \"shape\": [";
  for (std::size_t i = 0; i < shape.branching.size(); ++i)
    os << (i ? ", " : "") << shape.branching[i];
  os << "],\n  \"lambda0\": ";
  write_number(os, params.lambda0);
  os << ",\n  \"m\": [";
  for (std::size_t i = 0; i < params.parisi.size(); ++i) {
    os << (i ? ", " : "");
    write_number(os, params.parisi[i]);
  }
  os << "],\n  \"p\": [";
  for (int k = 1; k <= shape.depth - 1; ++k) {
    const int n = shape.branching[k - 1];
    os << (k > 1 ? ",\n    [" : "\n    [");
    for (std::size_t g = 0; g < shape.level_size(k - 1); ++g) {
      os << (g ? ", [" : "[");
      for (int j = 0; j < n; ++j) {
        os << (j ? ", " : "");
        write_number(os, params.p[k - 1][g * n + j]);
      }
      os << "]";
    }
    os << "]";
  }
  os << (shape.depth > 1 ? "\n  ],\n  \"q\": [" : "],\n  \"q\": [");
  for (std::size_t i = 0; i < params.q.size(); ++i) {
    os << (i ? ", " : "");
    write_number(os, params.q[i]);
  }
  os << "]\n}\n";
  return os.str();
}

std::pair<ParamShape, RsbParams> load_params_file(const std::string& path, double simplex_tol) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Schema, "cannot open parameter file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_params(ss.str(), simplex_tol);
}

void save_params_file(const std::string& path, const ParamShape& shape, const RsbParams& params) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Schema, "cannot open output file: " + path);
  out << save_params(shape, params);
}

}  // namespace rsb
