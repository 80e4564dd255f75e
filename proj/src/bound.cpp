#include "rsb/bound.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsb/error.hpp"

namespace rsb {

namespace {

// Dense symmetric tensor over S_k^axes, flat row-major, all sides equal.
struct Tensor {
  std::size_t side = 1;
  int axes = 1;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::size_t side_, int axes_) : side(side_), axes(axes_) {
    std::size_t total = 1;
    for (int a = 0; a < axes_; ++a) total *= side_;
    v.assign(total, 0.0);
  }
};

// Iterates all multi-indices of side^axes, last axis fastest.
// f(flat, digits) is invoked once per element.
template <class F>
void for_each_index(std::size_t side, int axes, F&& f) {
  std::vector<std::size_t> dig(static_cast<std::size_t>(axes), 0);
  std::size_t total = 1;
  for (int a = 0; a < axes; ++a) total *= side;
  for (std::size_t flat = 0; flat < total; ++flat) {
    f(flat, dig.data());
    int a = axes - 1;
    while (a >= 0) {
      if (++dig[a] == side) {
        dig[a] = 0;
        --a;
      } else {
        break;
      }
    }
  }
}

std::size_t checked_total(std::size_t side, int axes, std::size_t cap) {
  std::size_t total = 1;
  for (int a = 0; a < axes; ++a) {
    if (side != 0 && total > cap / side)
      fail(ErrorKind::Capacity, "tensor of side " + std::to_string(side) + " and " +
                                    std::to_string(axes) + " axes exceeds the element cap");
    total *= side;
  }
  return total;
}

// Output index of the block-summed tensor: every digit divided by n.
std::size_t block_index(const std::size_t* dig, int axes, std::size_t n, std::size_t out_side) {
  std::size_t g = 0;
  for (int a = 0; a < axes; ++a) g = g * out_side + dig[a] / n;
  return g;
}

// prefix[a] = prod of vals over axes < a, suffix[a] = prod over axes > a
void prefix_suffix(const double* vals, int axes, double* prefix, double* suffix) {
  prefix[0] = 1.0;
  for (int a = 1; a < axes; ++a) prefix[a] = prefix[a - 1] * vals[a - 1];
  suffix[axes - 1] = 1.0;
  for (int a = axes - 2; a >= 0; --a) suffix[a] = suffix[a + 1] * vals[a + 1];
}

// Forward pass of the star (axes = d) or edge (axes = 2) recursion.
// Returns T[k] for k = 0..r-1: T[r-1] is the leaf tensor, T[0] the scalar.
// Leaf: star 1+(lambda0-1)*prod(1-q), edge 1-(1-1/lambda0)*q*q'.
std::vector<Tensor> forward_levels(const ParamShape& shape, const RsbParams& params, int axes,
                                   bool star, std::size_t cap) {
  const int r = shape.depth;
  const std::size_t leaf_side = shape.leaf_count();
  checked_total(leaf_side, axes, cap);

  std::vector<Tensor> levels(static_cast<std::size_t>(r));
  Tensor& leaf = levels[r - 1];
  leaf = Tensor(leaf_side, axes);
  const double lam0 = params.lambda0;
  if (star) {
    std::vector<double> t(leaf_side);
    for (std::size_t i = 0; i < leaf_side; ++i) t[i] = 1.0 - params.q[i];
    for_each_index(leaf_side, axes, [&](std::size_t flat, const std::size_t* dig) {
      double prod = 1.0;
      for (int a = 0; a < axes; ++a) prod *= t[dig[a]];
      leaf.v[flat] = 1.0 + (lam0 - 1.0) * prod;
    });
  } else {
    const double c = 1.0 - 1.0 / lam0;
    for_each_index(leaf_side, axes, [&](std::size_t flat, const std::size_t* dig) {
      leaf.v[flat] = 1.0 - c * params.q[dig[0]] * params.q[dig[1]];
    });
  }

  for (int k = r - 1; k >= 1; --k) {
    const double m = params.parisi[r - 1 - k];  // m_{r-k}
    const std::size_t n = static_cast<std::size_t>(shape.branching[k - 1]);
    const std::size_t out_side = shape.level_size(k - 1);
    const std::vector<double>& pv = params.p[k - 1];
    const Tensor& in = levels[k];
    Tensor out(out_side, axes);
    // Kahan-compensated accumulation: a block can cover ~1e8 addends and the
    // equivalence oracles check 1e-12 relative agreement.
    std::vector<double> comp(out.v.size(), 0.0);
    for_each_index(in.side, axes, [&](std::size_t flat, const std::size_t* dig) {
      double pprod = 1.0;
      for (int a = 0; a < axes; ++a) pprod *= pv[dig[a]];
      const std::size_t g = block_index(dig, axes, n, out_side);
      const double y = pprod * std::pow(in.v[flat], m) - comp[g];
      const double t = out.v[g] + y;
      comp[g] = (t - out.v[g]) - y;
      out.v[g] = t;
    });
    for (double x : out.v)
      if (!std::isfinite(x))
        fail(ErrorKind::Numeric, "non-finite intermediate at recursion level " + std::to_string(k));
    levels[k - 1] = std::move(out);
  }
  return levels;
}

// Reverse pass: given the forward levels, accumulates the partials of
// log T_0 into the constrained-gradient slots.
void backward_levels(const ParamShape& shape, const RsbParams& params, int axes, bool star,
                     const std::vector<Tensor>& levels, ConstrainedGradient& g, double weight) {
  const int r = shape.depth;
  const double lam0 = params.lambda0;
  const double root = levels[0].v[0];

  Tensor adj(levels[0].side, axes);
  adj.v[0] = weight / root;

  std::vector<double> vals(static_cast<std::size_t>(axes));
  std::vector<double> prefix(static_cast<std::size_t>(axes)), suffix(static_cast<std::size_t>(axes));

  for (int k = 1; k <= r - 1; ++k) {
    const double m = params.parisi[r - 1 - k];
    const std::size_t n = static_cast<std::size_t>(shape.branching[k - 1]);
    const std::size_t out_side = shape.level_size(k - 1);
    const std::vector<double>& pv = params.p[k - 1];
    const Tensor& in = levels[k];
    Tensor next_adj(in.side, axes);
    double dm = 0.0;
    for_each_index(in.side, axes, [&](std::size_t flat, const std::size_t* dig) {
      const double a_out = adj.v[block_index(dig, axes, n, out_side)];
      if (a_out == 0.0) return;
      const double tval = in.v[flat];
      const double u = std::pow(tval, m);
      for (int a = 0; a < axes; ++a) vals[a] = pv[dig[a]];
      prefix_suffix(vals.data(), axes, prefix.data(), suffix.data());
      const double pprod = prefix[axes - 1] * vals[axes - 1];
      // d/dp through the product tensor, one contribution per axis
      const double adj_p_elem = a_out * u;
      for (int a = 0; a < axes; ++a)
        g.d_p[k - 1][dig[a]] += adj_p_elem * prefix[a] * suffix[a];
      dm += a_out * pprod * u * std::log(tval);
      next_adj.v[flat] = a_out * pprod * m * std::pow(tval, m - 1.0);
    });
    g.d_m[r - 1 - k] += dm;
    adj = std::move(next_adj);
  }

  // leaf level
  const Tensor& leaf = levels[r - 1];
  (void)leaf;
  if (star) {
    std::vector<double> t(shape.leaf_count());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1.0 - params.q[i];
    for_each_index(adj.side, axes, [&](std::size_t flat, const std::size_t* dig) {
      const double a_out = adj.v[flat];
      if (a_out == 0.0) return;
      for (int a = 0; a < axes; ++a) vals[a] = t[dig[a]];
      prefix_suffix(vals.data(), axes, prefix.data(), suffix.data());
      const double prod = prefix[axes - 1] * vals[axes - 1];
      g.d_lambda0 += a_out * prod;
      for (int a = 0; a < axes; ++a)
        g.d_q[dig[a]] -= a_out * (lam0 - 1.0) * prefix[a] * suffix[a];
    });
  } else {
    const double c = 1.0 - 1.0 / lam0;
    for_each_index(adj.side, axes, [&](std::size_t flat, const std::size_t* dig) {
      const double a_out = adj.v[flat];
      if (a_out == 0.0) return;
      const double qi = params.q[dig[0]], qj = params.q[dig[1]];
      g.d_lambda0 -= a_out * qi * qj / (lam0 * lam0);
      g.d_q[dig[0]] -= a_out * c * qj;
      g.d_q[dig[1]] -= a_out * c * qi;
    });
  }
}

// ---------------------------------------------------------------------------
// 2-RSB composition scheme
// ---------------------------------------------------------------------------

template <class F>
void for_each_composition_impl(int remaining, int part, std::vector<int>& a, F& f) {
  if (part + 1 == static_cast<int>(a.size())) {
    a[part] = remaining;
    f(a);
    return;
  }
  for (int take = 0; take <= remaining; ++take) {
    a[part] = take;
    for_each_composition_impl(remaining - take, part + 1, a, f);
  }
}

// All ways to write d as an ordered sum of n nonnegative integers.
template <class F>
void for_each_composition(int d, int n, F&& f) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  for_each_composition_impl(d, 0, a, f);
}

double multinomial_coeff(int d, const std::vector<int>& a) {
  // exact for d <= 19 in double
  double c = 1.0;
  int used = 0;
  for (int ai : a) {
    for (int j = 1; j <= ai; ++j) {
      ++used;
      c = c * used / j;
    }
  }
  (void)d;
  return c;
}

struct TwoRsbTerms {
  double log_star = 0.0;
  double log_edge = 0.0;
};

TwoRsbTerms two_rsb_terms(int d, double lambda0, double m, const std::vector<double>& p,
                          const std::vector<double>& q) {
  const int n = static_cast<int>(p.size());
  double r_star = 0.0, comp = 0.0;
  for_each_composition(d, n, [&](const std::vector<int>& a) {
    double pw = multinomial_coeff(d, a);
    double tprod = 1.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0) continue;
      pw *= std::pow(p[i], a[i]);
      tprod *= std::pow(1.0 - q[i], a[i]);
    }
    const double y = pw * std::pow(1.0 + (lambda0 - 1.0) * tprod, m) - comp;
    const double t = r_star + y;
    comp = (t - r_star) - y;
    r_star = t;
  });
  const double c = 1.0 - 1.0 / lambda0;
  double r_edge = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      r_edge += p[i] * p[j] * std::pow(1.0 - c * q[i] * q[j], m);
  if (!(std::isfinite(r_star) && std::isfinite(r_edge)))
    fail(ErrorKind::Numeric, "non-finite intermediate in the 2-RSB composition sum");
  return {std::log(r_star), std::log(r_edge)};
}

bool route_multinomial(const ParamShape& shape, const EvalOptions& opts) {
  if (opts.path == EvalPath::Multinomial) {
    if (shape.depth != 2) fail(ErrorKind::Shape, "multinomial path requires depth 2");
    return true;
  }
  if (opts.path == EvalPath::Generic) return false;
  if (shape.depth != 2) return false;
  if (shape.degree >= 8) return true;
  // fall back if the dense tensor would blow the cap
  std::size_t total = 1;
  const std::size_t side = shape.leaf_count();
  for (int a = 0; a < shape.degree; ++a) {
    if (side != 0 && total > opts.element_cap / side) return true;
    total *= side;
  }
  return false;
}

}  // namespace

double eval_rs(int d, double lambda, double x) {
  if (!(lambda > 0.0)) fail(ErrorKind::Domain, "RS bound requires lambda > 0");
  if (lambda == 1.0) fail(ErrorKind::Domain, "RS bound is singular at lambda = 1 (zero normalizer)");
  if (!(x >= 0.0)) fail(ErrorKind::Domain, "RS bound requires x >= 0");
  if (x >= 1.0) fail(ErrorKind::Domain, "RS bound is singular at x = 1");
  return (std::log(1.0 + lambda * std::pow(1.0 - x, d)) - 0.5 * d * std::log(1.0 - x * x)) /
         std::log(lambda);
}

double eval_1rsb(int d, double lambda0, double q) {
  if (!(lambda0 > 1.0)) fail(ErrorKind::Domain, "1-RSB bound requires lambda0 > 1");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::Domain, "1-RSB bound requires q in [0,1]");
  const double star = 1.0 + (lambda0 - 1.0) * std::pow(1.0 - q, d);
  const double edge = 1.0 - (1.0 - 1.0 / lambda0) * q * q;
  return (std::log(star) - 0.5 * d * std::log(edge)) / std::log(lambda0);
}

BoundReport eval_bound(const ParamShape& shape, const RsbParams& params, const EvalOptions& opts) {
  params.validate(shape);
  const int r = shape.depth;
  const int d = shape.degree;

  BoundReport rep;
  rep.normalizer = std::log(params.lambda0);
  for (double m : params.parisi) rep.normalizer *= m;

  if (r == 2 && route_multinomial(shape, opts)) {
    const auto terms = two_rsb_terms(d, params.lambda0, params.parisi[0], params.p[0], params.q);
    rep.log_r_star = terms.log_star;
    rep.log_r_edge = terms.log_edge;
  } else {
    const auto star = forward_levels(shape, params, d, /*star=*/true, opts.element_cap);
    const auto edge = forward_levels(shape, params, 2, /*star=*/false, opts.element_cap);
    rep.log_r_star = std::log(star[0].v[0]);
    rep.log_r_edge = std::log(edge[0].v[0]);
  }
  rep.bound = (rep.log_r_star - 0.5 * d * rep.log_r_edge) / rep.normalizer;
  if (!std::isfinite(rep.bound)) fail(ErrorKind::Numeric, "non-finite bound value");
  return rep;
}

double eval_2rsb_multinomial(int d, double lambda0, double m, const std::vector<double>& p,
                             const std::vector<double>& q) {
  if (p.empty() || p.size() != q.size())
    fail(ErrorKind::Shape, "p and q must be nonempty and of equal length");
  if (!(lambda0 > 1.0) || !(m > 0.0 && m < 1.0))
    fail(ErrorKind::Domain, "2-RSB bound requires lambda0 > 1 and m in (0,1)");
  const auto terms = two_rsb_terms(d, lambda0, m, p, q);
  return (terms.log_star - 0.5 * d * terms.log_edge) / (m * std::log(lambda0));
}

namespace {

// Constrained partials via the composition scheme (depth-2 shapes).
ConstrainedGradient multinomial_constrained_gradient(const ParamShape& shape,
                                                     const RsbParams& params) {
  const int d = shape.degree;
  const int n = static_cast<int>(params.q.size());
  const double lam0 = params.lambda0;
  const double m = params.parisi[0];
  const std::vector<double>& p = params.p[0];
  const std::vector<double>& q = params.q;

  double r_star = 0.0, ds_lam = 0.0, ds_m = 0.0;
  std::vector<double> ds_p(n, 0.0), ds_q(n, 0.0);
  for_each_composition(d, n, [&](const std::vector<int>& a) {
    double coeff = multinomial_coeff(d, a);
    double pprod = 1.0, tprod = 1.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0) continue;
      pprod *= std::pow(p[i], a[i]);
      tprod *= std::pow(1.0 - q[i], a[i]);
    }
    const double inner = 1.0 + (lam0 - 1.0) * tprod;
    const double powm = std::pow(inner, m);
    const double powm1 = std::pow(inner, m - 1.0);
    const double term = coeff * pprod * powm;
    r_star += term;
    ds_lam += coeff * pprod * m * powm1 * tprod;
    ds_m += term * std::log(inner);
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0) continue;
      ds_p[i] += term * a[i] / p[i];
      ds_q[i] -= coeff * pprod * m * powm1 * (lam0 - 1.0) * tprod * a[i] / (1.0 - q[i]);
    }
  });

  const double c = 1.0 - 1.0 / lam0;
  double r_edge = 0.0, de_lam = 0.0, de_m = 0.0;
  std::vector<double> de_p(n, 0.0), de_q(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double inner = 1.0 - c * q[i] * q[j];
      const double powm = std::pow(inner, m);
      const double powm1 = std::pow(inner, m - 1.0);
      r_edge += p[i] * p[j] * powm;
      de_lam -= p[i] * p[j] * m * powm1 * q[i] * q[j] / (lam0 * lam0);
      de_m += p[i] * p[j] * powm * std::log(inner);
      de_p[i] += 2.0 * p[j] * powm;  // symmetric in (i,j)
      de_q[i] -= 2.0 * p[i] * p[j] * m * powm1 * c * q[j];
    }
  }

  // log-derivatives of the two terms
  ConstrainedGradient gs, ge;
  gs.d_lambda0 = ds_lam / r_star;
  gs.d_m = {ds_m / r_star};
  gs.d_p = {ds_p};
  gs.d_q = ds_q;
  for (auto& x : gs.d_p[0]) x /= r_star;
  for (auto& x : gs.d_q) x /= r_star;
  ge.d_lambda0 = de_lam / r_edge;
  ge.d_m = {de_m / r_edge};
  ge.d_p = {de_p};
  ge.d_q = de_q;
  for (auto& x : ge.d_p[0]) x /= r_edge;
  for (auto& x : ge.d_q) x /= r_edge;

  const double norm = m * std::log(lam0);
  const double bound = (std::log(r_star) - 0.5 * d * std::log(r_edge)) / norm;

  ConstrainedGradient g;
  g.d_m.assign(1, 0.0);
  g.d_p.assign(1, std::vector<double>(n, 0.0));
  g.d_q.assign(n, 0.0);
  auto combine = [&](double s, double e) { return (s - 0.5 * d * e) / norm; };
  g.d_lambda0 = combine(gs.d_lambda0, ge.d_lambda0) - bound / (lam0 * std::log(lam0));
  g.d_m[0] = combine(gs.d_m[0], ge.d_m[0]) - bound / m;
  for (int i = 0; i < n; ++i) {
    g.d_p[0][i] = combine(gs.d_p[0][i], ge.d_p[0][i]);
    g.d_q[i] = combine(gs.d_q[i], ge.d_q[i]);
  }
  return g;
}

}  // namespace

ConstrainedGradient eval_constrained_gradient(const ParamShape& shape, const RsbParams& params,
                                              const EvalOptions& opts) {
  params.validate(shape);
  std::string offending;
  if (!params.strictly_interior(shape, &offending))
    fail(ErrorKind::Boundary, "gradient requires a strictly interior point; boundary at " + offending);

  if (shape.depth == 2 && route_multinomial(shape, opts))
    return multinomial_constrained_gradient(shape, params);

  const int r = shape.depth;
  const int d = shape.degree;
  const auto star = forward_levels(shape, params, d, /*star=*/true, opts.element_cap);
  const auto edge = forward_levels(shape, params, 2, /*star=*/false, opts.element_cap);
  const double log_star = std::log(star[0].v[0]);
  const double log_edge = std::log(edge[0].v[0]);

  double norm = std::log(params.lambda0);
  for (double m : params.parisi) norm *= m;
  const double bound = (log_star - 0.5 * d * log_edge) / norm;

  // partials of (log R_star - (d/2) log R_edge), scaled by 1/norm up front
  ConstrainedGradient g;
  g.d_m.assign(static_cast<std::size_t>(r - 1), 0.0);
  g.d_p.resize(static_cast<std::size_t>(r - 1));
  for (int k = 1; k <= r - 1; ++k) g.d_p[k - 1].assign(shape.level_size(k), 0.0);
  g.d_q.assign(shape.leaf_count(), 0.0);

  backward_levels(shape, params, d, /*star=*/true, star, g, 1.0 / norm);
  backward_levels(shape, params, 2, /*star=*/false, edge, g, -0.5 * d / norm);

  // normalizer terms: d norm / d m_k = norm / m_k, d norm / d lambda0 = prod(m)/lambda0
  for (int k = 0; k < r - 1; ++k) g.d_m[k] -= bound / params.parisi[k];
  g.d_lambda0 -= bound / (params.lambda0 * std::log(params.lambda0));
  return g;
}

std::vector<double> chain_to_unconstrained(const ParamShape& shape, const RsbParams& params,
                                           const ConstrainedGradient& g) {
  const auto lay = vector_layout(shape);
  const int r = shape.depth;
  std::vector<double> out(lay.dim, 0.0);
  out[lay.lambda0_index] = g.d_lambda0 * (params.lambda0 - 1.0);
  for (int k = 0; k < r - 1; ++k) {
    const double m = params.parisi[k];
    out[lay.m_offset + k] = g.d_m[k] * m * (1.0 - m);
  }
  std::size_t pc = lay.p_offset;
  for (int k = 1; k <= r - 1; ++k) {
    const int n = shape.branching[k - 1];
    for (std::size_t grp = 0; grp < shape.level_size(k - 1); ++grp) {
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        s += g.d_p[k - 1][grp * n + j] * params.p[k - 1][grp * n + j];
      for (int j = 1; j < n; ++j)
        out[pc + j - 1] = params.p[k - 1][grp * n + j] * (g.d_p[k - 1][grp * n + j] - s);
      pc += static_cast<std::size_t>(n - 1);
    }
  }
  for (std::size_t i = 0; i < g.d_q.size(); ++i)
    out[lay.q_offset + i] = g.d_q[i] * params.q[i] * (1.0 - params.q[i]);
  return out;
}

std::vector<double> eval_gradient(const ParamShape& shape, const RsbParams& params,
                                  const EvalOptions& opts) {
  return chain_to_unconstrained(shape, params, eval_constrained_gradient(shape, params, opts));
}

}  // namespace rsb
