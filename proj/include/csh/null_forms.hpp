#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "field_algebra.hpp"

namespace csh {

// A field together with its time derivative at a fixed time.
struct ScalarWithRate {
  ScalarField u, ut;
};
struct LieWithRate {
  LieFieldGrid u, ut;
};

// d_alpha with alpha = 0 (time, from the companion) or 1, 2 (space).
inline ScalarField d_alpha(const ScalarWithRate& f, int alpha) {
  if (alpha == 0) return f.ut.physical();
  return partial(f.u, alpha - 1).to_physical();
}
inline LieFieldGrid d_alpha(const LieWithRate& f, int alpha) {
  if (alpha == 0) return physical_copy(f.ut);
  return dx(f.u, alpha - 1);
}

// Q_0(u, v) = d_t u d_t v - sum_j d_j u d_j v
inline ScalarField q0(const ScalarWithRate& u, const ScalarWithRate& v) {
  u.u.require_same_grid(v.u);
  ScalarField r = dealiased_product(u.ut, v.ut, 2);
  for (int j = 1; j <= 2; ++j) r -= dealiased_product(d_alpha(u, j), d_alpha(v, j), 2);
  return r.to_physical();
}

// Q_{alpha beta}(u, v) = d_alpha u d_beta v - d_beta u d_alpha v (lower indices)
inline ScalarField q_alpha_beta(const ScalarWithRate& u, const ScalarWithRate& v, int alpha, int beta) {
  u.u.require_same_grid(v.u);
  ScalarField r = dealiased_product(d_alpha(u, alpha), d_alpha(v, beta), 2);
  r -= dealiased_product(d_alpha(u, beta), d_alpha(v, alpha), 2);
  return r.to_physical();
}

// Q_{alpha beta}[U, V] through the reduction Q(u_a, v_b) i f^{ab}_c T^c.
inline LieFieldGrid q_alpha_beta_bracket(const LieWithRate& U, const LieWithRate& V, int alpha, int beta,
                                         const GeneratorSet& g) {
  U.u[0].require_same_grid(V.u[0]);
  std::vector<ScalarWithRate> us, vs;
  for (int a = 0; a < g.dim(); ++a) {
    us.push_back({U.u[a], U.ut[a]});
    vs.push_back({V.u[a], V.ut[a]});
  }
  LieFieldGrid out(U.u.grid_ptr(), g.dim());
  for (const auto& e : g.nonzero()) {
    const ScalarField q = q_alpha_beta(us[e.a], vs[e.b], alpha, beta);
    out[e.c].axpy(I * e.value, q);
  }
  return out;
}

// Same quantity assembled with n x n matrices at every grid point.
inline LieFieldGrid q_alpha_beta_bracket_matrix(const LieWithRate& U, const LieWithRate& V, int alpha,
                                                int beta, const GeneratorSet& g) {
  auto prep = [&](const LieWithRate& F, int mu) { return band_project(d_alpha(F, mu), 2).to_physical(); };
  const LieFieldGrid ua = prep(U, alpha), ub = prep(U, beta), va = prep(V, alpha), vb = prep(V, beta);
  LieFieldGrid out(U.u.grid_ptr(), g.dim());
  const std::size_t n = out[0].size();
  LieElement x(g.dim()), y(g.dim()), z(g.dim()), w(g.dim());
  for (std::size_t k = 0; k < n; ++k) {
    for (int a = 0; a < g.dim(); ++a) {
      x[a] = ua[a][k];
      y[a] = vb[a][k];
      z[a] = ub[a][k];
      w[a] = va[a][k];
    }
    const Matrix X = g.to_matrix(x), Y = g.to_matrix(y), Z = g.to_matrix(z), W = g.to_matrix(w);
    const LieElement c = g.from_matrix(X * Y - Y * X - (Z * W - W * Z));
    for (int a = 0; a < g.dim(); ++a) out[a][k] = c[a];
  }
  band_project_inplace(out, 2);
  return out.to_physical();
}

// ---- symbols ------------------------------------------------------------------

using Vec2 = std::array<double, 2>;

inline double norm2(const Vec2& v) { return std::hypot(v[0], v[1]); }

// |angle(a, b)| in [0, pi] from atan2(|cross|, dot).
inline double angle_between(const Vec2& a, const Vec2& b) {
  const double cross = a[0] * b[1] - a[1] * b[0];
  const double dot = a[0] * b[0] + a[1] * b[1];
  return std::atan2(std::abs(cross), dot);
}

// q_{j0}(xi1, xi2) = -xi1_j |xi2| + |xi1| xi2_j, j in {1, 2}
inline double q_j0_symbol(const Vec2& x1, const Vec2& x2, int j) {
  return -x1[j - 1] * norm2(x2) + norm2(x1) * x2[j - 1];
}
// q_{jk}(xi1, xi2) = -xi1_j xi2_k + xi1_k xi2_j
inline double q_jk_symbol(const Vec2& x1, const Vec2& x2, int j, int k) {
  return -x1[j - 1] * x2[k - 1] + x1[k - 1] * x2[j - 1];
}

struct NullSymbolSample {
  Vec2 xi1, xi2;
  double q10, q20, q12, angle;
};

inline NullSymbolSample null_symbol_sample(const Vec2& x1, const Vec2& x2) {
  return {x1, x2, q_j0_symbol(x1, x2, 1), q_j0_symbol(x1, x2, 2), q_jk_symbol(x1, x2, 1, 2),
          angle_between(x1, x2)};
}

struct NullSymbolReport {
  long samples = 0;
  long degenerate_skipped = 0;
  long degenerate_flagged = 0;   // theta = 0 but q != 0
  double max_ratio_j0 = 0.0;     // max |q_j0| / (|xi1||xi2| theta)
  double max_ratio_jk = 0.0;     // max |q_jk| / (|xi1||xi2| theta)
  double max_collinear_q = 0.0;  // |q| / (|xi1||xi2|) on exactly collinear pairs
};

// Random nonzero pairs with log-uniform magnitudes and uniform directions,
// plus one exactly collinear pair (same or opposite orientation) per sample.
inline NullSymbolReport null_symbol_bound_scan(long samples, std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("null symbol scan needs at least one sample");
  NullSymbolReport r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(-pi, pi), logr(-3.0, 3.0);
  auto vec = [&](double theta, double lr) {
    const double m = std::pow(10.0, lr);
    return Vec2{m * std::cos(theta), m * std::sin(theta)};
  };
  for (long s = 0; s < samples; ++s) {
    const double t1 = ang(rng), t2 = ang(rng), l1 = logr(rng), l2 = logr(rng);
    const Vec2 a = vec(t1, l1), b = vec(t2, l2);
    const auto smp = null_symbol_sample(a, b);
    const double scale = norm2(a) * norm2(b);
    ++r.samples;
    if (smp.angle == 0.0) {
      if (smp.q10 == 0.0 && smp.q20 == 0.0 && smp.q12 == 0.0)
        ++r.degenerate_skipped;
      else
        ++r.degenerate_flagged;
    } else {
      const double den = scale * smp.angle;
      r.max_ratio_j0 = std::max({r.max_ratio_j0, std::abs(smp.q10) / den, std::abs(smp.q20) / den});
      r.max_ratio_jk = std::max(r.max_ratio_jk, std::abs(smp.q12) / den);
    }
    // collinear, same orientation: every symbol vanishes
    const double lam = std::pow(10.0, l2 - l1);
    const Vec2 c{lam * a[0], lam * a[1]};
    const auto col = null_symbol_sample(a, c);
    const double cs = norm2(a) * norm2(c);
    r.max_collinear_q = std::max({r.max_collinear_q, std::abs(col.q10) / cs, std::abs(col.q20) / cs,
                                  std::abs(col.q12) / cs});
  }
  return r;
}

// ---- Lorenz-gauge null decomposition ----------------------------------------

// Gauge potential snapshot A_mu, d_t A_mu (mu = 0, 1, 2, lower indices).
struct GaugeSnapshot {
  std::array<LieFieldGrid, 3> A, dA;
};

// ||d_t A_0 - d_1 A_1 - d_2 A_2|| relative to the size of its terms; this is
// d^mu A_mu = 0 under the (+,-,-) signature.
inline double lorenz_gauge_residual(const GaugeSnapshot& s) {
  LieFieldGrid div = dx(s.A[1], 0);
  div += dx(s.A[2], 1);
  const double den = l2_norm(s.dA[0]) + l2_norm(div);
  if (den == 0.0) return 0.0;
  return l2_norm(physical_copy(s.dA[0]) - div) / den;
}

// Random band-limited zero-mean A_mu, d_t A_j, with d_t A_0 := d_k A_k
// assigned spectrally.
inline GaugeSnapshot make_lorenz_snapshot(std::uint64_t seed, const GridPtr& grid, const GeneratorSet& g,
                                          double xi_max, double amplitude = 1.0) {
  std::mt19937_64 rng(seed);
  GaugeSnapshot s;
  for (int mu = 0; mu < 3; ++mu) s.A[mu] = random_lie_field(grid, g.dim(), xi_max, rng, amplitude);
  for (int mu = 1; mu < 3; ++mu) s.dA[mu] = random_lie_field(grid, g.dim(), xi_max, rng, amplitude);
  s.dA[0] = partial(s.A[1], 0);
  s.dA[0] += partial(s.A[2], 1);
  for (auto& f : s.A) f.to_physical();
  for (auto& f : s.dA) f.to_physical();
  return s;
}

inline LieWithRate make_matter_snapshot(std::uint64_t seed, const GridPtr& grid, const GeneratorSet& g,
                                        double xi_max, double amplitude = 1.0) {
  std::mt19937_64 rng(mix_seed(seed, 17));
  LieWithRate f{random_lie_field(grid, g.dim(), xi_max, rng, amplitude),
                random_lie_field(grid, g.dim(), xi_max, rng, amplitude)};
  f.u.to_physical();
  f.ut.to_physical();
  return f;
}

// Quadratic-band projection returned in physical form, ready for pointwise products.
inline LieFieldGrid in_band(const LieFieldGrid& u) { return band_project(u, 2).to_physical(); }

// [A^mu, d_mu phi] = [A_0, d_t phi] - sum_k [A_k, d_k phi]
inline LieFieldGrid gauge_coupling(const GaugeSnapshot& s, const LieWithRate& phi, const GeneratorSet& g) {
  LieFieldGrid out = zeros_like(phi.u);
  for (int mu = 0; mu < 3; ++mu)
    bracket_acc(out, eta(mu), in_band(s.A[mu]), in_band(d_alpha(phi, mu)), g);
  band_project_inplace(out, 2);
  return out.to_physical();
}

// (1/2) eps^{0jk} eps_{0lm} Q_{jk}[D^{-1} R_l A_m, phi] - Q_{j0}[R_j D^{-1} A_0, phi]
// with Euclidean spatial indices, R_j = D^{-1} d_j.
inline LieFieldGrid null_form_side(const GaugeSnapshot& s, const LieWithRate& phi, const GeneratorSet& g) {
  const auto eps = [](int j, int k) { return j == k ? 0.0 : (j == 1 ? 1.0 : -1.0); };
  const LieFieldGrid zero = zeros_like(phi.u);
  LieFieldGrid out = zeros_like(phi.u);
  // D^{-1} R_l A_m summed against eps_{0lm}: chi = D^{-2}(d_1 A_2 - d_2 A_1)
  LieFieldGrid chi = zeros_like(phi.u, Rep::Spectral);
  for (int l = 1; l <= 2; ++l)
    for (int m = 1; m <= 2; ++m) {
      if (l == m) continue;
      LieFieldGrid t = apply_multiplier(apply_multiplier(s.A[m], Multiplier::riesz(l - 1)), Multiplier::D(-1));
      t *= eps(l, m);
      chi += t;
    }
  chi.to_physical();
  for (int j = 1; j <= 2; ++j)
    for (int k = 1; k <= 2; ++k) {
      if (j == k) continue;
      LieFieldGrid q = q_alpha_beta_bracket({chi, zero}, phi, j, k, g);
      q *= 0.5 * eps(j, k);
      out += q;
    }
  for (int j = 1; j <= 2; ++j) {
    const Multiplier rj = Multiplier::riesz(j - 1), dinv = Multiplier::D(-1);
    LieWithRate b{apply_multiplier(apply_multiplier(s.A[0], dinv), rj).to_physical(),
                  apply_multiplier(apply_multiplier(s.dA[0], dinv), rj).to_physical()};
    out -= q_alpha_beta_bracket(b, phi, j, 0, g);
  }
  return out.to_physical();
}

struct NullDecompositionReport {
  double gauge_residual = 0.0;
  double lemma_residual = 0.0;       // relative L^2
  double corollary_residual = 0.0;   // max over mu, relative L^2
  double lemma_scale = 0.0;          // ||[A^mu, d_mu phi]||
};

inline NullDecompositionReport verify_null_decomposition(const GaugeSnapshot& s, const LieWithRate& phi,
                                                         const GeneratorSet& g, double gauge_tol = 1e-12) {
  NullDecompositionReport r;
  r.gauge_residual = lorenz_gauge_residual(s);
  if (r.gauge_residual > gauge_tol)
    throw PreconditionError("Lorenz gauge violated: relative residual " + std::to_string(r.gauge_residual));
  const LieFieldGrid lhs = gauge_coupling(s, phi, g);
  const LieFieldGrid rhs = null_form_side(s, phi, g);
  r.lemma_scale = l2_norm(lhs);
  r.lemma_residual = relative_residual(lhs, rhs);
  // [d^nu A_mu, A_nu] = -[A^nu, d_nu A_mu]: the same identity with phi -> A_mu.
  for (int mu = 0; mu < 3; ++mu) {
    const LieWithRate amu{s.A[mu], s.dA[mu]};
    LieFieldGrid left = zeros_like(amu.u);
    for (int nu = 0; nu < 3; ++nu)
      bracket_acc(left, eta(nu), in_band(d_alpha(amu, nu)), in_band(s.A[nu]), g);
    band_project_inplace(left, 2);
    left.to_physical();
    LieFieldGrid right = null_form_side(s, amu, g);
    right *= -1.0;
    r.corollary_residual = std::max(r.corollary_residual, relative_residual(left, right));
  }
  return r;
}

}  // namespace csh
