#pragma once

// Lorenz-gauge Chern-Simons-Higgs system as coupled nonlinear wave equations:
//   box phi   = -2[A^mu, d_mu phi] - [A_mu, [A^mu, phi]] - V'(phi)
//   box A_mu  = [d^nu A_mu, A_nu] - eps_{mu nu a} Q^{nu a}[phi^dag, phi]
//               - eps_{mu nu a} d^nu([phi^dag, [A^a, phi]] - [[A^a, phi]^dag, phi])
// with signature (+,-,-), eps_{012} = 1, and A_mu anti-Hermitian (imaginary
// coefficients in the Hermitian generator basis).

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "field_algebra.hpp"

namespace csh {

struct FieldState {
  LieFieldGrid phi, dphi;
  std::array<LieFieldGrid, 3> A, dA;
  double t = 0.0;
};

// Applies f(value, rate) to (phi, dphi) and each (A_mu, dA_mu).
template <class S, class F>
void for_each_pair(S& s, F&& f) {
  f(s.phi, s.dphi);
  for (int mu = 0; mu < 3; ++mu) f(s.A[mu], s.dA[mu]);
}

template <class S, class F>
void for_each_field(S& s, F&& f) {
  for_each_pair(s, [&](auto& u, auto& ut) {
    f(u);
    f(ut);
  });
}

inline FieldState zero_state(const GridPtr& grid, int dim, Rep rep = Rep::Spectral) {
  FieldState s;
  for_each_field(s, [&](LieFieldGrid& u) { u = LieFieldGrid(grid, dim, rep); });
  return s;
}

inline FieldState& to_spectral(FieldState& s) {
  for_each_field(s, [](LieFieldGrid& u) { u.to_spectral(); });
  return s;
}
inline FieldState& to_physical(FieldState& s) {
  for_each_field(s, [](LieFieldGrid& u) { u.to_physical(); });
  return s;
}

// y += a * x, field by field (time stamps untouched).
inline void axpy(FieldState& y, cplx a, const FieldState& x) {
  auto one = [&](LieFieldGrid& u, const LieFieldGrid& v) {
    for (int c = 0; c < u.dim(); ++c) u[c].axpy(a, v[c]);
  };
  one(y.phi, x.phi);
  one(y.dphi, x.dphi);
  for (int mu = 0; mu < 3; ++mu) {
    one(y.A[mu], x.A[mu]);
    one(y.dA[mu], x.dA[mu]);
  }
}

inline FieldState difference(const FieldState& a, const FieldState& b) {
  FieldState d = a;
  axpy(d, -1.0, b);
  return d;
}

inline bool all_finite(const FieldState& s) {
  bool ok = true;
  for_each_field(s, [&](const LieFieldGrid& u) {
    for (const auto& c : u.comp)
      for (const auto& z : c.data())
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) ok = false;
  });
  return ok;
}

// sqrt(sum ||u||_{H^s}^2 + ||u_t||_{H^{s-1}}^2) over (phi, A_0, A_1, A_2).
inline double state_norm(const FieldState& s, double sigma) {
  double acc = 0.0;
  for_each_pair(s, [&](const LieFieldGrid& u, const LieFieldGrid& ut) {
    acc += std::pow(sobolev_norm(u, sigma), 2) + std::pow(sobolev_norm(ut, sigma - 1.0), 2);
  });
  return std::sqrt(acc);
}

struct InitialData {
  LieFieldGrid f, g;
  std::array<LieFieldGrid, 3> a;
};

struct EvolutionConfig {
  PhysicsParams physics;
  double higgs_sign = 1.0;         // +1: box phi = ... - V' ; -1: box phi = ... + V'
  bool covariant_current = false;  // D^k f instead of d^k f in d_t A_j(0)
  int dealias_order = 5;           // 0 disables spectral truncation
  bool linear_only = false;        // drop every nonlinear term
};

// ---- pointwise building blocks -----------------------------------------------

inline double levi_civita(int a, int b, int c) { return (a - b) * (b - c) * (c - a) / 2.0; }

// Spectral copy restricted to the dealiasing band (order 0: no truncation).
inline LieFieldGrid band_spectral(const LieFieldGrid& u, int order) {
  LieFieldGrid r = u;
  if (order == 0) return r.to_spectral();
  band_project_inplace(r, order);
  return r;
}

// All first derivatives of the state, physical, on the dealiasing band.
struct Kinematics {
  LieFieldGrid phi, phi_dag;
  std::array<LieFieldGrid, 3> dphi, dphi_dag;   // d_nu phi
  std::array<LieFieldGrid, 3> A;                // A_mu
  std::array<std::array<LieFieldGrid, 3>, 3> dA;  // dA[nu][mu] = d_nu A_mu
};

inline Kinematics kinematics(const FieldState& s, int order) {
  Kinematics k;
  const LieFieldGrid ph = band_spectral(s.phi, order);
  k.phi = physical_copy(ph);
  k.dphi[0] = band_spectral(s.dphi, order).to_physical();
  for (int j = 1; j <= 2; ++j) k.dphi[j] = dx(ph, j - 1);
  k.phi_dag = dagger(k.phi);
  for (int nu = 0; nu < 3; ++nu) k.dphi_dag[nu] = dagger(k.dphi[nu]);
  for (int mu = 0; mu < 3; ++mu) {
    const LieFieldGrid a = band_spectral(s.A[mu], order);
    k.A[mu] = physical_copy(a);
    k.dA[0][mu] = band_spectral(s.dA[mu], order).to_physical();
    for (int j = 1; j <= 2; ++j) k.dA[j][mu] = dx(a, j - 1);
  }
  return k;
}

inline void finish_term(LieFieldGrid& u, int order) {
  if (order == 0)
    u.to_spectral();
  else
    band_project_inplace(u, order);
}

// -2[A^mu, d_mu phi] - [A_mu, [A^mu, phi]] - sign * V'(phi), spectral.
inline LieFieldGrid matter_terms(const Kinematics& k, const GeneratorSet& g, const EvolutionConfig& cfg) {
  LieFieldGrid out = zeros_like(k.phi);
  LieFieldGrid inner = zeros_like(k.phi);
  for (int mu = 0; mu < 3; ++mu) {
    bracket_acc(out, -2.0 * eta(mu), k.A[mu], k.dphi[mu], g);
    inner = zeros_like(k.phi);
    bracket_acc(inner, 1.0, k.A[mu], k.phi, g);
    bracket_acc(out, -eta(mu), k.A[mu], inner, g);
  }
  if (cfg.higgs_sign != 0.0) {
    const int d = g.dim();
    const double scale = -cfg.higgs_sign / (cfg.physics.kappa * cfg.physics.kappa);
    std::vector<cplx> x(d), y(d), work(4 * d);
    const std::size_t n = out[0].size();
    for (std::size_t p = 0; p < n; ++p) {
      for (int a = 0; a < d; ++a) x[a] = k.phi[a][p];
      detail::higgs_gradient_raw(x.data(), g, cfg.physics.v, y.data(), work.data());
      for (int a = 0; a < d; ++a) out[a][p] += scale * y[a];
    }
  }
  finish_term(out, cfg.dealias_order);
  return out;
}

// C^a = [phi^dag, [A^a, phi]] - [[A^a, phi]^dag, phi] and its time derivative.
struct CubicCurrent {
  std::array<LieFieldGrid, 3> C, Ct;
};

inline CubicCurrent cubic_current(const Kinematics& k, const GeneratorSet& g) {
  CubicCurrent cc;
  for (int a = 0; a < 3; ++a) {
    const double s = eta(a);  // raise the index
    LieFieldGrid X = zeros_like(k.phi), Xt = zeros_like(k.phi);
    bracket_acc(X, s, k.A[a], k.phi, g);
    bracket_acc(Xt, s, k.dA[0][a], k.phi, g);
    bracket_acc(Xt, s, k.A[a], k.dphi[0], g);
    const LieFieldGrid Xd = dagger(X), Xtd = dagger(Xt);
    cc.C[a] = zeros_like(k.phi);
    bracket_acc(cc.C[a], 1.0, k.phi_dag, X, g);
    bracket_acc(cc.C[a], -1.0, Xd, k.phi, g);
    cc.Ct[a] = zeros_like(k.phi);
    bracket_acc(cc.Ct[a], 1.0, k.dphi_dag[0], X, g);
    bracket_acc(cc.Ct[a], 1.0, k.phi_dag, Xt, g);
    bracket_acc(cc.Ct[a], -1.0, Xtd, k.phi, g);
    bracket_acc(cc.Ct[a], -1.0, Xd, k.dphi[0], g);
  }
  return cc;
}

// Right side of box A_mu, spectral.
inline LieFieldGrid gauge_terms(const Kinematics& k, const CubicCurrent& cc, int mu, const GeneratorSet& g,
                                const EvolutionConfig& cfg) {
  LieFieldGrid phys = zeros_like(k.phi);
  for (int nu = 0; nu < 3; ++nu) bracket_acc(phys, eta(nu), k.dA[nu][mu], k.A[nu], g);
  LieFieldGrid spec = zeros_like(k.phi, Rep::Spectral);
  for (int nu = 0; nu < 3; ++nu)
    for (int a = 0; a < 3; ++a) {
      const double e = levi_civita(mu, nu, a);
      if (e == 0.0) continue;
      // Q_{nu a}[phi^dag, phi] = [d_nu phi^dag, d_a phi] - [d_a phi^dag, d_nu phi]
      const double c = -e * eta(nu) * eta(a);
      bracket_acc(phys, c, k.dphi_dag[nu], k.dphi[a], g);
      bracket_acc(phys, -c, k.dphi_dag[a], k.dphi[nu], g);
      // -eps d^nu C^a
      if (nu == 0) {
        for (int b = 0; b < g.dim(); ++b) phys[b].axpy(-e, cc.Ct[a][b]);
      } else {
        LieFieldGrid d = partial(cc.C[a], nu - 1);
        for (int b = 0; b < g.dim(); ++b) spec[b].axpy(e, d[b]);
      }
    }
  phys.to_spectral();
  phys += spec;
  finish_term(phys, cfg.dealias_order);
  return phys;
}

inline LieFieldGrid rhs_phi(const FieldState& s, const GeneratorSet& g, const EvolutionConfig& cfg) {
  LieFieldGrid r = matter_terms(kinematics(s, cfg.dealias_order), g, cfg);
  return r.to_physical();
}

inline LieFieldGrid rhs_A(const FieldState& s, int mu, const GeneratorSet& g, const EvolutionConfig& cfg) {
  if (mu < 0 || mu > 2) throw PreconditionError("gauge index must be 0, 1 or 2");
  const Kinematics k = kinematics(s, cfg.dealias_order);
  LieFieldGrid r = gauge_terms(k, cubic_current(k, g), mu, g, cfg);
  return r.to_physical();
}

// The first-order vector field (u, u_t) -> (0, box^{-1}-free nonlinearity), spectral.
inline FieldState nonlinear_field(const FieldState& s, const GeneratorSet& g, const EvolutionConfig& cfg) {
  FieldState r = zero_state(s.phi.grid_ptr(), s.phi.dim());
  r.t = s.t;
  if (cfg.linear_only) return r;
  const Kinematics k = kinematics(s, cfg.dealias_order);
  r.dphi = matter_terms(k, g, cfg);
  const CubicCurrent cc = cubic_current(k, g);
  for (int mu = 0; mu < 3; ++mu) r.dA[mu] = gauge_terms(k, cc, mu, g, cfg);
  return r;
}

// ---- data -------------------------------------------------------------------

struct InitialRates {
  LieFieldGrid dA0;
  std::array<LieFieldGrid, 2> dAj;
};

// [f^dag, Df] - [(Df)^dag, f] for a physical field Df.
inline LieFieldGrid current_of(const LieFieldGrid& f, const LieFieldGrid& Df, const GeneratorSet& g) {
  LieFieldGrid out = zeros_like(f);
  bracket_acc(out, 1.0, dagger(f), Df, g);
  bracket_acc(out, -1.0, dagger(Df), f, g);
  return out;
}

// d_t A_0(0) = -d^j a_j and
// d_t A_j(0) = d_j a_0 - [a_0, a_j] + eps_{0jk}([f^dag, d^k f] - [(d^k f)^dag, f]),
// with d^k f replaced by D^k f = d^k f + [a^k, f] when `covariant` is set.
inline InitialRates initial_time_derivatives(const InitialData& d, const GeneratorSet& g, bool covariant = false,
                                             int order = 5) {
  InitialRates r;
  const LieFieldGrid f = band_spectral(d.f, order);
  const LieFieldGrid fp = physical_copy(f);
  std::array<LieFieldGrid, 3> a;
  for (int mu = 0; mu < 3; ++mu) a[mu] = band_spectral(d.a[mu], order);
  r.dA0 = partial(a[1], 0);
  r.dA0 += partial(a[2], 1);
  finish_term(r.dA0, order);
  r.dA0.to_physical();
  std::array<LieFieldGrid, 3> Jk;  // J^k for k = 1, 2
  for (int kk = 1; kk <= 2; ++kk) {
    LieFieldGrid Df = dx(f, kk - 1);
    Df *= -1.0;  // d^k = -d_k
    if (covariant) bracket_acc(Df, -1.0, physical_copy(a[kk]), fp, g);  // a^k = -a_k
    Jk[kk] = current_of(fp, Df, g);
  }
  const LieFieldGrid a0 = physical_copy(a[0]);
  for (int j = 1; j <= 2; ++j) {
    LieFieldGrid out = zeros_like(fp);
    bracket_acc(out, -1.0, a0, physical_copy(a[j]), g);
    for (int kk = 1; kk <= 2; ++kk) {
      const double e = levi_civita(0, j, kk);
      if (e != 0.0) out += e * Jk[kk];
    }
    out.to_spectral();
    out += partial(a[0], j - 1);
    finish_term(out, order);
    r.dAj[j - 1] = out.to_physical();
  }
  return r;
}

inline FieldState make_state(const InitialData& d, const GeneratorSet& g, const EvolutionConfig& cfg) {
  FieldState s;
  s.phi = physical_copy(d.f);
  s.dphi = physical_copy(d.g);
  for (int mu = 0; mu < 3; ++mu) s.A[mu] = physical_copy(d.a[mu]);
  const InitialRates r = initial_time_derivatives(d, g, cfg.covariant_current, cfg.dealias_order);
  s.dA[0] = r.dA0;
  s.dA[1] = r.dAj[0];
  s.dA[2] = r.dAj[1];
  return s;
}

// Smooth data that satisfy the constraint identically: random f and
// anti-Hermitian a_0, a_1 = a_2 = 0, and g = beta f - [a_0, f] with beta real,
// so that g + [a_0, f] = beta f and both constraint sides vanish. All inputs
// live on |xi| <= xi_max; pick xi_max so that the cubic products stay inside
// the dealiasing band.
inline InitialData gauss_compatible_data(const GridPtr& grid, const GeneratorSet& g, std::uint64_t seed,
                                         double amplitude, double xi_max) {
  std::mt19937_64 rng(seed);
  InitialData d;
  d.f = random_lie_field(grid, g.dim(), xi_max, rng, amplitude).to_physical();
  d.a[0] = I * real_part(random_lie_field(grid, g.dim(), xi_max, rng, amplitude));
  d.a[1] = zeros_like(d.f);
  d.a[2] = zeros_like(d.f);
  ScalarField beta = random_band_limited(grid, xi_max, rng, amplitude, false).to_physical();
  for (auto& z : beta.data()) z = z.real();
  d.g = zeros_like(d.f);
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t p = 0; p < beta.size(); ++p) d.g[a][p] = beta[p] * d.f[a][p];
  bracket_acc(d.g, -1.0, d.a[0], d.f, g);
  return d;
}

// ---- gauge and constraint diagnostics ---------------------------------------

// d^mu A_mu = d_t A_0 - d_1 A_1 - d_2 A_2, physical.
inline LieFieldGrid lorenz_divergence(const FieldState& s, int order) {
  LieFieldGrid r = band_spectral(s.dA[0], order);
  r -= partial(band_spectral(s.A[1], order), 0);
  r -= partial(band_spectral(s.A[2], order), 1);
  return r.to_physical();
}

// F_{mu nu} - eps_{mu nu a} J^a for (mu, nu) = (0,1), (0,2), (1,2), together
// with the two sides separately.
struct FieldStrengthCheck {
  std::array<LieFieldGrid, 3> F, epsJ;
};

inline FieldStrengthCheck field_strength_check(const FieldState& s, const GeneratorSet& g, int order) {
  const Kinematics k = kinematics(s, order);
  std::array<LieFieldGrid, 3> J;
  for (int a = 0; a < 3; ++a) {
    LieFieldGrid Dphi = physical_copy(k.dphi[a]);
    bracket_acc(Dphi, 1.0, k.A[a], k.phi, g);
    Dphi *= eta(a);
    J[a] = current_of(k.phi, Dphi, g);
  }
  FieldStrengthCheck c;
  const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
  for (int p = 0; p < 3; ++p) {
    const auto [mu, nu] = pairs[p];
    LieFieldGrid F = k.dA[mu][nu] - k.dA[nu][mu];
    bracket_acc(F, 1.0, k.A[mu], k.A[nu], g);
    LieFieldGrid E = zeros_like(F);
    for (int a = 0; a < 3; ++a) {
      const double e = levi_civita(mu, nu, a);
      if (e != 0.0) E += e * J[a];
    }
    finish_term(F, order);
    finish_term(E, order);
    c.F[p] = F.to_physical();
    c.epsJ[p] = E.to_physical();
  }
  return c;
}

// ||d_1 a_2 - d_2 a_1 + [a_1, a_2] - [f^dag, g + [a_0, f]] + [(g + [a_0, f])^dag, f]||_{L^2}
inline double constraint_residual(const InitialData& d, const GeneratorSet& g, int order = 5) {
  FieldState s;
  s.phi = d.f;
  s.dphi = d.g;
  for (int mu = 0; mu < 3; ++mu) {
    s.A[mu] = d.a[mu];
    s.dA[mu] = zeros_like(d.f);
  }
  const auto c = field_strength_check(s, g, order);
  return l2_norm(c.F[2] - c.epsJ[2]);
}

struct MonitorFrame {
  double t = 0.0;
  double gauge_residual = 0.0;       // ||d^mu A_mu||
  double gauge_relative = 0.0;       // divided by (sum_mu ||d_t A_mu||^2 + ||grad A_mu||^2)^{1/2}
  double constraint_residual = 0.0;  // ||F - eps J|| over all index pairs
  double constraint_relative = 0.0;  // divided by ||F|| + ||eps J||
  double gauss_residual = 0.0;       // the (1,2) component alone
  double hs_phi = 0.0, hs_A = 0.0;
};

inline MonitorFrame monitor_frame(const FieldState& s, const GeneratorSet& g, int order, double sobolev_s) {
  MonitorFrame m;
  m.t = s.t;
  m.gauge_residual = l2_norm(lorenz_divergence(s, order));
  double scale = 0.0;
  for (int mu = 0; mu < 3; ++mu) {
    scale += std::pow(l2_norm(s.dA[mu]), 2);
    for (int j = 0; j < 2; ++j) scale += std::pow(l2_norm(partial(s.A[mu], j)), 2);
  }
  scale = std::sqrt(scale);
  m.gauge_relative = scale > 0.0 ? m.gauge_residual / scale : 0.0;
  const auto c = field_strength_check(s, g, order);
  double res = 0.0, nf = 0.0, nj = 0.0;
  for (int p = 0; p < 3; ++p) {
    res += std::pow(l2_norm(c.F[p] - c.epsJ[p]), 2);
    nf += std::pow(l2_norm(c.F[p]), 2);
    nj += std::pow(l2_norm(c.epsJ[p]), 2);
  }
  m.constraint_residual = std::sqrt(res);
  const double den = std::sqrt(nf) + std::sqrt(nj);
  m.constraint_relative = den > 0.0 ? m.constraint_residual / den : 0.0;
  m.gauss_residual = l2_norm(c.F[2] - c.epsJ[2]);
  m.hs_phi = sobolev_norm(s.phi, sobolev_s);
  double acc = 0.0;
  for (int mu = 0; mu < 3; ++mu) acc += std::pow(sobolev_norm(s.A[mu], sobolev_s), 2);
  m.hs_A = std::sqrt(acc);
  return m;
}

inline std::vector<MonitorFrame> monitor(const std::vector<FieldState>& trajectory, const GeneratorSet& g,
                                         int order = 5, double sobolev_s = 0.75) {
  std::vector<MonitorFrame> out;
  out.reserve(trajectory.size());
  for (const auto& s : trajectory) out.push_back(monitor_frame(s, g, order, sobolev_s));
  return out;
}

// ---- linear flow ------------------------------------------------------------

// Exact free wave group on each (u, u_t):
// [cos tD, sin(tD)/D; -D sin tD, cos tD], regular at xi = 0.
inline void wave_group(FieldState& s, double t) {
  const Grid2D& gr = s.phi.grid();
  const int M = gr.M();
  std::vector<double> c(gr.size()), sd(gr.size()), ds(gr.size());
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * M + j;
      const double r = gr.xi_norm(i, j);
      c[k] = std::cos(r * t);
      sd[k] = r > 0.0 ? std::sin(r * t) / r : t;
      ds[k] = -r * std::sin(r * t);
    }
  for_each_pair(s, [&](LieFieldGrid& u, LieFieldGrid& ut) {
    u.to_spectral();
    ut.to_spectral();
    for (int a = 0; a < u.dim(); ++a) {
      cplx* x = u[a].data().data();
      cplx* y = ut[a].data().data();
      for (std::size_t k = 0; k < c.size(); ++k) {
        const cplx xv = x[k], yv = y[k];
        x[k] = c[k] * xv + sd[k] * yv;
        y[k] = ds[k] * xv + c[k] * yv;
      }
    }
  });
  s.t += t;
}

inline FieldState propagated(FieldState s, double t) {
  wave_group(s, t);
  return s;
}

// ---- half waves -------------------------------------------------------------

// u_pm = (u +- (1/iD) u_t) / 2. The xi = 0 mode of u_t is invisible to 1/iD,
// so it is carried separately to keep the map invertible on all data.
struct HalfWaveState {
  LieFieldGrid phi_plus, phi_minus;
  std::array<LieFieldGrid, 3> A_plus, A_minus;
  LieElement mean_dphi;
  std::array<LieElement, 3> mean_dA;
  double t = 0.0;
};

inline LieElement zero_mode(const LieFieldGrid& u) {
  LieElement m(u.dim());
  for (int a = 0; a < u.dim(); ++a) m[a] = u[a].spectral().at(0, 0);
  return m;
}

inline void split_pair(const LieFieldGrid& u, const LieFieldGrid& ut, LieFieldGrid& plus, LieFieldGrid& minus,
                       LieElement& mean) {
  LieFieldGrid w = apply_multiplier(ut, Multiplier::D(-1.0));
  w *= -I;  // 1/(iD)
  LieFieldGrid half = u;
  half.to_spectral();
  half *= 0.5;
  w *= 0.5;
  plus = half + w;
  minus = half - w;
  plus.to_physical();
  minus.to_physical();
  mean = zero_mode(ut);
}

inline void join_pair(const LieFieldGrid& plus, const LieFieldGrid& minus, const LieElement& mean,
                      LieFieldGrid& u, LieFieldGrid& ut) {
  u = plus + minus;
  u.to_physical();
  LieFieldGrid d = plus - minus;
  ut = apply_multiplier(d, Multiplier::D(1.0));
  ut *= I;
  for (int a = 0; a < ut.dim(); ++a) ut[a].at(0, 0) = mean[a];
  ut.to_physical();
}

inline HalfWaveState split_to_halfwaves(const FieldState& s) {
  HalfWaveState h;
  h.t = s.t;
  split_pair(s.phi, s.dphi, h.phi_plus, h.phi_minus, h.mean_dphi);
  for (int mu = 0; mu < 3; ++mu) split_pair(s.A[mu], s.dA[mu], h.A_plus[mu], h.A_minus[mu], h.mean_dA[mu]);
  return h;
}

inline FieldState from_halfwaves(const HalfWaveState& h) {
  FieldState s;
  s.t = h.t;
  join_pair(h.phi_plus, h.phi_minus, h.mean_dphi, s.phi, s.dphi);
  for (int mu = 0; mu < 3; ++mu) join_pair(h.A_plus[mu], h.A_minus[mu], h.mean_dA[mu], s.A[mu], s.dA[mu]);
  return s;
}

// (1/2) e^{-+ itD} (psi -+ (1/iD) psi_t) for sign = +-1. The sign +1 piece is
// the half wave that travels as e^{-itD}, i.e. the split component u_-.
inline LieFieldGrid homogeneous_solution(const LieFieldGrid& psi, const LieFieldGrid& psi_t, double t, int sign) {
  if (sign != 1 && sign != -1) throw PreconditionError("sign must be +1 or -1");
  const LieElement m = zero_mode(psi_t);
  if (m.norm() > 1e-12 * (1.0 + l2_norm(psi_t)))
    throw PreconditionError("homogeneous_solution needs a zero-mean time derivative");
  LieFieldGrid w = apply_multiplier(psi_t, Multiplier::D(-1.0));
  w *= -I * static_cast<double>(-sign);
  LieFieldGrid r = psi;
  r.to_spectral();
  r += w;
  r *= 0.5;
  r = apply_symbol(r, [&](double x1, double x2) { return std::exp(-I * (sign * t * std::hypot(x1, x2))); });
  return r.to_physical();
}

// ---- time stepping ----------------------------------------------------------

// Classical RK4 on w = E(-t) u (integrating-factor form): the free wave flow is
// exact and the four stages sample the nonlinearity.
inline FieldState step(const FieldState& s0, double dt, const GeneratorSet& g, const EvolutionConfig& cfg) {
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  FieldState u = s0;
  to_spectral(u);
  const double h = dt;
  const FieldState k1 = nonlinear_field(u, g, cfg);
  FieldState uh = propagated(u, 0.5 * h);  // E(h/2) u
  FieldState s2 = uh;
  axpy(s2, 0.5 * h, propagated(k1, 0.5 * h));
  const FieldState k2 = nonlinear_field(s2, g, cfg);
  FieldState s3 = uh;
  axpy(s3, 0.5 * h, k2);
  const FieldState k3 = nonlinear_field(s3, g, cfg);
  FieldState s4 = propagated(u, h);
  axpy(s4, h, propagated(k3, 0.5 * h));
  const FieldState k4 = nonlinear_field(s4, g, cfg);

  FieldState mid = k2;
  axpy(mid, 1.0, k3);
  FieldState out = propagated(u, h);
  axpy(out, h / 6.0, propagated(k1, h));
  axpy(out, h / 3.0, propagated(mid, 0.5 * h));
  axpy(out, h / 6.0, k4);
  out.t = s0.t + h;
  if (!all_finite(out)) throw BlowUpError("non-finite field values", out.t);
  return out;
}

inline HalfWaveState step(const HalfWaveState& h, double dt, const GeneratorSet& g, const EvolutionConfig& cfg) {
  return split_to_halfwaves(step(from_halfwaves(h), dt, g, cfg));
}

// Evolves to time T with fixed dt; frames every `stride` steps plus the last.
inline std::vector<FieldState> evolve(const FieldState& s0, double T, double dt, int stride, const GeneratorSet& g,
                                      const EvolutionConfig& cfg) {
  if (!(T >= 0.0) || !(dt > 0.0) || stride < 1) throw PreconditionError("need T >= 0, dt > 0, stride >= 1");
  const long n = std::lround(T / dt);
  if (std::abs(n * dt - T) > 1e-9 * std::max(1.0, T)) throw PreconditionError("T must be a multiple of dt");
  std::vector<FieldState> frames;
  FieldState s = s0;
  to_spectral(s);
  frames.push_back(s);
  for (long i = 1; i <= n; ++i) {
    s = step(s, dt, g, cfg);
    s.t = s0.t + i * dt;
    if (i % stride == 0 || i == n) frames.push_back(s);
  }
  return frames;
}

// ---- Picard iteration -------------------------------------------------------

struct PicardOptions {
  int mesh_intervals = 20;         // fixed time mesh t_i = i T / n
  double sobolev_s = 1.0;          // difference norm: H^s for fields, H^{s-1} for rates
  double smallness_bound = 1.0;    // reject data with larger H^1 x L^2 norm
  double constraint_tol = 1e-8;    // relative to 1 + data norm
  bool keep_iterates = false;
};

struct PicardReport {
  std::vector<double> times;
  std::vector<double> differences;  // sup_i ||u^{k+1}(t_i) - u^k(t_i)||
  std::vector<double> ratios;       // differences[k+1] / differences[k]
  bool contracted = true;
  int iterations_run = 0;
  std::vector<FieldState> trajectory;                 // last iterate on the mesh
  std::vector<std::vector<FieldState>> iterates;      // all iterates if requested
};

inline double data_norm(const InitialData& d) {
  double acc = std::pow(sobolev_norm(d.f, 1.0), 2) + std::pow(l2_norm(d.g), 2);
  for (const auto& a : d.a) acc += std::pow(sobolev_norm(a, 1.0), 2);
  return std::sqrt(acc);
}

// Cumulative integrals I_i = int_0^{t_i} g on a uniform mesh: interval-wise
// 4-point interpolatory rule, one-sided at both ends (exact for cubics).
inline std::vector<FieldState> cumulative_integral(const std::vector<FieldState>& gs, double h) {
  const std::size_t n = gs.size() - 1;
  if (n < 3) throw PreconditionError("cumulative quadrature needs at least 3 intervals");
  std::vector<FieldState> I(gs.size());
  I[0] = gs[0];
  axpy(I[0], -1.0, gs[0]);
  for (std::size_t i = 0; i < n; ++i) {
    I[i + 1] = I[i];
    const double w = h / 24.0;
    if (i == 0) {
      axpy(I[1], 9 * w, gs[0]);
      axpy(I[1], 19 * w, gs[1]);
      axpy(I[1], -5 * w, gs[2]);
      axpy(I[1], w, gs[3]);
    } else if (i == n - 1) {
      axpy(I[n], w, gs[n - 3]);
      axpy(I[n], -5 * w, gs[n - 2]);
      axpy(I[n], 19 * w, gs[n - 1]);
      axpy(I[n], 9 * w, gs[n]);
    } else {
      axpy(I[i + 1], -w, gs[i - 1]);
      axpy(I[i + 1], 13 * w, gs[i]);
      axpy(I[i + 1], 13 * w, gs[i + 1]);
      axpy(I[i + 1], -w, gs[i + 2]);
    }
  }
  return I;
}

// u^{k+1}(t) = E(t) [u_0 + int_0^t E(-s) N(u^k(s)) ds], u^0(t) = E(t) u_0.
inline PicardReport picard_iterate(const InitialData& data, double T, int iterations, const GeneratorSet& g,
                                   const EvolutionConfig& cfg, const PicardOptions& opt = {}) {
  if (iterations < 1 || !(T > 0.0)) throw PreconditionError("need T > 0 and at least one iteration");
  const double dn = data_norm(data);
  if (dn > opt.smallness_bound)
    throw PreconditionError("data norm " + std::to_string(dn) + " exceeds smallness bound");
  const double cr = constraint_residual(data, g, cfg.dealias_order);
  if (cr > opt.constraint_tol * (1.0 + dn))
    throw PreconditionError("initial data violate the constraint: residual " + std::to_string(cr));

  PicardReport rep;
  const int n = opt.mesh_intervals;
  const double h = T / n;
  for (int i = 0; i <= n; ++i) rep.times.push_back(i * h);
  FieldState u0 = make_state(data, g, cfg);
  to_spectral(u0);
  std::vector<FieldState> cur(n + 1);
  for (int i = 0; i <= n; ++i) cur[i] = propagated(u0, rep.times[i]);
  if (opt.keep_iterates) rep.iterates.push_back(cur);

  int grows = 0;
  for (int k = 0; k < iterations; ++k) {
    std::vector<FieldState> gs(n + 1);
    for (int i = 0; i <= n; ++i) gs[i] = propagated(nonlinear_field(cur[i], g, cfg), -rep.times[i]);
    std::vector<FieldState> I = cumulative_integral(gs, h);
    gs.clear();
    double diff = 0.0;
    for (int i = 0; i <= n; ++i) {
      FieldState next = u0;
      axpy(next, 1.0, I[i]);
      next.t = 0.0;
      wave_group(next, rep.times[i]);
      if (!all_finite(next)) throw BlowUpError("non-finite Picard iterate", rep.times[i]);
      diff = std::max(diff, state_norm(difference(next, cur[i]), opt.sobolev_s));
      cur[i] = std::move(next);
    }
    rep.iterations_run = k + 1;
    if (!rep.differences.empty()) {
      const double prev = rep.differences.back();
      const double ratio = prev > 0.0 ? diff / prev : 0.0;
      rep.ratios.push_back(ratio);
      grows = ratio >= 1.0 ? grows + 1 : 0;
    }
    rep.differences.push_back(diff);
    if (opt.keep_iterates) rep.iterates.push_back(cur);
    if (grows >= 3) {
      rep.contracted = false;
      break;
    }
    if (diff == 0.0) break;
  }
  rep.trajectory = std::move(cur);
  return rep;
}

}  // namespace csh
