#pragma once

// Pointwise su(n) calculus on gridded fields: commutators through the
// structure constants, coefficient-level adjoints, spectral derivatives.

#include "lie_kernel.hpp"
#include "spectral_grid.hpp"

namespace csh {

// Minkowski metric (+,-,-) on an index.
inline double eta(int mu) { return mu == 0 ? 1.0 : -1.0; }

template <class Symbol>
LieFieldGrid apply_symbol(const LieFieldGrid& u, Symbol&& m) {
  LieFieldGrid r;
  r.comp.reserve(u.comp.size());
  for (const auto& c : u.comp) r.comp.push_back(apply_symbol(c, m));
  return r;
}

inline LieFieldGrid physical_copy(const LieFieldGrid& u) {
  LieFieldGrid r = u;
  return r.to_physical();
}

inline LieFieldGrid zeros_like(const LieFieldGrid& u, Rep rep = Rep::Physical) {
  return LieFieldGrid(u.grid_ptr(), u.dim(), rep);
}

// out += s * [U, V], all physical.
inline void bracket_acc(LieFieldGrid& out, cplx s, const LieFieldGrid& U, const LieFieldGrid& V,
                        const GeneratorSet& g) {
  const std::size_t n = out[0].size();
  for (const auto& e : g.nonzero()) {
    const cplx c = s * I * e.value;
    const cplx* u = U[e.a].data().data();
    const cplx* v = V[e.b].data().data();
    cplx* w = out[e.c].data().data();
    for (std::size_t k = 0; k < n; ++k) w[k] += c * u[k] * v[k];
  }
}

inline LieFieldGrid bracket(const LieFieldGrid& U, const LieFieldGrid& V, const GeneratorSet& g) {
  const LieFieldGrid u = physical_copy(U), v = physical_copy(V);
  LieFieldGrid out = zeros_like(u);
  bracket_acc(out, 1.0, u, v, g);
  return out;
}

// Coefficient-level adjoint (Hermitian basis): conjugate every component.
inline LieFieldGrid dagger(const LieFieldGrid& U) {
  LieFieldGrid r = physical_copy(U);
  for (auto& c : r.comp)
    for (auto& z : c.data()) z = std::conj(z);
  return r;
}

// Real part of every component in physical space (Hermitian-valued field).
inline LieFieldGrid real_part(const LieFieldGrid& U) {
  LieFieldGrid r = physical_copy(U);
  for (auto& c : r.comp)
    for (auto& z : c.data()) z = z.real();
  return r;
}

// Spatial derivative d_{axis+1}, returned in physical representation.
inline LieFieldGrid dx(const LieFieldGrid& U, int axis) {
  LieFieldGrid r = partial(U, axis);
  return r.to_physical();
}

inline void band_project_inplace(LieFieldGrid& U, int order) {
  for (auto& c : U.comp) band_project_inplace(c, order);
}

inline LieFieldGrid band_project(const LieFieldGrid& U, int order) {
  LieFieldGrid r = U;
  band_project_inplace(r, order);
  return r;
}

inline LieFieldGrid combine(cplx a, const LieFieldGrid& U, cplx b, const LieFieldGrid& V) {
  LieFieldGrid r = U;
  r *= a;
  for (int c = 0; c < r.dim(); ++c) r[c].axpy(b, V[c]);
  return r;
}

// Relative L^2 distance ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_residual(const LieFieldGrid& a, const LieFieldGrid& b) {
  const double den = std::max(l2_norm(a), l2_norm(b));
  if (den == 0.0) return 0.0;
  return l2_norm(a - b) / den;
}

}  // namespace csh
