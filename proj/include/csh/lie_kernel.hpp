#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"

namespace csh {

using LieElement = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

struct StructureEntry {
  int a, b, c;
  double value;
};

// Traceless Hermitian basis of su(n) normalised to Tr(T^a T^b) = 2 delta^{ab},
// with the structure constants [T^a, T^b] = i f^{ab}_c T^c cached both densely
// and as a sparse triplet list (su(2): 6 of 27 entries are nonzero).
class GeneratorSet {
 public:
  explicit GeneratorSet(int n) : n_(n) {
    if (n < 2) throw DimensionError("su(n) requires n >= 2, got " + std::to_string(n));
    build_gell_mann();
    build_structure_constants();
  }

  int n() const { return n_; }
  int dim() const { return static_cast<int>(gens_.size()); }
  const Matrix& generator(int a) const { return gens_[a]; }
  const std::vector<Matrix>& generators() const { return gens_; }

  double f(int a, int b, int c) const { return f_[(a * dim() + b) * dim() + c]; }
  const std::vector<StructureEntry>& nonzero() const { return nz_; }

  Matrix to_matrix(const LieElement& x) const {
    check(x);
    Matrix m = Matrix::Zero(n_, n_);
    for (int a = 0; a < dim(); ++a) m += x[a] * gens_[a];
    return m;
  }

  // Projection onto the span of the generators: x_a = Tr(T^a X) / 2.
  LieElement from_matrix(const Matrix& m) const {
    LieElement x(dim());
    for (int a = 0; a < dim(); ++a) x[a] = (gens_[a] * m).trace() / 2.0;
    return x;
  }

  void check(const LieElement& x) const {
    if (x.size() != dim())
      throw DimensionError("Lie element has " + std::to_string(x.size()) +
                           " coefficients, basis has " + std::to_string(dim()));
  }

 private:
  void build_gell_mann() {
    // Ordering reproduces the Pauli matrices for n = 2 and lambda_1..lambda_8
    // for n = 3: for each column k, the off-diagonal pairs (j,k), j < k,
    // followed by the k-th diagonal generator.
    for (int k = 1; k < n_; ++k) {
      for (int j = 0; j < k; ++j) {
        Matrix s = Matrix::Zero(n_, n_);
        s(j, k) = 1.0;
        s(k, j) = 1.0;
        gens_.push_back(s);
        Matrix t = Matrix::Zero(n_, n_);
        t(j, k) = -I;
        t(k, j) = I;
        gens_.push_back(t);
      }
      Matrix d = Matrix::Zero(n_, n_);
      const double norm = std::sqrt(2.0 / (k * (k + 1.0)));
      for (int i = 0; i < k; ++i) d(i, i) = norm;
      d(k, k) = -k * norm;
      gens_.push_back(d);
    }
  }

  void build_structure_constants() {
    const int d = dim();
    f_.assign(static_cast<std::size_t>(d) * d * d, 0.0);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const Matrix comm = gens_[a] * gens_[b] - gens_[b] * gens_[a];
        for (int c = 0; c < d; ++c) {
          const cplx tr = (comm * gens_[c]).trace() / (2.0 * I);
          double v = tr.real();
          if (std::abs(v) < 1e-14) v = 0.0;
          f_[(a * d + b) * d + c] = v;
          if (v != 0.0) nz_.push_back({a, b, c, v});
        }
      }
  }

  int n_;
  std::vector<Matrix> gens_;
  std::vector<double> f_;
  std::vector<StructureEntry> nz_;
};

inline GeneratorSet build_su_n_basis(int n) { return GeneratorSet(n); }

struct PhysicsParams {
  double v = 1.0;
  double kappa = 1.0;
  double m() const { return std::sqrt(2.0) * v * v; }
};

// (result)_c = i f^{ab}_c X_a Y_b
inline LieElement commutator(const LieElement& x, const LieElement& y, const GeneratorSet& g) {
  g.check(x);
  g.check(y);
  LieElement r = LieElement::Zero(g.dim());
  for (const auto& e : g.nonzero()) r[e.c] += I * e.value * x[e.a] * y[e.b];
  return r;
}

// Coefficient-level adjoint; the basis is Hermitian so (phi^dagger)_a = conj(phi_a).
inline LieElement dagger(const LieElement& x) { return x.conjugate(); }

namespace detail {

// G_e = f^{ab}_d f^{dc}_e phi_a conj(phi_b) phi_c + v^2 phi_e, so that
// [[phi, phi^dagger], phi] - v^2 phi = -G_e T^e.
inline void higgs_core(const cplx* phi, const GeneratorSet& g, double v2, cplx* p, cplx* ge) {
  const int d = g.dim();
  for (int i = 0; i < d; ++i) p[i] = 0.0;
  for (const auto& e : g.nonzero()) p[e.c] += e.value * phi[e.a] * std::conj(phi[e.b]);
  for (int i = 0; i < d; ++i) ge[i] = v2 * phi[i];
  for (const auto& e : g.nonzero()) ge[e.c] += e.value * p[e.a] * phi[e.b];
}

// Wirtinger derivative dV/d(conj phi_a) evaluated from raw coefficient arrays.
// `work` must hold 4*dim entries.
inline void higgs_gradient_raw(const cplx* phi, const GeneratorSet& g, double v, cplx* out,
                               cplx* work) {
  const int d = g.dim();
  const double v2 = v * v;
  cplx* p = work;
  cplx* ge = work + d;
  cplx* y = work + 2 * d;
  cplx* z = work + 3 * d;
  higgs_core(phi, g, v2, p, ge);
  for (int i = 0; i < d; ++i) {
    y[i] = 0.0;
    z[i] = 0.0;
    out[i] = v2 * ge[i];
  }
  // Y_d = f^{dr}_e conj(phi_r) G_e,  Z_d = f^{dr}_e phi_r conj(G_e)
  for (const auto& e : g.nonzero()) {
    y[e.a] += e.value * std::conj(phi[e.b]) * ge[e.c];
    z[e.a] += e.value * phi[e.b] * std::conj(ge[e.c]);
  }
  for (const auto& e : g.nonzero()) {
    // conj(G_e) slot-1 derivative: f^{aq}_d phi_q Y_d
    out[e.a] += e.value * phi[e.b] * y[e.c];
    // conj(G_e) slot-3 derivative: f^{da}_e conj(P_d) G_e
    out[e.b] += e.value * std::conj(p[e.a]) * ge[e.c];
    // G_e slot-2 derivative: f^{pa}_d phi_p Z_d
    out[e.b] += e.value * phi[e.a] * z[e.c];
  }
  for (int i = 0; i < d; ++i) out[i] *= 2.0;
}

}  // namespace detail

// V = Tr(W^dagger W) with W = [[phi, phi^dagger], phi] - v^2 phi, evaluated
// through structure constants: V = 2 sum_e |G_e|^2.
inline double higgs_potential(const LieElement& phi, const GeneratorSet& g, const PhysicsParams& p) {
  g.check(phi);
  const int d = g.dim();
  std::vector<cplx> pp(d), ge(d);
  detail::higgs_core(phi.data(), g, p.v * p.v, pp.data(), ge.data());
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += std::norm(ge[i]);
  return 2.0 * s / (p.kappa * p.kappa);
}

// Matrix-level reference for the potential.
inline double higgs_potential_matrix(const LieElement& phi, const GeneratorSet& g,
                                     const PhysicsParams& p) {
  const Matrix m = g.to_matrix(phi);
  const Matrix md = m.adjoint();
  const Matrix inner = m * md - md * m;
  const Matrix w = (inner * m - m * inner) - p.v * p.v * m;
  return (w.adjoint() * w).trace().real() / (p.kappa * p.kappa);
}

// Component a is dV/d(conj phi_a): linear 2 v^4 phi_a plus cubic and quintic terms.
inline LieElement higgs_gradient(const LieElement& phi, const GeneratorSet& g, const PhysicsParams& p) {
  g.check(phi);
  LieElement out(g.dim());
  std::vector<cplx> work(4 * g.dim());
  detail::higgs_gradient_raw(phi.data(), g, p.v, out.data(), work.data());
  return out / (p.kappa * p.kappa);
}

struct CasimirReport {
  double max_residual = 0.0;     // max_a |[T^a, sum_b T^b T^b]|
  double max_unsummed = 0.0;     // max_{a,b} |[T^a, T^b T^b]|, informational
  double casimir_value = 0.0;    // sum_b T^b T^b = casimir_value * Id
};

inline CasimirReport check_casimir_commutation(const GeneratorSet& g) {
  CasimirReport r;
  const int n = g.n();
  Matrix cas = Matrix::Zero(n, n);
  for (const auto& t : g.generators()) cas += t * t;
  r.casimir_value = cas(0, 0).real();
  for (const auto& ta : g.generators()) {
    r.max_residual = std::max(r.max_residual, (ta * cas - cas * ta).cwiseAbs().maxCoeff());
    for (const auto& tb : g.generators()) {
      const Matrix sq = tb * tb;
      r.max_unsummed = std::max(r.max_unsummed, (ta * sq - sq * ta).cwiseAbs().maxCoeff());
    }
  }
  return r;
}

struct BasisReport {
  double hermitian = 0.0;
  double traceless = 0.0;
  double normalization = 0.0;
  double commutator = 0.0;
  double antisymmetry = 0.0;
  double jacobi = 0.0;
  double max() const {
    return std::max({hermitian, traceless, normalization, commutator, antisymmetry, jacobi});
  }
};

// Entrywise residuals of every basis invariant.
inline BasisReport check_basis(const GeneratorSet& g) {
  BasisReport r;
  const int d = g.dim();
  for (int a = 0; a < d; ++a) {
    const Matrix& ta = g.generator(a);
    r.hermitian = std::max(r.hermitian, (ta - ta.adjoint()).cwiseAbs().maxCoeff());
    r.traceless = std::max(r.traceless, std::abs(ta.trace()));
    for (int b = 0; b < d; ++b) {
      const Matrix& tb = g.generator(b);
      r.normalization = std::max(r.normalization, std::abs((ta * tb).trace() - (a == b ? 2.0 : 0.0)));
      Matrix rhs = Matrix::Zero(g.n(), g.n());
      for (int c = 0; c < d; ++c) rhs += I * g.f(a, b, c) * g.generator(c);
      r.commutator = std::max(r.commutator, (ta * tb - tb * ta - rhs).cwiseAbs().maxCoeff());
      for (int c = 0; c < d; ++c)
        r.antisymmetry = std::max(r.antisymmetry, std::abs(g.f(a, b, c) + g.f(b, a, c)));
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) {
          double s = 0.0;
          for (int k = 0; k < d; ++k)
            s += g.f(a, b, k) * g.f(k, c, e) + g.f(b, c, k) * g.f(k, a, e) + g.f(c, a, k) * g.f(k, b, e);
          r.jacobi = std::max(r.jacobi, std::abs(s));
        }
  return r;
}

}  // namespace csh
