#pragma once

// Knapp-type counterexample for smoothness of the flow map: anisotropic
// frequency boxes W_lambda, resonance classes of sign tuples, the Duhamel
// multipliers m = (e^{i t omega} - 1)/(i omega), Monte Carlo quadrature of the
// second and third derivative amplitudes, lambda windows and exponent fits.

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lie_kernel.hpp"
#include "null_forms.hpp"
#include "stats.hpp"

namespace csh {

// ---- boxes -----------------------------------------------------------------------

struct Interval {
  double lo = 0.0, hi = -1.0;
  bool empty() const { return !(hi >= lo); }
  double length() const { return empty() ? 0.0 : hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

inline Interval intersect(const Interval& a, const Interval& b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

// Axis-aligned box I1 x I2.
struct Box2 {
  Interval x1, x2;
  bool empty() const { return x1.empty() || x2.empty(); }
  double area() const { return x1.length() * x2.length(); }
  bool contains(const Vec2& v) const { return x1.contains(v[0]) && x2.contains(v[1]); }
};

inline Box2 intersect(const Box2& a, const Box2& b) { return {intersect(a.x1, b.x1), intersect(a.x2, b.x2)}; }
inline Box2 negate(const Box2& a) { return {{-a.x1.hi, -a.x1.lo}, {-a.x2.hi, -a.x2.lo}}; }
// Minkowski sum A + B.
inline Box2 minkowski_sum(const Box2& a, const Box2& b) {
  return {{a.x1.lo + b.x1.lo, a.x1.hi + b.x1.hi}, {a.x2.lo + b.x2.lo, a.x2.hi + b.x2.hi}};
}
// v - A.
inline Box2 reflect_about(const Vec2& v, const Box2& a) {
  return {{v[0] - a.x1.hi, v[0] - a.x1.lo}, {v[1] - a.x2.hi, v[1] - a.x2.lo}};
}

// s W_lambda = { |xi_1 - s lambda| <= |s| c lambda, |xi_2| <= |s| c lambda^{1/2} }.
struct KnappBox {
  double lambda = 1.0;
  double c = 1e-6;
  double scale = 1.0;  // 1 for W, 2 for 2W, -1 for -W

  double half_width1() const { return std::abs(scale) * c * lambda; }
  double half_width2() const { return std::abs(scale) * c * std::sqrt(lambda); }
  Box2 box() const {
    return {{scale * lambda - half_width1(), scale * lambda + half_width1()}, {-half_width2(), half_width2()}};
  }
  bool contains(const Vec2& xi) const {
    return std::abs(xi[0] - scale * lambda) <= half_width1() && std::abs(xi[1]) <= half_width2();
  }
};

// ---- sign tuples and resonance ----------------------------------------------------

using SignTuple4 = std::array<int, 4>;
using SignTuple3 = std::array<int, 3>;

template <std::size_t K>
std::vector<std::array<int, K>> all_sign_tuples() {
  std::vector<std::array<int, K>> out;
  for (unsigned mask = 0; mask < (1u << K); ++mask) {
    std::array<int, K> t;
    for (std::size_t j = 0; j < K; ++j) t[j] = (mask >> (K - 1 - j)) & 1u ? -1 : 1;
    out.push_back(t);
  }
  return out;
}

inline std::string to_string(const SignTuple4& t) {
  std::string s = "(";
  for (int j = 0; j < 4; ++j) s += std::string(t[j] > 0 ? "+" : "-") + (j < 3 ? "," : ")");
  return s;
}

// The resonance class as listed: (1=3)&(2=4); (1=3) != (2=4); (1,3)=(+,-)&(2,4)=(-,+); (-,+)&(+,-).
inline bool classify_resonance4(const SignTuple4& t) {
  const bool eq13 = t[0] == t[2], eq24 = t[1] == t[3];
  if (eq13 && eq24) return true;
  if (eq13 && eq24 && t[0] != t[1]) return true;
  if (t[0] == 1 && t[2] == -1 && t[1] == -1 && t[3] == 1) return true;
  if (t[0] == -1 && t[2] == 1 && t[1] == 1 && t[3] == -1) return true;
  return false;
}

// Cancellation of the O(lambda) part of omega_1234 on the supports
// (|xi| ~ |zeta| ~ 2 lambda, |zeta - eta| ~ |xi - eta| ~ lambda): 2 s1 + s2 - 2 s3 - s4 = 0.
inline bool leading_order_resonant4(const SignTuple4& t) { return 2 * t[0] + t[1] - 2 * t[2] - t[3] == 0; }

// All four signs equal: the box-width fluctuations (xi_1 - zeta_1 ~ c lambda) cancel as well,
// leaving omega = O(c^2 + m^2/lambda). For the other leading-order tuples omega = 2 s1 (|xi| - |zeta|) + O(1).
inline bool fully_resonant4(const SignTuple4& t) { return t[0] == t[1] && t[1] == t[2] && t[2] == t[3]; }

struct ResonanceCensus {
  int resonant = 0;
  int resonant_equal13 = 0;     // resonant with s1 = s3
  int resonant_unequal13 = 0;   // resonant with s1 != s3
  int leading_order_resonant = 0;
  std::vector<SignTuple4> listed_but_not_leading_order;
};

inline ResonanceCensus resonance_census() {
  ResonanceCensus c;
  for (const auto& t : all_sign_tuples<4>()) {
    const bool r = classify_resonance4(t);
    const bool lo = leading_order_resonant4(t);
    c.leading_order_resonant += lo;
    if (!r) continue;
    ++c.resonant;
    (t[0] == t[2] ? c.resonant_equal13 : c.resonant_unequal13)++;
    if (!lo) c.listed_but_not_leading_order.push_back(t);
  }
  return c;
}

// Three-wave resonance: s1 = s2 = s3.
inline bool classify_resonance3(const SignTuple3& t) { return t[0] == t[1] && t[1] == t[2]; }

// ---- modulations and multipliers --------------------------------------------------

inline double klein_gordon(double m, double r) { return std::sqrt(m * m + r * r); }

inline Vec2 sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }

inline double modulation4(const Vec2& xi, const Vec2& eta, const Vec2& zeta, const SignTuple4& t, double m) {
  return t[0] * norm2(xi) + t[1] * klein_gordon(m, norm2(sub(zeta, eta))) - t[2] * norm2(zeta) -
         t[3] * klein_gordon(m, norm2(sub(xi, eta)));
}

inline double modulation4_tilde(const Vec2& xi, const Vec2& eta, const Vec2& zeta, const SignTuple4& t, double m) {
  return t[0] * norm2(xi) + t[1] * klein_gordon(m, norm2(sub(zeta, eta))) + t[2] * norm2(zeta) -
         t[3] * klein_gordon(m, norm2(sub(xi, eta)));
}

inline double modulation3(const Vec2& xi, const Vec2& eta, const SignTuple3& t, double m) {
  return t[0] * klein_gordon(m, norm2(xi)) - t[1] * norm2(sub(xi, eta)) - t[2] * norm2(eta);
}

// (e^{i t omega} - 1) / (i omega), with the series t (1 + iz/2 - z^2/6 - i z^3/24), z = t omega, for |z| < 1e-4.
inline cplx duhamel_multiplier(double t, double omega) {
  const double z = t * omega;
  if (std::abs(z) < 1e-4) return t * cplx(1.0 - z * z / 6.0, z / 2.0 - z * z * z / 24.0);
  return (std::exp(I * z) - 1.0) / (I * omega);
}

// ---- lambda windows -----------------------------------------------------------------

enum class WindowKind {
  ThirdDerivative,   // (2k pi -+ eps) / (eps (1 -+ rho)), cos(t|xi|) ~ 1
  SecondDerivative,  // (k pi + pi/8) / (eps (1 - rho)) .. (k pi + 3 pi/8) / (eps (1 + rho)), |sin(t|xi|)| ~ 1
};

struct LambdaWindow {
  WindowKind kind{};
  double eps = 0.0, rho = 0.0;
  int k = 0;
  double sqrt_lo = 0.0, sqrt_hi = 0.0;  // bounds on lambda^{1/2}
  bool feasible = false;
  std::string reason;  // failed feasibility condition when empty

  double lambda_lo() const { return sqrt_lo * sqrt_lo; }
  double lambda_hi() const { return sqrt_hi * sqrt_hi; }
  // lambda at the centre of the lambda^{1/2} window
  double lambda_mid() const {
    const double s = 0.5 * (sqrt_lo + sqrt_hi);
    return s * s;
  }
};

inline LambdaWindow choose_lambda(double eps, double rho, int k, WindowKind kind) {
  if (!(eps > 0 && eps < 1)) throw PreconditionError("eps must lie in (0,1)");
  if (!(rho > 0 && rho < 1)) throw PreconditionError("rho must lie in (0,1)");
  if (k < 1) throw PreconditionError("window index k must be >= 1");
  LambdaWindow w;
  w.kind = kind;
  w.eps = eps;
  w.rho = rho;
  w.k = k;
  if (kind == WindowKind::ThirdDerivative) {
    w.sqrt_lo = (2 * k * pi - eps) / (eps * (1 - rho));
    w.sqrt_hi = (2 * k * pi + eps) / (eps * (1 + rho));
    w.feasible = w.sqrt_lo <= w.sqrt_hi;
    if (!w.feasible) w.reason = "rho <= eps/(2 k pi) fails: rho = " + std::to_string(rho) + " > " +
                                std::to_string(eps / (2 * k * pi));
  } else {
    w.sqrt_lo = (k * pi + pi / 8) / (eps * (1 - rho));
    w.sqrt_hi = (k * pi + 3 * pi / 8) / (eps * (1 + rho));
    w.feasible = w.sqrt_lo <= w.sqrt_hi;
    if (!w.feasible) w.reason = "rho <= 1/(8k+2) fails: rho = " + std::to_string(rho) + " > " +
                                std::to_string(1.0 / (8 * k + 2));
  }
  return w;
}

// min |cos(t|xi|)| (third-derivative window) or min |sin(t|xi|)| (second) over
// lambda^{1/2} in the window and |xi| in [2(1-rho) lambda, 2(1+rho) lambda], t = eps lambda^{-1/2}.
inline double window_trig_bound(const LambdaWindow& w, int grid = 201) {
  if (!w.feasible) return 0.0;
  double worst = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid; ++a) {
    const double s = w.sqrt_lo + (w.sqrt_hi - w.sqrt_lo) * a / (grid - 1);
    for (int b = 0; b < grid; ++b) {
      const double ratio = 2 * (1 - w.rho) + 4 * w.rho * b / (grid - 1);  // |xi| / lambda
      const double phase = w.eps * ratio * s;                             // t |xi|
      const double v = w.kind == WindowKind::ThirdDerivative ? std::abs(std::cos(phase)) : std::abs(std::sin(phase));
      worst = std::min(worst, v);
    }
  }
  return worst;
}

// ---- configuration ------------------------------------------------------------------

struct KnappConfig {
  double lambda = 0.0;  // 0 selects the window centre for k
  double eps = 0.1;
  double rho = 1e-6;
  int k = 1;
  double c = 1e-6;      // box constant
  double m = 1.0;       // mass
  long mc_samples = 100000;
  std::uint64_t seed = 1;

  double t() const { return eps / std::sqrt(lambda); }
  void validate() const {
    if (!(lambda > 1 + m * m)) throw PreconditionError("lambda must exceed 1 + m^2");
    if (!(eps > 0 && eps < 1)) throw PreconditionError("eps must lie in (0,1)");
    if (!(rho > 0 && rho < 1)) throw PreconditionError("rho must lie in (0,1)");
    if (!(c > 0 && c < 0.5)) throw PreconditionError("box constant must lie in (0, 1/2)");
    if (mc_samples < 2) throw PreconditionError("need at least 2 Monte Carlo samples");
  }
  // The config with lambda taken from the window centre when unset.
  KnappConfig resolved(WindowKind kind) const {
    KnappConfig r = *this;
    if (r.lambda <= 0.0) {
      const auto w = choose_lambda(eps, rho, k, kind);
      r.lambda = w.lambda_mid();
    }
    r.validate();
    return r;
  }
};

// Frobenius norms of the su(2) brackets [T^2, T^1] and [T^1, [T^2, T^1]].
struct LieFactors {
  double second;
  double third;
};

inline LieFactors knapp_lie_factors() {
  const GeneratorSet g = build_su_n_basis(2);
  const Matrix& t1 = g.generator(0);
  const Matrix& t2 = g.generator(1);
  const Matrix c21 = t2 * t1 - t1 * t2;
  const Matrix c121 = t1 * c21 - c21 * t1;
  return {c21.norm(), c121.norm()};
}

// ---- Monte Carlo on box intersections ---------------------------------------------

struct McEstimate {
  cplx value{0.0};
  double ci95 = 0.0;  // half width, 1.96 standard errors
};

inline McEstimate finish(const ComplexMean& m, double scale) {
  return {m.mean() * scale, 1.96 * m.stderr_of_mean() * std::abs(scale)};
}

// Region {(x, y): x in X, y in Y, x - y in D} along one axis; sampled as y
// uniform in Y, then x uniform in X cap (y + D), with weight |Y| |X cap (y + D)|.
struct StripRegion {
  Interval X, Y, D;

  Interval slice(double y) const { return intersect(X, {y + D.lo, y + D.hi}); }
  // Exact area: the slice length is piecewise linear in y.
  double area() const {
    if (Y.empty()) return 0.0;
    std::vector<double> br = {Y.lo, Y.hi, X.lo - D.hi, X.lo - D.lo, X.hi - D.hi, X.hi - D.lo};
    std::sort(br.begin(), br.end());
    double s = 0.0;
    for (std::size_t q = 0; q + 1 < br.size(); ++q) {
      const double a = std::max(br[q], Y.lo), b = std::min(br[q + 1], Y.hi);
      if (b <= a) continue;
      s += 0.5 * (b - a) * (slice(a).length() + slice(b).length());
    }
    return s;
  }
};

// Support of chi_W(zeta - eta) chi_{2W}(zeta) chi_W(xi - eta) in (zeta, eta).
struct ThirdSupport {
  StripRegion axis1, axis2;
  double volume() const { return axis1.area() * axis2.area(); }
};

inline ThirdSupport third_support(const Vec2& xi, double lambda, double c) {
  const Box2 W = KnappBox{lambda, c, 1}.box();
  const Box2 W2 = KnappBox{lambda, c, 2}.box();
  const Box2 Y = reflect_about(xi, W);  // eta with xi - eta in W
  return {{W2.x1, Y.x1, W.x1}, {W2.x2, Y.x2, W.x2}};
}

// eta range forced by the tilde branch: (-2W - W) cap (2W - W), over all xi in 2W.
inline Box2 tilde_support(double lambda, double c) {
  const Box2 W = KnappBox{lambda, c, 1}.box();
  const Box2 W2 = KnappBox{lambda, c, 2}.box();
  return intersect(minkowski_sum(negate(W2), negate(W)), minkowski_sum(W2, negate(W)));
}

inline bool tilde_support_empty(double lambda, double c) { return tilde_support(lambda, c).empty(); }

// ---- second derivative --------------------------------------------------------------

struct SecondDerivativeResult {
  KnappConfig cfg;
  Vec2 xi{0.0, 0.0};
  bool empty = false;
  double t = 0.0;
  double support_area = 0.0;
  double lie_factor = 0.0;  // Frobenius norm of [T^2, T^1]
  McEstimate total, I, II, III, IV;  // coefficients of [T^2, T^1]
  double amplitude = 0.0;            // |total| * lie_factor
  double amplitude_ci = 0.0;
};

// F_x of the second derivative of phi at xi for f_1 = a_{0,2} = chi_W:
// -1/4 sum_{s1,s2,s3} e^{-s1 i t <xi>_m} / |xi| int m_123 chi_W(xi - eta)
// (-s3 <eta>_m + s2 (xi_1 - eta_1)/|xi - eta|) chi_W(eta) d eta,
// split into I, II (resonant main terms), III (resonant remainder), IV (non-resonant).
inline SecondDerivativeResult second_derivative_amplitude(const KnappConfig& config, const Vec2& xi) {
  const KnappConfig cfg = config.resolved(WindowKind::SecondDerivative);
  SecondDerivativeResult r;
  r.cfg = cfg;
  r.xi = xi;
  r.t = cfg.t();
  r.lie_factor = knapp_lie_factors().second;
  const Box2 W = KnappBox{cfg.lambda, cfg.c, 1}.box();
  const Box2 S = intersect(W, reflect_about(xi, W));
  r.support_area = S.area();
  if (S.empty() || r.support_area == 0.0) {
    r.empty = true;
    return r;
  }
  const double t = r.t, m = cfg.m, nxi = norm2(xi), kxi = klein_gordon(m, nxi);
  const auto tuples = all_sign_tuples<3>();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ComplexMean tot, mI, mII, mIII, mIV;
  for (long n = 0; n < cfg.mc_samples; ++n) {
    const Vec2 eta{S.x1.lo + S.x1.length() * U(rng), S.x2.lo + S.x2.length() * U(rng)};
    const Vec2 d = sub(xi, eta);
    const double nd = norm2(d), keta = klein_gordon(m, norm2(eta));
    cplx res{0.0}, non{0.0}, i_main{0.0}, ii_main{0.0};
    for (const auto& s : tuples) {
      const cplx phase = std::exp(-static_cast<double>(s[0]) * I * t * kxi) / nxi;
      const cplx mult = duhamel_multiplier(t, modulation3(xi, eta, s, m));
      const cplx term = -0.25 * phase * mult * (-s[2] * keta + s[1] * d[0] / nd);
      if (classify_resonance3(s)) {
        res += term;
        i_main += 0.25 * t * static_cast<double>(s[0]) * phase * keta;
        ii_main += -0.25 * t * static_cast<double>(s[0]) * phase * d[0] / nd;
      } else {
        non += term;
      }
    }
    tot.add(res + non);
    mI.add(i_main);
    mII.add(ii_main);
    mIII.add(res - i_main - ii_main);
    mIV.add(non);
  }
  const double A = r.support_area;
  r.total = finish(tot, A);
  r.I = finish(mI, A);
  r.II = finish(mII, A);
  r.III = finish(mIII, A);
  r.IV = finish(mIV, A);
  r.amplitude = std::abs(r.total.value) * r.lie_factor;
  r.amplitude_ci = r.total.ci95 * r.lie_factor;
  return r;
}

// ---- third derivative ------------------------------------------------------------------

struct ThirdDerivativeResult {
  KnappConfig cfg;
  Vec2 xi{0.0, 0.0};
  double t = 0.0;
  double support_volume = 0.0;
  double i1_bound = 0.0;          // (1/|xi|) times the support volume
  bool tilde_vanishes = false;    // exact emptiness of the tilde-branch support
  double lie_factor = 0.0;        // Frobenius norm of [T^1, [T^2, T^1]]
  McEstimate N_resonant, N_nonresonant, II_resonant, II_nonresonant, N, II, total;
  double amplitude = 0.0;         // |N + II| * lie_factor
  double amplitude_ci = 0.0;
};

// F_x of the Duhamel part of the third derivative of A_2 at xi, for
// f_1 = chi_W and a_{0,2} = chi_{2W}:
// N  = 3i/8 sum s1 e^{-s1 i t|xi|} int int m_1234 (s3 zeta_1/|zeta|) chi chi chi,
// II = 3i/8 sum (-s1) e^{-s1 i t|xi|} (xi_1/|xi|) int int m_1234 chi chi chi.
inline ThirdDerivativeResult third_derivative_amplitude(const KnappConfig& config, const Vec2& xi) {
  const KnappConfig cfg = config.resolved(WindowKind::ThirdDerivative);
  ThirdDerivativeResult r;
  r.cfg = cfg;
  r.xi = xi;
  r.t = cfg.t();
  r.lie_factor = knapp_lie_factors().third;
  r.tilde_vanishes = tilde_support_empty(cfg.lambda, cfg.c);
  const ThirdSupport S = third_support(xi, cfg.lambda, cfg.c);
  r.support_volume = S.volume();
  const double nxi = norm2(xi);
  r.i1_bound = nxi > 0 ? r.support_volume / nxi : 0.0;
  if (r.support_volume == 0.0) return r;

  const double t = r.t, m = cfg.m;
  const auto tuples = all_sign_tuples<4>();
  std::array<bool, 16> resonant;
  std::array<cplx, 16> phase;
  for (std::size_t q = 0; q < tuples.size(); ++q) {
    resonant[q] = classify_resonance4(tuples[q]);
    phase[q] = std::exp(-static_cast<double>(tuples[q][0]) * I * t * nxi);
  }
  const cplx pre = 3.0 * I / 8.0;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ComplexMean nR, nC, iiR, iiC, nT, iiT, tot;
  auto draw = [&](const StripRegion& R, double& x, double& y) {
    y = R.Y.lo + R.Y.length() * U(rng);
    const Interval sl = R.slice(y);
    const double u = U(rng);
    if (sl.empty()) return 0.0;
    x = sl.lo + sl.length() * u;
    return R.Y.length() * sl.length();
  };
  for (long n = 0; n < cfg.mc_samples; ++n) {
    double z1 = 0, e1 = 0, z2 = 0, e2 = 0;
    const double w1 = draw(S.axis1, z1, e1);
    const double w2 = draw(S.axis2, z2, e2);
    const double w = w1 * w2;
    cplx a{0.0}, b{0.0}, c{0.0}, d{0.0};
    if (w > 0.0) {
      const Vec2 zeta{z1, z2}, eta{e1, e2};
      const double zeta_dir = z1 / norm2(zeta);
      for (std::size_t q = 0; q < tuples.size(); ++q) {
        const auto& s = tuples[q];
        const cplx mult = duhamel_multiplier(t, modulation4(xi, eta, zeta, s, m)) * w;
        const cplx nterm = pre * static_cast<double>(s[0]) * phase[q] * mult * (s[2] * zeta_dir);
        const cplx iiterm = pre * static_cast<double>(-s[0]) * phase[q] * (xi[0] / nxi) * mult;
        if (resonant[q]) {
          a += nterm;
          c += iiterm;
        } else {
          b += nterm;
          d += iiterm;
        }
      }
    }
    nR.add(a);
    nC.add(b);
    iiR.add(c);
    iiC.add(d);
    nT.add(a + b);
    iiT.add(c + d);
    tot.add(a + b + c + d);
  }
  r.N_resonant = finish(nR, 1.0);
  r.N_nonresonant = finish(nC, 1.0);
  r.II_resonant = finish(iiR, 1.0);
  r.II_nonresonant = finish(iiC, 1.0);
  r.N = finish(nT, 1.0);
  r.II = finish(iiT, 1.0);
  r.total = finish(tot, 1.0);
  r.amplitude = std::abs(r.total.value) * r.lie_factor;
  r.amplitude_ci = r.total.ci95 * r.lie_factor;
  return r;
}

// ---- fits and thresholds ------------------------------------------------------------------

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual = 0.0;  // RMS of log residuals
  std::size_t used = 0;
  std::size_t excluded = 0;  // nonpositive values dropped
};

// Log-log least squares over (lambda, value); with sigmas the fit is weighted by
// the log-space errors sigma / value.
inline ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& pts,
                              const std::vector<double>& sigma = {}) {
  std::vector<double> lx, ly, ls;
  ScalingFit f;
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const auto [x, y] = pts[q];
    if (!(x > 0) || !(y > 0)) {
      ++f.excluded;
      continue;
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
    if (!sigma.empty()) ls.push_back(std::max(sigma[q] / y, 1e-300));
  }
  if (lx.size() < 4) throw PreconditionError("scaling fit needs >= 4 positive points");
  const auto [mn, mx] = std::minmax_element(lx.begin(), lx.end());
  if (*mx - *mn < 2.0 * std::log(10.0) * (1 - 1e-9)) throw PreconditionError("scaling fit needs >= 2 decades in lambda");
  const LinearFit lf = sigma.empty() ? linear_fit(lx, ly) : weighted_linear_fit(lx, ly, ls);
  f.slope = lf.slope;
  f.intercept = lf.intercept;
  f.slope_stderr = lf.slope_stderr;
  f.used = lx.size();
  double ss = 0.0;
  for (std::size_t q = 0; q < lx.size(); ++q) ss += std::pow(ly[q] - (f.intercept + f.slope * lx[q]), 2);
  f.residual = std::sqrt(ss / lx.size());
  return f;
}

// ||chi_{sW}||_{H^s} = (int_{sW} (1 + |xi|^2)^s d xi)^{1/2}, by Gauss-Legendre in each axis.
inline double box_sobolev_norm(double lambda, double c, double s, double scale = 1.0, std::size_t nodes = 32) {
  const Box2 B = KnappBox{lambda, c, scale}.box();
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(nodes);
  double sum = 0.0;
  for (std::size_t a = 0; a < nodes; ++a) {
    double x, wx;
    gsl_integration_glfixed_point(B.x1.lo, B.x1.hi, a, &x, &wx, tab);
    for (std::size_t b = 0; b < nodes; ++b) {
      double y, wy;
      gsl_integration_glfixed_point(B.x2.lo, B.x2.hi, b, &y, &wy, tab);
      sum += wx * wy * std::pow(1.0 + x * x + y * y, s);
    }
  }
  gsl_integration_glfixed_table_free(tab);
  return std::sqrt(sum);
}

struct Thresholds {
  double s = 0.0, s_err = 0.0;
  double sigma = 0.0, sigma_err = 0.0;
};

// p3 + e_a(sigma) <= 2 e_f(s) + e_a(sigma) and p2 + e_f(s) <= e_f(s) + e_a(sigma), with
// e_f(s) = s + kappa_f, e_a(sigma) = sigma + kappa_a the box norm exponents.
inline Thresholds necessary_thresholds(double p3, double p2, double kappa_f = 0.75, double kappa_a = 0.75,
                                       double p3_err = 0.0, double p2_err = 0.0) {
  return {(p3 - 2 * kappa_f) / 2, p3_err / 2, p2 - kappa_a, p2_err};
}

struct NecessaryConditionReport {
  double third_slope = 0.0, third_slope_err = 0.0;
  double second_slope = 0.0, second_slope_err = 0.0;
  double kappa_f = 0.0;  // fitted exponent of ||chi_W||_{H^s} minus s
  double kappa_a = 0.0;  // fitted exponent of ||chi_{2W}||_{H^sigma} minus sigma
  Thresholds thresholds;
};

// Box norm exponents are fitted over the given lambdas at s = sigma = 0.
inline NecessaryConditionReport necessary_condition_report(const ScalingFit& third, const ScalingFit& second,
                                                           const std::vector<double>& lambdas, double c) {
  NecessaryConditionReport r;
  r.third_slope = third.slope;
  r.third_slope_err = third.slope_stderr;
  r.second_slope = second.slope;
  r.second_slope_err = second.slope_stderr;
  std::vector<double> nf, na;
  for (double l : lambdas) {
    nf.push_back(box_sobolev_norm(l, c, 0.0, 1.0));
    na.push_back(box_sobolev_norm(l, c, 0.0, 2.0));
  }
  r.kappa_f = log_log_fit(lambdas, nf).slope;
  r.kappa_a = log_log_fit(lambdas, na).slope;
  r.thresholds = necessary_thresholds(r.third_slope, r.second_slope, r.kappa_f, r.kappa_a, r.third_slope_err,
                                      r.second_slope_err);
  return r;
}

// ---- lambda scans ----------------------------------------------------------------------------

// Window indices from k_min covering the requested decades of lambda. Every
// integer k is used when that gives at most max_points indices; otherwise a
// geometric subset that keeps both ends.
inline std::vector<int> knapp_k_grid(WindowKind kind, int k_min, double decades, int max_points = 16) {
  if (k_min < 1 || !(decades > 0) || max_points < 4) throw PreconditionError("need k_min >= 1, decades > 0, >= 4 points");
  // third window: lambda^{1/2} ~ k; second: lambda^{1/2} ~ k + 1/4
  const double shift = kind == WindowKind::ThirdDerivative ? 0.0 : 0.25;
  const double root = std::pow(10.0, decades / 2.0);
  const int k_max = static_cast<int>(std::ceil(root * (k_min + shift) - shift - 1e-9));
  std::vector<int> ks;
  if (k_max - k_min + 1 <= max_points) {
    for (int k = k_min; k <= k_max; ++k) ks.push_back(k);
    return ks;
  }
  for (int q = 0; q < max_points; ++q) {
    const double x = (k_min + shift) * std::pow(root, static_cast<double>(q) / (max_points - 1)) - shift;
    const int k = std::clamp(static_cast<int>(std::lround(x)), k_min, k_max);
    if (ks.empty() || k > ks.back()) ks.push_back(k);
  }
  if (ks.back() != k_max) ks.push_back(k_max);
  return ks;
}

struct AmplitudeRow {
  int k = 0;
  double lambda = 0.0;
  double amplitude = 0.0;
  double ci95 = 0.0;
  std::vector<double> parts;  // second: |I|,|II|,|III|,|IV|; third: |N_R|,|N_Rc|,|II_R|,|II_Rc|,I1 bound
  std::vector<double> parts_ci;
  double trig_bound = 0.0;
  bool feasible = true;
};

struct AmplitudeScan {
  bool third = true;
  std::vector<AmplitudeRow> rows;
  ScalingFit fit;
  bool excludes_zero = false;  // slope - 1.96 stderr > 0
};

inline AmplitudeScan amplitude_scan(const KnappConfig& base, bool third, const std::vector<int>& ks) {
  AmplitudeScan scan;
  scan.third = third;
  const WindowKind kind = third ? WindowKind::ThirdDerivative : WindowKind::SecondDerivative;
  std::vector<std::pair<double, double>> pts;
  std::vector<double> sig;
  for (int k : ks) {
    AmplitudeRow row;
    row.k = k;
    const auto w = choose_lambda(base.eps, base.rho, k, kind);
    row.feasible = w.feasible;
    row.trig_bound = window_trig_bound(w);
    KnappConfig cfg = base;
    cfg.k = k;
    cfg.lambda = w.lambda_mid();
    cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(k));
    row.lambda = cfg.lambda;
    const Vec2 xi{2 * cfg.lambda, 0.0};
    if (third) {
      const auto r = third_derivative_amplitude(cfg, xi);
      row.amplitude = r.amplitude;
      row.ci95 = r.amplitude_ci;
      for (const auto* e : {&r.N_resonant, &r.N_nonresonant, &r.II_resonant, &r.II_nonresonant}) {
        row.parts.push_back(std::abs(e->value));
        row.parts_ci.push_back(e->ci95);
      }
      row.parts.push_back(r.i1_bound);
      row.parts_ci.push_back(0.0);
    } else {
      const auto r = second_derivative_amplitude(cfg, xi);
      row.amplitude = r.amplitude;
      row.ci95 = r.amplitude_ci;
      for (const auto* e : {&r.I, &r.II, &r.III, &r.IV}) {
        row.parts.push_back(std::abs(e->value) * r.lie_factor);
        row.parts_ci.push_back(e->ci95 * r.lie_factor);
      }
    }
    pts.push_back({row.lambda, row.amplitude});
    sig.push_back(std::max(row.ci95 / 1.96, 1e-300));
    scan.rows.push_back(row);
  }
  scan.fit = scaling_fit(pts, sig);
  scan.excludes_zero = scan.fit.slope - 1.96 * scan.fit.slope_stderr > 0.0;
  return scan;
}


// ---- modulation sizes on the supports -----------------------------------------------------------

struct ModulationTupleRow {
  SignTuple4 tuple{};
  bool resonant = false;           // listed class
  bool leading_order = false;      // O(lambda) cancellation at the box centres
  bool fully_resonant = false;     // cancellation uniform over the boxes
  std::vector<double> max_abs;     // max |omega_1234| per lambda
  std::vector<double> max_scaled;  // max |omega_1234| lambda^{-1/2} per lambda
  ScalingFit fit;
};

struct ModulationScan {
  std::vector<double> lambdas;
  std::vector<ModulationTupleRow> rows;
  std::vector<bool> tilde_empty;  // exact emptiness per lambda
};

// Samples xi in 2W, then (zeta, eta) uniformly on zeta in 2W, zeta - eta in W, xi - eta in W.
inline ModulationScan modulation_scan(const std::vector<double>& lambdas, double c, double m, long samples,
                                      std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("need at least one sample per lambda");
  ModulationScan scan;
  scan.lambdas = lambdas;
  const auto tuples = all_sign_tuples<4>();
  for (const auto& t : tuples) scan.rows.push_back({t, classify_resonance4(t), leading_order_resonant4(t), fully_resonant4(t), {}, {}, {}});
  for (std::size_t q = 0; q < lambdas.size(); ++q) {
    const double lambda = lambdas[q];
    scan.tilde_empty.push_back(tilde_support_empty(lambda, c));
    std::mt19937_64 rng(mix_seed(seed, q));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Box2 W2 = KnappBox{lambda, c, 2}.box();
    std::vector<double> mx(tuples.size(), 0.0);
    long drawn = 0;
    for (long n = 0; drawn < samples && n < 100 * samples; ++n) {
      const Vec2 xi{W2.x1.lo + W2.x1.length() * U(rng), W2.x2.lo + W2.x2.length() * U(rng)};
      const ThirdSupport S = third_support(xi, lambda, c);
      const double e1 = S.axis1.Y.lo + S.axis1.Y.length() * U(rng);
      const double e2 = S.axis2.Y.lo + S.axis2.Y.length() * U(rng);
      const Interval s1 = S.axis1.slice(e1), s2 = S.axis2.slice(e2);
      const double u1 = U(rng), u2 = U(rng);
      if (s1.empty() || s2.empty()) continue;
      ++drawn;
      const Vec2 eta{e1, e2}, zeta{s1.lo + s1.length() * u1, s2.lo + s2.length() * u2};
      for (std::size_t j = 0; j < tuples.size(); ++j)
        mx[j] = std::max(mx[j], std::abs(modulation4(xi, eta, zeta, tuples[j], m)));
    }
    if (drawn == 0) throw PreconditionError("empty support in modulation scan");
    for (std::size_t j = 0; j < tuples.size(); ++j) {
      scan.rows[j].max_abs.push_back(mx[j]);
      scan.rows[j].max_scaled.push_back(mx[j] / std::sqrt(lambda));
    }
  }
  for (auto& row : scan.rows) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t q = 0; q < lambdas.size(); ++q) pts.push_back({lambdas[q], row.max_abs[q]});
    row.fit = scaling_fit(pts);
  }
  return scan;
}

}  // namespace csh
