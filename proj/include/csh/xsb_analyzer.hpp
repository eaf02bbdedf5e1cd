#pragma once

// Space-time Fourier analysis on a periodic time window: dyadic blocks
// K_{N,L}^{+-}, X^{s,b} norms, interaction geometry of wave triples,
// bilinear block constants on a sparse lattice and multilinear norm ratios.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "null_forms.hpp"
#include "spectral_grid.hpp"
#include "stats.hpp"

namespace csh {

// ---- windows and the space-time field ----------------------------------------

// Tukey window: cosine ramps over `fraction` of the window, flat in between.
struct Taper {
  enum class Kind { None, RaisedCosine };
  Kind kind = Kind::RaisedCosine;
  double fraction = 0.5;

  static Taper none() { return {Kind::None, 0.0}; }
  static Taper raised_cosine(double fraction = 0.5) { return {Kind::RaisedCosine, fraction}; }

  std::string name() const {
    if (kind == Kind::None || fraction <= 0.0) return "none";
    return "raised-cosine(" + std::to_string(fraction) + ")";
  }
  // x = t / T in [0, 1).
  double weight(double x) const {
    if (kind == Kind::None || fraction <= 0.0) return 1.0;
    const double a = std::min(fraction, 1.0);
    if (x < a / 2) return 0.5 * (1.0 - std::cos(2.0 * pi * x / a));
    if (x > 1.0 - a / 2) return 0.5 * (1.0 - std::cos(2.0 * pi * (1.0 - x) / a));
    return 1.0;
  }
};

// Samples u(t_k, x) at t_k = k T / M_t on a periodic window of length T. The
// spectral representation holds c(tau, xi) with
// u = sum c exp(i (tau t + xi . x)), tau on the lattice (2 pi / T) Z.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(GridPtr g, double T, int Mt, Rep rep = Rep::Physical)
      : grid_(std::move(g)), T_(T), Mt_(Mt), rep_(rep) {
    if (Mt < 2 || Mt % 2 != 0) throw DimensionError("time sample count must be even, got " + std::to_string(Mt));
    if (!(T > 0)) throw DimensionError("time window must be positive");
    data_.assign(static_cast<std::size_t>(Mt) * grid_->size(), cplx(0.0));
  }

  const Grid2D& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  double T() const { return T_; }
  int Mt() const { return Mt_; }
  int M() const { return grid_->M(); }
  Rep rep() const { return rep_; }
  double dt() const { return T_ / Mt_; }
  double dtau() const { return 2.0 * pi / T_; }
  int time_index_of(int k) const { return k < Mt_ / 2 ? k : k - Mt_; }
  double tau(int k) const { return dtau() * time_index_of(k); }
  std::size_t size() const { return data_.size(); }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }
  std::size_t index(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * grid_->M() + i) * grid_->M() + j;
  }
  cplx& at(int k, int i, int j) { return data_[index(k, i, j)]; }
  const cplx& at(int k, int i, int j) const { return data_[index(k, i, j)]; }

  std::string taper = "none";

  SpaceTimeField& to_spectral() {
    if (rep_ == Rep::Spectral) return *this;
    transform(FFTW_FORWARD);
    const double s = 1.0 / static_cast<double>(data_.size());
    for (auto& v : data_) v *= s;
    rep_ = Rep::Spectral;
    return *this;
  }
  SpaceTimeField& to_physical() {
    if (rep_ == Rep::Physical) return *this;
    transform(FFTW_BACKWARD);
    rep_ = Rep::Physical;
    return *this;
  }
  SpaceTimeField spectral() const {
    SpaceTimeField c = *this;
    return std::move(c.to_spectral());
  }
  SpaceTimeField physical() const {
    SpaceTimeField c = *this;
    return std::move(c.to_physical());
  }

  void require_same_layout(const SpaceTimeField& o) const {
    if (!grid_->same_as(*o.grid_) || Mt_ != o.Mt_ || T_ != o.T_)
      throw GridMismatch("space-time fields live on different lattices");
  }

 private:
  void transform(int direction) {
    auto* p = reinterpret_cast<fftw_complex*>(data_.data());
    detail::PlanPtr plan;
    {
      std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
      plan.reset(fftw_plan_dft_3d(Mt_, M(), M(), p, p, direction, FFTW_ESTIMATE | FFTW_UNALIGNED));
    }
    fftw_execute_dft(plan.get(), p, p);
  }

  GridPtr grid_;
  double T_ = 1.0;
  int Mt_ = 0;
  std::vector<cplx> data_;
  Rep rep_ = Rep::Physical;
};

// Continuum L^2 norm over window x torus: T * box^2 * sum |c|^2 in spectral form.
inline double l2_norm(const SpaceTimeField& u) {
  double s = 0.0;
  for (const auto& v : u.data()) s += std::norm(v);
  if (u.rep() == Rep::Spectral) return std::sqrt(u.T() * s) * u.grid().box_length();
  return std::sqrt(u.dt() * s) * u.grid().dx();
}

// Space-time spectral symbol m(tau, xi_1, xi_2) applied to a copy of u.
template <class Symbol>
SpaceTimeField apply_symbol(const SpaceTimeField& u, Symbol&& m) {
  SpaceTimeField r = u.spectral();
  const Grid2D& g = r.grid();
  for (int k = 0; k < r.Mt(); ++k) {
    const double t = r.tau(k);
    for (int i = 0; i < g.M(); ++i)
      for (int j = 0; j < g.M(); ++j) r.at(k, i, j) *= m(t, g.xi(i), g.xi(j));
  }
  return r;
}

// Time series sampled at t_k = k T / M_t (M_t = series length) to spectral form,
// after multiplying by the taper.
inline SpaceTimeField spacetime_transform(const std::vector<ScalarField>& series, double T,
                                          const Taper& taper = Taper{}) {
  if (series.empty()) throw DimensionError("empty time series");
  const int Mt = static_cast<int>(series.size());
  SpaceTimeField u(series.front().grid_ptr(), T, Mt);
  const std::size_t n = series.front().grid().size();
  for (int k = 0; k < Mt; ++k) {
    if (!series[k].grid().same_as(series.front().grid())) throw GridMismatch("time slices on different grids");
    const ScalarField slice = series[k].physical();
    const double w = taper.weight(static_cast<double>(k) / Mt);
    std::copy(slice.data().begin(), slice.data().end(), u.data().begin() + static_cast<std::ptrdiff_t>(k * n));
    for (std::size_t q = 0; q < n; ++q) u.data()[k * n + q] *= w;
  }
  u.taper = taper.name();
  return std::move(u.to_spectral());
}

// ---- dyadic blocks --------------------------------------------------------------

inline bool is_dyadic(double x) {
  if (!(x >= 1.0) || !std::isfinite(x)) return false;
  int e;
  return std::frexp(x, &e) == 0.5;
}

// Dyadic label of r >= 0 under the shell convention [N, 2N), N = 1 for r < 2.
inline double dyadic_of(double r) { return r < 2.0 ? 1.0 : std::exp2(std::floor(std::log2(r))); }
inline int dyadic_exponent(double r) { return r < 2.0 ? 0 : static_cast<int>(std::floor(std::log2(r))); }

// K_{N,L}^{sign} = { |xi| ~ N, |tau + sign |xi|| ~ L }.
struct DyadicBlock {
  int sign = 1;
  double N = 1.0;
  double L = 1.0;

  void validate() const {
    if (sign != 1 && sign != -1) throw PreconditionError("block sign must be +1 or -1");
    if (!is_dyadic(N) || !is_dyadic(L)) throw PreconditionError("block N and L must be powers of two >= 1");
  }
  bool contains(double tau, double xi_norm) const {
    return in_shell(xi_norm, N) && in_shell(std::abs(tau + sign * xi_norm), L);
  }
  std::string label() const {
    return std::string(sign > 0 ? "+" : "-") + "(N=" + std::to_string(static_cast<long>(N)) +
           ",L=" + std::to_string(static_cast<long>(L)) + ")";
  }
};

inline SpaceTimeField project_block(const SpaceTimeField& u, const DyadicBlock& K) {
  if (u.rep() != Rep::Spectral) throw PreconditionError("block projection needs the spectral representation");
  K.validate();
  SpaceTimeField r = u;
  const Grid2D& g = r.grid();
  for (int k = 0; k < r.Mt(); ++k) {
    const double t = r.tau(k);
    for (int i = 0; i < g.M(); ++i)
      for (int j = 0; j < g.M(); ++j)
        if (!K.contains(t, g.xi_norm(i, j))) r.at(k, i, j) = 0.0;
  }
  return r;
}

struct BlockMass {
  double N, L;
  double mass;  // squared continuum L^2 norm of the block piece
};

// Squared block norms ||P_K u||^2 over all occupied (N, L) for one sign, ordered by (N, L).
inline std::vector<BlockMass> block_masses(const SpaceTimeField& u, int sign) {
  if (u.rep() != Rep::Spectral) throw PreconditionError("block masses need the spectral representation");
  constexpr int E = 64;
  std::vector<double> acc(E * E, 0.0);
  const Grid2D& g = u.grid();
  for (int k = 0; k < u.Mt(); ++k) {
    const double t = u.tau(k);
    for (int i = 0; i < g.M(); ++i)
      for (int j = 0; j < g.M(); ++j) {
        const double r = g.xi_norm(i, j);
        acc[dyadic_exponent(r) * E + dyadic_exponent(std::abs(t + sign * r))] += std::norm(u.at(k, i, j));
      }
  }
  const double scale = u.T() * g.box_length() * g.box_length();
  std::vector<BlockMass> out;
  for (int n = 0; n < E; ++n)
    for (int l = 0; l < E; ++l)
      if (acc[n * E + l] > 0.0) out.push_back({std::exp2(n), std::exp2(l), acc[n * E + l] * scale});
  return out;
}

// ---- X^{s,b} ----------------------------------------------------------------------

struct XsbParams {
  double s = 0.25;
  double b = 0.5;
  double delta = 0.0;  // s - 1/4
  double eps = 0.0;    // b - 1/2

  static XsbParams from_offsets(double delta, double eps) { return {0.25 + delta, 0.5 + eps, delta, eps}; }
  static XsbParams from_sb(double s, double b) { return {s, b, s - 0.25, b - 0.5}; }

  // 0 < 100 eps < delta << 1, with "<< 1" read as delta <= 0.1.
  bool in_small_offset_regime() const { return eps > 0.0 && 100.0 * eps < delta && delta <= 0.1; }
  std::optional<std::string> warning() const {
    if (in_small_offset_regime()) return std::nullopt;
    return "offsets (delta=" + std::to_string(delta) + ", eps=" + std::to_string(eps) +
           ") lie outside 0 < 100 eps < delta << 1";
  }
};

// (sum_{N,L} (N^s L^b ||P_{K_{N,L}^sign} u||)^2)^{1/2}
inline double xsb_norm(const SpaceTimeField& u, const XsbParams& p, int sign) {
  double s = 0.0;
  for (const auto& m : block_masses(u, sign)) s += std::pow(m.N, 2 * p.s) * std::pow(m.L, 2 * p.b) * m.mass;
  return std::sqrt(s);
}

// ---- interaction geometry -------------------------------------------------------

struct SpaceTimeFrequency {
  double tau = 0.0;
  Vec2 xi{0.0, 0.0};
};

struct InteractionSample {
  SpaceTimeFrequency X0, X1, X2;
  std::array<int, 3> signs{1, 1, 1};
  std::array<double, 3> h{0.0, 0.0, 0.0};  // h_j = tau_j + sign_j |xi_j|
  double theta = 0.0;                      // angle between sign_1 xi_1 and sign_2 xi_2
};

inline InteractionSample make_interaction(const SpaceTimeFrequency& X1, const SpaceTimeFrequency& X2,
                                          const std::array<int, 3>& signs) {
  InteractionSample s;
  s.X1 = X1;
  s.X2 = X2;
  s.X0 = {X1.tau - X2.tau, {X1.xi[0] - X2.xi[0], X1.xi[1] - X2.xi[1]}};
  s.signs = signs;
  const SpaceTimeFrequency* X[3] = {&s.X0, &s.X1, &s.X2};
  for (int j = 0; j < 3; ++j) s.h[j] = X[j]->tau + signs[j] * norm2(X[j]->xi);
  const Vec2 a{signs[1] * X1.xi[0], signs[1] * X1.xi[1]};
  const Vec2 b{signs[2] * X2.xi[0], signs[2] * X2.xi[1]};
  s.theta = angle_between(a, b);
  return s;
}

struct InteractionRatios {
  double max_h = 0.0;
  double ratio = 0.0;             // max|h| / (min(|xi_1|,|xi_2|) theta^2); 0/0 counts as degenerate
  bool degenerate = false;        // theta = 0 within tolerance
  bool first_branch = false;      // |xi_0| << |xi_1| ~ |xi_2| and opposite signs
  double first_branch_ratio = std::numeric_limits<double>::quiet_NaN();   // max|h| / min|xi|
  double second_branch_ratio = std::numeric_limits<double>::quiet_NaN();  // max|h||xi_0| / (|xi_1||xi_2|theta^2)
  double optimal_tau_ratio = 0.0;  // (min over tau of max|h|) / (min|xi| theta^2)
};

struct GeometryOptions {
  double small_factor = 0.1;      // |xi_0| <= small_factor * min(|xi_1|,|xi_2|) reads as "<<"
  double theta_tolerance = 1e-6;  // below this h_1 - h_2 - h_0 ~ |xi| theta^2 drowns in round-off
};

inline InteractionRatios interaction_ratios(const InteractionSample& s, const GeometryOptions& o = {}) {
  InteractionRatios r;
  const double n0 = norm2(s.X0.xi), n1 = norm2(s.X1.xi), n2 = norm2(s.X2.xi);
  const double nmin = std::min(n1, n2);
  r.max_h = std::max({std::abs(s.h[0]), std::abs(s.h[1]), std::abs(s.h[2])});
  // h_1 - h_2 - h_0 depends on the spatial frequencies only.
  const double sigma = s.signs[1] * n1 - s.signs[2] * n2 - s.signs[0] * n0;
  const double bound = nmin * s.theta * s.theta;
  r.degenerate = s.theta <= o.theta_tolerance;
  if (r.degenerate) {
    r.ratio = bound > 0.0 ? r.max_h / bound : 0.0;
    r.optimal_tau_ratio = 0.0;
  } else {
    r.ratio = r.max_h / bound;
    r.optimal_tau_ratio = std::abs(sigma) / 3.0 / bound;
  }
  r.first_branch = s.signs[1] != s.signs[2] && n0 <= o.small_factor * nmin;
  if (r.first_branch)
    r.first_branch_ratio = r.max_h / nmin;
  else if (!r.degenerate && n0 > 0.0)
    r.second_branch_ratio = r.max_h * n0 / (n1 * n2 * s.theta * s.theta);
  return r;
}

struct GeometrySamplerOptions {
  std::uint64_t seed = 1;
  std::optional<std::array<int, 3>> signs;  // random per sample when empty
  double min_norm = 1.0, max_norm = 1000.0;  // log-uniform |xi_1|, |xi_2|
  double regime_fraction = 0.25;             // share of samples drawn with |xi_0| << |xi_1|
  double spread = 0.0;                       // h_1, h_2 uniform in [-spread|xi_j|, spread|xi_j|]
  GeometryOptions geometry;
};

struct GeometryReport {
  long samples = 0;
  long degenerate = 0;
  long first_branch = 0;
  long second_branch = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  InteractionSample argmin;
  double min_theta_first_branch = std::numeric_limits<double>::infinity();
  double max_theta_first_branch = 0.0;
  double min_first_branch_ratio = std::numeric_limits<double>::infinity();
  double min_second_branch_ratio = std::numeric_limits<double>::infinity();
  double min_optimal_tau_ratio = std::numeric_limits<double>::infinity();
  bool zero_only_when_collinear = true;

  void add(const InteractionSample& s, const InteractionRatios& r) {
    ++samples;
    if (r.ratio <= 1e-12 && !r.degenerate) zero_only_when_collinear = false;
    if (r.degenerate) {
      ++degenerate;
    } else {
      if (r.ratio < min_ratio) {
        min_ratio = r.ratio;
        argmin = s;
      }
      min_optimal_tau_ratio = std::min(min_optimal_tau_ratio, r.optimal_tau_ratio);
    }
    if (r.first_branch) {
      ++first_branch;
      min_theta_first_branch = std::min(min_theta_first_branch, s.theta);
      max_theta_first_branch = std::max(max_theta_first_branch, s.theta);
      min_first_branch_ratio = std::min(min_first_branch_ratio, r.first_branch_ratio);
    } else if (!std::isnan(r.second_branch_ratio)) {
      ++second_branch;
      min_second_branch_ratio = std::min(min_second_branch_ratio, r.second_branch_ratio);
    }
  }
};

// Random interactions. X_1, X_2 sit on their cones shifted by h_1, h_2 (on the
// cones when spread = 0); X_0 = X_1 - X_2 carries the forced modulation h_0.
inline GeometryReport check_interaction_geometry(long samples, const GeometrySamplerOptions& o = {}) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double lmin = std::log(o.min_norm), lmax = std::log(o.max_norm);
  GeometryReport rep;
  for (long n = 0; n < samples; ++n) {
    std::array<int, 3> sg;
    if (o.signs) {
      sg = *o.signs;
    } else {
      for (auto& v : sg) v = U(rng) < 0.5 ? 1 : -1;
    }
    const double r1 = std::exp(lmin + (lmax - lmin) * U(rng));
    const double a1 = 2.0 * pi * U(rng);
    const Vec2 xi1{r1 * std::cos(a1), r1 * std::sin(a1)};
    Vec2 xi2;
    if (U(rng) < o.regime_fraction) {
      // |xi_0| uniform below small_factor * |xi_1| / (1 + small_factor), so |xi_0| <= small_factor * |xi_2|
      const double f = o.geometry.small_factor / (1.0 + o.geometry.small_factor);
      const double r0 = f * r1 * U(rng);
      const double a0 = 2.0 * pi * U(rng);
      xi2 = {xi1[0] - r0 * std::cos(a0), xi1[1] - r0 * std::sin(a0)};
    } else {
      const double r2 = std::exp(lmin + (lmax - lmin) * U(rng));
      const double a2 = 2.0 * pi * U(rng);
      xi2 = {r2 * std::cos(a2), r2 * std::sin(a2)};
    }
    const double n1 = norm2(xi1), n2 = norm2(xi2);
    const double h1 = o.spread * n1 * (2.0 * U(rng) - 1.0);
    const double h2 = o.spread * n2 * (2.0 * U(rng) - 1.0);
    const auto s = make_interaction({h1 - sg[1] * n1, xi1}, {h2 - sg[2] * n2, xi2}, sg);
    rep.add(s, interaction_ratios(s, o.geometry));
  }
  return rep;
}

// ---- bilinear block constants on a sparse lattice ----------------------------------

// Lattice xi in Z^2 (unit spacing), tau in dtau * Z. Each xi column stores a
// dense tau range [lo, lo + len) with a mask for the block's lattice points.
struct LatticeBlock {
  DyadicBlock K;
  double dtau = 0.5;
  std::vector<std::array<int, 2>> xi;
  std::vector<int> lo, len;
  std::vector<std::size_t> offset;
  std::vector<unsigned char> mask;
  std::unordered_map<std::int64_t, int> column_of;
  std::size_t dense = 0;
  std::size_t points = 0;

  static std::int64_t key(int a, int b) {
    return (static_cast<std::int64_t>(a) << 32) ^ static_cast<std::uint32_t>(b);
  }
  int column(int a, int b) const {
    const auto it = column_of.find(key(a, b));
    return it == column_of.end() ? -1 : it->second;
  }
  int hi(int c) const { return lo[c] + len[c] - 1; }
};

inline LatticeBlock build_lattice_block(const DyadicBlock& K, double dtau) {
  K.validate();
  if (!(dtau > 0)) throw PreconditionError("lattice tau spacing must be positive");
  LatticeBlock B;
  B.K = K;
  B.dtau = dtau;
  const int R = static_cast<int>(2 * K.N);
  for (int a = -R; a <= R; ++a)
    for (int b = -R; b <= R; ++b) {
      const double r = std::hypot(a, b);
      if (!in_shell(r, K.N)) continue;
      // |tau + sign r| < 2L bounds the tau range.
      const double c = -K.sign * r;
      int m_lo = static_cast<int>(std::ceil((c - 2 * K.L) / dtau));
      int m_hi = static_cast<int>(std::floor((c + 2 * K.L) / dtau));
      auto inside = [&](int m) { return in_shell(std::abs(m * dtau + K.sign * r), K.L); };
      while (m_lo <= m_hi && !inside(m_lo)) ++m_lo;
      while (m_hi >= m_lo && !inside(m_hi)) --m_hi;
      if (m_lo > m_hi) continue;
      const int col = static_cast<int>(B.xi.size());
      B.xi.push_back({a, b});
      B.lo.push_back(m_lo);
      B.len.push_back(m_hi - m_lo + 1);
      B.offset.push_back(B.dense);
      B.column_of[LatticeBlock::key(a, b)] = col;
      for (int m = m_lo; m <= m_hi; ++m) {
        const bool in = inside(m);
        B.mask.push_back(in ? 1 : 0);
        B.points += in;
      }
      B.dense += static_cast<std::size_t>(m_hi - m_lo + 1);
    }
  return B;
}

struct LatticeTriple {
  LatticeBlock K0, K1, K2;
  struct Pair {
    int c0, c1, c2;
  };
  std::vector<Pair> pairs;  // xi_0 = xi_1 - xi_2 with overlapping tau ranges
};

inline LatticeTriple build_lattice_triple(const DyadicBlock& K0, const DyadicBlock& K1, const DyadicBlock& K2,
                                          double dtau) {
  LatticeTriple T{build_lattice_block(K0, dtau), build_lattice_block(K1, dtau), build_lattice_block(K2, dtau), {}};
  for (int c0 = 0; c0 < static_cast<int>(T.K0.xi.size()); ++c0)
    for (int c1 = 0; c1 < static_cast<int>(T.K1.xi.size()); ++c1) {
      const int c2 = T.K2.column(T.K1.xi[c1][0] - T.K0.xi[c0][0], T.K1.xi[c1][1] - T.K0.xi[c0][1]);
      if (c2 < 0) continue;
      // tau_2 = tau_1 - tau_0 must reach K2's range
      if (T.K1.hi(c1) - T.K0.lo[c0] < T.K2.lo[c2] || T.K1.lo[c1] - T.K0.hi(c0) > T.K2.hi(c2)) continue;
      T.pairs.push_back({c0, c1, c2});
    }
  return T;
}

namespace detail {

// Visits every lattice triple (m0, m1, m2 = m1 - m0) of one column pair as
// dense-array positions (p0, p1, p2).
template <class F>
void for_each_tau_triple(const LatticeTriple& T, const LatticeTriple::Pair& p, F&& f) {
  const auto &A = T.K0, &B = T.K1, &C = T.K2;
  const int lo0 = std::max(A.lo[p.c0], B.lo[p.c1] - C.hi(p.c2));
  const int hi0 = std::min(A.hi(p.c0), B.hi(p.c1) - C.lo[p.c2]);
  for (int m0 = lo0; m0 <= hi0; ++m0) {
    const std::size_t p0 = A.offset[p.c0] + static_cast<std::size_t>(m0 - A.lo[p.c0]);
    if (!A.mask[p0]) continue;
    const int m1lo = std::max(B.lo[p.c1], C.lo[p.c2] + m0);
    const int m1hi = std::min(B.hi(p.c1), C.hi(p.c2) + m0);
    for (int m1 = m1lo; m1 <= m1hi; ++m1)
      f(p0, B.offset[p.c1] + static_cast<std::size_t>(m1 - B.lo[p.c1]),
        C.offset[p.c2] + static_cast<std::size_t>(m1 - m0 - C.lo[p.c2]));
  }
}

inline void apply_mask(const LatticeBlock& B, std::vector<cplx>& v) {
  for (std::size_t q = 0; q < v.size(); ++q)
    if (!B.mask[q]) v[q] = 0.0;
}

inline double count_norm(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

}  // namespace detail

// B(X_0) = sum_{X_1} u_1(X_1) conj(u_2(X_1 - X_0)) on K_0: the spectrum of u_1 conj(u_2).
inline std::vector<cplx> lattice_product(const LatticeTriple& T, const std::vector<cplx>& u1,
                                         const std::vector<cplx>& u2) {
  std::vector<cplx> out(T.K0.dense, cplx(0.0));
  for (const auto& p : T.pairs)
    detail::for_each_tau_triple(T, p, [&](std::size_t p0, std::size_t p1, std::size_t p2) {
      out[p0] += u1[p1] * std::conj(u2[p2]);
    });
  return out;
}

// Adjoint in u_1: <B(u_1, u_2), w> = <u_1, adjoint_first(w, u_2)>.
inline std::vector<cplx> adjoint_first(const LatticeTriple& T, const std::vector<cplx>& w,
                                       const std::vector<cplx>& u2) {
  std::vector<cplx> out(T.K1.dense, cplx(0.0));
  for (const auto& p : T.pairs)
    detail::for_each_tau_triple(T, p, [&](std::size_t p0, std::size_t p1, std::size_t p2) {
      out[p1] += w[p0] * u2[p2];
    });
  return out;
}

// Conjugate-linear slot: <B(u_1, u_2), w> = sum conj(u_2) adjoint_second(w, u_1).
inline std::vector<cplx> adjoint_second(const LatticeTriple& T, const std::vector<cplx>& w,
                                        const std::vector<cplx>& u1) {
  std::vector<cplx> out(T.K2.dense, cplx(0.0));
  for (const auto& p : T.pairs)
    detail::for_each_tau_triple(T, p, [&](std::size_t p0, std::size_t p1, std::size_t p2) {
      out[p2] += std::conj(w[p0]) * u1[p1];
    });
  return out;
}

// C_1, C_2 (j = 1, 2) and C_3; returns their minimum.
inline double theoretical_block_constant(const DyadicBlock& K0, const DyadicBlock& K1, const DyadicBlock& K2) {
  const double N[3] = {K0.N, K1.N, K2.N}, L[3] = {K0.L, K1.L, K2.L};
  const double n012 = std::min({N[0], N[1], N[2]}), l012 = std::min({L[0], L[1], L[2]});
  auto pair_constant = [&](int a, int b) {
    return std::sqrt(n012 * std::min(L[a], L[b])) * std::pow(std::min(N[a], N[b]) * std::max(L[a], L[b]), 0.25);
  };
  const double c3 = std::sqrt(n012 * n012 * l012);
  return std::min({pair_constant(1, 2), pair_constant(0, 1), pair_constant(0, 2), c3});
}

struct BilinearOptions {
  int trials = 2;             // independent random starts
  bool adversarial = true;    // alternating power iteration from each start
  int max_iterations = 60;
  double tolerance = 1e-6;    // relative increase that stops the iteration
  double dtau = 0.5;
  std::uint64_t seed = 1;
};

struct BilinearReport {
  DyadicBlock K0, K1, K2;
  bool feasible = false;
  double empirical = 0.0;     // ||P_{K0}(u_1 conj u_2)|| / (||u_1|| ||u_2||), continuum scaling
  double theoretical = 0.0;   // min(C_1, C_2, C_3)
  double ratio = 0.0;         // empirical / theoretical
  double trivial_bound = 0.0; // same scaling times sqrt(min block point count)
  std::size_t points0 = 0, points1 = 0, points2 = 0, pairs = 0;
  int iterations = 0;
};

// Lattice counts convert to the continuum ratio on a torus of side 2 pi and a
// time window 2 pi / dtau: factor (2 pi)^{-3/2} sqrt(dtau).
inline double lattice_to_continuum(double dtau) { return std::pow(2.0 * pi, -1.5) * std::sqrt(dtau); }

inline BilinearReport measure_bilinear_constant(const DyadicBlock& K0, const DyadicBlock& K1, const DyadicBlock& K2,
                                                const BilinearOptions& o = {}) {
  const LatticeTriple T = build_lattice_triple(K0, K1, K2, o.dtau);
  BilinearReport r;
  r.K0 = K0;
  r.K1 = K1;
  r.K2 = K2;
  r.points0 = T.K0.points;
  r.points1 = T.K1.points;
  r.points2 = T.K2.points;
  r.pairs = T.pairs.size();
  r.theoretical = theoretical_block_constant(K0, K1, K2);
  const double scale = lattice_to_continuum(o.dtau);
  r.trivial_bound = scale * std::sqrt(static_cast<double>(std::min({r.points0, r.points1, r.points2})));
  if (T.pairs.empty() || r.points0 == 0 || r.points1 == 0 || r.points2 == 0) return r;

  auto random_on = [](const LatticeBlock& B, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<cplx> v(B.dense);
    for (std::size_t q = 0; q < v.size(); ++q) {
      const double re = nd(rng), im = nd(rng);
      v[q] = B.mask[q] ? cplx(re, im) : cplx(0.0);
    }
    const double n = detail::count_norm(v);
    for (auto& z : v) z /= n;
    return v;
  };
  auto normalize = [](std::vector<cplx>& v) {
    const double n = detail::count_norm(v);
    if (n > 0)
      for (auto& z : v) z /= n;
    return n;
  };

  double best = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    std::mt19937_64 rng(mix_seed(o.seed, static_cast<std::uint64_t>(t)));
    auto u1 = random_on(T.K1, rng);
    auto u2 = random_on(T.K2, rng);
    auto B = lattice_product(T, u1, u2);
    double val = detail::count_norm(B);
    if (o.adversarial) {
      for (int it = 0; it < o.max_iterations && val > 0.0; ++it) {
        for (auto& z : B) z /= val;
        u1 = adjoint_first(T, B, u2);
        detail::apply_mask(T.K1, u1);
        if (normalize(u1) == 0.0) break;
        B = lattice_product(T, u1, u2);
        const double mid = normalize(B);
        u2 = adjoint_second(T, B, u1);
        detail::apply_mask(T.K2, u2);
        if (normalize(u2) == 0.0 || mid == 0.0) break;
        B = lattice_product(T, u1, u2);
        const double next = detail::count_norm(B);
        r.iterations = std::max(r.iterations, it + 1);
        const bool done = next - val <= o.tolerance * next;
        val = std::max(val, next);
        if (done) break;
      }
    }
    best = std::max(best, val);
  }
  r.feasible = best > 0.0;
  r.empirical = scale * best;
  r.ratio = r.empirical / r.theoretical;
  return r;
}

struct ScalingScanReport {
  std::vector<double> N;
  std::vector<BilinearReport> rows;
  LinearFit empirical_fit;    // log empirical against log N
  LinearFit theoretical_fit;  // log min(C) against log N
};

// N_1 = N_2 = N, L_1 = L_2 = 1, opposite signs, N_0 = 1. L_0 is lifted to 2N:
// the interaction forces |tau_0| ~ |xi_1| + |xi_2|, so an L_0 = 1 block is empty.
inline ScalingScanReport bilinear_scaling_scan(const std::vector<double>& Ns, const BilinearOptions& o = {}) {
  ScalingScanReport rep;
  std::vector<double> emp, th;
  for (double N : Ns) {
    const auto r = measure_bilinear_constant({1, 1, 2 * N}, {1, N, 1}, {-1, N, 1}, o);
    rep.N.push_back(N);
    rep.rows.push_back(r);
    emp.push_back(r.empirical);
    th.push_back(r.theoretical);
  }
  if (Ns.size() >= 2) {
    rep.empirical_fit = log_log_fit(Ns, emp);
    rep.theoretical_fit = log_log_fit(Ns, th);
  }
  return rep;
}

// ---- multilinear norm ratios --------------------------------------------------------

enum class MultilinearKind {
  QjkAPhi,      // Q_12(D^-1 A, phi) in X^{s-1/2,b-1}
  Qj0APhi,      // Q_10(D^-1 A, phi) in X^{s-1/2,b-1}
  QjkAA,        // Q_12(D^-1 A, A) in X^{s-1,b-1}
  Qj0AA,        // Q_10(D^-1 A, A) in X^{s-1,b-1}
  QjkPhibarPhi, // Q_12(conj phi, phi) in X^{s-1,b-1}
  Qj0PhibarPhi, // Q_10(conj phi, phi) in X^{s-1,b-1}
  AAPhi,        // A A phi in X^{s-1/2,b-1}
  PhibarAPhi,   // conj(phi) A phi in X^{s,b-1}
  Phi3,         // phi^3 in X^{s-1/2,b-1}
  Phi5,         // phi^5 in X^{s-1/2,b-1}
};

inline const std::vector<std::pair<MultilinearKind, std::string>>& multilinear_kinds() {
  static const std::vector<std::pair<MultilinearKind, std::string>> k = {
      {MultilinearKind::QjkAPhi, "qjk-a-phi"},           {MultilinearKind::Qj0APhi, "qj0-a-phi"},
      {MultilinearKind::QjkAA, "qjk-a-a"},               {MultilinearKind::Qj0AA, "qj0-a-a"},
      {MultilinearKind::QjkPhibarPhi, "qjk-phibar-phi"}, {MultilinearKind::Qj0PhibarPhi, "qj0-phibar-phi"},
      {MultilinearKind::AAPhi, "a-a-phi"},               {MultilinearKind::PhibarAPhi, "phibar-a-phi"},
      {MultilinearKind::Phi3, "phi3"},                   {MultilinearKind::Phi5, "phi5"}};
  return k;
}

inline std::string to_string(MultilinearKind k) {
  for (const auto& [v, s] : multilinear_kinds())
    if (v == k) return s;
  return "unknown";
}

inline MultilinearKind parse_multilinear_kind(const std::string& s) {
  for (const auto& [v, name] : multilinear_kinds())
    if (name == s) return v;
  throw PreconditionError("unknown multilinear kind '" + s + "'");
}

struct MultilinearShape {
  int factors;
  std::vector<double> input_shift;  // regularity of factor j is s + shift (A: 0, phi: 1/2)
  double output_shift;              // output regularity s + shift, modulation b - 1
};

inline MultilinearShape multilinear_shape(MultilinearKind k) {
  switch (k) {
    case MultilinearKind::QjkAPhi:
    case MultilinearKind::Qj0APhi: return {2, {0.0, 0.5}, -0.5};
    case MultilinearKind::QjkAA:
    case MultilinearKind::Qj0AA: return {2, {0.0, 0.0}, -1.0};
    case MultilinearKind::QjkPhibarPhi:
    case MultilinearKind::Qj0PhibarPhi: return {2, {0.5, 0.5}, -1.0};
    case MultilinearKind::AAPhi: return {3, {0.0, 0.0, 0.5}, -0.5};
    case MultilinearKind::PhibarAPhi: return {3, {0.5, 0.0, 0.5}, 0.0};
    case MultilinearKind::Phi3: return {3, {0.5, 0.5, 0.5}, -0.5};
    case MultilinearKind::Phi5: return {5, {0.5, 0.5, 0.5, 0.5, 0.5}, -0.5};
  }
  return {0, {}, 0.0};
}

struct MultilinearOptions {
  std::vector<double> scales;  // dyadic N of every factor; empty picks a default per kind
  int trials = 3;
  std::uint64_t seed = 1;
  std::vector<int> signs;      // factor signs; empty alternates +, -, +, ...
};

struct MultilinearRow {
  double N = 0.0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
};

struct MultilinearReport {
  MultilinearKind kind{};
  XsbParams params;
  std::vector<MultilinearRow> rows;
  LinearFit fit;  // log max ratio against log N
  bool fitted = false;
};

// Default scale grids: the dense space-time lattice for k factors at scale N
// needs about (4kN)^2 x 4kN points.
inline std::vector<double> default_multilinear_scales(MultilinearKind k) {
  const int f = multilinear_shape(k).factors;
  if (f <= 3) return {1, 2, 4, 8};
  return {1, 2, 4};
}

// Random field on the K_{N,1}^{sign} lattice points (xi != 0) of u's layout.
inline SpaceTimeField random_block_field(const SpaceTimeField& layout, const DyadicBlock& K, std::mt19937_64& rng) {
  SpaceTimeField u(layout.grid_ptr(), layout.T(), layout.Mt(), Rep::Spectral);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Grid2D& g = u.grid();
  for (int k = 0; k < u.Mt(); ++k)
    for (int i = 0; i < g.M(); ++i)
      for (int j = 0; j < g.M(); ++j) {
        const double re = nd(rng), im = nd(rng);
        const double r = g.xi_norm(i, j);
        if (r > 0.0 && K.contains(u.tau(k), r)) u.at(k, i, j) = cplx(re, im);
      }
  return u;
}

namespace detail {

inline SpaceTimeField pointwise(const SpaceTimeField& a, const SpaceTimeField& b) {
  a.require_same_layout(b);
  SpaceTimeField r = a.physical();
  const SpaceTimeField q = b.physical();
  for (std::size_t k = 0; k < r.size(); ++k) r.data()[k] *= q.data()[k];
  return r;
}

inline SpaceTimeField conj_field(const SpaceTimeField& a) {
  SpaceTimeField r = a.physical();
  for (auto& z : r.data()) z = std::conj(z);
  return r;
}

// d_0 = d_t, d_1, d_2 of a spectral field.
inline SpaceTimeField st_derivative(const SpaceTimeField& u, int mu) {
  return apply_symbol(u, [mu](double t, double x1, double x2) { return I * (mu == 0 ? t : mu == 1 ? x1 : x2); });
}

inline SpaceTimeField inverse_d(const SpaceTimeField& u) {
  return apply_symbol(u, [](double, double x1, double x2) {
    const double r = std::hypot(x1, x2);
    return r > 0.0 ? cplx(1.0 / r) : cplx(0.0);
  });
}

// Q_{ab}(u, v) = d_a u d_b v - d_b u d_a v; u, v spectral; `conj_u` applies conj to u first.
inline SpaceTimeField null_form(const SpaceTimeField& u, const SpaceTimeField& v, int a, int b, bool conj_u) {
  auto du = [&](int m) {
    SpaceTimeField d = st_derivative(u, m);
    return conj_u ? conj_field(d) : d.to_physical();
  };
  SpaceTimeField x = pointwise(du(a), st_derivative(v, b));
  const SpaceTimeField y = pointwise(du(b), st_derivative(v, a));
  for (std::size_t k = 0; k < x.size(); ++k) x.data()[k] -= y.data()[k];
  return x;
}

}  // namespace detail

// The left side of the chosen form evaluated on spectral inputs; output spectral.
inline SpaceTimeField multilinear_form(MultilinearKind k, const std::vector<SpaceTimeField>& in) {
  using namespace detail;
  SpaceTimeField out;
  switch (k) {
    case MultilinearKind::QjkAPhi: out = null_form(inverse_d(in[0]), in[1], 1, 2, false); break;
    case MultilinearKind::Qj0APhi: out = null_form(inverse_d(in[0]), in[1], 1, 0, false); break;
    case MultilinearKind::QjkAA: out = null_form(inverse_d(in[0]), in[1], 1, 2, false); break;
    case MultilinearKind::Qj0AA: out = null_form(inverse_d(in[0]), in[1], 1, 0, false); break;
    case MultilinearKind::QjkPhibarPhi: out = null_form(in[0], in[1], 1, 2, true); break;
    case MultilinearKind::Qj0PhibarPhi: out = null_form(in[0], in[1], 1, 0, true); break;
    case MultilinearKind::AAPhi: out = pointwise(pointwise(in[0], in[1]), in[2]); break;
    case MultilinearKind::PhibarAPhi: out = pointwise(pointwise(conj_field(in[0]), in[1]), in[2]); break;
    case MultilinearKind::Phi3: out = pointwise(pointwise(in[0], in[1]), in[2]); break;
    case MultilinearKind::Phi5: {
      out = pointwise(in[0], in[1]);
      for (int j = 2; j < 5; ++j) out = pointwise(out, in[j]);
      break;
    }
  }
  return std::move(out.to_spectral());
}

// Ratio of the left norm (maximized over the output sign) to the product of the
// input norms, one row per scale; inputs are random fields on K_{N,1}^{sign_j}.
inline MultilinearReport measure_multilinear_ratio(MultilinearKind kind, const XsbParams& p,
                                                   const MultilinearOptions& o = {}) {
  const MultilinearShape shape = multilinear_shape(kind);
  MultilinearReport rep;
  rep.kind = kind;
  rep.params = p;
  const std::vector<double> scales = o.scales.empty() ? default_multilinear_scales(kind) : o.scales;
  std::vector<int> signs = o.signs;
  for (int j = static_cast<int>(signs.size()); j < shape.factors; ++j) signs.push_back(j % 2 == 0 ? 1 : -1);
  const XsbParams out_params = XsbParams::from_sb(p.s + shape.output_shift, p.b - 1.0);

  std::vector<double> xs, ys;
  for (std::size_t si = 0; si < scales.size(); ++si) {
    const double N = scales[si];
    const int k = shape.factors;
    // no aliasing: |n_i| < 2kN in space, |tau| < k(2N + 2) in time (unit spacings)
    int M = 8;
    while (M < 4 * k * static_cast<int>(N) + 1) M *= 2;
    const int Mt = 2 * k * (2 * static_cast<int>(N) + 2) + 2;
    const SpaceTimeField layout(make_grid(M, 2 * pi), 2 * pi, Mt, Rep::Spectral);
    MultilinearRow row;
    row.N = N;
    for (int t = 0; t < o.trials; ++t) {
      std::mt19937_64 rng(mix_seed(o.seed, si * 1000 + static_cast<std::uint64_t>(t)));
      std::vector<SpaceTimeField> in;
      double denom = 1.0;
      for (int j = 0; j < k; ++j) {
        const DyadicBlock K{signs[j], N, 1.0};
        in.push_back(random_block_field(layout, K, rng));
        denom *= xsb_norm(in.back(), XsbParams::from_sb(p.s + shape.input_shift[j], p.b), signs[j]);
      }
      const SpaceTimeField lhs = multilinear_form(kind, in);
      const double num = std::max(xsb_norm(lhs, out_params, 1), xsb_norm(lhs, out_params, -1));
      const double ratio = denom > 0.0 ? num / denom : 0.0;
      row.mean_ratio += ratio / o.trials;
      row.max_ratio = std::max(row.max_ratio, ratio);
    }
    rep.rows.push_back(row);
    if (row.max_ratio > 0.0) {
      xs.push_back(N);
      ys.push_back(row.max_ratio);
    }
  }
  if (xs.size() >= 2) {
    rep.fit = log_log_fit(xs, ys);
    rep.fitted = true;
  }
  return rep;
}

// Same ratio for given inputs (spectral, one per factor).
inline double multilinear_ratio(MultilinearKind kind, const XsbParams& p, const std::vector<SpaceTimeField>& in,
                                const std::vector<int>& signs) {
  const MultilinearShape shape = multilinear_shape(kind);
  if (static_cast<int>(in.size()) != shape.factors || static_cast<int>(signs.size()) != shape.factors)
    throw PreconditionError("factor count mismatch for " + to_string(kind));
  double denom = 1.0;
  for (int j = 0; j < shape.factors; ++j)
    denom *= xsb_norm(in[j], XsbParams::from_sb(p.s + shape.input_shift[j], p.b), signs[j]);
  if (denom == 0.0) return 0.0;
  const SpaceTimeField lhs = multilinear_form(kind, in);
  const XsbParams out_params = XsbParams::from_sb(p.s + shape.output_shift, p.b - 1.0);
  return std::max(xsb_norm(lhs, out_params, 1), xsb_norm(lhs, out_params, -1)) / denom;
}

}  // namespace csh
