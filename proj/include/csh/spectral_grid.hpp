#pragma once

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace csh {

enum class Rep { Physical = 0, Spectral = 1 };

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard<std::mutex> lk(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;
}  // namespace detail

// Periodic M x M torus of side box_length. Storage is row-major with the
// first index along x_1: value(i, j) sits at x = (i, j) * box_length / M.
// Spectral arrays use the standard FFT ordering n = 0..M/2-1, -M/2..-1, and
// hold Fourier coefficients c_n with u(x) = sum_n c_n exp(i xi_n . x),
// xi_n = n * 2 pi / box_length.
class Grid2D {
 public:
  static constexpr double default_box_length = 2.0 * pi * 32.0;

  explicit Grid2D(int M, double box_length = default_box_length) : M_(M), L_(box_length) {
    if (M < 8 || (M & (M - 1)) != 0)
      throw DimensionError("grid size must be a power of two >= 8, got " + std::to_string(M));
    if (!(box_length > 0)) throw DimensionError("box length must be positive");
    dk_ = 2.0 * pi / L_;
    std::vector<cplx> a(size());
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    // FFTW_ESTIMATE keeps the chosen algorithm, and hence every bit of the
    // output, independent of timing measurements.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_.reset(fftw_plan_dft_2d(M, M, pa, pa, FFTW_FORWARD, flags));
    bwd_.reset(fftw_plan_dft_2d(M, M, pa, pa, FFTW_BACKWARD, flags));
  }

  int M() const { return M_; }
  double box_length() const { return L_; }
  double dk() const { return dk_; }
  double dx() const { return L_ / M_; }
  std::size_t size() const { return static_cast<std::size_t>(M_) * M_; }
  int index_of(int i) const { return i < M_ / 2 ? i : i - M_; }
  double xi(int i) const { return dk_ * index_of(i); }
  double xi_norm(int i, int j) const { return std::hypot(xi(i), xi(j)); }
  double max_xi() const { return dk_ * M_ / 2.0 * std::sqrt(2.0); }

  bool same_as(const Grid2D& o) const { return M_ == o.M_ && L_ == o.L_; }

  // Unnormalised in-place transforms of an M*M array.
  void forward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(fwd_.get(), p, p);
  }
  void backward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(bwd_.get(), p, p);
  }

 private:
  int M_;
  double L_;
  double dk_;
  detail::PlanPtr fwd_, bwd_;
};

using GridPtr = std::shared_ptr<const Grid2D>;

inline GridPtr make_grid(int M, double box_length = Grid2D::default_box_length) {
  return std::make_shared<const Grid2D>(M, box_length);
}

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridPtr g, Rep rep = Rep::Physical)
      : grid_(std::move(g)), data_(grid_->size(), cplx(0.0)), rep_(rep) {}

  const Grid2D& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  Rep rep() const { return rep_; }
  void set_rep(Rep r) { rep_ = r; }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }
  cplx& operator[](std::size_t k) { return data_[k]; }
  const cplx& operator[](std::size_t k) const { return data_[k]; }
  cplx& at(int i, int j) { return data_[static_cast<std::size_t>(i) * grid_->M() + j]; }
  const cplx& at(int i, int j) const { return data_[static_cast<std::size_t>(i) * grid_->M() + j]; }
  std::size_t size() const { return data_.size(); }

  ScalarField& to_spectral() {
    if (rep_ == Rep::Spectral) return *this;
    grid_->forward(data_.data());
    const double s = 1.0 / static_cast<double>(data_.size());
    for (auto& v : data_) v *= s;
    rep_ = Rep::Spectral;
    return *this;
  }
  ScalarField& to_physical() {
    if (rep_ == Rep::Physical) return *this;
    grid_->backward(data_.data());
    rep_ = Rep::Physical;
    return *this;
  }
  ScalarField spectral() const {
    ScalarField c = *this;
    return std::move(c.to_spectral());
  }
  ScalarField physical() const {
    ScalarField c = *this;
    return std::move(c.to_physical());
  }

  void require_same_grid(const ScalarField& o) const {
    if (!grid_->same_as(*o.grid_)) throw GridMismatch("fields live on different grids");
  }

  ScalarField& operator+=(const ScalarField& o) { return axpy(1.0, o); }
  ScalarField& operator-=(const ScalarField& o) { return axpy(-1.0, o); }

  // this += s * o, converting o to this field's representation if needed.
  ScalarField& axpy(cplx s, const ScalarField& o) {
    require_same_grid(o);
    if (o.rep_ != rep_) return axpy(s, rep_ == Rep::Spectral ? o.spectral() : o.physical());
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
    return *this;
  }
  ScalarField& operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(cplx s, ScalarField a) { return a *= s; }

 private:
  GridPtr grid_;
  std::vector<cplx> data_;
  Rep rep_ = Rep::Physical;
};

// One ScalarField per su(n) coefficient, all on one grid and one representation.
struct LieFieldGrid {
  std::vector<ScalarField> comp;

  LieFieldGrid() = default;
  LieFieldGrid(GridPtr g, int dim, Rep rep = Rep::Physical) : comp(dim, ScalarField(g, rep)) {}

  int dim() const { return static_cast<int>(comp.size()); }
  ScalarField& operator[](int a) { return comp[a]; }
  const ScalarField& operator[](int a) const { return comp[a]; }
  const Grid2D& grid() const { return comp.front().grid(); }
  const GridPtr& grid_ptr() const { return comp.front().grid_ptr(); }

  LieFieldGrid& to_spectral() {
    for (auto& c : comp) c.to_spectral();
    return *this;
  }
  LieFieldGrid& to_physical() {
    for (auto& c : comp) c.to_physical();
    return *this;
  }
  LieFieldGrid& operator+=(const LieFieldGrid& o) {
    for (int a = 0; a < dim(); ++a) comp[a] += o.comp[a];
    return *this;
  }
  LieFieldGrid& operator-=(const LieFieldGrid& o) {
    for (int a = 0; a < dim(); ++a) comp[a] -= o.comp[a];
    return *this;
  }
  LieFieldGrid& operator*=(cplx s) {
    for (auto& c : comp) c *= s;
    return *this;
  }
  friend LieFieldGrid operator+(LieFieldGrid a, const LieFieldGrid& b) { return a += b; }
  friend LieFieldGrid operator-(LieFieldGrid a, const LieFieldGrid& b) { return a -= b; }
  friend LieFieldGrid operator*(cplx s, LieFieldGrid a) { return a *= s; }
};

// ---- Fourier multipliers ----------------------------------------------------

// Applies the symbol m(xi_1, xi_2) to the spectral data of u.
template <class Symbol>
ScalarField apply_symbol(const ScalarField& u, Symbol&& m) {
  ScalarField r = u.spectral();
  const Grid2D& g = r.grid();
  const int M = g.M();
  for (int i = 0; i < M; ++i) {
    const double x1 = g.xi(i);
    for (int j = 0; j < M; ++j) r.at(i, j) *= m(x1, g.xi(j));
  }
  return r;
}

struct Multiplier {
  enum class Kind { DPower, Riesz, Derivative, Heat, InverseLaplacian };
  Kind kind;
  double param = 0.0;  // sigma for DPower, time for Heat
  int axis = 0;        // 0 or 1 for Riesz / Derivative

  static Multiplier D(double sigma) { return {Kind::DPower, sigma, 0}; }
  static Multiplier riesz(int axis) { return {Kind::Riesz, 0.0, axis}; }
  static Multiplier derivative(int axis) { return {Kind::Derivative, 0.0, axis}; }
  static Multiplier heat(double t) { return {Kind::Heat, t, 0}; }
  static Multiplier inverse_laplacian() { return {Kind::InverseLaplacian, 0.0, 0}; }

  // Negative powers, Riesz transforms and (-Delta)^{-1} annihilate xi = 0.
  cplx symbol(double x1, double x2) const {
    const double r2 = x1 * x1 + x2 * x2;
    const double xj = axis == 0 ? x1 : x2;
    switch (kind) {
      case Kind::DPower:
        if (r2 == 0.0) return param == 0.0 ? 1.0 : 0.0;
        return std::pow(r2, 0.5 * param);
      case Kind::Riesz:
        return r2 == 0.0 ? cplx(0.0) : cplx(0.0, xj / std::sqrt(r2));
      case Kind::Derivative:
        return cplx(0.0, xj);
      case Kind::Heat:
        return std::exp(-param * r2);
      case Kind::InverseLaplacian:
        return r2 == 0.0 ? 0.0 : 1.0 / r2;
    }
    return 0.0;
  }
};

inline ScalarField apply_multiplier(const ScalarField& u, const Multiplier& m) {
  return apply_symbol(u, [&](double a, double b) { return m.symbol(a, b); });
}

inline LieFieldGrid apply_multiplier(const LieFieldGrid& u, const Multiplier& m) {
  LieFieldGrid r;
  r.comp.reserve(u.comp.size());
  for (const auto& c : u.comp) r.comp.push_back(apply_multiplier(c, m));
  return r;
}

inline ScalarField partial(const ScalarField& u, int axis) {
  return apply_multiplier(u, Multiplier::derivative(axis));
}
inline LieFieldGrid partial(const LieFieldGrid& u, int axis) {
  return apply_multiplier(u, Multiplier::derivative(axis));
}

// ---- norms and Littlewood-Paley ---------------------------------------------

// Continuum L^2 norm on the torus: ||u||^2 = box_length^2 * sum |c_n|^2.
inline double l2_norm(const ScalarField& u) {
  double s = 0.0;
  if (u.rep() == Rep::Spectral) {
    for (const auto& v : u.data()) s += std::norm(v);
    return u.grid().box_length() * std::sqrt(s);
  }
  for (const auto& v : u.data()) s += std::norm(v);
  return u.grid().dx() * std::sqrt(s);
}

inline double l2_norm(const LieFieldGrid& u) {
  double s = 0.0;
  for (const auto& c : u.comp) s += std::pow(l2_norm(c), 2);
  return std::sqrt(s);
}

inline double lp_norm(const ScalarField& u, double p) {
  const ScalarField v = u.physical();
  double s = 0.0;
  for (const auto& x : v.data()) s += std::pow(std::abs(x), p);
  const double dx = u.grid().dx();
  return std::pow(s * dx * dx, 1.0 / p);
}

inline double sup_norm(const ScalarField& u) {
  const ScalarField v = u.physical();
  double s = 0.0;
  for (const auto& x : v.data()) s = std::max(s, std::abs(x));
  return s;
}

// Sharp dyadic shell: [N, 2N) for N >= 2 and [0, 2) for N = 1.
inline bool in_shell(double r, double N) { return N <= 1.0 ? r < 2.0 : (r >= N && r < 2.0 * N); }

inline ScalarField littlewood_paley(const ScalarField& u, double N) {
  return apply_symbol(u, [N](double a, double b) { return in_shell(std::hypot(a, b), N) ? 1.0 : 0.0; });
}

// Dyadic N = 1, 2, 4, ... up to the first shell beyond the grid's largest |xi|.
inline std::vector<double> dyadic_range(const Grid2D& g) {
  std::vector<double> out{1.0};
  while (out.back() * 2.0 <= g.max_xi()) out.push_back(out.back() * 2.0);
  return out;
}

// Squared continuum L^2 mass per dyadic shell, from spectral data.
inline std::vector<double> shell_masses(const ScalarField& u, const std::vector<double>& shells) {
  const ScalarField c = u.spectral();
  const Grid2D& g = c.grid();
  std::vector<double> mass(shells.size(), 0.0);
  const double area = g.box_length() * g.box_length();
  for (int i = 0; i < g.M(); ++i)
    for (int j = 0; j < g.M(); ++j) {
      const double r = g.xi_norm(i, j);
      for (std::size_t s = 0; s < shells.size(); ++s)
        if (in_shell(r, shells[s])) {
          mass[s] += std::norm(c.at(i, j)) * area;
          break;
        }
    }
  return mass;
}

inline double sobolev_norm(const ScalarField& u, double s) {
  const auto shells = dyadic_range(u.grid());
  const auto mass = shell_masses(u, shells);
  double acc = 0.0;
  for (std::size_t k = 0; k < shells.size(); ++k) acc += std::pow(shells[k], 2 * s) * mass[k];
  return std::sqrt(acc);
}

inline double sobolev_norm(const LieFieldGrid& u, double s) {
  double acc = 0.0;
  for (const auto& c : u.comp) acc += std::pow(sobolev_norm(c, s), 2);
  return std::sqrt(acc);
}

// ---- dealiasing --------------------------------------------------------------

// Largest retained |n|_inf (lattice units) such that products of total degree
// `order` cannot alias back into the retained band: K < M / (order + 1).
inline int dealias_cutoff(int M, int order) {
  const int K = (M + order) / (order + 1) - 1;
  return K;
}

inline void band_project_inplace(ScalarField& u, int order) {
  u.to_spectral();
  const int M = u.grid().M();
  const int K = dealias_cutoff(M, order);
  for (int i = 0; i < M; ++i) {
    const bool ki = std::abs(u.grid().index_of(i)) <= K;
    for (int j = 0; j < M; ++j)
      if (!ki || std::abs(u.grid().index_of(j)) > K) u.at(i, j) = 0.0;
  }
}

inline ScalarField band_project(const ScalarField& u, int order) {
  ScalarField r = u;
  band_project_inplace(r, order);
  return r;
}

// Pointwise product of band-limited inputs, truncated to the same band. For
// inputs inside the band this equals the exact projection of the product.
inline ScalarField dealiased_product(const ScalarField& u, const ScalarField& v, int order) {
  u.require_same_grid(v);
  if (order != 2 && order != 3 && order != 5)
    throw PreconditionError("dealiasing order must be 2, 3 or 5");
  ScalarField a = band_project(u, order).to_physical();
  ScalarField b = band_project(v, order).to_physical();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
  band_project_inplace(a, order);
  return a;
}

// ---- Hodge split -------------------------------------------------------------

struct HodgeSplit {
  ScalarField df[2];
  ScalarField cf[2];
};

// cf_j = xi_j xi_k A_k / |xi|^2 (the zero mode is assigned to cf), df = A - cf.
inline HodgeSplit df_cf_split(const ScalarField& a1, const ScalarField& a2) {
  a1.require_same_grid(a2);
  const ScalarField s1 = a1.spectral(), s2 = a2.spectral();
  HodgeSplit h{{s1, s2}, {s1, s2}};
  const Grid2D& g = s1.grid();
  for (int i = 0; i < g.M(); ++i)
    for (int j = 0; j < g.M(); ++j) {
      const double x1 = g.xi(i), x2 = g.xi(j), r2 = x1 * x1 + x2 * x2;
      if (r2 == 0.0) {
        h.df[0].at(i, j) = h.df[1].at(i, j) = 0.0;
        continue;
      }
      const cplx proj = (x1 * s1.at(i, j) + x2 * s2.at(i, j)) / r2;
      h.cf[0].at(i, j) = x1 * proj;
      h.cf[1].at(i, j) = x2 * proj;
      h.df[0].at(i, j) = s1.at(i, j) - h.cf[0].at(i, j);
      h.df[1].at(i, j) = s2.at(i, j) - h.cf[1].at(i, j);
    }
  return h;
}

inline ScalarField divergence(const ScalarField& a1, const ScalarField& a2) {
  return partial(a1, 0) + partial(a2, 1);
}
inline ScalarField curl(const ScalarField& a1, const ScalarField& a2) {
  return partial(a2, 0) - partial(a1, 1);
}

// ---- random data -------------------------------------------------------------

// Complex Gaussian spectral coefficients on 0 < |xi| <= xi_max (zero mean),
// optionally restricted to a dealiasing band.
inline ScalarField random_band_limited(const GridPtr& g, double xi_max, std::mt19937_64& rng,
                                       double amplitude = 1.0, bool zero_mean = true) {
  ScalarField u(g, Rep::Spectral);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int M = g->M();
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const double r = g->xi_norm(i, j);
      const double re = nd(rng), im = nd(rng);
      if (r > xi_max || (zero_mean && r == 0.0)) continue;
      u.at(i, j) = amplitude * cplx(re, im);
    }
  return u;
}

inline LieFieldGrid random_lie_field(const GridPtr& g, int dim, double xi_max, std::mt19937_64& rng,
                                     double amplitude = 1.0) {
  LieFieldGrid f;
  for (int a = 0; a < dim; ++a) f.comp.push_back(random_band_limited(g, xi_max, rng, amplitude));
  return f;
}

// ---- Bernstein check ---------------------------------------------------------

struct BernsteinReport {
  double max_constant = 0.0;
  int samples = 0;
};

// Empirical C in ||P_N u||_{L^4} <= C N^{1/2} ||P_N u||_{L^2} over random shell data.
inline BernsteinReport bernstein_check(const GridPtr& g, const std::vector<double>& shells, int samples,
                                       std::uint64_t seed) {
  BernsteinReport r;
  std::mt19937_64 rng(seed);
  for (double N : shells) {
    for (int s = 0; s < samples; ++s) {
      ScalarField u = littlewood_paley(random_band_limited(g, 2.0 * N, rng), N);
      const double l2 = l2_norm(u);
      if (l2 == 0.0) continue;
      const double c = lp_norm(u, 4.0) / (std::sqrt(N) * l2);
      r.max_constant = std::max(r.max_constant, c);
      ++r.samples;
    }
  }
  return r;
}

// ---- snapshot container ------------------------------------------------------

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error("truncated snapshot");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
inline double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("truncated snapshot");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}
inline constexpr char snapshot_magic[8] = {'C', 'S', 'H', 'S', 'N', 'A', 'P', '1'};
}  // namespace detail

// Layout: magic[8], u32 M, f64 box_length, u32 n, u32 rep, u32 components,
// then components * M * M (re, im) float64 pairs, all little-endian.
inline void write_snapshot(const std::string& path, const std::vector<const LieFieldGrid*>& fields, int n) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  const LieFieldGrid& first = *fields.front();
  const Rep rep = first[0].rep();
  std::uint32_t ncomp = 0;
  for (auto* f : fields) ncomp += static_cast<std::uint32_t>(f->dim());
  os.write(detail::snapshot_magic, 8);
  detail::put_u32(os, static_cast<std::uint32_t>(first.grid().M()));
  detail::put_f64(os, first.grid().box_length());
  detail::put_u32(os, static_cast<std::uint32_t>(n));
  detail::put_u32(os, static_cast<std::uint32_t>(rep));
  detail::put_u32(os, ncomp);
  for (auto* f : fields)
    for (const auto& c : f->comp) {
      const ScalarField v = rep == Rep::Spectral ? c.spectral() : c.physical();
      for (const auto& z : v.data()) {
        detail::put_f64(os, z.real());
        detail::put_f64(os, z.imag());
      }
    }
}

struct Snapshot {
  int M = 0;
  double box_length = 0.0;
  int n = 0;
  Rep rep = Rep::Physical;
  std::vector<ScalarField> components;
};

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::snapshot_magic, 8) != 0)
    throw Error("not a snapshot container: " + path);
  Snapshot s;
  s.M = static_cast<int>(detail::get_u32(is));
  s.box_length = detail::get_f64(is);
  s.n = static_cast<int>(detail::get_u32(is));
  s.rep = static_cast<Rep>(detail::get_u32(is));
  const std::uint32_t ncomp = detail::get_u32(is);
  auto g = make_grid(s.M, s.box_length);
  for (std::uint32_t c = 0; c < ncomp; ++c) {
    ScalarField f(g, s.rep);
    for (auto& z : f.data()) {
      const double re = detail::get_f64(is);
      z = cplx(re, detail::get_f64(is));
    }
    s.components.push_back(std::move(f));
  }
  return s;
}

}  // namespace csh
