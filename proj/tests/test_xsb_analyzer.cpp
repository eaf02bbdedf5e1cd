#include <gtest/gtest.h>

#include <cstdio>
#include <string>

#include "csh/xsb_analyzer.hpp"

using namespace csh;

namespace {

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4e", x);
  return buf;
}

// Random spectral field on a box-2pi grid with unit tau spacing.
SpaceTimeField random_spacetime(int M, int Mt, double xi_max, std::uint64_t seed) {
  SpaceTimeField u(make_grid(M, 2 * pi), 2 * pi, Mt, Rep::Spectral);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int k = 0; k < Mt; ++k)
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        const double re = nd(rng), im = nd(rng);
        if (u.grid().xi_norm(i, j) <= xi_max) u.at(k, i, j) = cplx(re, im);
      }
  return u;
}

int fft_slot(int n, int M) { return n >= 0 ? n : n + M; }

double sum_sq(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(b[k]) * a[k];
  return s;
}

std::vector<cplx> random_lattice_vector(const LatticeBlock& B, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<cplx> v(B.dense);
  for (std::size_t q = 0; q < v.size(); ++q) {
    const double re = nd(rng), im = nd(rng);
    v[q] = B.mask[q] ? cplx(re, im) : cplx(0.0);
  }
  return v;
}

// Writes a lattice vector into a dense space-time field with the same spacings.
SpaceTimeField to_dense(const LatticeBlock& B, const std::vector<cplx>& v, const SpaceTimeField& layout) {
  SpaceTimeField u(layout.grid_ptr(), layout.T(), layout.Mt(), Rep::Spectral);
  for (std::size_t c = 0; c < B.xi.size(); ++c)
    for (int m = 0; m < B.len[c]; ++m)
      u.at(fft_slot(B.lo[c] + m, u.Mt()), fft_slot(B.xi[c][0], u.M()), fft_slot(B.xi[c][1], u.M())) =
          v[B.offset[c] + m];
  return u;
}

}  // namespace

TEST(Taper, WeightsAndNames) {
  const Taper none = Taper::none();
  EXPECT_EQ(none.name(), "none");
  EXPECT_EQ(none.weight(0.0), 1.0);
  const Taper rc = Taper::raised_cosine(0.5);
  EXPECT_NEAR(rc.weight(0.0), 0.0, 1e-15);
  EXPECT_NEAR(rc.weight(0.125), 0.5, 1e-15);
  EXPECT_EQ(rc.weight(0.5), 1.0);
  EXPECT_NEAR(rc.weight(0.875), 0.5, 1e-15);
  EXPECT_NE(rc.name().find("raised-cosine"), std::string::npos);
}

TEST(SpaceTime, RejectsOddSampleCount) {
  EXPECT_THROW(SpaceTimeField(make_grid(8, 2 * pi), 1.0, 7), DimensionError);
  std::vector<ScalarField> series(5, ScalarField(make_grid(8, 2 * pi)));
  EXPECT_THROW(spacetime_transform(series, 1.0, Taper::none()), DimensionError);
}

TEST(SpaceTime, ExactPeriodModeIsSingleLatticePoint) {
  const auto g = make_grid(16, 2 * pi);
  const int Mt = 16;
  const double T = 2 * pi;
  std::vector<ScalarField> series;
  for (int k = 0; k < Mt; ++k) {
    ScalarField s(g);
    const double t = k * T / Mt;
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) s.at(i, j) = std::exp(I * (3.0 * t + 2.0 * g->dx() * i - 1.0 * g->dx() * j));
    series.push_back(s);
  }
  const auto u = spacetime_transform(series, T, Taper::none());
  EXPECT_EQ(u.taper, "none");
  double off = 0.0;
  for (int k = 0; k < Mt; ++k)
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j)
        if (!(k == 3 && i == 2 && j == 15)) off = std::max(off, std::abs(u.at(k, i, j)));
  EXPECT_NEAR(std::abs(u.at(3, 2, 15) - 1.0), 0.0, 1e-13);
  EXPECT_LE(off, 1e-13);
}

TEST(SpaceTime, ParsevalWithoutTaper) {
  const auto g = make_grid(16, 2 * pi);
  std::mt19937_64 rng(7);
  std::vector<ScalarField> series;
  for (int k = 0; k < 12; ++k) series.push_back(random_band_limited(g, 6, rng).to_physical());
  const double T = 3.0;
  const auto u = spacetime_transform(series, T, Taper::none());
  double s = 0.0;
  for (const auto& f : series)
    for (const auto& z : f.data()) s += std::norm(z);
  const double phys = std::sqrt(s * T / 12) * g->dx();
  EXPECT_LE(std::abs(l2_norm(u) - phys) / phys, 1e-12);
  EXPECT_LE(std::abs(l2_norm(u.physical()) - phys) / phys, 1e-12);
}

TEST(SpaceTime, TaperedHalfWaveConcentratesOnUnitModulation) {
  const auto g = make_grid(32, 2 * pi);
  std::mt19937_64 rng(11);
  const ScalarField u0 = random_band_limited(g, 6, rng);
  const double T = 20 * pi;
  const int Mt = 192;
  std::vector<ScalarField> series;
  for (int k = 0; k < Mt; ++k) {
    const double t = k * T / Mt;
    series.push_back(apply_symbol(u0, [t](double a, double b) { return std::exp(-I * t * std::hypot(a, b)); }));
  }
  const auto u = spacetime_transform(series, T, Taper::raised_cosine(0.5));
  EXPECT_NE(u.taper.find("raised-cosine"), std::string::npos);
  double unit = 0.0, total = 0.0;
  for (const auto& m : block_masses(u, 1)) {
    total += m.mass;
    if (m.L == 1.0) unit += m.mass;
  }
  RecordProperty("unit_modulation_fraction", sci(unit / total));
  EXPECT_GE(unit / total, 0.9);
}

TEST(Blocks, ModeOnConeLandsInUnitModulation) {
  const DyadicBlock K{1, 4, 1};
  EXPECT_TRUE(K.contains(-4.0, 4.0));
  EXPECT_FALSE((DyadicBlock{-1, 4, 1}.contains(-4.0, 4.0)));
  EXPECT_FALSE((DyadicBlock{1, 2, 1}.contains(-4.0, 4.0)));
  EXPECT_EQ(dyadic_of(1.5), 1.0);
  EXPECT_EQ(dyadic_of(4.0), 4.0);
  EXPECT_EQ(dyadic_of(7.99), 4.0);

  SpaceTimeField u(make_grid(16, 2 * pi), 2 * pi, 16, Rep::Spectral);
  u.at(fft_slot(-4, 16), 4, 0) = 1.0;
  const auto masses = block_masses(u, 1);
  ASSERT_EQ(masses.size(), 1u);
  EXPECT_EQ(masses[0].N, 4.0);
  EXPECT_EQ(masses[0].L, 1.0);
  EXPECT_GT(l2_norm(project_block(u, K)), 0.0);
}

TEST(Blocks, ValidationAndRepresentation) {
  EXPECT_THROW((DyadicBlock{1, 3, 1}.validate()), PreconditionError);
  EXPECT_THROW((DyadicBlock{0, 2, 1}.validate()), PreconditionError);
  EXPECT_THROW((DyadicBlock{1, 2, 0.5}.validate()), PreconditionError);
  SpaceTimeField u(make_grid(8, 2 * pi), 1.0, 4);
  EXPECT_THROW(project_block(u, {1, 1, 1}), PreconditionError);
}

TEST(Blocks, DisjointProjectionsAnnihilate) {
  const auto u = random_spacetime(16, 16, 7, 3);
  const auto a = project_block(project_block(u, {1, 2, 1}), {1, 4, 1});
  const auto b = project_block(project_block(u, {-1, 2, 1}), {-1, 2, 2});
  EXPECT_EQ(l2_norm(a), 0.0);
  EXPECT_EQ(l2_norm(b), 0.0);
}

TEST(Blocks, TilingParsevalPerSign) {
  const auto u = random_spacetime(32, 24, 14, 5);
  const double total = std::pow(l2_norm(u), 2);
  for (int sign : {1, -1}) {
    double s = 0.0;
    for (double N = 1; N <= 32; N *= 2)
      for (double L = 1; L <= 64; L *= 2) s += std::pow(l2_norm(project_block(u, {sign, N, L})), 2);
    EXPECT_LE(std::abs(s - total) / total, 1e-12) << "sign " << sign;
    double m = 0.0;
    for (const auto& b : block_masses(u, sign)) m += b.mass;
    EXPECT_LE(std::abs(m - total) / total, 1e-12);
  }
}

TEST(Xsb, SingleModeHandValue) {
  // xi = (2,0) has N = 2; tau = 3 gives |tau + |xi|| = 5, so L = 4.
  SpaceTimeField u(make_grid(16, 2 * pi), 2 * pi, 16, Rep::Spectral);
  u.at(3, 2, 0) = 1.0 / std::sqrt(2 * pi * 4 * pi * pi);
  EXPECT_NEAR(l2_norm(u), 1.0, 1e-14);
  EXPECT_NEAR(xsb_norm(u, XsbParams::from_sb(1.0, 0.5), 1), 4.0, 1e-13);
}

TEST(Xsb, ZeroIndicesGiveL2AndDisjointBlocksArePythagorean) {
  const auto u = random_spacetime(16, 16, 7, 9);
  EXPECT_NEAR(xsb_norm(u, XsbParams::from_sb(0, 0), 1), l2_norm(u), 1e-12 * l2_norm(u));
  const auto a = project_block(u, {1, 2, 1});
  const auto b = project_block(u, {1, 4, 8});
  SpaceTimeField ab = a;
  for (std::size_t k = 0; k < ab.size(); ++k) ab.data()[k] += b.data()[k];
  const XsbParams p = XsbParams::from_sb(0.7, 0.6);
  const double na = xsb_norm(a, p, 1), nb = xsb_norm(b, p, 1);
  EXPECT_NEAR(xsb_norm(ab, p, 1), std::hypot(na, nb), 1e-12 * std::hypot(na, nb));
  EXPECT_NEAR(na, std::pow(2.0, 0.7) * l2_norm(a), 1e-12 * na);
}

TEST(Xsb, MonotoneInSAndBAwayFromUnitBlocks) {
  auto u = random_spacetime(32, 32, 14, 13);
  u = apply_symbol(u, [](double t, double a, double b) {
    const double r = std::hypot(a, b);
    return (r >= 2.0 && std::abs(t + r) >= 2.0) ? cplx(1.0) : cplx(0.0);
  });
  double prev = 0.0;
  for (double s : {-0.5, 0.0, 0.25, 0.5, 1.0}) {
    const double v = xsb_norm(u, XsbParams::from_sb(s, 0.5), 1);
    EXPECT_GT(v, prev);
    prev = v;
  }
  prev = 0.0;
  for (double b : {-0.5, 0.0, 0.51, 1.0}) {
    const double v = xsb_norm(u, XsbParams::from_sb(0.26, b), 1);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Xsb, OffsetRegimeWarning) {
  const auto ok = XsbParams::from_offsets(0.01, 0.00005);
  EXPECT_NEAR(ok.s, 0.26, 1e-15);
  EXPECT_NEAR(ok.b, 0.50005, 1e-15);
  EXPECT_TRUE(ok.in_small_offset_regime());
  EXPECT_FALSE(ok.warning().has_value());
  const auto bad = XsbParams::from_sb(0.26, 0.51);
  EXPECT_NEAR(bad.delta, 0.01, 1e-15);
  EXPECT_TRUE(bad.warning().has_value());
}

TEST(Interaction, HandExampleOnPlusCone) {
  const auto s = make_interaction({-1.0, {1, 0}}, {-1.0, {0, 1}}, {1, 1, 1});
  EXPECT_EQ(s.X0.tau, 0.0);
  EXPECT_EQ(s.X0.xi[0], 1.0);
  EXPECT_EQ(s.X0.xi[1], -1.0);
  EXPECT_NEAR(s.theta, pi / 2, 1e-15);
  const auto r = interaction_ratios(s);
  EXPECT_NEAR(r.max_h, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(r.ratio, std::sqrt(2.0) / (pi * pi / 4), 1e-14);
  EXPECT_NEAR(r.ratio, 0.573, 5e-4);
  EXPECT_FALSE(r.first_branch);
  EXPECT_FALSE(r.degenerate);
}

TEST(Interaction, CollinearConePointsAreDegenerate) {
  const auto s = make_interaction({-2.0, {2, 0}}, {-1.0, {1, 0}}, {1, 1, 1});
  EXPECT_EQ(s.theta, 0.0);
  EXPECT_EQ(s.h[0], 0.0);
  const auto r = interaction_ratios(s);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.ratio, 0.0);
}

TEST(Interaction, ModulationBoundOverMillionSamples) {
  const auto rep = check_interaction_geometry(1000000);
  EXPECT_EQ(rep.samples, 1000000);
  EXPECT_GE(rep.min_ratio, 0.1);
  // sharp on-cone value 2/pi^2, attained at theta = pi
  EXPECT_GE(rep.min_ratio, 0.2);
  EXPECT_TRUE(rep.zero_only_when_collinear);
  EXPECT_GT(rep.first_branch, 100000);
  EXPECT_GE(rep.min_theta_first_branch, 0.5);
  EXPECT_LE(rep.max_theta_first_branch, pi);
  EXPECT_GT(rep.min_first_branch_ratio, 0.0);
  EXPECT_GT(rep.min_second_branch_ratio, 0.0);
  // min over tau of max|h| is |h_1 - h_2 - h_0| / 3
  EXPECT_GE(rep.min_optimal_tau_ratio, 0.0675);
  RecordProperty("min_ratio", sci(rep.min_ratio));
  RecordProperty("min_optimal_tau_ratio", sci(rep.min_optimal_tau_ratio));
  RecordProperty("min_second_branch_ratio", sci(rep.min_second_branch_ratio));
}

TEST(Interaction, OffConeSamplesStayAboveOptimalTauBound) {
  GeometrySamplerOptions o;
  o.spread = 1.0;
  o.seed = 3;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int n = 0; n < 20000; ++n) {
    const Vec2 a{10 * U(rng), 10 * U(rng)}, b{10 * U(rng), 10 * U(rng)};
    const auto s = make_interaction({5 * U(rng), a}, {5 * U(rng), b}, {n % 2 ? 1 : -1, 1, n % 3 ? 1 : -1});
    const auto r = interaction_ratios(s);
    if (!r.degenerate) {
      EXPECT_GE(r.ratio, r.optimal_tau_ratio * (1 - 1e-12));
    }
  }
  const auto rep = check_interaction_geometry(200000, o);
  EXPECT_GE(rep.min_ratio, rep.min_optimal_tau_ratio);
  EXPECT_TRUE(rep.zero_only_when_collinear);
}

TEST(Interaction, FixedSignsOppositeRegime) {
  GeometrySamplerOptions o;
  o.signs = std::array<int, 3>{1, 1, -1};
  o.regime_fraction = 1.0;
  const auto rep = check_interaction_geometry(100000, o);
  EXPECT_EQ(rep.first_branch, 100000);
  EXPECT_GE(rep.min_theta_first_branch, 0.5);
  EXPECT_GE(rep.min_first_branch_ratio, 1.0);
}

TEST(BilinearLattice, BlockPointCounts) {
  const auto B = build_lattice_block({1, 1, 1}, 0.5);
  // |xi| < 2 on Z^2: 9 points, |tau + |xi|| < 2 at spacing 1/2: 8 or 7 points
  EXPECT_EQ(B.xi.size(), 9u);
  std::size_t pts = 0;
  for (std::size_t c = 0; c < B.xi.size(); ++c) {
    const double r = std::hypot(B.xi[c][0], B.xi[c][1]);
    for (int m = -40; m <= 40; ++m) pts += (DyadicBlock{1, 1, 1}.contains(0.5 * m, r)) ? 1 : 0;
  }
  EXPECT_EQ(B.points, pts);
}

TEST(BilinearLattice, AdjointIdentities) {
  const auto T = build_lattice_triple({1, 2, 4}, {1, 2, 1}, {-1, 2, 2}, 0.5);
  ASSERT_FALSE(T.pairs.empty());
  std::mt19937_64 rng(17);
  const auto u1 = random_lattice_vector(T.K1, rng);
  const auto u2 = random_lattice_vector(T.K2, rng);
  const auto w = random_lattice_vector(T.K0, rng);
  const cplx lhs = inner(lattice_product(T, u1, u2), w);
  const cplx via1 = inner(u1, adjoint_first(T, w, u2));
  const cplx via2 = std::conj(inner(u2, adjoint_second(T, w, u1)));
  EXPECT_LE(std::abs(lhs - via1), 1e-11 * std::abs(lhs));
  EXPECT_LE(std::abs(lhs - via2), 1e-11 * std::abs(lhs));
}

// The lattice ratio with its scale factor equals the continuum ratio of the
// periodic space-time field (box 2 pi, window 2 pi / dtau) computed by FFT.
TEST(BilinearLattice, ScaleMatchesDenseFftOracle) {
  const double dtau = 0.5;
  const DyadicBlock K0{1, 2, 2}, K1{1, 2, 1}, K2{-1, 1, 2};
  const auto T = build_lattice_triple(K0, K1, K2, dtau);
  std::mt19937_64 rng(23);
  const auto u1 = random_lattice_vector(T.K1, rng);
  const auto u2 = random_lattice_vector(T.K2, rng);
  const auto B = lattice_product(T, u1, u2);
  const double lattice = lattice_to_continuum(dtau) * std::sqrt(sum_sq(B) / (sum_sq(u1) * sum_sq(u2)));

  const SpaceTimeField layout(make_grid(16, 2 * pi), 2 * pi / dtau, 80, Rep::Spectral);
  const auto d1 = to_dense(T.K1, u1, layout), d2 = to_dense(T.K2, u2, layout);
  SpaceTimeField prod = d1.physical();
  const SpaceTimeField p2 = d2.physical();
  for (std::size_t k = 0; k < prod.size(); ++k) prod.data()[k] *= std::conj(p2.data()[k]);
  prod.to_spectral();
  const double dense = l2_norm(project_block(prod, K0)) / (l2_norm(d1) * l2_norm(d2));
  EXPECT_GT(dense, 0.0);
  EXPECT_LE(std::abs(lattice - dense) / dense, 1e-10);
}

TEST(BilinearLattice, TheoreticalConstantHandValues) {
  EXPECT_DOUBLE_EQ(theoretical_block_constant({1, 1, 16}, {1, 8, 1}, {-1, 8, 1}), 1.0);
  // N = (4,2,8), L = (1,2,4): C_1 = 2 * 8^{1/4}, C_2 = 2 and 2 sqrt 2, C_3 = 2
  EXPECT_NEAR(theoretical_block_constant({1, 4, 1}, {1, 2, 2}, {1, 8, 4}), 2.0, 1e-14);
  EXPECT_NEAR(theoretical_block_constant({1, 8, 8}, {1, 8, 8}, {1, 8, 8}), std::sqrt(64.0 * 8.0), 1e-12);
}

TEST(BilinearLattice, InfeasibleTripleReportsZero) {
  const auto r = measure_bilinear_constant({1, 16, 1}, {1, 1, 1}, {-1, 1, 1});
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.empirical, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
}

TEST(BilinearLattice, UnitBlocksRecordConstant) {
  BilinearOptions o;
  o.trials = 4;
  const auto r = measure_bilinear_constant({1, 1, 1}, {1, 1, 1}, {1, 1, 1}, o);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.theoretical, 1.0);
  EXPECT_LE(r.empirical, r.trivial_bound * (1 + 1e-12));
  RecordProperty("unit_block_ratio", sci(r.ratio));
}

TEST(BilinearLattice, PowerIterationNeverLosesToRandomStart) {
  BilinearOptions rnd;
  rnd.adversarial = false;
  BilinearOptions adv;
  for (double N : {2.0, 4.0}) {
    const DyadicBlock K0{1, 1, 2 * N}, K1{1, N, 1}, K2{-1, N, 1};
    const auto a = measure_bilinear_constant(K0, K1, K2, adv);
    const auto b = measure_bilinear_constant(K0, K1, K2, rnd);
    EXPECT_GE(a.empirical, b.empirical);
  }
}

TEST(BilinearLattice, GridOfTriplesBoundedByOneConstant) {
  BilinearOptions o;
  o.max_iterations = 40;
  o.tolerance = 1e-4;
  double worst = 0.0;
  int feasible = 0;
  for (double N0 : {1.0, 2.0, 4.0})
    for (double N1 : {1.0, 2.0, 4.0})
      for (double N2 : {1.0, 2.0, 4.0})
        for (double L0 : {1.0, 4.0})
          for (double L1 : {1.0, 4.0})
            for (int s2 : {1, -1}) {
              const auto r = measure_bilinear_constant({1, N0, L0}, {1, N1, L1}, {s2, N2, 1}, o);
              EXPECT_LE(r.empirical, r.trivial_bound * (1 + 1e-12));
              if (!r.feasible) continue;
              ++feasible;
              worst = std::max(worst, r.ratio);
            }
  EXPECT_GE(feasible, 50);
  EXPECT_LE(worst, 1.0);
  RecordProperty("feasible_triples", std::to_string(feasible));
  RecordProperty("global_constant", sci(worst));
}

TEST(BilinearLattice, ScalingScanMatchesTheoreticalExponent) {
  BilinearOptions o;
  o.trials = 1;
  o.max_iterations = 30;
  o.tolerance = 1e-4;
  const auto rep = bilinear_scaling_scan({4, 8, 16, 32, 64}, o);
  EXPECT_NEAR(rep.theoretical_fit.slope, 0.0, 1e-12);
  EXPECT_NEAR(rep.empirical_fit.slope, rep.theoretical_fit.slope, 0.2);
  for (const auto& r : rep.rows) EXPECT_LE(r.empirical, r.trivial_bound);
  RecordProperty("empirical_slope", sci(rep.empirical_fit.slope));
}

TEST(Multilinear, ZeroInputsGiveZero) {
  const SpaceTimeField z(make_grid(8, 2 * pi), 2 * pi, 8, Rep::Spectral);
  EXPECT_EQ(multilinear_ratio(MultilinearKind::Phi3, XsbParams::from_sb(0.26, 0.51), {z, z, z}, {1, -1, 1}), 0.0);
  EXPECT_THROW(multilinear_ratio(MultilinearKind::Phi3, XsbParams{}, {z, z}, {1, 1}), PreconditionError);
}

TEST(Multilinear, KindNamesRoundTrip) {
  for (const auto& [k, name] : multilinear_kinds()) EXPECT_EQ(parse_multilinear_kind(name), k);
  EXPECT_THROW(parse_multilinear_kind("nope"), PreconditionError);
}

TEST(Multilinear, LowBlockRatioIsFinite) {
  MultilinearOptions o;
  o.scales = {1};
  o.trials = 2;
  const auto r = measure_multilinear_ratio(MultilinearKind::QjkAPhi, XsbParams::from_sb(0.26, 0.51), o);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.rows[0].max_ratio));
  EXPECT_GT(r.rows[0].max_ratio, 0.0);
}

TEST(Multilinear, NoGrowthAcrossScales) {
  const XsbParams p = XsbParams::from_sb(0.26, 0.51);
  for (const auto& [k, name] : multilinear_kinds()) {
    MultilinearOptions o;
    o.trials = 2;
    const auto r = measure_multilinear_ratio(k, p, o);
    ASSERT_TRUE(r.fitted) << name;
    EXPECT_LE(r.fit.slope, 0.1) << name;
    RecordProperty("slope_" + name, sci(r.fit.slope));
  }
}
