#include <gtest/gtest.h>

#include <cstdio>
#include <random>

#include "csh/spectral_grid.hpp"

using namespace csh;

namespace {

// Box of side 2 pi so that lattice frequencies are integers.
GridPtr unit_grid(int M = 32) { return make_grid(M, 2 * pi); }

ScalarField plane_wave(const GridPtr& g, int n1, int n2, cplx amp = 1.0) {
  ScalarField u(g);
  for (int i = 0; i < g->M(); ++i)
    for (int j = 0; j < g->M(); ++j) {
      const double x1 = i * g->dx(), x2 = j * g->dx();
      u.at(i, j) = amp * std::exp(I * (n1 * g->dk() * x1 + n2 * g->dk() * x2));
    }
  return u;
}

double rel_diff(const ScalarField& a, const ScalarField& b) {
  return l2_norm(a - b) / std::max(l2_norm(b), 1e-300);
}

}  // namespace

TEST(Grid, RejectsBadSizes) {
  EXPECT_THROW(make_grid(4), DimensionError);
  EXPECT_THROW(make_grid(24), DimensionError);
  EXPECT_THROW(make_grid(16, -1.0), DimensionError);
  EXPECT_NO_THROW(make_grid(8));
  EXPECT_DOUBLE_EQ(make_grid(16)->box_length(), 2 * pi * 32);
}

TEST(Grid, FrequencyLayout) {
  auto g = unit_grid(8);
  std::vector<int> idx;
  for (int i = 0; i < 8; ++i) idx.push_back(g->index_of(i));
  EXPECT_EQ(idx, (std::vector<int>{0, 1, 2, 3, -4, -3, -2, -1}));
  ScalarField u = plane_wave(g, 2, -3).to_spectral();
  EXPECT_NEAR(std::abs(u.at(2, 5) - 1.0), 0.0, 1e-14);
}

TEST(Grid, RoundTripIsIdentity) {
  auto g = unit_grid(64);
  std::mt19937_64 rng(1);
  ScalarField u = random_band_limited(g, 100.0, rng, 1.0, false).to_physical();
  ScalarField v = u;
  v.to_spectral().to_physical();
  EXPECT_LE(rel_diff(v, u), 1e-12);
}

TEST(Multipliers, DerivativeAndPowers) {
  auto g = unit_grid();
  const ScalarField u = plane_wave(g, 0, 2);
  ScalarField d = apply_multiplier(u, Multiplier::D(1.0)).to_physical();
  EXPECT_LE(rel_diff(d, 2.0 * u), 1e-13);

  ScalarField c(g);
  for (auto& z : c.data()) z = 3.0;
  EXPECT_EQ(l2_norm(apply_multiplier(c, Multiplier::D(-1.0))), 0.0);
  EXPECT_EQ(l2_norm(apply_multiplier(c, Multiplier::riesz(0))), 0.0);

  // R_1 = D^{-1} d_1 has symbol i xi_1 / |xi|.
  const ScalarField w = plane_wave(g, 3, 4);
  ScalarField r = apply_multiplier(w, Multiplier::riesz(0)).to_physical();
  EXPECT_LE(rel_diff(r, cplx(0, 0.6) * w), 1e-13);

  ScalarField dx = partial(w, 1).to_physical();
  EXPECT_LE(rel_diff(dx, cplx(0, 4) * w), 1e-13);

  ScalarField h = apply_multiplier(w, Multiplier::heat(0.01)).to_physical();
  EXPECT_LE(rel_diff(h, std::exp(-0.25) * w), 1e-13);
}

TEST(Multipliers, PowerInverseIsIdentityOnZeroMean) {
  auto g = unit_grid(64);
  std::mt19937_64 rng(2);
  const ScalarField u = random_band_limited(g, 20.0, rng);
  for (double s : {0.5, 1.0, 2.5}) {
    const ScalarField v = apply_multiplier(apply_multiplier(u, Multiplier::D(s)), Multiplier::D(-s));
    EXPECT_LE(rel_diff(v, u), 1e-12);
  }
}

TEST(LittlewoodPaley, ShellMembership) {
  auto g = unit_grid();
  const ScalarField u = plane_wave(g, 3, 0);
  for (double N : {1.0, 2.0, 4.0, 8.0}) {
    const double m = l2_norm(littlewood_paley(u, N));
    if (N == 2.0)
      EXPECT_NEAR(m, l2_norm(u), 1e-12 * l2_norm(u));
    else
      EXPECT_LE(m, 1e-12);
  }
  EXPECT_TRUE(in_shell(0.0, 1) && in_shell(1.99, 1) && !in_shell(2.0, 1));
  EXPECT_TRUE(in_shell(2.0, 2) && !in_shell(4.0, 2));
}

TEST(LittlewoodPaley, PartitionIsExact) {
  auto g = unit_grid(64);
  std::mt19937_64 rng(3);
  const ScalarField u = random_band_limited(g, 1e9, rng, 1.0, false);
  ScalarField sum(g, Rep::Spectral);
  double mass = 0.0;
  for (double N : dyadic_range(*g)) {
    const ScalarField p = littlewood_paley(u, N);
    sum += p;
    mass += std::pow(l2_norm(p), 2);
  }
  for (std::size_t k = 0; k < u.size(); ++k) ASSERT_EQ(sum[k], u[k]);
  EXPECT_LE(std::abs(mass - std::pow(l2_norm(u), 2)), 1e-12 * mass);
}

TEST(Sobolev, HandValues) {
  auto g = unit_grid();
  const double L = g->box_length();
  // unit L^2 mass at |xi| = 4
  EXPECT_NEAR(sobolev_norm(plane_wave(g, 4, 0, 1.0 / L), 1.0), 4.0, 1e-12);
  // unit masses in shells 2 and 8 at s = 1/2
  const ScalarField two = plane_wave(g, 0, 3, 1.0 / L) + plane_wave(g, 9, 0, 1.0 / L);
  EXPECT_NEAR(sobolev_norm(two, 0.5), std::sqrt(10.0), 1e-12);
  std::mt19937_64 rng(4);
  const ScalarField r = random_band_limited(g, 12.0, rng);
  EXPECT_NEAR(sobolev_norm(r, 0.0), l2_norm(r), 1e-12 * l2_norm(r));
}

TEST(Sobolev, MonotoneInS) {
  auto g = unit_grid();
  std::mt19937_64 rng(5);
  const ScalarField r = random_band_limited(g, 12.0, rng);
  double prev = 0.0;
  for (double s = -1.0; s <= 2.0; s += 0.25) {
    const double v = sobolev_norm(r, s);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Dealias, CutoffFormula) {
  EXPECT_EQ(dealias_cutoff(128, 2), 42);
  EXPECT_EQ(dealias_cutoff(128, 3), 31);
  EXPECT_EQ(dealias_cutoff(128, 5), 21);
  EXPECT_EQ(dealias_cutoff(96 * 0 + 64, 3), 15);
}

TEST(Dealias, ConstantsAndSingleModes) {
  auto g = unit_grid();
  ScalarField one(g);
  for (auto& z : one.data()) z = 1.0;
  EXPECT_LE(rel_diff(dealiased_product(one, one, 2).to_physical(), one), 1e-14);
  const ScalarField p = dealiased_product(plane_wave(g, 2, 1, 2.0), plane_wave(g, 3, -4, cplx(0, 1)), 2);
  EXPECT_LE(rel_diff(p.physical(), plane_wave(g, 5, -3, cplx(0, 2))), 1e-13);
  EXPECT_THROW(dealiased_product(one, one, 4), PreconditionError);
  EXPECT_THROW(dealiased_product(one, ScalarField(unit_grid(16)), 2), GridMismatch);
}

// Compare against the product evaluated on a doubled grid, where nothing wraps.
TEST(Dealias, NoWrappedModes) {
  const int M = 32;
  auto g = unit_grid(M);
  auto g2 = unit_grid(2 * M);
  // 10 + 9 = 19 > 16 = Nyquist: a naive product wraps to -13.
  const ScalarField naive_a = plane_wave(g, 10, 0), naive_b = plane_wave(g, 9, 0);
  ScalarField naive = naive_a.physical();
  for (std::size_t k = 0; k < naive.size(); ++k) naive[k] *= naive_b.physical()[k];
  naive.to_spectral();
  EXPECT_NEAR(std::abs(naive.at(M - 13, 0)), 1.0, 1e-12);
  const ScalarField d = dealiased_product(naive_a, naive_b, 2).spectral();
  EXPECT_LE(l2_norm(d), 1e-14);

  std::mt19937_64 rng(6);
  const ScalarField a = random_band_limited(g, 16.0, rng), b = random_band_limited(g, 16.0, rng);
  ScalarField a2(g2, Rep::Spectral), b2(g2, Rep::Spectral);
  const ScalarField ab = band_project(a, 2), bb = band_project(b, 2);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const int I2 = (g->index_of(i) + 2 * M) % (2 * M), J2 = (g->index_of(j) + 2 * M) % (2 * M);
      a2.at(I2, J2) = ab.at(i, j);
      b2.at(I2, J2) = bb.at(i, j);
    }
  a2.to_physical();
  b2.to_physical();
  for (std::size_t k = 0; k < a2.size(); ++k) a2[k] *= b2[k];
  a2.to_spectral();
  const ScalarField prod = dealiased_product(a, b, 2);
  const int K = dealias_cutoff(M, 2);
  double err = 0.0, ref = 0.0;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const int ni = g->index_of(i), nj = g->index_of(j);
      const int I2 = (ni + 2 * M) % (2 * M), J2 = (nj + 2 * M) % (2 * M);
      const cplx expect = (std::abs(ni) <= K && std::abs(nj) <= K) ? a2.at(I2, J2) : 0.0;
      err += std::norm(prod.at(i, j) - expect);
      ref += std::norm(expect);
    }
  EXPECT_LE(std::sqrt(err / ref), 1e-12);
}

TEST(Hodge, GradientAndRotationalFields) {
  auto g = unit_grid();
  std::mt19937_64 rng(7);
  const ScalarField psi = random_band_limited(g, 10.0, rng);
  const auto hg = df_cf_split(partial(psi, 0), partial(psi, 1));
  EXPECT_LE(l2_norm(hg.df[0]) + l2_norm(hg.df[1]), 1e-12 * l2_norm(psi));
  const auto hr = df_cf_split(-1.0 * partial(psi, 1), partial(psi, 0));
  EXPECT_LE(l2_norm(hr.cf[0]) + l2_norm(hr.cf[1]), 1e-12 * l2_norm(psi));
}

TEST(Hodge, RandomRecombination) {
  auto g = unit_grid(64);
  std::mt19937_64 rng(8);
  const ScalarField a1 = random_band_limited(g, 20.0, rng, 1.0, false);
  const ScalarField a2 = random_band_limited(g, 20.0, rng, 1.0, false);
  const auto h = df_cf_split(a1, a2);
  EXPECT_LE(rel_diff(h.df[0] + h.cf[0], a1), 1e-12);
  EXPECT_LE(rel_diff(h.df[1] + h.cf[1], a2), 1e-12);
  const double scale = l2_norm(a1) + l2_norm(a2);
  EXPECT_LE(l2_norm(divergence(h.df[0], h.df[1])), 1e-12 * scale);
  EXPECT_LE(l2_norm(curl(h.cf[0], h.cf[1])), 1e-12 * scale);
  // zero mode belongs to the curl-free part
  EXPECT_EQ(h.df[0].at(0, 0), 0.0);
  EXPECT_EQ(h.cf[0].at(0, 0), a1.at(0, 0));
}

TEST(Bernstein, EmpiricalConstantBounded) {
  auto g = unit_grid(128);
  const auto r = bernstein_check(g, {1, 2, 4, 8, 16}, 10, 99);
  EXPECT_GT(r.samples, 40);
  EXPECT_LE(r.max_constant, 4.0);
  RecordProperty("bernstein_max_constant", std::to_string(r.max_constant));
}

TEST(Snapshot, BinaryRoundTrip) {
  auto g = unit_grid(16);
  std::mt19937_64 rng(9);
  LieFieldGrid f = random_lie_field(g, 3, 5.0, rng);
  const std::string path = ::testing::TempDir() + "snap.bin";
  write_snapshot(path, {&f}, 2);
  const Snapshot s = read_snapshot(path);
  EXPECT_EQ(s.M, 16);
  EXPECT_EQ(s.n, 2);
  EXPECT_EQ(s.rep, Rep::Spectral);
  ASSERT_EQ(s.components.size(), 3u);
  for (int a = 0; a < 3; ++a)
    for (std::size_t k = 0; k < f[a].size(); ++k) ASSERT_EQ(s.components[a][k], f[a][k]);
  std::remove(path.c_str());
}
