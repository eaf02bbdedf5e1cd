// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "csh/cli.hpp"
#include "csh/evolution.hpp"
#include "csh/knapp.hpp"
#include "csh/lie_kernel.hpp"
#include "csh/null_forms.hpp"
#include "csh/xsb_analyzer.hpp"

namespace {

using namespace csh;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

// ---- 1 -----------------------------------------------------------------------------------

Outcome lie_kernel_exactness() {
  Outcome o;
  double worst = 0.0;
  for (int n : {2, 3}) {
    const GeneratorSet g = build_su_n_basis(n);
    worst = std::max({worst, check_basis(g).max(), check_casimir_commutation(g).max_residual});
  }
  const double f123 = build_su_n_basis(2).f(0, 1, 2);
  o.pass = worst <= 1e-12 && f123 == 2.0;
  o.detail = "max residual " + fmt(worst) + ", f^{12}_3 = " + fmt(f123);
  return o;
}

// ---- 2 -----------------------------------------------------------------------------------

Outcome higgs_gradient_check() {
  const GeneratorSet g = build_su_n_basis(2);
  const PhysicsParams p{0.9};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 0.6);
  const double h = 1e-5;
  double worst_grad = 0.0, worst_pot = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    LieElement phi(g.dim());
    for (int a = 0; a < g.dim(); ++a) phi[a] = cplx(nd(rng), nd(rng));
    const LieElement grad = higgs_gradient(phi, g, p);
    LieElement fd(g.dim());
    for (int a = 0; a < g.dim(); ++a) {
      LieElement pr = phi, mr = phi, pim = phi, mim = phi;
      pr[a] += h;
      mr[a] -= h;
      pim[a] += cplx(0, h);
      mim[a] -= cplx(0, h);
      const double dre = (higgs_potential(pr, g, p) - higgs_potential(mr, g, p)) / (2 * h);
      const double dim = (higgs_potential(pim, g, p) - higgs_potential(mim, g, p)) / (2 * h);
      fd[a] = 0.5 * cplx(dre, dim);
    }
    worst_grad = std::max(worst_grad, (grad - fd).norm() / grad.norm());
    const double a = higgs_potential(phi, g, p), b = higgs_potential_matrix(phi, g, p);
    worst_pot = std::max(worst_pot, std::abs(a - b) / std::max(std::abs(b), 1e-300));
  }
  return {worst_grad <= 1e-6 && worst_pot <= 1e-10,
          "gradient vs finite differences " + fmt(worst_grad) + ", coefficient vs trace potential " + fmt(worst_pot)};
}

// ---- 3 -----------------------------------------------------------------------------------

Outcome null_decomposition() {
  const GeneratorSet g = build_su_n_basis(2);
  const GridPtr grid = make_grid(128, 2 * pi);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto rep = verify_null_decomposition(make_lorenz_snapshot(seed, grid, g, 12.0),
                                               make_matter_snapshot(seed, grid, g, 12.0), g);
    worst = std::max({worst, rep.lemma_residual, rep.corollary_residual});
  }
  return {worst <= 1e-8, "128^2, 20 seeds, worst relative residual " + fmt(worst)};
}

// ---- 4 -----------------------------------------------------------------------------------

Outcome null_symbol_bound() {
  const NullSymbolReport r = null_symbol_bound_scan(100000, 4);
  const bool pass = r.max_ratio_jk <= 1 + 1e-9 && std::isfinite(r.max_ratio_j0) && r.max_collinear_q <= 1e-12 &&
                    r.degenerate_flagged == 0;
  return {pass, "q_jk ratio " + fmt(r.max_ratio_jk) + ", C_emp(q_j0) = " + fmt(r.max_ratio_j0) +
                    ", collinear |q| " + fmt(r.max_collinear_q)};
}

// ---- 5 -----------------------------------------------------------------------------------

Outcome interaction_geometry() {
  const GeometryReport r = check_interaction_geometry(1000000);
  GeometrySamplerOptions opp;
  opp.signs = std::array<int, 3>{1, 1, -1};
  opp.regime_fraction = 1.0;
  opp.seed = 9;
  const GeometryReport q = check_interaction_geometry(100000, opp);
  const bool pass = r.min_ratio >= 0.1 && r.zero_only_when_collinear && r.min_theta_first_branch >= 0.5 &&
                    r.max_theta_first_branch <= pi && q.first_branch == 100000 && q.min_theta_first_branch >= 0.5;
  return {pass, "10^6 samples, min ratio " + fmt(r.min_ratio) + " (all-tau infimum " +
                    fmt(r.min_optimal_tau_ratio) + "), theta in [" + fmt(r.min_theta_first_branch) + ", " +
                    fmt(r.max_theta_first_branch) + "] on the small-output branch"};
}

// ---- 6 -----------------------------------------------------------------------------------

Outcome bilinear_constants() {
  BilinearOptions o;
  o.max_iterations = 40;
  o.tolerance = 1e-4;
  double worst = 0.0;
  int feasible = 0;
  bool trivial_ok = true;
  for (double N0 : {1.0, 2.0, 4.0})
    for (double N1 : {1.0, 2.0, 4.0})
      for (double N2 : {1.0, 2.0, 4.0})
        for (double L0 : {1.0, 4.0})
          for (double L1 : {1.0, 4.0})
            for (int s2 : {1, -1}) {
              const auto r = measure_bilinear_constant({1, N0, L0}, {1, N1, L1}, {s2, N2, 1}, o);
              trivial_ok = trivial_ok && r.empirical <= r.trivial_bound * (1 + 1e-12);
              if (!r.feasible) continue;
              ++feasible;
              worst = std::max(worst, r.ratio);
            }
  BilinearOptions s;
  s.trials = 1;
  s.max_iterations = 30;
  s.tolerance = 1e-4;
  const auto scan = bilinear_scaling_scan({4, 8, 16, 32, 64}, s);
  const double gap = std::abs(scan.empirical_fit.slope - scan.theoretical_fit.slope);
  return {feasible >= 50 && worst <= 1.0 && trivial_ok && gap <= 0.2,
          std::to_string(feasible) + " feasible triples, global constant " + fmt(worst) + "; scan slope " +
              fmt(scan.empirical_fit.slope) + " vs theory " + fmt(scan.theoretical_fit.slope)};
}

// ---- 7 -----------------------------------------------------------------------------------

Outcome evolution_sanity() {
  const GeneratorSet g = build_su_n_basis(2);
  const GridPtr grid = make_grid(128, 2 * pi);
  EvolutionConfig cfg;
  const double T = 0.1;

  const InitialData d = gauss_compatible_data(grid, g, 5, 0.01, 3);
  double gauge = 0.0, cons = 0.0;
  for (const auto& m : monitor(evolve(make_state(d, g, cfg), T, 0.01, 1, g, cfg), g)) {
    gauge = std::max(gauge, m.gauge_relative);
    cons = std::max(cons, m.constraint_relative);
  }

  const InitialData big = gauss_compatible_data(grid, g, 17, 0.05, 3);
  const FieldState s0 = make_state(big, g, cfg);
  std::vector<FieldState> finals;
  for (double dt : {0.05, 0.025, 0.0125}) finals.push_back(evolve(s0, T, dt, 1000, g, cfg).back());
  const double e1 = state_norm(difference(finals[0], finals[1]), 1.0);
  const double e2 = state_norm(difference(finals[1], finals[2]), 1.0);
  const double order = std::log2(e1 / e2);

  const InitialData small = gauss_compatible_data(grid, g, 23, 0.005, 3);
  PicardOptions po;
  po.mesh_intervals = 10;
  const PicardReport pr = picard_iterate(small, T, 6, g, cfg, po);
  double ratio = 0.0;
  for (double q : pr.ratios) ratio = std::max(ratio, q);
  const auto frames = evolve(make_state(small, g, cfg), T, T / po.mesh_intervals, 1, g, cfg);
  double gap = 0.0;
  for (std::size_t i = 0; i < frames.size() && i < pr.trajectory.size(); ++i)
    gap = std::max(gap, state_norm(difference(frames[i], pr.trajectory[i]), 1.0));
  const bool pass = gauge <= 1e-4 && cons <= 1e-4 && order >= 2.0 && pr.contracted && !pr.ratios.empty() &&
                    ratio < 0.5 && frames.size() == pr.trajectory.size() && gap <= 1e-6;
  return {pass, "gauge " + fmt(gauge) + ", constraint " + fmt(cons) + ", temporal order " + fmt(order) +
                    ", Picard ratio " + fmt(ratio) + ", Picard vs stepping " + fmt(gap)};
}

// ---- 8 -----------------------------------------------------------------------------------

Outcome resonance_structure() {
  std::vector<double> L;
  for (int e = 8; e <= 16; ++e) L.push_back(std::ldexp(1.0, e));
  const ModulationScan scan = modulation_scan(L, 1e-2, 1.0, 4000, 8);
  bool tilde = true;
  for (bool e : scan.tilde_empty) tilde = tilde && e;
  double worst_res = -1e9, worst_non = 0.0;
  std::string offenders;
  for (const auto& row : scan.rows) {
    if (row.resonant) {
      worst_res = std::max(worst_res, row.fit.slope);
      if (row.fit.slope > 0.6) offenders += (offenders.empty() ? "" : " ") + to_string(row.tuple);
    } else {
      worst_non = std::max(worst_non, std::abs(row.fit.slope - 1.0));
    }
  }
  const bool pass = tilde && worst_res <= 0.6 && worst_non <= 0.1;
  std::string detail = "max resonant exponent " + fmt(worst_res) + ", nonresonant |exponent - 1| <= " +
                       fmt(worst_non) + ", tilde support empty: " + (tilde ? "yes" : "no");
  if (!offenders.empty()) detail += "; listed resonant tuples with |omega| ~ lambda: " + offenders;
  return {pass, detail};
}

// ---- 9 -----------------------------------------------------------------------------------

Outcome knapp_scaling() {
  KnappConfig base;
  base.c = 1e-2;
  base.mc_samples = 1000000;
  base.seed = 9;
  const auto third = amplitude_scan(base, true, knapp_k_grid(WindowKind::ThirdDerivative, 1, 2.0));
  const auto second = amplitude_scan(base, false, knapp_k_grid(WindowKind::SecondDerivative, 1, 2.0));
  const auto span = [](const AmplitudeScan& s) { return std::log10(s.rows.back().lambda / s.rows.front().lambda); };
  const auto rep = necessary_condition_report(third.fit, second.fit, {1e3, 1e4, 1e5, 1e6}, base.c);
  const bool pass = std::abs(third.fit.slope - 2.5) <= 0.2 && std::abs(second.fit.slope - 1.0) <= 0.15 &&
                    third.excludes_zero && second.excludes_zero && span(third) >= 2.0 - 1e-9 &&
                    span(second) >= 2.0 - 1e-9 && std::abs(rep.thresholds.s - 0.5) <= 0.1 &&
                    std::abs(rep.thresholds.sigma - 0.25) <= 0.1;
  return {pass, "third slope " + fmt(third.fit.slope) + " +- " + fmt(1.96 * third.fit.slope_stderr) +
                    ", second slope " + fmt(second.fit.slope) + " +- " + fmt(1.96 * second.fit.slope_stderr) +
                    ", thresholds (s, sigma) = (" + fmt(rep.thresholds.s) + ", " + fmt(rep.thresholds.sigma) + ")"};
}

// ---- 10 ----------------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("csh_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> runs = {
      {"lie-info", "--n", "3"},
      {"null-check", "--grid", "64", "--seeds", "2", "--pairs", "20000"},
      {"simulate", "--grid", "32", "--T", "0.04", "--dt", "0.01", "--xi-max", "1"},
      {"bilinear-scan", "--N", "2,4,8", "--trials", "1", "--plot"},
      {"knapp-scan", "--amplitude", "third", "--samples", "5000", "--plot"},
      {"knapp-scan", "--amplitude", "second", "--samples", "5000", "--plot"},
      {"knapp-scan", "--amplitude", "modulation", "--samples", "500", "--plot"},
  };
  Outcome o;
  int files = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    int codes[2];
    for (int rep = 0; rep < 2; ++rep) {
      std::vector<std::string> args = {"csh_lab", "--seed", "11"};
      args.insert(args.end(), runs[r].begin(), runs[r].end());
      args.insert(args.end(), {"--out", (root / std::to_string(r) / std::to_string(rep)).string()});
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream out, err;
      codes[rep] = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    const fs::path a = root / std::to_string(r) / "0", b = root / std::to_string(r) / "1";
    bool same = codes[0] == codes[1] && codes[0] != 1;
    for (const auto& e : fs::directory_iterator(a)) {
      const std::string name = e.path().filename().string();
      if (name.find(".manifest.json") != std::string::npos) continue;  // timestamps live there
      ++files;
      same = same && fs::exists(b / name) && slurp(e.path()) == slurp(b / name);
    }
    if (!same) {
      o.pass = false;
      o.detail += runs[r][0] + " differs; ";
    }
  }
  fs::remove_all(root);
  o.detail += std::to_string(runs.size()) + " CLI runs repeated, " + std::to_string(files) + " data files compared";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "Lie kernel exactness", 1.0, lie_kernel_exactness},
      {2, "Higgs gradient", 10.0, higgs_gradient_check},
      {3, "Null decomposition", 30.0, null_decomposition},
      {4, "Null symbol bound", 0.0, null_symbol_bound},
      {5, "Interaction geometry", 0.0, interaction_geometry},
      {6, "Bilinear constants", 600.0, bilinear_constants},
      {7, "Evolution sanity", 300.0, evolution_sanity},
      {8, "Resonance structure", 0.0, resonance_structure},
      {9, "Knapp scaling", 600.0, knapp_scaling},
      {10, "Determinism", 0.0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      o.pass = false;
      o.detail += "; runtime over " + fmt(c.limit_s) + " s";
    }
    failed += !o.pass;
    std::printf("[%s] %d. %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
