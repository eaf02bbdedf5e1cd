#pragma once

// Command-line front end: subcommand dispatch, JSON config merging, CSV/JSON
// artifacts, run manifests and gnuplot script emission.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "evolution.hpp"
#include "knapp.hpp"
#include "lie_kernel.hpp"
#include "null_forms.hpp"
#include "xsb_analyzer.hpp"

namespace csh::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { Success = 0, Usage = 1, AssertionFailed = 2 };

// ---- output helpers --------------------------------------------------------------

// Shortest round-trip decimal form; identical doubles give identical bytes.
inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : os_(path) {
    if (!os_) throw Error("cannot open " + path.string());
    row_strings(header);
  }
  void row(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(num(x));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << v[i];
    os_ << '\n';
  }

 private:
  std::ofstream os_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string());
  os << j.dump(2) << '\n';
}

// ---- plot scripts ------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Header row plus numeric rows of equal width; errors carry 1-based line numbers.
inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path.string(), 0);
  CsvTable t;
  std::string line;
  std::size_t ln = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
  };
  while (std::getline(is, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (ln == 1) {
      t.header = split(line);
      if (line.empty() || t.header.size() < 2) throw ParseError("header needs at least two columns", ln);
      continue;
    }
    if (line.empty()) throw ParseError("empty row", ln);
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()),
                       ln);
    std::vector<double> r;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size()) throw ParseError("non-numeric field '" + c + "'", ln);
      r.push_back(v);
    }
    t.rows.push_back(std::move(r));
  }
  if (ln == 0) throw ParseError("empty file", 1);
  if (t.rows.empty()) throw ParseError("no data rows", ln + 1);
  return t;
}

// Gnuplot script for a log-log scaling plot of column 2 (and beyond for
// "modulation") against column 1, with the least-squares line of column 2.
inline std::filesystem::path emit_plot_script(const std::filesystem::path& csv, const std::string& kind) {
  static const std::vector<std::string> kinds = {"second", "third", "modulation", "bilinear"};
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw PreconditionError("unknown plot kind " + kind);
  const CsvTable t = read_csv(csv);
  std::vector<double> x, y;
  for (const auto& r : t.rows)
    if (r[0] > 0 && r[1] > 0) {
      x.push_back(r[0]);
      y.push_back(r[1]);
    }
  std::ostringstream os;
  os << "# log-log scaling plot: " << kind << "\n";
  os << "set datafile separator ','\n";
  os << "set key autotitle columnhead\n";
  os << "set logscale xy\n";
  os << "set format xy '10^{%L}'\n";
  os << "set xlabel '" << t.header[0] << "'\n";
  os << "set ylabel '" << t.header[1] << "'\n";
  os << "set terminal pngcairo size 900,600\n";
  os << "set output '" << csv.stem().string() << ".png'\n";
  if (x.size() >= 2) {
    const LinearFit f = log_log_fit(x, y);
    os << "slope = " << num(f.slope) << "\n";
    os << "intercept = " << num(f.intercept) << "\n";
    os << "fitline(x) = exp(intercept) * x**slope\n";
  }
  const std::string data = "'" + csv.filename().string() + "'";
  os << "plot ";
  if (kind == "modulation") {
    for (std::size_t c = 2; c <= t.header.size(); ++c) os << (c > 2 ? ", \\\n     " : "") << data << " using 1:" << c << " with linespoints";
  } else if (kind == "bilinear") {
    os << data << " using 1:2 with linespoints, \\\n     " << data << " using 1:3 with lines";
  } else {
    os << data << " using 1:2:3 with yerrorbars";
  }
  if (x.size() >= 2) os << ", \\\n     fitline(x) title sprintf('slope %.3f', slope) with lines dashtype 2";
  os << "\n";
  std::filesystem::path out = csv;
  out.replace_extension(".gp");
  std::ofstream f(out);
  if (!f) throw Error("cannot open " + out.string());
  f << os.str();
  return out;
}

// ---- JSON configuration -------------------------------------------------------------

// Top-level keys set global options; an object under a subcommand name sets
// that subcommand's options. Flags given on the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    json j;
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config JSON must be an object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
  static void collect(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(k);
        collect(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = k;
      if (v.is_array())
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      else
        item.inputs.push_back(scalar(v));
      out.push_back(item);
    }
  }
};

// ---- run configuration --------------------------------------------------------------

struct RunConfig {
  std::string config_file;
  std::uint64_t seed = 0;
  std::string out_dir = "csh_out";
  int threads = 0;  // 0: CSH_THREADS or hardware concurrency
  bool verbose = false;
  bool plot = false;

  // lie-info
  int n = 2;
  // simulate and null-check
  int grid = 128;
  double box = 2 * pi;
  double amplitude = 0.01;
  double xi_max = 3.0;
  double T = 0.1;
  double dt = 0.01;
  int stride = 1;
  bool snapshot = true;
  int seeds = 20;
  long pairs = 100000;
  // bilinear-scan
  std::vector<double> Ns = {4, 8, 16, 32, 64};
  int trials = 2;
  // knapp-scan
  std::string amplitude_kind = "third";
  double decades = 2.0;
  int k_min = 1;
  int max_points = 16;
  long samples = 100000;
  double eps = 0.1;
  double rho = 1e-6;
  double box_c = 1e-2;
  double mass = 1.0;
  int log2_min = 8, log2_max = 16;
  std::string resonance_class = "listed";
};

// Collected values of every option of the app and the chosen subcommand.
inline json resolved_options(const CLI::App& app) {
  json j = json::object();
  auto add = [&](const CLI::App& a, json& into) {
    for (const CLI::Option* o : a.get_options()) {
      const std::string name = o->get_lnames().empty() ? o->get_name() : o->get_lnames().front();
      if (name == "help" || name == "config") continue;
      const auto& res = o->results();
      if (!res.empty()) {
        if (res.size() == 1)
          into[name] = res.front();
        else
          into[name] = res;
      } else {
        into[name] = o->get_default_str();
      }
    }
  };
  add(app, j);
  for (const CLI::App* sub : app.get_subcommands()) {
    json s = json::object();
    add(*sub, s);
    j[sub->get_name()] = s;
  }
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunResult {
  bool passed = true;
  std::vector<std::string> outputs;  // file names inside out_dir
  json summary = json::object();
};

// ---- subcommands --------------------------------------------------------------------------

inline RunResult run_lie_info(const RunConfig& c, const std::filesystem::path& dir) {
  const GeneratorSet g = build_su_n_basis(c.n);
  const BasisReport b = check_basis(g);
  const CasimirReport cas = check_casimir_commutation(g);
  RunResult r;
  json j;
  j["n"] = c.n;
  j["dim"] = g.dim();
  j["f_12_3"] = g.f(0, 1, 2);
  json nz = json::array();
  for (const auto& e : g.nonzero()) nz.push_back({{"a", e.a + 1}, {"b", e.b + 1}, {"c", e.c + 1}, {"f", e.value}});
  j["structure_constants_nonzero"] = nz;
  j["residuals"] = {{"hermitian", b.hermitian},         {"traceless", b.traceless},
                    {"trace_normalization", b.normalization}, {"commutator", b.commutator},
                    {"f_antisymmetry", b.antisymmetry}, {"jacobi", b.jacobi},
                    {"casimir_commutator", cas.max_residual}};
  j["casimir_value"] = cas.casimir_value;
  j["casimir_unsummed_commutator"] = cas.max_unsummed;
  r.passed = std::max(b.max(), cas.max_residual) <= 1e-12 && (c.n != 2 || std::abs(g.f(0, 1, 2) - 2.0) <= 1e-12);
  write_json(dir / "lie_info.json", j);
  r.outputs.push_back("lie_info.json");
  r.summary = j["residuals"];
  return r;
}

inline RunResult run_null_check(const RunConfig& c, const std::filesystem::path& dir) {
  const GeneratorSet g = build_su_n_basis(c.n);
  const GridPtr grid = make_grid(c.grid, c.box);
  RunResult r;
  CsvWriter csv(dir / "null_check.csv",
                {"seed", "lorenz_gauge_residual", "rel_residual_gauge_coupling_identity",
                 "rel_residual_gauge_self_coupling_identity"});
  double worst = 0.0;
  for (int s = 0; s < c.seeds; ++s) {
    const std::uint64_t sd = mix_seed(c.seed, static_cast<std::uint64_t>(s));
    const GaugeSnapshot snap = make_lorenz_snapshot(sd, grid, g, c.xi_max);
    const LieWithRate phi = make_matter_snapshot(sd, grid, g, c.xi_max);
    const auto rep = verify_null_decomposition(snap, phi, g);
    worst = std::max({worst, rep.lemma_residual, rep.corollary_residual});
    csv.row({double(s), rep.gauge_residual, rep.lemma_residual, rep.corollary_residual});
  }
  const NullSymbolReport sym = null_symbol_bound_scan(c.pairs, c.seed);
  json j;
  j["max_relative_residual"] = worst;
  j["symbol_samples"] = sym.samples;
  j["max_ratio_qjk_over_angle_bound"] = sym.max_ratio_jk;
  j["max_ratio_qj0_over_angle_bound"] = sym.max_ratio_j0;
  j["max_collinear_q"] = sym.max_collinear_q;
  j["degenerate_flagged"] = sym.degenerate_flagged;
  r.passed = worst <= 1e-8 && sym.max_ratio_jk <= 1 + 1e-9 && sym.max_collinear_q <= 1e-12 &&
             std::isfinite(sym.max_ratio_j0);
  write_json(dir / "null_check.json", j);
  r.outputs = {"null_check.csv", "null_check.json"};
  r.summary = j;
  return r;
}

inline RunResult run_simulate(const RunConfig& c, const std::filesystem::path& dir) {
  const GeneratorSet g = build_su_n_basis(c.n);
  const GridPtr grid = make_grid(c.grid, c.box);
  const InitialData d = gauss_compatible_data(grid, g, c.seed, c.amplitude, c.xi_max);
  EvolutionConfig cfg;
  const auto frames = evolve(make_state(d, g, cfg), c.T, c.dt, c.stride, g, cfg);
  const auto mon = monitor(frames, g, cfg.dealias_order);
  RunResult r;
  CsvWriter csv(dir / "monitor.csv", {"t", "lorenz_gauge_residual_relative", "field_strength_constraint_relative",
                                      "gauss_constraint_residual", "hs_norm_phi", "hs_norm_A"});
  double gauge = 0.0, cons = 0.0;
  for (const auto& m : mon) {
    csv.row({m.t, m.gauge_relative, m.constraint_relative, m.gauss_residual, m.hs_phi, m.hs_A});
    gauge = std::max(gauge, m.gauge_relative);
    cons = std::max(cons, m.constraint_relative);
  }
  r.outputs.push_back("monitor.csv");
  if (c.snapshot) {
    const FieldState& s = frames.back();
    write_snapshot((dir / "final_state.snap").string(), {&s.phi, &s.dphi, &s.A[0], &s.dA[0], &s.A[1], &s.dA[1], &s.A[2], &s.dA[2]},
                   c.n);
    r.outputs.push_back("final_state.snap");
  }
  json j;
  j["frames"] = mon.size();
  j["max_gauge_relative"] = gauge;
  j["max_constraint_relative"] = cons;
  r.passed = gauge <= 1e-4 && cons <= 1e-4;
  write_json(dir / "simulate.json", j);
  r.outputs.push_back("simulate.json");
  r.summary = j;
  return r;
}

inline RunResult run_bilinear_scan(const RunConfig& c, const std::filesystem::path& dir) {
  BilinearOptions o;
  o.trials = c.trials;
  o.seed = c.seed;
  const ScalingScanReport rep = bilinear_scaling_scan(c.Ns, o);
  RunResult r;
  {
    CsvWriter csv(dir / "bilinear_scan.csv", {"N", "empirical_bilinear_constant", "theoretical_min_C1_C2_C3", "ratio",
                                              "trivial_bound", "points_K0", "points_K1", "points_K2"});
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& w = rep.rows[i];
      csv.row({rep.N[i], w.empirical, w.theoretical, w.ratio, w.trivial_bound, double(w.points0), double(w.points1),
               double(w.points2)});
    }
  }
  json j;
  j["empirical_slope"] = rep.empirical_fit.slope;
  j["empirical_slope_stderr"] = rep.empirical_fit.slope_stderr;
  j["theoretical_slope"] = rep.theoretical_fit.slope;
  r.passed = std::abs(rep.empirical_fit.slope - rep.theoretical_fit.slope) <= 0.2;
  write_json(dir / "bilinear_scan.json", j);
  r.outputs = {"bilinear_scan.csv", "bilinear_scan.json"};
  if (c.plot) r.outputs.push_back(emit_plot_script(dir / "bilinear_scan.csv", "bilinear").filename().string());
  r.summary = j;
  return r;
}

// Comma-free tuple label for CSV headers: p for +, m for -.
inline std::string tuple_code(const SignTuple4& t) {
  std::string s;
  for (int x : t) s += x > 0 ? 'p' : 'm';
  return s;
}

inline json fit_json(const ScalingFit& f) {
  return {{"slope", f.slope},       {"slope_stderr", f.slope_stderr}, {"intercept", f.intercept},
          {"rms_residual", f.residual}, {"points_used", f.used},        {"points_excluded", f.excluded}};
}

inline RunResult run_knapp_scan(const RunConfig& c, const std::filesystem::path& dir) {
  RunResult r;
  KnappConfig base;
  base.eps = c.eps;
  base.rho = c.rho;
  base.c = c.box_c;
  base.m = c.mass;
  base.mc_samples = c.samples;
  base.seed = c.seed;
  json j;
  const std::string stem = "knapp_" + c.amplitude_kind;
  if (c.amplitude_kind == "modulation") {
    if (c.resonance_class != "listed" && c.resonance_class != "uniform")
      throw PreconditionError("resonance class must be listed or uniform");
    std::vector<double> L;
    for (int e = c.log2_min; e <= c.log2_max; ++e) L.push_back(std::ldexp(1.0, e));
    const ModulationScan scan = modulation_scan(L, c.box_c, c.mass, c.samples, c.seed);
    std::vector<std::string> header = {"lambda"};
    for (const auto& row : scan.rows) header.push_back("max_abs_omega1234_" + tuple_code(row.tuple));
    header.push_back("tilde_support_empty");
    {
      CsvWriter csv(dir / (stem + ".csv"), header);
      for (std::size_t q = 0; q < L.size(); ++q) {
        std::vector<double> v = {L[q]};
        for (const auto& row : scan.rows) v.push_back(row.max_abs[q]);
        v.push_back(scan.tilde_empty[q] ? 1.0 : 0.0);
        csv.row(v);
      }
    }
    json rows = json::array();
    bool ok = true;
    for (bool e : scan.tilde_empty) ok = ok && e;
    for (const auto& row : scan.rows) {
      const bool small = c.resonance_class == "listed" ? row.resonant : row.fully_resonant;
      const bool pass = small ? row.fit.slope <= 0.6 : std::abs(row.fit.slope - 1.0) <= 0.1;
      ok = ok && pass;
      rows.push_back({{"tuple", to_string(row.tuple)},
                      {"listed_resonant", row.resonant},
                      {"leading_order_resonant", row.leading_order},
                      {"fully_resonant", row.fully_resonant},
                      {"slope", row.fit.slope},
                      {"pass", pass}});
    }
    j["resonance_class"] = c.resonance_class;
    j["tuples"] = rows;
    r.passed = ok;
  } else if (c.amplitude_kind == "second" || c.amplitude_kind == "third") {
    const bool third = c.amplitude_kind == "third";
    const WindowKind kind = third ? WindowKind::ThirdDerivative : WindowKind::SecondDerivative;
    const auto ks = knapp_k_grid(kind, c.k_min, c.decades, c.max_points);
    const AmplitudeScan scan = amplitude_scan(base, third, ks);
    std::vector<std::string> header =
        third ? std::vector<std::string>{"lambda", "abs_d3_A2_hat", "ci95_d3_A2_hat", "abs_N_resonant",
                                         "abs_N_nonresonant", "abs_II_resonant", "abs_II_nonresonant",
                                         "I1_bound", "k", "min_abs_cos_t_xi"}
              : std::vector<std::string>{"lambda", "abs_d2_phi_hat", "ci95_d2_phi_hat", "abs_I",
                                         "abs_II", "abs_III", "abs_IV", "k", "min_abs_sin_t_xi"};
    {
      CsvWriter csv(dir / (stem + ".csv"), header);
      for (const auto& row : scan.rows) {
        std::vector<double> v = {row.lambda, row.amplitude, row.ci95};
        v.insert(v.end(), row.parts.begin(), row.parts.end());
        v.push_back(row.k);
        v.push_back(row.trig_bound);
        csv.row(v);
      }
    }
    j["fit"] = fit_json(scan.fit);
    j["expected_slope"] = third ? 2.5 : 1.0;
    j["ci_excludes_zero_slope"] = scan.excludes_zero;
    j["k"] = ks;
    r.passed = std::abs(scan.fit.slope - (third ? 2.5 : 1.0)) <= (third ? 0.2 : 0.15) && scan.excludes_zero;
  } else {
    throw PreconditionError("amplitude must be second, third or modulation");
  }
  write_json(dir / (stem + ".json"), j);
  r.outputs = {stem + ".csv", stem + ".json"};
  if (c.plot) r.outputs.push_back(emit_plot_script(dir / (stem + ".csv"), c.amplitude_kind).filename().string());
  r.summary = j;
  return r;
}

// ---- dispatcher --------------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Numerical lab for the Chern-Simons-Higgs system in Lorenz gauge", "csh_lab"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  RunConfig c;
  app.set_config("--config", "", "JSON configuration; command-line flags take precedence");
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--out", c.out_dir, "Output directory")->envname("CSH_OUT_DIR");
  app.add_option("--threads", c.threads, "Worker threads (0: CSH_THREADS or all cores)")
      ->envname("CSH_THREADS")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose,-v", c.verbose, "Print the summary");

  auto* lie = app.add_subcommand("lie-info", "Structure constants and basis residuals of su(n)");
  lie->add_option("--n", c.n, "Matrix size n of su(n)")->check(CLI::Range(2, 16));

  auto* nul = app.add_subcommand("null-check", "Null-form decomposition and symbol bounds");
  nul->add_option("--n", c.n, "Matrix size n of su(n)")->check(CLI::Range(2, 8));
  nul->add_option("--grid", c.grid, "Grid size M (power of two)");
  nul->add_option("--seeds", c.seeds, "Number of random snapshots")->check(CLI::PositiveNumber);
  nul->add_option("--xi-max", c.xi_max, "Band limit of the snapshots");
  nul->add_option("--pairs", c.pairs, "Random frequency pairs for the symbol bound")->check(CLI::PositiveNumber);
  nul->add_option("--box", c.box, "Box length");

  auto* sim = app.add_subcommand("simulate", "Evolve constraint-compatible data and monitor gauge and constraint");
  sim->add_option("--n", c.n, "Matrix size n of su(n)")->check(CLI::Range(2, 8));
  sim->add_option("--grid", c.grid, "Grid size M (power of two)");
  sim->add_option("--T", c.T, "Final time");
  sim->add_option("--dt", c.dt, "Time step");
  sim->add_option("--stride", c.stride, "Monitor every stride steps")->check(CLI::PositiveNumber);
  sim->add_option("--amplitude", c.amplitude, "Data amplitude");
  sim->add_option("--xi-max", c.xi_max, "Band limit of the data");
  sim->add_option("--box", c.box, "Box length");
  sim->add_option("--snapshot", c.snapshot, "Write the final state snapshot");

  auto* bil = app.add_subcommand("bilinear-scan", "Bilinear block constants against N");
  bil->add_option("--N", c.Ns, "Dyadic scales N")->delimiter(',');
  bil->add_option("--trials", c.trials, "Random starts per block triple")->check(CLI::PositiveNumber);
  bil->add_flag("--plot", c.plot, "Emit a gnuplot script");

  auto* kn = app.add_subcommand("knapp-scan", "Knapp amplitudes or modulation sizes against lambda");
  kn->add_option("--amplitude", c.amplitude_kind, "second, third or modulation")
      ->check(CLI::IsMember({"second", "third", "modulation"}));
  kn->add_option("--lambda-decades", c.decades, "Decades of lambda covered by the window indices");
  kn->add_option("--k-min", c.k_min, "Smallest window index")->check(CLI::PositiveNumber);
  kn->add_option("--max-points", c.max_points, "Largest number of lambda points");
  kn->add_option("--samples", c.samples, "Monte Carlo samples per lambda")->check(CLI::PositiveNumber);
  kn->add_option("--eps", c.eps, "epsilon in t = eps lambda^{-1/2}");
  kn->add_option("--rho", c.rho, "Window tolerance rho");
  kn->add_option("--box-constant", c.box_c, "Box constant c of W_lambda");
  kn->add_option("--mass", c.mass, "Klein-Gordon mass m");
  kn->add_option("--log2-min", c.log2_min, "Smallest log2 lambda (modulation)");
  kn->add_option("--log2-max", c.log2_max, "Largest log2 lambda (modulation)");
  kn->add_option("--resonance-class", c.resonance_class, "listed or uniform (modulation)")
      ->check(CLI::IsMember({"listed", "uniform"}));
  kn->add_flag("--plot", c.plot, "Emit a gnuplot script");

  if (argc <= 1) {
    err << app.help();
    return Usage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return Usage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (c.threads > 0) setenv("CSH_THREADS", std::to_string(c.threads).c_str(), 1);

  const std::filesystem::path dir(c.out_dir);
  json manifest;
  manifest["program"] = "csh_lab";
  manifest["subcommand"] = name;
  manifest["started"] = utc_timestamp();
  manifest["config"] = resolved_options(app);
  RunResult res;
  int code = Success;
  try {
    std::filesystem::create_directories(dir);
    if (name == "lie-info") res = run_lie_info(c, dir);
    else if (name == "null-check") res = run_null_check(c, dir);
    else if (name == "simulate") res = run_simulate(c, dir);
    else if (name == "bilinear-scan") res = run_bilinear_scan(c, dir);
    else res = run_knapp_scan(c, dir);
    code = res.passed ? Success : AssertionFailed;
  } catch (const std::exception& e) {
    err << "csh_lab " << name << ": " << e.what() << "\n";
    manifest["error"] = e.what();
    code = Usage;
  }
  manifest["finished"] = utc_timestamp();
  manifest["outputs"] = res.outputs;
  manifest["summary"] = res.summary;
  manifest["passed"] = res.passed && code == Success;
  manifest["exit_code"] = code;
  try {
    write_json(dir / (name + ".manifest.json"), manifest);
  } catch (const std::exception& e) {
    err << "csh_lab: " << e.what() << "\n";
    return Usage;
  }
  if (c.verbose) out << res.summary.dump(2) << "\n";
  if (code == AssertionFailed) err << "csh_lab " << name << ": invariant check failed\n";
  return code;
}

}  // namespace csh::cli
