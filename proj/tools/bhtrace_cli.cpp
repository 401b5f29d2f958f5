// Command-line front end: one subcommand per pipeline stage.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <boost/version.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "bhtrace/freefield.hpp"
#include "bhtrace/io.hpp"
#include "bhtrace/meanfield.hpp"
#include "bhtrace/model.hpp"
#include "bhtrace/orbits.hpp"
#include "bhtrace/semiclassics.hpp"

namespace fs = std::filesystem;
using namespace bhtrace;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Config {
  std::string model_path;
  std::string out = "out";
  int L = 0;
  int N = -1;
  double emin = kNaN, emax = kNaN;
  int bins = 0;
  double sigma = 0.0;
  double sigma_rel = 0.0;
  std::uint64_t seed = 1;
  int kmax = 0;
  long long samples = 1'000'000;
  int threads = 0;
  // weyl
  bool literal_norm = false;
  // evolve
  std::vector<double> psi0;
  double tmax = 10.0;
  int steps = 100;
  double rtol = 1e-12, atol = 1e-14;
  // fixed points / orbits
  int n_seeds = 64;
  double amplitude = 0.05;
  double dE = 0.0;
  int csteps = 0;
  bool free_orbits = false;
  double alpha = 0.0;
  double orbit_tol = 1e-10;
  std::string library;
  // freefield
  int n_alpha = 256;
  bool quad_check = true;
  double E = 0.0;
  // time spectrum
  double wlo = kNaN, whi = kNaN;
  int tbins = 4000;
  double floor_rel = 0.1;
  // compare
  std::string a_path, b_path, col_a = "rho_total", col_b = "rho_exact_smoothed";
  double lo = kNaN, hi = kNaN;
};

std::string upper_env(const std::string& flag) {
  std::string s = "BHTRACE_";
  for (char c : flag) s += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return s;
}

template <class T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  return app->add_option("--" + name, var, help)->envname(upper_env(name));
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
  return app->add_flag("--" + name, var, help)->envname(upper_env(name));
}

// Sorted option echo of the selected subcommand, excluding output location
// and thread count (neither changes results).
std::map<std::string, std::string> echo(const CLI::App* sub) {
  std::map<std::string, std::string> m;
  for (const CLI::Option* o : sub->get_options()) {
    std::string name = o->get_name(false, true);
    if (name.empty() || name.find("help") != std::string::npos) continue;
    while (!name.empty() && name[0] == '-') name.erase(0, 1);
    if (name == "out" || name == "threads" || name == "help") continue;
    std::string v;
    if (o->count() > 0) {
      for (const auto& r : o->results()) v += (v.empty() ? "" : " ") + r;
    } else {
      v = o->get_default_str();
    }
    m[name] = v;
  }
  return m;
}

std::string config_string(const std::string& sub, const std::map<std::string, std::string>& m) {
  std::string s = "subcommand=" + sub + "\n";
  for (const auto& [k, v] : m) s += k + "=" + v + "\n";
  return s;
}

struct Run {
  std::string sub;
  std::map<std::string, std::string> config;
  std::string hash;
  fs::path dir;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  std::string path(const std::string& file) const { return (dir / file).string(); }

  void manifest(const std::vector<std::string>& outputs) const {
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::time_t now = std::time(nullptr);
    char ts[32];
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json j{{"subcommand", sub},
           {"config", config},
           {"config_hash", hash},
           {"version", kVersion},
           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                         "." + std::to_string(EIGEN_MINOR_VERSION)},
           {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                         std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                         std::to_string(BOOST_VERSION % 100)},
           {"outputs", outputs},
           {"wall_time_s", wall},
           {"timestamp", ts}};
    write_text(path("manifest_" + sub + ".json"), j.dump(2) + "\n");
  }
};

void need(bool ok, const std::string& what) {
  if (!ok) throw Error("invalid_argument", what);
}

BoseHubbardModel model_of(const Config& c) {
  need(!c.model_path.empty(), "--model is required");
  return load_model(c.model_path);
}

int need_N(const Config& c) {
  need(c.N >= 0, "--N is required");
  return c.N;
}

double resolve_sigma(const Config& c, const Spectrum* sp) {
  if (c.sigma > 0) return c.sigma;
  if (c.sigma_rel > 0 && sp && sp->energies.size() > 0) {
    double span = sp->energies.back() - sp->energies.front();
    need(span > 0, "--sigma-rel needs a spectrum with non-zero span");
    return c.sigma_rel * span / sp->energies.size();
  }
  throw Error("invalid_argument", "--sigma (or --sigma-rel with a computable spectrum) is required");
}

DensityGrid resolve_grid(const Config& c, const Spectrum* sp, double sigma) {
  if (std::isfinite(c.emin) || std::isfinite(c.emax) || c.bins > 0) {
    need(std::isfinite(c.emin) && std::isfinite(c.emax) && c.bins > 0,
         "--emin, --emax and --bins must be given together");
    need(c.emax > c.emin, "--emax must exceed --emin");
    return DensityGrid(c.emin, c.emax, c.bins);
  }
  need(sp && !sp->energies.empty(), "--emin/--emax/--bins are required here");
  const double pad = 10.0 * sigma;
  const double lo = sp->energies.front() - pad, hi = sp->energies.back() + pad;
  const int bins = std::max(400, static_cast<int>(std::ceil((hi - lo) / (0.25 * sigma))));
  return DensityGrid(lo, hi, bins);
}

// Exact spectrum when the sector is small enough for dense diagonalization.
std::optional<Spectrum> small_spectrum(const BoseHubbardModel& m, int N, int threads) {
  if (sector_dimension(m.L(), N) > 6000) return std::nullopt;
  return exact_spectrum(m, N, kDefaultBasisCap, threads);
}

Table dos_table(const DensityGrid& g, const std::vector<double>& exact, const std::vector<double>& weyl,
                const std::vector<double>& weyl_se, const std::vector<double>& osc) {
  Table t;
  t.names = {"E", "rho_exact_smoothed", "rho_weyl", "rho_weyl_stderr", "rho_osc", "rho_total"};
  t.columns.assign(6, std::vector<double>(g.n_bins, kNaN));
  for (int i = 0; i < g.n_bins; ++i) {
    t.columns[0][i] = g.center(i);
    if (!exact.empty()) t.columns[1][i] = exact[i];
    if (!weyl.empty()) t.columns[2][i] = weyl[i];
    if (!weyl_se.empty()) t.columns[3][i] = weyl_se[i];
    if (!osc.empty()) t.columns[4][i] = osc[i];
    if (!weyl.empty() && !osc.empty()) t.columns[5][i] = weyl[i] + osc[i];
    else if (!weyl.empty()) t.columns[5][i] = weyl[i];
  }
  return t;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json cjson(const cvec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

// ---- subcommands ----

void cmd_basis(const Config& c, Run& r) {
  int L = c.L;
  if (!c.model_path.empty()) L = model_of(c).L();
  need(L >= 1, "--L or --model is required");
  int N = need_N(c);
  std::size_t dim = sector_dimension(L, N);
  std::cout << dim << "\n";
  Table t{{"L", "N", "dimension"}, {{double(L)}, {double(N)}, {double(dim)}}};
  write_csv(r.path("basis.csv"), r.sub, r.hash, {}, t);
  r.manifest({"basis.csv"});
}

void cmd_ed(const Config& c, Run& r) {
  auto m = model_of(c);
  int N = need_N(c);
  Spectrum sp = exact_spectrum(m, N, kDefaultBasisCap, c.threads);
  double sigma = resolve_sigma(c, &sp);
  DensityGrid g = resolve_grid(c, &sp, sigma);
  DensityGrid ex = smoothed_dos(sp, g, sigma);
  Table levels{{"index", "energy"}, {{}, {}}};
  for (std::size_t i = 0; i < sp.energies.size(); ++i) {
    levels.columns[0].push_back(double(i));
    levels.columns[1].push_back(sp.energies[i]);
  }
  std::vector<std::string> com{"N=" + std::to_string(N), "sigma=" + fmt(sigma),
                               "model=" + m.hash()};
  write_csv(r.path("ed_spectrum.csv"), r.sub, r.hash, com, levels);
  write_csv(r.path("ed_dos.csv"), r.sub, r.hash, com, dos_table(g, ex.values, {}, {}, {}));
  r.manifest({"ed_spectrum.csv", "ed_dos.csv"});
}

void cmd_weyl(const Config& c, Run& r) {
  auto m = model_of(c);
  int N = need_N(c);
  auto sp = (c.sigma > 0 && c.bins > 0) ? std::nullopt : small_spectrum(m, N, c.threads);
  double sigma = resolve_sigma(c, sp ? &*sp : nullptr);
  DensityGrid g = resolve_grid(c, sp ? &*sp : nullptr, sigma);
  WeylOptions wo;
  wo.seed = c.seed;
  wo.threads = c.threads;
  wo.normalization = c.literal_norm ? WeylNormalization::Literal : WeylNormalization::SumRule;
  WeylEstimate w = weyl_dos(m, N, g, c.samples, sigma, wo);
  std::vector<double> ex;
  if (sp) ex = smoothed_dos(*sp, g, sigma).values;
  std::vector<std::string> com{"N=" + std::to_string(N), "sigma=" + fmt(sigma),
                               "seed=" + std::to_string(c.seed),
                               "samples=" + std::to_string(c.samples),
                               "integral=" + fmt(w.integral), "integral_se=" + fmt(w.integral_se),
                               "model=" + m.hash()};
  write_csv(r.path("weyl_dos.csv"), r.sub, r.hash, com,
            dos_table(g, ex, w.grid.values, w.standard_error, {}));
  std::cout << "integral=" << fmt(w.integral) << " se=" << fmt(w.integral_se) << "\n";
  r.manifest({"weyl_dos.csv"});
}

void cmd_evolve(const Config& c, Run& r) {
  auto m = model_of(c);
  const int L = m.L();
  cvec psi0;
  if (!c.psi0.empty()) {
    need(static_cast<int>(c.psi0.size()) == 2 * L, "--psi0 needs 2L numbers (Re..., Im...)");
    psi0 = to_complex(Eigen::Map<const rvec>(c.psi0.data(), 2 * L));
  } else {
    int N = need_N(c);
    psi0 = shell_samples(L, N + 0.5 * L, 1, c.seed)[0];
  }
  need(c.tmax > 0 && c.steps > 0, "--tmax and --steps must be positive");
  need(c.rtol > 0 && c.atol > 0, "tolerances must be positive");
  std::vector<double> times(c.steps + 1);
  for (int i = 0; i <= c.steps; ++i) times[i] = c.tmax * i / c.steps;
  IntegratorOptions io{c.rtol, c.atol};
  Diagnostics d;
  auto states = integrate_samples(m, psi0, times, io, &d);
  Table t;
  t.names.push_back("t");
  for (int l = 1; l <= L; ++l) {
    t.names.push_back("re_psi_" + std::to_string(l));
    t.names.push_back("im_psi_" + std::to_string(l));
  }
  t.names.push_back("N");
  t.names.push_back("E");
  t.columns.assign(t.names.size(), {});
  for (std::size_t i = 0; i < states.size(); ++i) {
    t.columns[0].push_back(times[i]);
    for (int l = 0; l < L; ++l) {
      t.columns[1 + 2 * l].push_back(states[i][l].real());
      t.columns[2 + 2 * l].push_back(states[i][l].imag());
    }
    t.columns[1 + 2 * L].push_back(conserved_N(states[i]));
    t.columns[2 + 2 * L].push_back(mf_hamiltonian(m, states[i]));
  }
  write_csv(r.path("trajectory.csv"), r.sub, r.hash,
            {"max_drift_N=" + fmt(d.max_drift_N), "max_drift_E=" + fmt(d.max_drift_E),
             "model=" + m.hash()},
            t);
  r.manifest({"trajectory.csv"});
}

void cmd_fixed_points(const Config& c, Run& r) {
  auto m = model_of(c);
  int N = need_N(c);
  const double ng = N + 0.5 * m.L();
  auto fps = find_fixed_points(m, shell_samples(m.L(), ng, c.n_seeds, c.seed), ng);
  json arr = json::array();
  for (const auto& f : fps)
    arr.push_back(json{{"psi", cjson(canonical_phase(f.psi))},
                       {"mu", f.mu},
                       {"energy", mf_hamiltonian(m, f.psi)},
                       {"residual", f.residual},
                       {"n_stable", f.n_stable},
                       {"n_unstable", f.n_unstable}});
  json j{{"subcommand", r.sub},
         {"config_hash", r.hash},
         {"model_hash", m.hash()},
         {"n_gamma", ng},
         {"fixed_points", arr}};
  write_text(r.path("fixed_points.json"), j.dump(2) + "\n");
  std::cout << fps.size() << " fixed points\n";
  r.manifest({"fixed_points.json"});
}

void cmd_orbit_find(const Config& c, Run& r) {
  auto m = model_of(c);
  int N = need_N(c);
  const double ng = N + 0.5 * m.L();
  OrbitLibrary lib;
  lib.subcommand = r.sub;
  lib.config_hash = r.hash;
  lib.model_hash = m.hash();
  lib.tolerance = c.orbit_tol;
  lib.n_gamma = ng;
  OrbitOptions oo;
  oo.tol = c.orbit_tol;
  if (c.free_orbits) {
    need(m.is_free(), "--free needs a model without interactions");
    need(c.kmax >= 1, "--kmax must be at least 1");
    FreeFieldData d = free_field_data(m);
    for (auto& o : enumerate_orbits(d, N, c.kmax, c.alpha)) lib.families.push_back({{o}});
  } else {
    auto fps = find_fixed_points(m, shell_samples(m.L(), ng, c.n_seeds, c.seed), ng);
    OrbitStore store(m);
    for (const auto& fp : fps)
      for (const auto& s : seeds_near_fixed_point(m, fp, c.amplitude)) {
        OrbitConstraints cons{ng, mf_hamiltonian(m, s.psi0), std::nullopt};
        OrbitSolve sol;
        try {
          sol = find_orbit(m, s.psi0, s.T, s.alpha, cons, oo);
        } catch (const Error& e) {
          std::cerr << "warning: seed skipped: " << e.code() << ": " << e.what() << "\n";
          continue;
        }
        if (!sol.converged || !store.add(sol.orbit)) continue;
        const auto& o0 = sol.orbit;
        std::vector<double> up, down;
        for (int i = 1; i <= c.csteps; ++i) {
          up.push_back(o0.energy + i * c.dE);
          down.push_back(o0.energy - i * c.dE);
        }
        auto fu = continue_in_energy(m, o0, up, oo);
        auto fd = continue_in_energy(m, o0, down, oo);
        OrbitFamily fam;
        for (auto it = fd.rbegin(); it != fd.rend(); ++it) fam.members.push_back(*it);
        fam.members.insert(fam.members.end(), fu.begin() + 1, fu.end());
        lib.families.push_back(std::move(fam));
      }
  }
  save_orbit_library(r.path("orbits.json"), lib);
  std::size_t n = 0;
  for (const auto& f : lib.families) n += f.members.size();
  std::cout << lib.families.size() << " families, " << n << " orbits\n";
  r.manifest({"orbits.json"});
}

void cmd_trace(const Config& c, Run& r) {
  auto m = model_of(c);
  int N = need_N(c);
  need(!c.library.empty(), "--library is required");
  OrbitLibrary lib = load_orbit_library(c.library);
  if (!lib.model_hash.empty() && lib.model_hash != m.hash())
    throw Error("library_mismatch", "orbit library was built for model " + lib.model_hash);
  auto sp = small_spectrum(m, N, c.threads);
  double sigma = resolve_sigma(c, sp ? &*sp : nullptr);
  DensityGrid g = resolve_grid(c, sp ? &*sp : nullptr, sigma);
  WeylOptions wo;
  wo.seed = c.seed;
  wo.threads = c.threads;
  wo.normalization = c.literal_norm ? WeylNormalization::Literal : WeylNormalization::SumRule;
  WeylEstimate w = weyl_dos(m, N, g, c.samples, sigma, wo);
  OscillatoryResult osc = oscillatory_dos(lib.families, g, sigma);
  std::vector<double> ex;
  if (sp) ex = smoothed_dos(*sp, g, sigma).values;
  write_csv(r.path("trace_dos.csv"), r.sub, r.hash,
            {"N=" + std::to_string(N), "sigma=" + fmt(sigma), "seed=" + std::to_string(c.seed),
             "orbits_used=" + std::to_string(osc.used),
             "orbits_excluded=" + std::to_string(osc.excluded), "model=" + m.hash()},
            dos_table(g, ex, w.grid.values, w.standard_error, osc.grid.values));
  r.manifest({"trace_dos.csv"});
}

void cmd_freefield_dos(const Config& c, Run& r) {
  auto m = model_of(c);
  need(m.is_free(), "freefield-dos needs a model without interactions");
  int N = need_N(c);
  FreeFieldData d = free_field_data(m);
  Spectrum sp = ebk_levels(d, N);
  double sigma = resolve_sigma(c, &sp);
  DensityGrid g = resolve_grid(c, &sp, sigma);
  WeylOptions wo;
  wo.seed = c.seed;
  wo.threads = c.threads;
  wo.normalization = c.literal_norm ? WeylNormalization::Literal : WeylNormalization::SumRule;
  WeylEstimate w = weyl_dos(m, N, g, c.samples, sigma, wo);
  FreeDosOptions fo;
  fo.k_max = c.kmax;
  fo.n_alpha = c.n_alpha;
  fo.check_quadrature = c.quad_check;
  fo.threads = c.threads;
  FreeDosResult osc = freefield_osc_dos(d, N, g, sigma, fo);
  DensityGrid ex = smoothed_dos(sp, g, sigma);
  write_csv(r.path("freefield_dos.csv"), r.sub, r.hash,
            {"N=" + std::to_string(N), "sigma=" + fmt(sigma), "seed=" + std::to_string(c.seed),
             "k_max=" + std::to_string(osc.k_max), "n_alpha=" + std::to_string(c.n_alpha),
             "model=" + m.hash()},
            dos_table(g, ex.values, w.grid.values, w.standard_error, osc.grid.values));
  r.manifest({"freefield_dos.csv"});
}

void cmd_freefield_check(const Config& c, Run& r) {
  auto m = model_of(c);
  need(m.is_free(), "freefield-check needs a model without interactions");
  need(c.sigma > 0, "--sigma is required");
  FreeFieldData d = free_field_data(m);
  const int kmax = c.kmax > 0 ? c.kmax : 200;
  ResidueCheck rc = residue_identity_check(d, std::max(c.N, 0), c.E, c.alpha, c.sigma, kmax);
  json j{{"N", rc.N},
         {"E", rc.E},
         {"alpha", rc.alpha},
         {"sigma", rc.sigma},
         {"k_max", rc.k_max},
         {"n_cap", rc.n_cap},
         {"lhs", {rc.lhs.real(), rc.lhs.imag()}},
         {"rhs", {rc.rhs.real(), rc.rhs.imag()}},
         {"gap", rc.gap},
         {"model_hash", m.hash()},
         {"subcommand", r.sub},
         {"config_hash", r.hash}};
  write_text(r.path("residue_check.json"), j.dump(2) + "\n");
  std::cout << "gap=" << fmt(rc.gap) << "\n";
  r.manifest({"residue_check.json"});
}

void cmd_time_spectrum(const Config& c, Run& r) {
  auto m = model_of(c);
  int N = need_N(c);
  Spectrum sp = exact_spectrum(m, N, kDefaultBasisCap, c.threads);
  EnergyWindow w{std::isfinite(c.wlo) ? c.wlo : sp.energies.front(),
                 std::isfinite(c.whi) ? c.whi : sp.energies.back()};
  need(c.tmax > 0 && c.tbins > 1, "--tmax and --tbins must be positive");
  std::vector<double> ts(c.tbins + 1);
  for (int i = 0; i <= c.tbins; ++i) ts[i] = c.tmax * i / c.tbins;
  auto C = time_spectrum(sp, w, ts);
  Table t{{"t", "re_C", "im_C", "abs_C"}, {{}, {}, {}, {}}};
  double mx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    t.columns[0].push_back(ts[i]);
    t.columns[1].push_back(C[i].real());
    t.columns[2].push_back(C[i].imag());
    t.columns[3].push_back(std::abs(C[i]));
    if (ts[i] > 2 * M_PI / w.width()) mx = std::max(mx, std::abs(C[i]));
  }
  auto peaks = find_peaks(ts, C, c.floor_rel * mx);
  Table pt{{"t", "height"}, {{}, {}}};
  for (const auto& p : peaks) {
    pt.columns[0].push_back(p.t);
    pt.columns[1].push_back(p.height);
  }
  std::vector<std::string> com{"N=" + std::to_string(N), "window=" + fmt(w.lo) + ":" + fmt(w.hi),
                               "resolution=" + fmt(2 * M_PI / w.width()), "model=" + m.hash()};
  write_csv(r.path("time_spectrum.csv"), r.sub, r.hash, com, t);
  write_csv(r.path("time_spectrum_peaks.csv"), r.sub, r.hash, com, pt);
  r.manifest({"time_spectrum.csv", "time_spectrum_peaks.csv"});
}

void cmd_compare(const Config& c, Run& r) {
  need(!c.a_path.empty() && !c.b_path.empty(), "--a and --b are required");
  Table a = read_csv(c.a_path), b = read_csv(c.b_path);
  const auto& Ea = a.column("E");
  const auto& Eb = b.column("E");
  need(Ea.size() == Eb.size() && Ea.size() > 1, "grids differ in size");
  for (std::size_t i = 0; i < Ea.size(); ++i)
    if (std::abs(Ea[i] - Eb[i]) > 1e-9 * std::max(1.0, std::abs(Ea[i])))
      throw Error("grid_mismatch", "energy grids differ at row " + std::to_string(i));
  const double w = Ea[1] - Ea[0];
  DensityGrid ga(Ea.front() - 0.5 * w, Ea.back() + 0.5 * w, static_cast<int>(Ea.size()));
  DensityGrid gb = ga;
  ga.values = a.column(c.col_a);
  gb.values = b.column(c.col_b);
  const double span = ga.e_max - ga.e_min;
  double lo = std::isfinite(c.lo) ? c.lo : ga.e_min + 0.1 * span;
  double hi = std::isfinite(c.hi) ? c.hi : ga.e_max - 0.1 * span;
  double d = windowed_relative_l2(ga, gb, lo, hi);
  json j{{"subcommand", r.sub}, {"config_hash", r.hash},
         {"a", c.a_path}, {"b", c.b_path}, {"col_a", c.col_a}, {"col_b", c.col_b},
         {"lo", lo},      {"hi", hi},      {"relative_l2", d}};
  write_text(r.path("compare.json"), j.dump(2) + "\n");
  std::cout << "relative_l2=" << fmt(d) << "\n";
  r.manifest({"compare.json"});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bhtrace: trace-formula tools for Bose-Hubbard lattices"};
  app.require_subcommand(1);
  Config c;

  std::map<CLI::App*, std::function<void(const Config&, Run&)>> handlers;
  auto sub = [&](const std::string& name, const std::string& help,
                 std::function<void(const Config&, Run&)> fn) {
    CLI::App* s = app.add_subcommand(name, help);
    handlers[s] = std::move(fn);
    opt(s, "out", c.out, "output directory");
    opt(s, "threads", c.threads, "worker threads (0: all cores)");
    return s;
  };
  auto model_N = [&](CLI::App* s) {
    opt(s, "model", c.model_path, "model JSON file");
    opt(s, "N", c.N, "particle number");
  };
  auto grid = [&](CLI::App* s) {
    opt(s, "emin", c.emin, "grid lower edge");
    opt(s, "emax", c.emax, "grid upper edge");
    opt(s, "bins", c.bins, "number of bins");
    opt(s, "sigma", c.sigma, "Gaussian smoothing width");
    opt(s, "sigma-rel", c.sigma_rel, "width as a fraction of span/dimension");
  };
  auto mc = [&](CLI::App* s) {
    opt(s, "samples", c.samples, "Monte Carlo samples");
    opt(s, "seed", c.seed, "random seed");
    flag(s, "literal-norm", c.literal_norm, "use the literal (4/pi)^L shell prefactor");
  };

  CLI::App* s = sub("basis", "sector dimension", cmd_basis);
  model_N(s);
  opt(s, "L", c.L, "number of sites (instead of --model)");

  s = sub("ed", "exact spectrum and smoothed DOS", cmd_ed);
  model_N(s);
  grid(s);

  s = sub("weyl", "Monte Carlo Weyl term", cmd_weyl);
  model_N(s);
  grid(s);
  mc(s);

  s = sub("evolve", "mean-field trajectory dump", cmd_evolve);
  model_N(s);
  opt(s, "psi0", c.psi0, "initial field: Re psi_1..L then Im psi_1..L")->delimiter(',');
  opt(s, "seed", c.seed, "seed for a random initial field on the shell");
  opt(s, "tmax", c.tmax, "final time");
  opt(s, "steps", c.steps, "number of output intervals");
  opt(s, "rtol", c.rtol, "relative tolerance");
  opt(s, "atol", c.atol, "absolute tolerance");

  s = sub("fixed-points", "relative equilibria on the shell", cmd_fixed_points);
  model_N(s);
  opt(s, "seeds", c.n_seeds, "number of random seeds");
  opt(s, "seed", c.seed, "random seed");

  s = sub("orbit-find", "orbit search and continuation", cmd_orbit_find);
  model_N(s);
  opt(s, "seeds", c.n_seeds, "random seeds for the fixed-point search");
  opt(s, "seed", c.seed, "random seed");
  opt(s, "amplitude", c.amplitude, "relative seed displacement from a fixed point");
  opt(s, "dE", c.dE, "continuation energy step");
  opt(s, "csteps", c.csteps, "continuation steps in each direction");
  opt(s, "kmax", c.kmax, "largest repetition (free field)");
  opt(s, "alpha", c.alpha, "phase for free-field orbits");
  opt(s, "tol", c.orbit_tol, "Newton tolerance");
  flag(s, "free", c.free_orbits, "enumerate analytic free-field orbits");

  s = sub("trace", "Weyl plus orbit-sum DOS from a library", cmd_trace);
  model_N(s);
  grid(s);
  mc(s);
  opt(s, "library", c.library, "orbit library JSON");

  s = sub("freefield-dos", "free-field trace formula", cmd_freefield_dos);
  model_N(s);
  grid(s);
  mc(s);
  opt(s, "kmax", c.kmax, "largest repetition (0: from the truncation rule)");
  opt(s, "nalpha", c.n_alpha, "alpha quadrature nodes");
  app.get_subcommand("freefield-dos")
      ->add_flag("--no-quad-check{false}", c.quad_check, "skip the node-doubling check")
      ->envname(upper_env("no-quad-check"));

  s = sub("freefield-check", "residue identity", cmd_freefield_check);
  model_N(s);
  opt(s, "E", c.E, "energy");
  opt(s, "alpha", c.alpha, "phase");
  opt(s, "sigma", c.sigma, "smoothing width");
  opt(s, "kmax", c.kmax, "pole range (default 200)");

  s = sub("time-spectrum", "windowed Fourier transform of the exact levels", cmd_time_spectrum);
  model_N(s);
  opt(s, "wlo", c.wlo, "window lower edge");
  opt(s, "whi", c.whi, "window upper edge");
  opt(s, "tmax", c.tmax, "largest time");
  opt(s, "tbins", c.tbins, "time samples");
  opt(s, "floor-rel", c.floor_rel, "peak floor relative to the largest |C|");

  s = sub("compare", "windowed relative L2 distance of two DOS files", cmd_compare);
  opt(s, "a", c.a_path, "first CSV");
  opt(s, "b", c.b_path, "second CSV");
  opt(s, "col-a", c.col_a, "column of the first file");
  opt(s, "col-b", c.col_b, "column of the second file");
  opt(s, "lo", c.lo, "window lower edge");
  opt(s, "hi", c.hi, "window upper edge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: usage: " << msg << "\n";
    return 2;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    Run run;
    run.sub = chosen->get_name();
    run.config = echo(chosen);
    run.hash = digest(config_string(run.sub, run.config));
    run.dir = c.out;
    fs::create_directories(run.dir);
    handlers.at(chosen)(c, run);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << e.code() << ": " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: internal: " << msg << "\n";
    return 1;
  }
  return 0;
}
