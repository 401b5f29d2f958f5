#include "bhtrace/semiclassics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bhtrace/parallel.hpp"
#include "orbit_detail.hpp"

namespace bhtrace {

using detail::kTwoPi;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct StreamSums {
  std::vector<double> s1, s2;
  double m1 = 0.0, m2 = 0.0;  // per-sample mass on the grid
};

}  // namespace

WeylEstimate weyl_dos(const BoseHubbardModel& model, int N, const DensityGrid& grid,
                      long long n_samples, double sigma, const WeylOptions& opts) {
  if (n_samples <= 0) throw Error("invalid_argument", "n_samples must be positive");
  if (!(sigma > 0.0)) throw Error("invalid_argument", "sigma must be positive");
  if (!(grid.e_max > grid.e_min) || grid.n_bins < 1)
    throw Error("invalid_grid", "grid must have e_max > e_min and at least one bin");
  if (N < 0) throw Error("invalid_argument", "N must be non-negative");
  const int L = model.L();
  const double R2 = N + 0.5 * L;
  const double R = std::sqrt(R2);
  const double w = grid.width();
  const double reach = 8.0 * sigma;

  std::vector<StreamSums> streams(kWeylStreams);
  parallel_for(kWeylStreams, opts.threads, [&](std::size_t s) {
    StreamSums& st = streams[s];
    st.s1.assign(grid.n_bins, 0.0);
    st.s2.assign(grid.n_bins, 0.0);
    const long long count = n_samples / kWeylStreams + (static_cast<long long>(s) < n_samples % kWeylStreams ? 1 : 0);
    std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(s + 1)));
    std::normal_distribution<double> normal(0.0, 1.0);
    cvec psi(L);
    for (long long i = 0; i < count; ++i) {
      for (int l = 0; l < L; ++l) {
        double re = normal(rng);
        double im = normal(rng);
        psi[l] = {re, im};
      }
      psi *= R / psi.norm();
      const double E = mf_hamiltonian(model, psi);
      int lo = std::max(0, static_cast<int>(std::floor((E - reach - grid.e_min) / w)));
      int hi = std::min(grid.n_bins - 1, static_cast<int>(std::ceil((E + reach - grid.e_min) / w)));
      double mass = 0.0;
      for (int b = lo; b <= hi; ++b) {
        double g = gaussian(grid.center(b) - E, sigma);
        st.s1[b] += g;
        st.s2[b] += g * g;
        mass += g * w;
      }
      st.m1 += mass;
      st.m2 += mass * mass;
    }
  });

  std::vector<double> s1(grid.n_bins, 0.0), s2(grid.n_bins, 0.0);
  double m1 = 0.0, m2 = 0.0;
  for (const auto& st : streams) {
    for (int b = 0; b < grid.n_bins; ++b) {
      s1[b] += st.s1[b];
      s2[b] += st.s2[b];
    }
    m1 += st.m1;
    m2 += st.m2;
  }

  double pref = std::pow(R2, L - 1) / std::tgamma(static_cast<double>(L));
  if (opts.normalization == WeylNormalization::Literal) pref *= std::pow(4.0, L);
  const double n = static_cast<double>(n_samples);
  auto se = [n](double a1, double a2) {
    if (n < 2) return 0.0;
    double mean = a1 / n;
    double var = std::max(0.0, (a2 / n - mean * mean) * n / (n - 1));
    return std::sqrt(var / n);
  };

  WeylEstimate out;
  out.grid = grid;
  out.grid.values.assign(grid.n_bins, 0.0);
  out.standard_error.assign(grid.n_bins, 0.0);
  out.n_samples = n_samples;
  for (int b = 0; b < grid.n_bins; ++b) {
    out.grid.values[b] = pref * s1[b] / n;
    out.standard_error[b] = pref * se(s1[b], s2[b]);
  }
  out.integral = pref * m1 / n;
  out.integral_se = pref * se(m1, m2);
  return out;
}

double trace_action(const PseudoPeriodicOrbit& o) { return o.action - o.alpha * o.n_gamma; }

OscillatoryResult oscillatory_dos(const std::vector<OrbitFamily>& families,
                                  const DensityGrid& grid, double sigma) {
  if (!(sigma > 0.0)) throw Error("invalid_argument", "sigma must be positive");
  OscillatoryResult res;
  res.grid = grid;
  res.grid.values.assign(grid.n_bins, 0.0);

  struct Node {
    double E, T, phi, amp;
  };
  for (const auto& fam : families) {
    std::vector<Node> nodes;
    for (const auto& o : fam.members) {
      double det = o.stability * o.stability;
      if (det < 1e-8) {
        ++res.excluded;
        continue;
      }
      ++res.used;
      double Tp = o.T_primitive > 0 ? o.T_primitive : o.T;
      nodes.push_back({o.energy, o.T, trace_action(o) - 0.5 * kPi * o.maslov,
                       Tp / (kPi * o.stability)});
    }
    if (nodes.empty()) continue;
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.E < b.E; });
    // Remove 2 pi ambiguities so that the phase is smooth along the family.
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      double pred = nodes[i - 1].phi + 0.5 * (nodes[i - 1].T + nodes[i].T) * (nodes[i].E - nodes[i - 1].E);
      nodes[i].phi += kTwoPi * std::round((pred - nodes[i].phi) / kTwoPi);
    }
    for (int b = 0; b < grid.n_bins; ++b) {
      const double E = grid.center(b);
      double phi, T, amp;
      if (nodes.size() == 1) {
        const Node& n0 = nodes[0];
        phi = n0.phi + n0.T * (E - n0.E);
        T = n0.T;
        amp = n0.amp;
      } else {
        if (E < nodes.front().E || E > nodes.back().E) continue;
        std::size_t i = 0;
        while (i + 2 < nodes.size() && E > nodes[i + 1].E) ++i;
        const Node& a = nodes[i];
        const Node& c = nodes[i + 1];
        const double h = c.E - a.E;
        const double s = h > 0 ? (E - a.E) / h : 0.0;
        const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
        const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
        phi = h00 * a.phi + h10 * h * a.T + h01 * c.phi + h11 * h * c.T;
        T = a.T + s * (c.T - a.T);
        amp = a.amp + s * (c.amp - a.amp);
      }
      res.grid.values[b] += amp * std::cos(phi) * std::exp(-0.5 * T * T * sigma * sigma);
    }
  }
  return res;
}

DensityGrid total_dos(const WeylEstimate& weyl, const DensityGrid& osc) {
  if (!weyl.grid.same_layout(osc))
    throw Error("grid_mismatch", "Weyl and oscillatory grids differ");
  DensityGrid t = osc;
  for (int b = 0; b < t.n_bins; ++b) t.values[b] = weyl.grid.values[b] + osc.values[b];
  return t;
}

double EnergyWindow::operator()(double E) const {
  if (E <= lo || E >= hi) return 0.0;
  double s = std::sin(kPi * (E - lo) / (hi - lo));
  return s * s;
}

std::vector<std::complex<double>> time_spectrum(const Spectrum& spectrum, const EnergyWindow& w,
                                                const std::vector<double>& t_grid) {
  if (!(w.hi > w.lo)) throw Error("invalid_window", "window has zero width");
  std::vector<std::pair<double, double>> lv;
  for (double E : spectrum.energies) {
    double x = w(E);
    if (x > 0) lv.push_back({E, x});
  }
  if (lv.empty()) throw Error("invalid_window", "no levels inside the window");
  std::vector<std::complex<double>> C(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    std::complex<double> s = 0.0;
    for (const auto& [E, x] : lv) s += x * std::polar(1.0, E * t_grid[i]);
    C[i] = s;
  }
  return C;
}

std::vector<Peak> find_peaks(const std::vector<double>& t, const std::vector<std::complex<double>>& C,
                             double floor) {
  std::vector<Peak> out;
  const std::size_t n = C.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double a = std::abs(C[i - 1]), b = std::abs(C[i]), c = std::abs(C[i + 1]);
    if (!(b > a && b >= c && b > floor)) continue;
    double den = a - 2 * b + c;
    double off = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
    double h = t[i + 1] - t[i];
    out.push_back({t[i] + off * h, b - 0.25 * (a - c) * off});
  }
  return out;
}

}  // namespace bhtrace
