#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "bhtrace/freefield.hpp"
#include "bhtrace/semiclassics.hpp"

using namespace bhtrace;

namespace {

const double kSqrt2 = std::sqrt(2.0);

double mean_se(const WeylEstimate& w) {
  double s = 0;
  int n = 0;
  for (double x : w.standard_error)
    if (x > 0) {
      s += x;
      ++n;
    }
  return s / n;
}

PseudoPeriodicOrbit fake_orbit(double E, double T, double S, double stab, int maslov) {
  PseudoPeriodicOrbit o;
  o.energy = E;
  o.T = T;
  o.T_primitive = T;
  o.action = S;
  o.stability = stab;
  o.maslov = maslov;
  return o;
}

}  // namespace

TEST_CASE("Weyl term of a single mode is a unit peak at eN") {
  cmat H(1, 1);
  H << 1.3;
  BoseHubbardModel m(H, {});
  DensityGrid g(0.0, 20.0, 2000);
  auto w = weyl_dos(m, 7, g, 10000, 0.1);
  CHECK(std::abs(w.integral - 1.0) < 1e-9);
  CHECK(w.integral_se < 1e-9);
  double mean = 0;
  for (int b = 0; b < g.n_bins; ++b) mean += g.center(b) * w.grid.values[b] * g.width();
  CHECK(std::abs(mean - 1.3 * 7) < 1e-6);
}

TEST_CASE("Weyl sum rule and normalization options") {
  cmat A = cmat::Random(3, 3);
  BoseHubbardModel m(0.5 * (A + A.adjoint()), {{0, 0, 0, 0, 0.1}});
  DensityGrid g(-200.0, 200.0, 800);
  WeylOptions o;
  o.seed = 3;
  auto w = weyl_dos(m, 20, g, 200000, 1.0, o);
  CHECK(std::abs(w.integral - 231.125) < 3.0 * w.integral_se + 1e-9);
  o.normalization = WeylNormalization::Literal;
  auto wl = weyl_dos(m, 20, g, 200000, 1.0, o);
  CHECK(std::abs(wl.integral - 64.0 * w.integral) < 1e-9 * wl.integral);
}

TEST_CASE("Weyl standard error scales with the sample count") {
  cmat A = cmat::Random(2, 2);
  BoseHubbardModel m(0.5 * (A + A.adjoint()), {});
  DensityGrid g(-20.0, 20.0, 200);
  WeylOptions o;
  o.seed = 9;
  double r = mean_se(weyl_dos(m, 5, g, 40000, 0.5, o)) / mean_se(weyl_dos(m, 5, g, 80000, 0.5, o));
  CHECK(r > std::sqrt(2.0) * 0.8);
  CHECK(r < std::sqrt(2.0) * 1.2);
}

TEST_CASE("Weyl estimate is independent of the thread count") {
  cmat A = cmat::Random(3, 3);
  BoseHubbardModel m(0.5 * (A + A.adjoint()), {{0, 1, 1, 0, 0.2}});
  DensityGrid g(-30.0, 30.0, 300);
  WeylOptions a, b;
  a.threads = 1;
  b.threads = 3;
  auto wa = weyl_dos(m, 6, g, 5000, 0.5, a), wb = weyl_dos(m, 6, g, 5000, 0.5, b);
  CHECK(wa.grid.values == wb.grid.values);
  CHECK(wa.standard_error == wb.standard_error);
}

TEST_CASE("free-field Weyl support") {
  auto m = diagonal_model((rvec(2) << 1.0, kSqrt2).finished());
  const int N = 5;
  const double lo = 1.0 * (N + 1) - 0.5 * (1 + kSqrt2);
  const double hi = kSqrt2 * (N + 1) - 0.5 * (1 + kSqrt2);
  DensityGrid g(lo - 2.0, hi + 2.0, 400);
  auto w = weyl_dos(m, N, g, 20000, 0.01);
  for (int b = 0; b < g.n_bins; ++b) {
    double E = g.center(b);
    if (E < lo - 0.1 || E > hi + 0.1) CHECK(w.grid.values[b] == 0.0);
  }
  // Flat in the interior: mass N + 1 spread over (e2 - e1)(N + 1).
  CHECK(std::abs(w.grid.values[200] - 1.0 / (kSqrt2 - 1.0)) < 0.05 / (kSqrt2 - 1.0));
}

TEST_CASE("oscillatory sum") {
  DensityGrid g(0.0, 10.0, 1000);
  auto empty = oscillatory_dos({}, g, 0.1);
  for (double v : empty.grid.values) CHECK(v == 0.0);

  // Single orbit: A cos(S + T (E - E0) - pi mu/2) exp(-(T sigma)^2/2).
  const double T = 2.0, S = 1.0, st = 1.5, sig = 0.1;
  OrbitFamily f{{fake_orbit(5.0, T, S, st, 1)}};
  auto r = oscillatory_dos({f}, g, sig);
  CHECK(r.used == 1);
  double err = 0;
  for (int b = 0; b < g.n_bins; ++b) {
    double E = g.center(b);
    double want = T / (M_PI * st) * std::cos(S + T * (E - 5.0) - M_PI / 2) * std::exp(-0.5 * T * T * sig * sig);
    err = std::max(err, std::abs(r.grid.values[b] - want));
  }
  CHECK(err < 1e-12);

  // Shifting S by 2 pi changes nothing.
  OrbitFamily f2{{fake_orbit(5.0, T, S + 2 * M_PI, st, 1)}};
  auto r2 = oscillatory_dos({f2}, g, sig);
  for (int b = 0; b < g.n_bins; ++b) CHECK(std::abs(r2.grid.values[b] - r.grid.values[b]) < 1e-12);

  // Marginal orbit is excluded.
  OrbitFamily bad{{fake_orbit(5.0, T, S, 1e-5, 0)}};
  auto rb = oscillatory_dos({bad}, g, sig);
  CHECK(rb.excluded == 1);
  CHECK(rb.used == 0);
}

TEST_CASE("two-orbit beating") {
  DensityGrid g(0.0, 40.0, 4000);
  const double T1 = 3.0, T2 = 3.5;
  OrbitFamily a{{fake_orbit(0.0, T1, 0.0, 1.0, 0)}}, b{{fake_orbit(0.0, T2, 0.0, 1.0, 0)}};
  auto r = oscillatory_dos({a, b}, g, 1e-3);
  // Direct evaluation of the two cosines.
  double err = 0;
  for (int i = 0; i < g.n_bins; ++i) {
    double E = g.center(i);
    double want = T1 / M_PI * std::cos(T1 * E) * std::exp(-0.5 * T1 * T1 * 1e-6) +
                  T2 / M_PI * std::cos(T2 * E) * std::exp(-0.5 * T2 * T2 * 1e-6);
    err = std::max(err, std::abs(r.grid.values[i] - want));
  }
  CHECK(err < 1e-12);
  // Envelope nodes are spaced by 2 pi/(T2 - T1).
  std::vector<double> nodes;
  for (int i = 1; i + 1 < g.n_bins; ++i) {
    double E = g.center(i);
    double env = std::abs(std::cos(0.5 * (T2 - T1) * E));
    double envp = std::abs(std::cos(0.5 * (T2 - T1) * g.center(i - 1)));
    double envn = std::abs(std::cos(0.5 * (T2 - T1) * g.center(i + 1)));
    if (env < envp && env < envn) nodes.push_back(E);
  }
  REQUIRE(nodes.size() >= 2);
  CHECK(std::abs(nodes[1] - nodes[0] - 2 * M_PI / (T2 - T1)) < 2 * g.width());
}

TEST_CASE("family interpolation uses dS/dE = T") {
  // S(E) = 2E + 0.1 E^2 so T(E) = 2 + 0.2E; nodes at E = 1 and 3.
  auto node = [](double E) { return fake_orbit(E, 2 + 0.2 * E, 2 * E + 0.1 * E * E, 1.0, 0); };
  OrbitFamily f{{node(1.0), node(3.0)}};
  DensityGrid g(0.0, 4.0, 400);
  auto r = oscillatory_dos({f}, g, 1e-4);
  for (int b = 0; b < g.n_bins; ++b) {
    double E = g.center(b);
    if (E < 1.0 || E > 3.0) {
      CHECK(r.grid.values[b] == 0.0);
      continue;
    }
    double T = 2 + 0.2 * E;
    double want = T / M_PI * std::cos(2 * E + 0.1 * E * E) * std::exp(-0.5 * T * T * 1e-8);
    CHECK(std::abs(r.grid.values[b] - want) < 1e-9);
  }
}

TEST_CASE("total DOS") {
  cmat H(1, 1);
  H << 1.0;
  BoseHubbardModel m(H, {});
  DensityGrid g(0.0, 10.0, 100);
  auto w = weyl_dos(m, 3, g, 10000, 0.3);
  auto t = total_dos(w, oscillatory_dos({}, g, 0.3).grid);
  CHECK(t.values == w.grid.values);
  CHECK_THROWS_AS(total_dos(w, DensityGrid(0.0, 10.0, 101)), Error);
}

TEST_CASE("time spectrum") {
  // All sectors of the free dimer: levels a + b sqrt 2.
  auto d = free_field_data((rvec(2) << 1.0, kSqrt2).finished());
  Spectrum sp;
  for (int N = 0; N <= 60; ++N) {
    auto s = ebk_levels(d, N);
    sp.energies.insert(sp.energies.end(), s.energies.begin(), s.energies.end());
  }
  std::sort(sp.energies.begin(), sp.energies.end());
  EnergyWindow w{30.0, 40.0};
  std::vector<double> ts;
  for (int i = 0; i <= 2000; ++i) ts.push_back(10.0 * i / 2000);
  auto C = time_spectrum(sp, w, ts);
  // Oracle: direct sum over levels.
  std::complex<double> c5 = 0;
  for (double E : sp.energies) c5 += w(E) * std::polar(1.0, E * ts[1000]);
  CHECK(std::abs(C[1000] - c5) < 1e-9);

  const double dt = 2 * M_PI / w.width();
  double mx = 0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] > 2 * dt) mx = std::max(mx, std::abs(C[i]));
  auto peaks = find_peaks(ts, C, 0.3 * mx);
  auto near = [&](double t) {
    for (const auto& p : peaks)
      if (std::abs(p.t - t) < dt) return true;
    return false;
  };
  CHECK(near(2 * M_PI));
  CHECK(near(2 * M_PI / kSqrt2));
  CHECK(near(4 * M_PI / kSqrt2));

  // Uniform shift leaves |C| unchanged.
  Spectrum shifted = sp;
  for (double& E : shifted.energies) E += 3.0;
  auto Cs = time_spectrum(shifted, EnergyWindow{33.0, 43.0}, ts);
  REQUIRE(Cs.size() == C.size());
  for (std::size_t i = 0; i < ts.size(); i += 97) CHECK(std::abs(std::abs(Cs[i]) - std::abs(C[i])) < 1e-9);

  Spectrum one{0, {1.0}};
  auto C1 = time_spectrum(one, EnergyWindow{0.0, 2.0}, ts);
  for (const auto& c : C1) CHECK(std::abs(std::abs(c) - 1.0) < 1e-14);
  CHECK_THROWS_AS(time_spectrum(one, EnergyWindow{1.0, 1.0}, ts), Error);
  CHECK_THROWS_AS(time_spectrum(one, EnergyWindow{5.0, 6.0}, ts), Error);
}
