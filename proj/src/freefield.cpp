#include "bhtrace/freefield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "bhtrace/parallel.hpp"
#include "orbit_detail.hpp"

namespace bhtrace {

using detail::kTwoPi;
using cd = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void scan_commensurability(FreeFieldData& d, double tol, int max_pq) {
  const int L = d.L();
  for (int a = 0; a < L; ++a)
    for (int b = a + 1; b < L; ++b) {
      if (d.e[b] == 0.0) {
        if (d.e[a] == 0.0) d.commensurable.push_back({a, b, 1, 1});
        continue;
      }
      const double r = d.e[a] / d.e[b];
      for (long q = 1; q <= max_pq; ++q) {
        long p = std::lround(r * q);
        if (std::labs(p) > max_pq) continue;
        if (std::abs(r - double(p) / q) < tol) {
          d.commensurable.push_back({a, b, p, q});
          break;
        }
      }
    }
}

void require_positive(const FreeFieldData& d) {
  for (int i = 0; i < d.L(); ++i)
    if (!(d.e[i] > 0.0))
      throw Error("invalid_argument",
                  "single-particle energies must be positive (got " + std::to_string(d.e[i]) + ")");
}

int floor_sum(const FreeFieldData& d, int chi, int k, double alpha) {
  const double a = alpha / kTwoPi;
  int s = 0;
  for (int c = 0; c < d.L(); ++c) {
    if (c == chi) continue;
    s += static_cast<int>(std::floor((k + a) * d.e[c] / d.e[chi] - a));
  }
  return s;
}

}  // namespace

FreeFieldData free_field_data(const rvec& e, double tol, int max_pq) {
  FreeFieldData d;
  std::vector<double> v(e.data(), e.data() + e.size());
  std::sort(v.begin(), v.end());
  d.e = Eigen::Map<rvec>(v.data(), v.size());
  d.V = cmat::Zero(e.size(), e.size());
  // Columns follow the sorted order.
  std::vector<int> idx(e.size());
  for (int i = 0; i < e.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return e[x] < e[y]; });
  for (int i = 0; i < e.size(); ++i) d.V(idx[i], i) = 1.0;
  scan_commensurability(d, tol, max_pq);
  return d;
}

FreeFieldData free_field_data(const BoseHubbardModel& model, double tol, int max_pq) {
  Eigen::SelfAdjointEigenSolver<cmat> es(model.H());
  FreeFieldData d;
  d.e = es.eigenvalues();
  d.V = es.eigenvectors();
  scan_commensurability(d, tol, max_pq);
  return d;
}

BoseHubbardModel diagonal_model(const rvec& e, std::string label) {
  cmat H = cmat::Zero(e.size(), e.size());
  for (int i = 0; i < e.size(); ++i) H(i, i) = e[i];
  return BoseHubbardModel(H, {}, std::move(label));
}

StabilityFactor stability_factor(const FreeFieldData& d, int chi, int k, double alpha) {
  StabilityFactor s;
  s.value = 1.0;
  for (int c = 0; c < d.L(); ++c) {
    if (c == chi) continue;
    double th = (alpha + kTwoPi * k) * d.e[c] / d.e[chi] - alpha;
    s.angles.push_back(th);
    double f = 2.0 * std::abs(std::sin(0.5 * th));
    if (f < 1e-12) s.resonant = true;
    s.value *= f;
  }
  return s;
}

int maslov_free(const FreeFieldData& d, int chi, int k, double alpha) {
  return 2 * k + 2 * floor_sum(d, chi, k, alpha) + (d.L() - 1);
}

int maslov_free_unit_constant(const FreeFieldData& d, int chi, int k, double alpha) {
  return 2 * k + 2 * floor_sum(d, chi, k, alpha) + 1;
}

std::vector<PseudoPeriodicOrbit> enumerate_orbits(const FreeFieldData& d, int N, int k_max,
                                                  double alpha, bool force) {
  if (!d.commensurable.empty() && !force)
    throw Error("commensurable",
                "single-particle energies are commensurable; orbits form continuous families");
  const int L = d.L();
  const double R2 = N + 0.5 * L;
  const double esum = d.e.sum();
  std::vector<PseudoPeriodicOrbit> out;
  for (int chi = 0; chi < L; ++chi)
    for (int k = 1; k <= k_max; ++k) {
      const double a = alpha + kTwoPi * k;
      const double T = a / d.e[chi];
      if (!(T > 0.0)) continue;
      PseudoPeriodicOrbit o;
      o.psi0 = std::sqrt(R2) * d.V.col(chi);
      o.T = T;
      o.alpha = wrap_phase(alpha);
      o.energy = d.e[chi] * R2 - 0.5 * esum;
      o.n_gamma = R2;
      o.repetition = k;
      o.T_primitive = kTwoPi / std::abs(d.e[chi]);
      o.alpha_primitive = 0.0;
      o.action = a * R2;
      o.windings.assign(L, k);
      StabilityFactor sf = stability_factor(d, chi, k, alpha);
      const int m = L - 1;
      cmat rot = cmat::Zero(m, m);
      for (int j = 0; j < m; ++j) rot(j, j) = std::polar(1.0, -sf.angles[j]);
      o.monodromy_reduced = detail::realify_matrix(rot);
      o.stability = sf.value;
      o.maslov = maslov_free(d, chi, k, alpha);
      o.residual = 0.0;
      o.degenerate = true;
      o.flags.push_back("degenerate_gauge_flow");
      if (sf.resonant) o.flags.push_back("resonant");
      if (std::abs(alpha) > 1e-12) o.flags.push_back("partial_cycle");
      out.push_back(std::move(o));
    }
  return out;
}

FreeDosResult freefield_osc_dos(const FreeFieldData& d, int N, const DensityGrid& grid,
                                double sigma, const FreeDosOptions& opts) {
  require_positive(d);
  if (!d.commensurable.empty())
    throw Error("commensurable", "free-field trace requires incommensurable energies");
  if (!(sigma > 0.0)) throw Error("invalid_argument", "sigma must be positive");
  if (opts.n_alpha < 64) throw Error("invalid_argument", "n_alpha must be at least 64");
  const int L = d.L();
  const double shift = 0.5 * d.e.sum();
  const double nl = N + 0.5 * L;
  const double t_max = std::sqrt(2.0 * std::log(1.0 / opts.truncation)) / sigma;
  const double h = kTwoPi / opts.n_alpha;

  FreeDosResult res;
  res.grid = grid;
  res.grid.values.assign(grid.n_bins, 0.0);

  // Midpoint nodes in alpha, nudged away from vanishing denominators.
  std::vector<double> nodes(opts.n_alpha);
  for (int j = 0; j < opts.n_alpha; ++j) nodes[j] = (j + 0.5) * h;

  struct Term {
    cd c;     // value at the first bin centre
    cd step;  // phase advance per bin
  };
  std::vector<Term> terms;
  int kmax_used = 0;
  for (int chi = 0; chi < L; ++chi) {
    int kmax = opts.k_max > 0 ? opts.k_max
                              : static_cast<int>(std::ceil(t_max * d.e[chi] / kTwoPi));
    kmax_used = std::max(kmax_used, kmax);
    for (int k = 1; k <= kmax; ++k)
      for (int j = 0; j < opts.n_alpha; ++j) {
        double alpha = nodes[j];
        StabilityFactor sf = stability_factor(d, chi, k, alpha);
        if (sf.value < opts.alpha_node_guard) {
          alpha += 1e-3 * h;
          sf = stability_factor(d, chi, k, alpha);
          ++res.shifted_nodes;
        }
        const double tau = (alpha + kTwoPi * k) / d.e[chi];
        if (opts.k_max == 0 && tau > t_max) continue;
        const double damp = std::exp(-0.5 * tau * tau * sigma * sigma);
        const int mas = maslov_free(d, chi, k, alpha);
        const double phase =
            tau * (grid.center(0) + shift) - alpha * nl - 0.5 * kPi * mas;
        const double amp = h / kPi * damp / (d.e[chi] * sf.value);
        terms.push_back({std::polar(amp, phase), std::polar(1.0, tau * grid.width())});
      }
  }
  res.k_max = kmax_used;

  // Fixed-size bin chunks keep the summation order independent of threads.
  const int chunk = 64;
  const int n_chunks = (grid.n_bins + chunk - 1) / chunk;
  parallel_for(n_chunks, opts.threads, [&](std::size_t ci) {
    const int lo = static_cast<int>(ci) * chunk;
    const int hi = std::min(grid.n_bins, lo + chunk);
    std::vector<double> acc(hi - lo, 0.0);
    for (const Term& t : terms) {
      cd z = t.c * std::pow(t.step, lo);
      for (int i = lo; i < hi; ++i) {
        acc[i - lo] += z.real();
        z *= t.step;
      }
    }
    for (int i = lo; i < hi; ++i) res.grid.values[i] = acc[i - lo];
  });
  if (opts.check_quadrature) {
    FreeDosOptions fine = opts;
    fine.n_alpha = 2 * opts.n_alpha;
    fine.check_quadrature = false;
    FreeDosResult r2 = freefield_osc_dos(d, N, grid, sigma, fine);
    double diff = 0.0, scale = 0.0;
    for (int i = 0; i < grid.n_bins; ++i) {
      diff = std::max(diff, std::abs(r2.grid.values[i] - res.grid.values[i]));
      scale = std::max(scale, std::abs(r2.grid.values[i]));
    }
    res.quadrature_discrepancy = scale > 0 ? diff / scale : diff;
    if (res.quadrature_discrepancy > 1e-4)
      throw Error("quadrature", "alpha quadrature not converged: node-doubling discrepancy " +
                                    std::to_string(res.quadrature_discrepancy));
  }
  return res;
}

Spectrum ebk_levels(const FreeFieldData& d, int N) {
  FockBasis b = build_basis(d.L(), N, kDefaultBasisCap);
  Spectrum s;
  s.N = N;
  s.energies.reserve(b.size());
  for (const auto& n : b.states()) {
    double E = 0.0;
    for (int c = 0; c < d.L(); ++c) E += n[c] * d.e[c];
    s.energies.push_back(E);
  }
  std::sort(s.energies.begin(), s.energies.end());
  return s;
}

bool alpha_is_resonant(const FreeFieldData& d, double alpha, int k_max, double tol) {
  for (int chi = 0; chi < d.L(); ++chi)
    for (int k = -k_max; k <= k_max; ++k) {
      const double t = (kTwoPi * k - alpha) / d.e[chi];
      for (int c = 0; c < d.L(); ++c) {
        if (c == chi) continue;
        if (std::abs(1.0 - std::polar(1.0, alpha + d.e[c] * t)) < tol) return true;
      }
    }
  return false;
}

ResidueCheck residue_identity_check(const FreeFieldData& d, int N, double E, double alpha,
                                    double sigma, int k_max) {
  require_positive(d);
  if (!(sigma > 0.0)) throw Error("invalid_argument", "sigma must be positive");
  const int L = d.L();
  ResidueCheck r;
  r.N = N;
  r.E = E;
  r.alpha = alpha;
  r.sigma = sigma;
  r.k_max = k_max;

  // Occupation sum; levels above E + 40 sigma contribute below 1e-300.
  const double e_top = E + 40.0 * sigma;
  cd lhs = 0.0;
  int n_cap = 0;
  std::vector<int> n(L, 0);
  std::function<void(int, double, int)> rec = [&](int c, double e_acc, int tot) {
    if (c == L) {
      lhs += gaussian(E - e_acc, sigma) * std::polar(1.0, alpha * tot);
      return;
    }
    for (int m = 0; e_acc + m * d.e[c] <= e_top; ++m) {
      n_cap = std::max(n_cap, m);
      rec(c + 1, e_acc + m * d.e[c], tot + m);
    }
  };
  rec(0, 0.0, 0);
  r.lhs = lhs;
  r.n_cap = n_cap;

  // Pole sum, poles at t = (2 pi k - alpha)/e_chi.
  auto term = [&](int chi, int k, double a) -> cd {
    const double t = (kTwoPi * k - a) / d.e[chi];
    cd v = std::polar(std::exp(-0.5 * t * t * sigma * sigma) / d.e[chi], -E * t);
    for (int c = 0; c < L; ++c) {
      if (c == chi) continue;
      cd den = 1.0 - std::polar(1.0, a + d.e[c] * t);
      if (std::abs(den) < 1e-9)
        throw Error("resonant_alpha", "alpha is on a resonance of the pole sum");
      v /= den;
    }
    return v;
  };
  const bool at_zero = std::abs(std::remainder(alpha, kTwoPi)) < 1e-9;
  cd rhs = 0.0;
  for (int chi = 0; chi < L; ++chi)
    for (int k = -k_max; k <= k_max; ++k) {
      if (at_zero && k == 0) continue;
      rhs += term(chi, k, at_zero ? 0.0 : alpha);
    }
  if (at_zero) {
    // The k = 0 poles coalesce; take the limit by symmetric Richardson.
    auto group = [&](double a) {
      cd s = 0.0;
      for (int chi = 0; chi < L; ++chi) s += term(chi, 0, a);
      return s;
    };
    const double delta = 1e-2;
    cd g1 = 0.5 * (group(delta) + group(-delta));
    cd g2 = 0.5 * (group(0.5 * delta) + group(-0.5 * delta));
    rhs += (4.0 * g2 - g1) / 3.0;
  }
  r.rhs = rhs;
  r.gap = std::abs(lhs - rhs);
  return r;
}

}  // namespace bhtrace
