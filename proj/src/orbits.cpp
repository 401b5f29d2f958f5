#include "bhtrace/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <boost/math/tools/toms748_solve.hpp>

#include "orbit_detail.hpp"

namespace bhtrace {

using detail::kTwoPi;

namespace {

constexpr std::complex<double> I1{0.0, 1.0};

// Returns the trajectory state closest (after phase alignment) to target in
// [t_lo, t_hi], starting from psi_lo = psi(t_lo). Uses the root of
// d/dt (distance^2 / 2) when it brackets, otherwise the better endpoint.
struct ClosestPoint {
  double t;
  double d;
  cvec psi;
};

cvec aligned(const cvec& target, const cvec& psi) {
  std::complex<double> ov = target.dot(psi);
  if (std::abs(ov) == 0.0) return target;
  return target * (ov / std::abs(ov));
}

double distance_slope(const BoseHubbardModel& model, const cvec& psi, const cvec& target) {
  return (psi - aligned(target, psi)).dot(eom_rhs(model, psi)).real();
}

ClosestPoint closest_point(const BoseHubbardModel& model, const cvec& psi_lo, double t_lo,
                           double t_hi, const cvec& target, const IntegratorOptions& integ) {
  auto state_at = [&](double t) { return integrate(model, psi_lo, t - t_lo, integ).psi; };
  auto slope = [&](double t) { return distance_slope(model, state_at(t), target); };
  double g_lo = distance_slope(model, psi_lo, target);
  cvec psi_hi = state_at(t_hi);
  double g_hi = distance_slope(model, psi_hi, target);
  if (g_lo < 0.0 && g_hi > 0.0) {
    boost::uintmax_t it = 100;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
    auto r = boost::math::tools::toms748_solve(slope, t_lo, t_hi, g_lo, g_hi, tol, it);
    double t = 0.5 * (r.first + r.second);
    cvec psi = state_at(t);
    return {t, phase_aligned_distance(psi, target), psi};
  }
  double d_lo = phase_aligned_distance(psi_lo, target);
  double d_hi = phase_aligned_distance(psi_hi, target);
  if (d_lo <= d_hi) return {t_lo, d_lo, psi_lo};
  return {t_hi, d_hi, psi_hi};
}

double recurrence_tol(const cvec& psi0) { return 1e-8 * std::max(1.0, psi0.norm()); }

// Uniform grid t_j = j T / M, j = 0..M.
std::vector<double> uniform_times(double T, int M) {
  std::vector<double> t(M + 1);
  for (int j = 0; j <= M; ++j) t[j] = T * j / M;
  t[M] = T;
  return t;
}

double simpson(const std::vector<double>& f, double h) {
  const int M = static_cast<int>(f.size()) - 1;  // even
  double s = f.front() + f.back();
  for (int j = 1; j < M; ++j) s += (j % 2 ? 4.0 : 2.0) * f[j];
  return s * h / 3.0;
}

double wrap_pi(double a) {
  a = std::remainder(a, kTwoPi);
  return a;
}

}  // namespace

namespace detail {

cmat transverse_complex_basis(const BoseHubbardModel& model, const cvec& psi, bool& degenerate) {
  const int L = model.L();
  const double nrm = psi.norm();
  if (nrm == 0.0) throw Error("invalid_argument", "zero field has no transverse space");
  cvec v1 = psi / nrm;
  cvec f = eom_rhs(model, psi);
  cvec fp = f - v1 * v1.dot(f);
  const double fn = f.norm();
  degenerate = !(fn > 0.0) || fp.norm() < 1e-7 * fn;
  const int cols = degenerate ? 1 : 2;
  cmat B(L, cols);
  B.col(0) = v1;
  if (!degenerate) B.col(1) = fp / fp.norm();
  if (L <= cols) return cmat(L, 0);
  Eigen::HouseholderQR<cmat> qr(B);
  cmat Q = qr.householderQ() * cmat::Identity(L, L);
  return Q.rightCols(L - cols);
}

rmat realify_basis(const cmat& U) {
  const int L = static_cast<int>(U.rows());
  const int m = static_cast<int>(U.cols());
  rmat P(2 * L, 2 * m);
  for (int j = 0; j < m; ++j) {
    P.col(j) = to_real(U.col(j));
    P.col(m + j) = to_real(cvec(I1 * U.col(j)));
  }
  return P;
}

rmat realify_matrix(const cmat& G) {
  const int m = static_cast<int>(G.rows());
  rmat R(2 * m, 2 * m);
  R << G.real(), -G.imag(), G.imag(), G.real();
  return R;
}

int sample_count(double T, const OrbitOptions& opts) {
  int M = std::max(opts.min_samples, static_cast<int>(std::ceil(opts.samples_per_time * T)));
  if (M % 2) ++M;
  return M;
}

rmat lower_left(const rmat& M) {
  const int m = static_cast<int>(M.rows()) / 2;
  return M.block(m, 0, m, m);
}

int signature(const rmat& S, double tol, bool& ok) {
  if (S.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<rmat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  int sig = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double l = es.eigenvalues()[i];
    if (std::abs(l) < tol) ok = false;
    sig += l > 0 ? 1 : -1;
  }
  return sig;
}

}  // namespace detail

double wrap_phase(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

rvec pseudo_residual(const BoseHubbardModel& model, const cvec& psi0, double T, double alpha,
                     const IntegratorOptions& opts) {
  if (!(T >= 0.0)) throw Error("invalid_argument", "pseudo-period must be non-negative");
  cvec end = T == 0.0 ? psi0 : integrate(model, psi0, T, opts).psi;
  return to_real(cvec(end - psi0 * std::polar(1.0, -alpha)));
}

OrbitSolve find_orbit(const BoseHubbardModel& model, const cvec& psi_seed, double T,
                      double alpha, const OrbitConstraints& cons, const OrbitOptions& opts) {
  const int L = model.L();
  const int n = 2 * L;
  if (psi_seed.size() != L) throw Error("index_mismatch", "seed length differs from L");
  if (!(T > 0.0)) throw Error("invalid_argument", "seed period must be positive");
  if (!(cons.n_target > 0.0)) throw Error("invalid_argument", "N_target must be positive");
  const bool free_alpha = !cons.alpha.has_value();
  if (!free_alpha) alpha = *cons.alpha;

  rvec x = to_real(psi_seed);
  const double n0 = x.squaredNorm();
  if (!(n0 > 0.0)) throw Error("invalid_argument", "seed field is zero");
  x *= std::sqrt(cons.n_target / n0);

  const rvec xref = x;
  rvec fref = to_real(eom_rhs(model, to_complex(x)));
  rvec gref = to_real(cvec(I1 * to_complex(x)));
  if (fref.norm() > 0) fref /= fref.norm();
  gref /= gref.norm();

  const int rows = n + 1 + (cons.energy ? 1 : 0) + 2;
  const int cols = n + 1 + (free_alpha ? 1 : 0);

  struct Eval {
    rvec F;
    double res = 0, viol = 0;
    rmat Jac;
  };
  auto evaluate = [&](const rvec& xx, double TT, double aa, bool jac) {
    Eval ev;
    ev.F.resize(rows);
    cvec psi0 = to_complex(xx);
    cvec rot = psi0 * std::polar(1.0, -aa);
    cvec end;
    rmat Jt;
    if (jac) {
      TangentResult tr = integrate_with_tangent(model, psi0, TT, opts.integ);
      end = tr.psi;
      Jt = tr.J;
    } else {
      end = integrate(model, psi0, TT, opts.integ).psi;
    }
    rvec F1 = to_real(cvec(end - rot));
    ev.F.head(n) = F1;
    int r = n;
    double dN = xx.squaredNorm() - cons.n_target;
    ev.F[r++] = dN;
    double dE = 0.0;
    if (cons.energy) {
      dE = mf_hamiltonian(model, psi0) - *cons.energy;
      ev.F[r++] = dE;
    }
    ev.F[r++] = fref.dot(xx - xref);
    ev.F[r++] = gref.dot(xx - xref);
    ev.res = F1.norm();
    ev.viol = std::max(std::abs(dN), std::abs(dE));
    if (jac) {
      ev.Jac = rmat::Zero(rows, cols);
      ev.Jac.topLeftCorner(n, n) = Jt - phase_rotation(L, -aa);
      ev.Jac.block(0, n, n, 1) = to_real(eom_rhs(model, end));
      if (free_alpha) ev.Jac.block(0, n + 1, n, 1) = to_real(cvec(I1 * rot));
      r = n;
      ev.Jac.block(r++, 0, 1, n) = 2.0 * xx.transpose();
      if (cons.energy) ev.Jac.block(r++, 0, 1, n) = energy_gradient(model, psi0).transpose();
      ev.Jac.block(r++, 0, 1, n) = fref.transpose();
      ev.Jac.block(r++, 0, 1, n) = gref.transpose();
    }
    return ev;
  };

  OrbitSolve out;
  Eval ev = evaluate(x, T, alpha, true);
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (ev.res < opts.tol && ev.viol < opts.tol) {
      out.converged = true;
      break;
    }
    Eigen::CompleteOrthogonalDecomposition<rmat> cod(ev.Jac);
    cod.setThreshold(1e-12);
    rvec step = cod.solve(rvec(-ev.F));
    double lambda = 1.0;
    // Keep the period positive.
    while (T + lambda * step[n] <= 0.2 * T) lambda *= 0.5;
    const double merit0 = ev.F.squaredNorm();
    bool accepted = false;
    for (int ls = 0; ls < 8; ++ls, lambda *= 0.5) {
      rvec xn = x + lambda * step.head(n);
      double Tn = T + lambda * step[n];
      double an = free_alpha ? alpha + lambda * step[n + 1] : alpha;
      Eval trial;
      try {
        trial = evaluate(xn, Tn, an, false);
      } catch (const Error&) {
        continue;
      }
      if (trial.F.squaredNorm() < merit0 || ls == 7) {
        x = xn;
        T = Tn;
        alpha = an;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.diagnosis = "line search failed";
      break;
    }
    if (T < 1e-8) {
      out.diagnosis = "zero-length orbit rejected";
      break;
    }
    ev = evaluate(x, T, alpha, true);
  }
  out.iterations = it;
  out.residual = ev.res;
  out.constraint_violation = ev.viol;
  if (!out.converged && out.diagnosis.empty())
    out.diagnosis = "no convergence after " + std::to_string(it) + " iterations (residual " +
                    std::to_string(ev.res) + ")";
  if (out.converged && (T < 1e-8 || x.squaredNorm() < 1e-12)) {
    out.converged = false;
    out.diagnosis = "zero-length orbit rejected";
  }

  PseudoPeriodicOrbit& o = out.orbit;
  o.psi0 = to_complex(x);
  o.T = T;
  o.alpha = wrap_phase(alpha);
  o.energy = mf_hamiltonian(model, o.psi0);
  o.n_gamma = conserved_N(o.psi0);
  o.residual = ev.res;
  o.T_primitive = T;
  if (out.converged && opts.finalize) finalize_orbit(model, o, opts);
  return out;
}

ActionResult orbit_action(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                          const OrbitOptions& opts) {
  const int L = model.L();
  int M = detail::sample_count(orbit.T, opts);
  ActionResult out;
  for (int attempt = 0; attempt < 6; ++attempt, M *= 2) {
    const double h = orbit.T / M;
    auto times = uniform_times(orbit.T, M);
    auto states = integrate_samples(model, orbit.psi0, times, opts.integ);
    std::vector<cvec> rates(states.size());
    double min_amp = std::numeric_limits<double>::infinity();
    double max_rate = 0.0;
    for (std::size_t j = 0; j < states.size(); ++j) {
      rates[j] = eom_rhs(model, states[j]);
      for (int l = 0; l < L; ++l) {
        double a = std::abs(states[j][l]);
        min_amp = std::min(min_amp, a);
        if (a > 0) max_rate = std::max(max_rate, std::abs(rates[j][l]) / a);
      }
    }
    const double scale = std::sqrt(std::max(orbit.n_gamma, 1e-300));
    if (min_amp < 1e-6 * scale) {
      // Some mode amplitude passes through zero.
      std::vector<double> f(states.size());
      for (std::size_t j = 0; j < states.size(); ++j)
        f[j] = states[j].dot(cvec(I1 * rates[j])).real();
      out.action = simpson(f, h);
      out.windings.clear();
      out.cartesian = true;
      return out;
    }
    if (max_rate * h > 0.5) continue;  // phases not resolved; refine

    std::vector<double> theta(L), f(states.size(), 0.0);
    for (int l = 0; l < L; ++l) theta[l] = std::arg(states[0][l]);
    const std::vector<double> theta0 = theta;
    for (std::size_t j = 0; j < states.size(); ++j) {
      if (j > 0)
        for (int l = 0; l < L; ++l)
          theta[l] += wrap_pi(std::arg(states[j][l]) - std::arg(states[j - 1][l]));
      double s = 0.0;
      for (int l = 0; l < L; ++l) {
        double ndot = 2.0 * (std::conj(states[j][l]) * rates[j][l]).real();
        s += theta[l] * ndot;
      }
      f[j] = s;
    }
    double S = simpson(f, h) + orbit.n_gamma * orbit.alpha;
    out.windings.assign(L, 0);
    for (int l = 0; l < L; ++l) {
      int k = static_cast<int>(std::lround((theta0[l] - orbit.alpha - theta[l]) / kTwoPi));
      out.windings[l] = k;
      S += kTwoPi * std::norm(orbit.psi0[l]) * k;
    }
    out.action = S;
    out.cartesian = false;
    return out;
  }
  throw Error("action", "phase unwrapping did not resolve after refinement");
}

ReducedMonodromy reduced_monodromy(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                                   const OrbitOptions& opts) {
  const int L = model.L();
  ReducedMonodromy out;
  cmat U = detail::transverse_complex_basis(model, orbit.psi0, out.degenerate);
  out.basis = detail::realify_basis(U);
  rmat full = orbit.T == 0.0 ? rmat(rmat::Identity(2 * L, 2 * L))
                             : rmat(integrate_with_tangent(model, orbit.psi0, orbit.T, opts.integ).J);
  full = phase_rotation(L, orbit.alpha) * full;
  out.M = out.basis.transpose() * full * out.basis;
  return out;
}

double stability_from_monodromy(const rmat& M) {
  if (M.rows() == 0) return 1.0;
  rmat D = M - rmat::Identity(M.rows(), M.cols());
  return std::sqrt(std::abs(D.determinant()));
}

Primitive primitive_decomposition(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                                  const OrbitOptions& opts) {
  Primitive out;
  bool degenerate = false;
  detail::transverse_complex_basis(model, orbit.psi0, degenerate);
  const double N = conserved_N(orbit.psi0);
  if (degenerate) {
    // Pure phase rotation: only full cycles count as returns.
    out.strict = true;
    double mu = -orbit.psi0.dot(eom_rhs(model, orbit.psi0)).imag() / N;
    double Tc = std::abs(mu) > 0 ? kTwoPi / std::abs(mu) : std::numeric_limits<double>::infinity();
    int m = static_cast<int>(std::floor(orbit.T / Tc + 1e-9));
    if (m < 1) {
      out.T_primitive = orbit.T;
      out.m = 1;
      out.alpha_primitive = orbit.alpha;
      out.recurrences = {orbit.T};
      return out;
    }
    out.T_primitive = Tc;
    out.m = m;
    out.alpha_primitive = 0.0;
    for (int j = 1; j <= m; ++j) out.recurrences.push_back(j * Tc);
    return out;
  }

  const int M = 2 * detail::sample_count(orbit.T, opts);
  auto times = uniform_times(orbit.T, M);
  auto states = integrate_samples(model, orbit.psi0, times, opts.integ);
  std::vector<double> d(states.size());
  double speed = 0.0;
  for (std::size_t j = 0; j < states.size(); ++j) {
    d[j] = phase_aligned_distance(states[j], orbit.psi0);
    speed = std::max(speed, eom_rhs(model, states[j]).norm());
  }
  const double h = orbit.T / M;
  const double tol = recurrence_tol(orbit.psi0);
  for (int j = 1; j < M; ++j) {
    if (!(d[j] <= d[j - 1] && d[j] <= d[j + 1])) continue;
    if (d[j] > 2.0 * speed * h) continue;
    ClosestPoint cp =
        closest_point(model, states[j - 1], times[j - 1], times[j + 1], orbit.psi0, opts.integ);
    if (cp.d < tol && cp.t < orbit.T * (1 - 1e-9)) {
      if (out.recurrences.empty() || cp.t - out.recurrences.back() > 1e-9 * orbit.T)
        out.recurrences.push_back(cp.t);
    }
  }
  out.recurrences.push_back(orbit.T);
  out.T_primitive = out.recurrences.front();
  out.m = static_cast<int>(std::lround(orbit.T / out.T_primitive));
  if (std::abs(orbit.T - out.m * out.T_primitive) > 1e-8 * orbit.T)
    throw Error("primitive_decomposition",
                "period " + std::to_string(orbit.T) + " is not an integer multiple of the first "
                "recurrence " + std::to_string(out.T_primitive));
  cvec first = out.m == 1 ? orbit.psi0 * std::polar(1.0, -orbit.alpha)
                          : integrate(model, orbit.psi0, out.T_primitive, opts.integ).psi;
  out.alpha_primitive = wrap_phase(-std::arg(orbit.psi0.dot(first)));
  return out;
}

void finalize_orbit(const BoseHubbardModel& model, PseudoPeriodicOrbit& orbit,
                    const OrbitOptions& opts) {
  orbit.alpha = wrap_phase(orbit.alpha);
  orbit.energy = mf_hamiltonian(model, orbit.psi0);
  orbit.n_gamma = conserved_N(orbit.psi0);
  orbit.residual = pseudo_residual(model, orbit.psi0, orbit.T, orbit.alpha, opts.integ).norm();
  orbit.flags.clear();

  ReducedMonodromy rm = reduced_monodromy(model, orbit, opts);
  orbit.degenerate = rm.degenerate;
  orbit.monodromy_reduced = rm.M;
  orbit.stability = stability_from_monodromy(rm.M);
  if (rm.degenerate) orbit.flags.push_back("degenerate_gauge_flow");

  Primitive pr = primitive_decomposition(model, orbit, opts);
  orbit.T_primitive = pr.T_primitive;
  orbit.repetition = pr.m;
  orbit.alpha_primitive = pr.alpha_primitive;
  if (pr.strict && std::abs(orbit.T - pr.m * pr.T_primitive) > 1e-9 * orbit.T)
    orbit.flags.push_back("partial_cycle");

  ActionResult ar = orbit_action(model, orbit, opts);
  orbit.action = ar.action;
  orbit.windings = ar.windings;
  orbit.action_cartesian = ar.cartesian;
  if (ar.cartesian) orbit.flags.push_back("action_cartesian");

  orbit.maslov = maslov_index(model, orbit, opts);
}

bool same_orbit(const BoseHubbardModel& model, const PseudoPeriodicOrbit& a,
                const PseudoPeriodicOrbit& b, double tol, const OrbitOptions& opts) {
  const double scale = std::max(1.0, a.psi0.norm());
  if (std::abs(a.n_gamma - b.n_gamma) > tol * std::max(1.0, a.n_gamma)) return false;
  if (std::abs(a.T - b.T) > tol * std::max(1.0, a.T)) return false;
  if (std::abs(wrap_pi(a.alpha - b.alpha)) > tol) return false;
  if (phase_aligned_distance(a.psi0, b.psi0) < tol * scale) return true;
  const double span = a.T_primitive > 0 ? a.T_primitive : a.T;
  const int M = detail::sample_count(span, opts);
  auto times = uniform_times(span, M);
  auto states = integrate_samples(model, a.psi0, times, opts.integ);
  std::vector<double> d(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) d[j] = phase_aligned_distance(states[j], b.psi0);
  for (int j = 0; j <= M; ++j) {
    bool left = j == 0 || d[j] <= d[j - 1];
    bool right = j == M || d[j] <= d[j + 1];
    if (!(left && right)) continue;
    int lo = std::max(0, j - 1), hi = std::min(M, j + 1);
    ClosestPoint cp = closest_point(model, states[lo], times[lo], times[hi], b.psi0, opts.integ);
    if (cp.d < tol * scale) return true;
  }
  return false;
}

bool OrbitStore::add(const PseudoPeriodicOrbit& orbit) {
  for (const auto& o : orbits_)
    if (same_orbit(model_, o, orbit, tol_)) return false;
  orbits_.push_back(orbit);
  return true;
}

std::vector<OrbitSeed> seeds_near_fixed_point(const BoseHubbardModel& model, const FixedPoint& fp,
                                              double amplitude) {
  const int L = model.L();
  rmat Kmu = tangent_generator(model, fp.psi);
  Kmu.topRightCorner(L, L) -= fp.mu * rmat::Identity(L, L);
  Kmu.bottomLeftCorner(L, L) += fp.mu * rmat::Identity(L, L);
  Eigen::EigenSolver<rmat> es(Kmu);
  const double scale = std::max(1.0, Kmu.norm());
  const double N = conserved_N(fp.psi);
  std::vector<OrbitSeed> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    std::complex<double> lam = es.eigenvalues()[i];
    if (std::abs(lam.real()) > 1e-8 * scale || lam.imag() < 1e-6 * scale) continue;
    Eigen::VectorXcd w = es.eigenvectors().col(i);
    rvec dx = w.real();
    if (dx.norm() < 1e-3 * w.norm()) dx = w.imag();
    // Remove the gauge component and normalize to |psi| units.
    rvec g = to_real(cvec(I1 * fp.psi));
    dx -= g * (g.dot(dx) / g.squaredNorm());
    dx /= dx.norm();
    cvec psi0 = fp.psi + amplitude * std::sqrt(N) * to_complex(dx);
    psi0 *= std::sqrt(N / conserved_N(psi0));
    double T = kTwoPi / lam.imag();
    out.push_back({psi0, T, wrap_phase(fp.mu * T)});
  }
  std::sort(out.begin(), out.end(), [](const OrbitSeed& a, const OrbitSeed& b) { return a.T < b.T; });
  return out;
}

std::vector<PseudoPeriodicOrbit> continue_in_energy(const BoseHubbardModel& model,
                                                    const PseudoPeriodicOrbit& start,
                                                    const std::vector<double>& energies,
                                                    const OrbitOptions& opts) {
  std::vector<PseudoPeriodicOrbit> fam{start};
  // Unwrapped phases along the family.
  std::vector<double> alphas{start.alpha};
  for (double E : energies) {
    const PseudoPeriodicOrbit& last = fam.back();
    cvec psi = last.psi0;
    double T = last.T;
    double a = alphas.back();
    if (fam.size() >= 2) {
      const PseudoPeriodicOrbit& prev = fam[fam.size() - 2];
      double dE = last.energy - prev.energy;
      if (std::abs(dE) > 0) {
        double s = (E - last.energy) / dE;
        cvec prev_al = aligned(prev.psi0, last.psi0);
        psi = last.psi0 + s * (last.psi0 - prev_al);
        T = last.T + s * (last.T - prev.T);
        a = alphas.back() + s * (alphas.back() - alphas[alphas.size() - 2]);
      }
    }
    OrbitConstraints cons{start.n_gamma, E, std::nullopt};
    OrbitSolve sol;
    try {
      sol = find_orbit(model, psi, T, a, cons, opts);
    } catch (const Error&) {
      break;
    }
    if (!sol.converged) break;
    if (std::abs(sol.orbit.T - last.T) > 0.25 * last.T) break;  // jumped to another branch
    double next = alphas.back() + wrap_pi(sol.orbit.alpha - alphas.back());
    alphas.push_back(next);
    fam.push_back(sol.orbit);
  }
  return fam;
}

}  // namespace bhtrace
