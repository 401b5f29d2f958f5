#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "bhtrace/freefield.hpp"
#include "bhtrace/orbits.hpp"
#include "orbit_detail.hpp"

namespace bhtrace {

using detail::kTwoPi;

namespace {

// Transverse counts are kept doubled so the half-integer end terms stay integral.
struct Count {
  bool ok = true;
  std::string why;
  int kw = 0;
  int twice_start = 0;
  int crossings = 0;
  int twice_end = 0;
  int transverse() const { return (twice_start + 2 * crossings + twice_end) / 2; }
};

rmat gauge_generator(int L) {
  rmat J = rmat::Zero(2 * L, 2 * L);
  J.topRightCorner(L, L) = -rmat::Identity(L, L);
  J.bottomLeftCorner(L, L) = rmat::Identity(L, L);
  return J;
}

cmat polar_orthonormalize(const cmat& U) {
  Eigen::SelfAdjointEigenSolver<cmat> es(U.adjoint() * U);
  rvec inv = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return U * es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

// Signed crossing between consecutive path samples (C0, A0) -> (C1, A1).
int crossing_sign(const rmat& C0, const rmat& C1, const rmat& A0, const rmat& A1, double dt,
                  bool& ok) {
  double d0 = C0.determinant();
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    double dm = (C0 + mid * (C1 - C0)).determinant();
    if ((dm > 0) == (d0 > 0)) lo = mid; else hi = mid;
  }
  double tau = 0.5 * (lo + hi);
  rmat C = C0 + tau * (C1 - C0);
  rmat A = A0 + tau * (A1 - A0);
  Eigen::JacobiSVD<rmat> svd(C, Eigen::ComputeFullV);
  rvec v = svd.matrixV().col(C.cols() - 1);
  rmat Cdot = (C1 - C0) / dt;
  double gamma = (A * v).dot(Cdot * v);
  double scale = std::max(1e-300, Cdot.norm() * std::max(1.0, A.norm()));
  if (std::abs(gamma) < 1e-10 * scale) ok = false;
  return gamma > 0 ? -1 : 1;
}

Count count_from(const BoseHubbardModel& model, const cvec& psi_s, double T, double alpha,
                 const OrbitOptions& opts) {
  const int L = model.L();
  Count c;
  const double rate = tangent_generator(model, psi_s).operatorNorm() + std::abs(alpha) / T;
  int M = std::max(detail::sample_count(T, opts),
                   static_cast<int>(std::ceil(opts.samples_per_radian * rate * T)));
  M += M % 2;
  std::vector<double> times(M + 1);
  for (int j = 0; j <= M; ++j) times[j] = T * j / M;
  times[M] = T;
  auto tan = integrate_tangent_samples(model, psi_s, times, opts.integ);

  // Winding of the overlap with the start in the co-rotating frame.
  const double N = conserved_N(psi_s);
  double ph = 0.0, prev = 0.0;
  for (int j = 1; j <= M; ++j) {
    std::complex<double> ov = psi_s.dot(tan[j].psi) * std::polar(1.0, alpha * times[j] / T);
    if (std::abs(ov) < 1e-6 * N) {
      c.ok = false;
      c.why = "overlap with the initial point vanishes";
      return c;
    }
    double a = std::arg(ov);
    ph += std::remainder(a - prev, kTwoPi);
    prev = a;
  }
  c.kw = static_cast<int>(std::lround(-ph / kTwoPi));

  bool deg0 = false;
  const cmat U0 = detail::transverse_complex_basis(model, psi_s, deg0);
  const int m = static_cast<int>(U0.cols());
  if (m == 0) return c;
  const rmat P0 = detail::realify_basis(U0);

  // Start term from the initial slope of the designated block.
  rmat Kr = tangent_generator(model, psi_s) + (alpha / T) * gauge_generator(L);
  rmat Cd0 = detail::lower_left(rmat(P0.transpose() * Kr * P0));
  Cd0 = 0.5 * (Cd0 + Cd0.transpose()).eval();
  bool sig_ok = true;
  c.twice_start = -detail::signature(Cd0, 1e-9 * std::max(1.0, Cd0.norm()), sig_ok);
  if (!sig_ok) {
    c.ok = false;
    c.why = "degenerate initial slope";
    return c;
  }

  std::vector<rmat> Cs, As;
  std::vector<double> ts;
  cmat U = U0;
  rmat Phi;
  for (int j = 0; j <= M; ++j) {
    const double phi = alpha * times[j] / T;
    if (j > 0) {
      bool dj = false;
      cmat W = detail::transverse_complex_basis(model, tan[j].psi, dj);
      if (dj != deg0) {
        c.ok = false;
        c.why = "degeneracy changes along the orbit";
        return c;
      }
      W *= std::polar(1.0, phi);
      U = polar_orthonormalize(cmat(W * (W.adjoint() * U)));
    }
    rmat Pj = detail::realify_basis(U);
    Phi = Pj.transpose() * phase_rotation(L, phi) * tan[j].J * P0;
    Cs.push_back(detail::lower_left(Phi));
    As.push_back(Phi.topLeftCorner(m, m));
    ts.push_back(times[j]);
  }

  // Close the frame loop with the principal logarithm of the holonomy.
  cmat G = U0.adjoint() * U;
  Eigen::ComplexEigenSolver<cmat> ces(G);
  for (int i = 0; i < m; ++i)
    if (std::abs(ces.eigenvalues()[i] + 1.0) < 1e-6) {
      c.ok = false;
      c.why = "frame holonomy has eigenvalue -1";
      return c;
    }
  const cmat V = ces.eigenvectors();
  const cmat Vinv = V.inverse();
  const int S = 64;
  const rmat PhiM = Phi;
  for (int s = 1; s <= S; ++s) {
    Eigen::VectorXcd d(m);
    for (int i = 0; i < m; ++i) d[i] = std::exp(std::log(ces.eigenvalues()[i]) * (double(s) / S));
    cmat Gs = V * d.asDiagonal() * Vinv;
    Phi = detail::realify_matrix(Gs) * PhiM;
    Cs.push_back(detail::lower_left(Phi));
    As.push_back(Phi.topLeftCorner(m, m));
    ts.push_back(T + double(s) / S);
  }

  for (std::size_t i = 1; i + 1 < Cs.size(); ++i) {
    double d0 = Cs[i].determinant(), d1 = Cs[i + 1].determinant();
    if ((d0 > 0) == (d1 > 0) && d1 != 0.0) continue;
    bool ok = true;
    c.crossings += crossing_sign(Cs[i], Cs[i + 1], As[i], As[i + 1], ts[i + 1] - ts[i], ok);
    if (!ok) {
      c.ok = false;
      c.why = "tangential crossing";
      return c;
    }
  }

  // End term from the trace stationary-phase Hessian.
  const rmat& Ce = Cs.back();
  Eigen::JacobiSVD<rmat> svd(Ce);
  double smin = svd.singularValues()[m - 1];
  if (smin < 1e-8 * std::max(1.0, Phi.norm())) {
    c.ok = false;
    c.why = "caustic at the end point";
    return c;
  }
  rmat Ci = Ce.inverse();
  rmat A = Phi.topLeftCorner(m, m), D = Phi.bottomRightCorner(m, m);
  rmat Hp = Ci + Ci.transpose() - A * Ci - Ci * D;
  sig_ok = true;
  c.twice_end = -detail::signature(Hp, 1e-9 * std::max(1.0, Hp.norm()), sig_ok);
  if (!sig_ok) {
    c.ok = false;
    c.why = "degenerate end-point Hessian";
  }
  return c;
}

}  // namespace

MaslovReport maslov_count(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                          const OrbitOptions& opts) {
  const int nshift = std::max(1, opts.n_shift);
  std::vector<double> starts(nshift);
  for (int i = 0; i < nshift; ++i) starts[i] = orbit.T * i / nshift;
  auto psis = integrate_samples(model, orbit.psi0, starts, opts.integ);

  MaslovReport rep;
  bool have = false;
  std::string last_why;
  for (int i = 0; i < nshift; ++i) {
    Count c = count_from(model, psis[i], orbit.T, orbit.alpha, opts);
    if (!c.ok) {
      last_why = c.why;
      continue;
    }
    int total = 2 * c.kw + c.transverse();
    rep.per_shift.push_back(total);
    if (!have) {
      have = true;
      rep.total = total;
      rep.parallel = 2 * c.kw;
      rep.transverse = c.transverse();
      rep.crossings = c.crossings;
      rep.endpoint = c.twice_end / 2;
    }
  }
  if (!have) throw Error("maslov", "no admissible initial point: " + last_why);
  for (int v : rep.per_shift)
    if (v != rep.total) {
      std::ostringstream os;
      os << "Maslov count depends on the initial point:";
      for (int w : rep.per_shift) os << ' ' << w;
      throw Error("maslov_shift", os.str());
    }
  return rep;
}

int maslov_index(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                 const OrbitOptions& opts) {
  if (model.is_free()) {
    FreeFieldData d = free_field_data(model);
    Eigen::VectorXcd c = d.V.adjoint() * orbit.psi0;
    int chi = 0;
    c.cwiseAbs2().maxCoeff(&chi);
    const double N = conserved_N(orbit.psi0);
    if (std::abs(std::norm(c[chi]) - N) < 1e-6 * std::max(1.0, N)) {
      int k = static_cast<int>(std::lround((d.e[chi] * orbit.T - orbit.alpha) / kTwoPi));
      return maslov_free(d, chi, k, orbit.alpha);
    }
  }
  return maslov_count(model, orbit, opts).total;
}

}  // namespace bhtrace
