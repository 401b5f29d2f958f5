#include "bhtrace/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/numeric/odeint.hpp>

namespace bhtrace {

namespace odeint = boost::numeric::odeint;

rvec to_real(const cvec& psi) {
  const int L = static_cast<int>(psi.size());
  rvec x(2 * L);
  x.head(L) = psi.real();
  x.tail(L) = psi.imag();
  return x;
}

cvec to_complex(const rvec& x) {
  const int L = static_cast<int>(x.size() / 2);
  cvec psi(L);
  for (int l = 0; l < L; ++l) psi[l] = {x[l], x[L + l]};
  return psi;
}

double conserved_N(const cvec& psi) { return psi.squaredNorm(); }

namespace {

void check_dim(const BoseHubbardModel& model, const cvec& psi) {
  if (psi.size() != model.L())
    throw Error("dimension_mismatch", "state length " + std::to_string(psi.size()) +
                                          " != L=" + std::to_string(model.L()));
}

// A_ab = H_ab - 1/2 sum_c U_{a c c b}
cmat effective_one_body(const BoseHubbardModel& model) {
  cmat A = model.H();
  for (const auto& c : model.U())
    if (c.l2 == c.l3) A(c.l1, c.l4) -= 0.5 * c.value;
  return A;
}

// X_ab = psi*_a psi_b - delta_ab / 2
inline std::complex<double> X(const cvec& psi, int a, int b) {
  return std::conj(psi[a]) * psi[b] - (a == b ? 0.5 : 0.0);
}

}  // namespace

double mf_hamiltonian(const BoseHubbardModel& model, const cvec& psi) {
  check_dim(model, psi);
  const int L = model.L();
  const cmat A = effective_one_body(model);
  std::complex<double> h = 0.0;
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) h += A(a, b) * X(psi, a, b);
  for (const auto& c : model.U()) h += 0.5 * c.value * X(psi, c.l1, c.l3) * X(psi, c.l2, c.l4);
  double scale = std::max(1.0, std::abs(h));
  if (std::abs(h.imag()) > 1e-12 * scale * std::max<double>(1.0, psi.squaredNorm()))
    throw Error("complex_energy", "mean-field energy has an imaginary part");
  return h.real();
}

cvec mf_gradient(const BoseHubbardModel& model, const cvec& psi) {
  check_dim(model, psi);
  cvec g = effective_one_body(model) * psi;
  for (const auto& c : model.U()) g[c.l1] += c.value * psi[c.l3] * X(psi, c.l2, c.l4);
  return g;
}

cvec eom_rhs(const BoseHubbardModel& model, const cvec& psi) {
  return std::complex<double>(0.0, -1.0) * mf_gradient(model, psi);
}

rvec energy_gradient(const BoseHubbardModel& model, const cvec& psi) {
  cvec g = mf_gradient(model, psi);
  const int L = model.L();
  rvec out(2 * L);
  out.head(L) = 2.0 * g.real();
  out.tail(L) = 2.0 * g.imag();
  return out;
}

namespace {

// dG = P dpsi + Q dpsi*
void linearization(const BoseHubbardModel& model, const cvec& psi, const cmat& A, cmat& P,
                   cmat& Q) {
  P = A;
  Q = cmat::Zero(model.L(), model.L());
  for (const auto& c : model.U()) {
    P(c.l1, c.l3) += c.value * X(psi, c.l2, c.l4);
    P(c.l1, c.l4) += c.value * std::conj(psi[c.l2]) * psi[c.l3];
    Q(c.l1, c.l2) += c.value * psi[c.l3] * psi[c.l4];
  }
}

rmat generator_from(const cmat& P, const cmat& Q) {
  const int L = static_cast<int>(P.rows());
  rmat K(2 * L, 2 * L);
  const cmat S = P + Q, D = P - Q;
  K.topLeftCorner(L, L) = S.imag();
  K.topRightCorner(L, L) = D.real();
  K.bottomLeftCorner(L, L) = -S.real();
  K.bottomRightCorner(L, L) = D.imag();
  return K;
}

}  // namespace

rmat tangent_generator(const BoseHubbardModel& model, const cvec& psi) {
  check_dim(model, psi);
  cmat P, Q;
  linearization(model, psi, effective_one_body(model), P, Q);
  return generator_from(P, Q);
}

rmat phase_rotation(int L, double phi) {
  rmat R = rmat::Zero(2 * L, 2 * L);
  const double c = std::cos(phi), s = std::sin(phi);
  for (int l = 0; l < L; ++l) {
    R(l, l) = c;
    R(l, L + l) = -s;
    R(L + l, l) = s;
    R(L + l, L + l) = c;
  }
  return R;
}

rmat symplectic_unit(int n) {
  rmat W = rmat::Zero(2 * n, 2 * n);
  W.topRightCorner(n, n).setIdentity();
  W.bottomLeftCorner(n, n) = -rmat::Identity(n, n);
  return W;
}

double symplectic_defect(const rmat& J) {
  const rmat W = symplectic_unit(static_cast<int>(J.rows() / 2));
  return (J.transpose() * W * J - W).cwiseAbs().maxCoeff();
}

namespace {

using State = std::vector<double>;

struct Rhs {
  const BoseHubbardModel* model;
  cmat A;
  bool tangent;
  void operator()(const State& x, State& dxdt, double /*t*/) const {
    const int L = model->L();
    cvec psi(L);
    for (int l = 0; l < L; ++l) psi[l] = {x[l], x[L + l]};
    cvec g = A * psi;
    for (const auto& c : model->U()) g[c.l1] += c.value * psi[c.l3] * X(psi, c.l2, c.l4);
    for (int l = 0; l < L; ++l) {
      dxdt[l] = g[l].imag();
      dxdt[L + l] = -g[l].real();
    }
    if (!tangent) return;
    cmat P, Q;
    linearization(*model, psi, A, P, Q);
    const rmat K = generator_from(P, Q);
    const int n = 2 * L;
    Eigen::Map<const rmat> J(x.data() + n, n, n);
    Eigen::Map<rmat> dJ(dxdt.data() + n, n, n);
    dJ.noalias() = K * J;
  }
};

class Propagator {
 public:
  Propagator(const BoseHubbardModel& model, const cvec& psi0, bool tangent,
             const IntegratorOptions& opts)
      : model_(model), rhs_{&model, effective_one_body(model), tangent}, opts_(opts) {
    const int L = model.L();
    const int n = 2 * L;
    x_.assign(tangent ? n + n * n : n, 0.0);
    for (int l = 0; l < L; ++l) {
      x_[l] = psi0[l].real();
      x_[L + l] = psi0[l].imag();
    }
    if (tangent)
      for (int i = 0; i < n; ++i) x_[n + i * n + i] = 1.0;
    N0_ = conserved_N(psi0);
    E0_ = mf_hamiltonian(model, psi0);
    dt_ = opts.h0;
  }

  void advance_to(double t_end) {
    auto stepper = odeint::make_controlled(opts_.atol, opts_.rtol,
                                           odeint::runge_kutta_fehlberg78<State>());
    const double dir = t_end >= t_ ? 1.0 : -1.0;
    dt_ = dir * std::abs(dt_);
    while (dir * (t_end - t_) > 0.0) {
      double dt = dt_;
      bool clipped = false;
      if (dir * (t_ + dt - t_end) > 0.0) {
        dt = t_end - t_;
        clipped = true;
      }
      double t_try = t_;
      auto res = stepper.try_step(rhs_, x_, t_try, dt);
      if (res == odeint::success) {
        ++diag_.steps;
        t_ = clipped ? t_end : t_try;
        if (!clipped) dt_ = dt;
        if (diag_.steps > opts_.max_steps)
          throw Error("max_steps", "step budget exhausted at t=" + std::to_string(t_));
        for (double v : x_)
          if (!std::isfinite(v)) throw Error("nan", "non-finite state at t=" + std::to_string(t_));
        monitor();
      } else {
        ++diag_.rejected;
        dt_ = dt;
        if (std::abs(dt_) < 1e-14 * std::max(1.0, std::abs(t_)))
          throw Error("step_underflow", "step size underflow at t=" + std::to_string(t_));
      }
    }
    diag_.t_reached = t_;
  }

  cvec psi() const {
    const int L = model_.L();
    cvec p(L);
    for (int l = 0; l < L; ++l) p[l] = {x_[l], x_[L + l]};
    return p;
  }

  rmat J() const {
    const int n = 2 * model_.L();
    return Eigen::Map<const rmat>(x_.data() + n, n, n);
  }

  Diagnostics diag() const { return diag_; }

 private:
  void monitor() {
    cvec p = psi();
    double dN = std::abs(conserved_N(p) - N0_);
    double dE = std::abs(mf_hamiltonian(model_, p) - E0_);
    diag_.drift_N = dN;
    diag_.drift_E = dE;
    diag_.max_drift_N = std::max(diag_.max_drift_N, dN);
    diag_.max_drift_E = std::max(diag_.max_drift_E, dE);
  }

  const BoseHubbardModel& model_;
  Rhs rhs_;
  IntegratorOptions opts_;
  State x_;
  double t_ = 0.0;
  double dt_ = 1e-3;
  double N0_ = 0.0, E0_ = 0.0;
  Diagnostics diag_;
};

}  // namespace

FlowResult integrate(const BoseHubbardModel& model, const cvec& psi0, double t,
                     const IntegratorOptions& opts) {
  check_dim(model, psi0);
  if (!std::isfinite(t)) throw Error("invalid_argument", "integration time must be finite");
  Propagator prop(model, psi0, false, opts);
  prop.advance_to(t);
  return {prop.psi(), prop.diag()};
}

TangentResult integrate_with_tangent(const BoseHubbardModel& model, const cvec& psi0, double t,
                                     const IntegratorOptions& opts) {
  check_dim(model, psi0);
  if (!std::isfinite(t)) throw Error("invalid_argument", "integration time must be finite");
  Propagator prop(model, psi0, true, opts);
  prop.advance_to(t);
  TangentResult r{prop.psi(), prop.J(), prop.diag()};
  r.diag.symplectic_defect = symplectic_defect(r.J);
  return r;
}

std::vector<cvec> integrate_samples(const BoseHubbardModel& model, const cvec& psi0,
                                    const std::vector<double>& times,
                                    const IntegratorOptions& opts, Diagnostics* diag) {
  check_dim(model, psi0);
  Propagator prop(model, psi0, false, opts);
  std::vector<cvec> out;
  out.reserve(times.size());
  for (double t : times) {
    prop.advance_to(t);
    out.push_back(prop.psi());
  }
  if (diag) *diag = prop.diag();
  return out;
}

std::vector<TangentResult> integrate_tangent_samples(const BoseHubbardModel& model,
                                                     const cvec& psi0,
                                                     const std::vector<double>& times,
                                                     const IntegratorOptions& opts) {
  check_dim(model, psi0);
  Propagator prop(model, psi0, true, opts);
  std::vector<TangentResult> out;
  out.reserve(times.size());
  for (double t : times) {
    prop.advance_to(t);
    TangentResult r{prop.psi(), prop.J(), prop.diag()};
    r.diag.symplectic_defect = symplectic_defect(r.J);
    out.push_back(std::move(r));
  }
  return out;
}

SingleParticle single_particle(const BoseHubbardModel& model) {
  Eigen::SelfAdjointEigenSolver<cmat> es(model.H());
  if (es.info() != Eigen::Success) throw Error("eigensolver", "single-particle eigensolve failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

rvec mode_occupations(const BoseHubbardModel& model, const cvec& psi) {
  check_dim(model, psi);
  const SingleParticle sp = single_particle(model);
  cvec c = sp.V.adjoint() * psi;
  return c.cwiseAbs2();
}

cvec canonical_phase(const cvec& psi) {
  if (psi.size() == 0) return psi;
  Eigen::Index k = 0;
  psi.cwiseAbs().maxCoeff(&k);
  if (std::abs(psi[k]) == 0.0) return psi;
  return psi * (std::abs(psi[k]) / psi[k]);
}

double phase_aligned_distance(const cvec& a, const cvec& b) {
  // Align b's phase to a and subtract directly; the expanded-norm form loses
  // about sqrt(eps)*|a| to cancellation.
  std::complex<double> ov = b.dot(a);
  double m = std::abs(ov);
  if (m == 0.0) return std::sqrt(a.squaredNorm() + b.squaredNorm());
  return (a - b * (ov / m)).norm();
}

std::vector<cvec> shell_samples(int L, double n_gamma, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cvec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    cvec psi(L);
    for (int l = 0; l < L; ++l) {
      double re = gauss(rng);
      double im = gauss(rng);
      psi[l] = {re, im};
    }
    psi *= std::sqrt(n_gamma) / psi.norm();
    out.push_back(psi);
  }
  return out;
}

namespace {

void classify(const BoseHubbardModel& model, FixedPoint& fp) {
  const int L = model.L();
  rmat K = tangent_generator(model, fp.psi);
  K.topRightCorner(L, L) -= fp.mu * rmat::Identity(L, L);
  K.bottomLeftCorner(L, L) += fp.mu * rmat::Identity(L, L);
  Eigen::EigenSolver<rmat> es(K, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                       es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(),
            [](auto a, auto b) { return std::abs(a) < std::abs(b); });
  fp.eigenvalues = ev;
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  int stable = 0, unstable = 0;
  // The two smallest are the gauge and norm zero modes.
  for (std::size_t i = 2; i < ev.size(); ++i) {
    if (std::abs(ev[i].real()) > 1e-7 * scale) {
      if (ev[i].real() > 0) ++unstable;
    } else if (ev[i].imag() > 0) {
      ++stable;
    }
  }
  fp.n_stable = stable;
  fp.n_unstable = unstable;
}

}  // namespace

std::vector<FixedPoint> find_fixed_points(const BoseHubbardModel& model,
                                          const std::vector<cvec>& seeds, double n_gamma,
                                          const FixedPointOptions& opts) {
  const int L = model.L();
  const int n = 2 * L;
  std::vector<FixedPoint> roots;
  for (const cvec& seed : seeds) {
    check_dim(model, seed);
    cvec psi = seed * std::sqrt(n_gamma) / seed.norm();
    double mu = psi.dot(mf_gradient(model, psi)).real() / n_gamma;
    const cvec ref = psi;
    bool ok = false;
    double res = 0.0;
    for (int it = 0; it < opts.max_iter; ++it) {
      cvec g = mf_gradient(model, psi);
      cvec r = g - mu * psi;
      res = std::max(r.norm(), std::abs(psi.squaredNorm() - n_gamma));
      if (res < opts.tol) {
        ok = true;
        break;
      }
      cmat P, Q;
      linearization(model, psi, effective_one_body(model), P, Q);
      const cmat S = P + Q, D = P - Q;
      rmat Jac = rmat::Zero(n + 2, n + 1);
      // d(Re r, Im r)/d(q, p)
      Jac.block(0, 0, L, L) = S.real() - mu * rmat::Identity(L, L);
      Jac.block(0, L, L, L) = -D.imag();
      Jac.block(L, 0, L, L) = S.imag();
      Jac.block(L, L, L, L) = D.real() - mu * rmat::Identity(L, L);
      rvec x = to_real(psi);
      Jac.block(0, n, n, 1) = -x;
      Jac.block(n, 0, 1, n) = 2.0 * x.transpose();
      Jac.block(n + 1, 0, 1, n) = to_real(std::complex<double>(0, 1) * ref).transpose();
      rvec F(n + 2);
      F.head(n) = to_real(r);
      F[n] = psi.squaredNorm() - n_gamma;
      F[n + 1] = to_real(std::complex<double>(0, 1) * ref).dot(x - to_real(ref));
      rvec step = Jac.completeOrthogonalDecomposition().solve(-F);
      psi = to_complex(x + step.head(n));
      mu += step[n];
      if (!psi.allFinite()) break;
    }
    if (!ok || mu < opts.mu_min || mu > opts.mu_max) continue;
    FixedPoint fp;
    fp.psi = canonical_phase(psi);
    fp.mu = mu;
    fp.residual = res;
    bool dup = false;
    for (const auto& r : roots)
      if (phase_aligned_distance(r.psi, fp.psi) < opts.merge_tol * std::sqrt(n_gamma)) dup = true;
    if (dup) continue;
    classify(model, fp);
    roots.push_back(std::move(fp));
  }
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) { return a.mu < b.mu; });
  return roots;
}

}  // namespace bhtrace
