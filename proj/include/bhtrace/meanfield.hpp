#pragma once

#include <cstdint>
#include <vector>

#include "bhtrace/model.hpp"

namespace bhtrace {

/// Classical field configuration psi = q + i p.
using FieldState = cvec;

/// Real layout (Re psi_1..Re psi_L, Im psi_1..Im psi_L).
rvec to_real(const cvec& psi);
cvec to_complex(const rvec& x);

double conserved_N(const cvec& psi);

/// Mean-field symbol obtained by a+_l a_l' -> psi*_l psi_l' - delta/2.
double mf_hamiltonian(const BoseHubbardModel& model, const cvec& psi);

/// dH/dpsi*, analytic.
cvec mf_gradient(const BoseHubbardModel& model, const cvec& psi);

/// dpsi/dt = -i dH/dpsi*.
cvec eom_rhs(const BoseHubbardModel& model, const cvec& psi);

/// Real gradient (dH/dq, dH/dp).
rvec energy_gradient(const BoseHubbardModel& model, const cvec& psi);

/// Generator K of the linearized flow, d(dx)/dt = K dx in the real layout.
rmat tangent_generator(const BoseHubbardModel& model, const cvec& psi);

/// Real 2L x 2L matrix of multiplication by exp(i phi).
rmat phase_rotation(int L, double phi);

/// Standard symplectic unit [[0, I], [-I, 0]].
rmat symplectic_unit(int n);

/// max |J^T Omega J - Omega|.
double symplectic_defect(const rmat& J);

struct IntegratorOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  double h0 = 1e-3;
  std::uint64_t max_steps = 100'000'000;
};

struct Diagnostics {
  double t_reached = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t rejected = 0;
  double drift_N = 0.0;   // |N(t) - N(0)| at the end
  double drift_E = 0.0;   // |E(t) - E(0)| at the end
  double max_drift_N = 0.0;
  double max_drift_E = 0.0;
  double symplectic_defect = -1.0;  // set by tangent integration
};

struct FlowResult {
  cvec psi;
  Diagnostics diag;
};

struct TangentResult {
  cvec psi;
  rmat J;  // d x(t) / d x(0)
  Diagnostics diag;
};

/// Adaptive RK 7(8) propagation of the mean-field flow.
/// Throws Error("step_underflow") or Error("nan") on failure.
FlowResult integrate(const BoseHubbardModel& model, const cvec& psi0, double t,
                     const IntegratorOptions& opts = {});

TangentResult integrate_with_tangent(const BoseHubbardModel& model, const cvec& psi0, double t,
                                     const IntegratorOptions& opts = {});

/// States at each of the (monotone) sample times, starting from t = 0.
std::vector<cvec> integrate_samples(const BoseHubbardModel& model, const cvec& psi0,
                                    const std::vector<double>& times,
                                    const IntegratorOptions& opts = {},
                                    Diagnostics* diag = nullptr);

std::vector<TangentResult> integrate_tangent_samples(const BoseHubbardModel& model,
                                                     const cvec& psi0,
                                                     const std::vector<double>& times,
                                                     const IntegratorOptions& opts = {});

/// Eigen-decomposition of the single-particle matrix, ascending.
struct SingleParticle {
  rvec e;
  cmat V;  // columns are orthonormal eigenvectors
};
SingleParticle single_particle(const BoseHubbardModel& model);

/// n_chi = |<v_chi, psi>|^2.
rvec mode_occupations(const BoseHubbardModel& model, const cvec& psi);

/// Relative equilibrium dH/dpsi* = mu psi on the shell |psi|^2 = n_gamma.
struct FixedPoint {
  cvec psi;
  double mu = 0.0;
  double residual = 0.0;
  int n_stable = 0;    // elliptic pairs of the gauge-reduced linearization
  int n_unstable = 0;  // hyperbolic pairs
  std::vector<std::complex<double>> eigenvalues;
};

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iter = 100;
  double mu_min = -1e300;
  double mu_max = 1e300;
  double merge_tol = 1e-6;
};

std::vector<FixedPoint> find_fixed_points(const BoseHubbardModel& model,
                                          const std::vector<cvec>& seeds, double n_gamma,
                                          const FixedPointOptions& opts = {});

/// Uniform samples on the sphere sum |psi_l|^2 = n_gamma.
std::vector<cvec> shell_samples(int L, double n_gamma, int count, std::uint64_t seed);

/// Removes the global phase so that the largest-modulus entry is real positive.
cvec canonical_phase(const cvec& psi);

/// min over theta of |a - b e^{i theta}|.
double phase_aligned_distance(const cvec& a, const cvec& b);

}  // namespace bhtrace
