#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"

#include "bhtrace/meanfield.hpp"

using namespace bhtrace;
using cd = std::complex<double>;

namespace {

BoseHubbardModel trimer(double u) {
  cmat H = cmat::Zero(3, 3);
  H(0, 1) = H(1, 0) = H(1, 2) = H(2, 1) = -1.0;
  return onsite_model(H, u);
}

cvec random_state(int L, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  cvec v(L);
  for (int l = 0; l < L; ++l) v[l] = {n(rng), n(rng)};
  return v;
}

cmat random_hermitian(int L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  cmat A(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) A(i, j) = {n(rng), n(rng)};
  return 0.5 * (A + A.adjoint());
}

// Real 2L x 2L form of a complex linear map in the (Re, Im) layout.
rmat realify(const cmat& U) {
  const int L = static_cast<int>(U.rows());
  rmat R(2 * L, 2 * L);
  R << U.real(), -U.imag(), U.imag(), U.real();
  return R;
}

}  // namespace

TEST_CASE("mean-field energy by direct substitution") {
  cmat H(1, 1);
  H << 2.0;
  BoseHubbardModel free1(H, {});
  cvec psi(1);
  psi << cd(0.6, 0.8);
  CHECK(mf_hamiltonian(free1, psi) == doctest::Approx(1.0).epsilon(1e-14));

  const double u = 0.4;
  auto one = onsite_model(cmat::Zero(1, 1), u);
  CHECK(mf_hamiltonian(one, psi) == doctest::Approx(-u / 8).epsilon(1e-14));
  for (double n : {0.5, 3.0, 7.25}) {
    cvec p(1);
    p << std::sqrt(n) * std::polar(1.0, 0.3);
    double want = -(u / 2) * (n - 0.5) + (u / 2) * (n - 0.5) * (n - 0.5);
    CHECK(mf_hamiltonian(one, p) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("mean-field energy is gauge invariant") {
  auto m = trimer(0.3);
  cvec psi = random_state(3, 5);
  for (double th : {0.1, 1.7, -2.4})
    CHECK(std::abs(mf_hamiltonian(m, psi * std::polar(1.0, th)) - mf_hamiltonian(m, psi)) < 1e-12);
}

TEST_CASE("equations of motion") {
  cmat H = random_hermitian(3, 11);
  BoseHubbardModel free3(H, {});
  cvec psi = random_state(3, 12);
  CHECK((eom_rhs(free3, psi) - (-cd(0, 1) * H * psi)).norm() < 1e-14);

  const double u = 0.7, n = 2.3;
  auto one = onsite_model(cmat::Zero(1, 1), u);
  cvec p(1);
  p << std::sqrt(n) * std::polar(1.0, 0.9);
  CHECK(std::abs(eom_rhs(one, p)[0] - (-cd(0, 1) * u * (n - 1) * p[0])) < 1e-14);
}

TEST_CASE("analytic gradient against central differences") {
  std::vector<Coupling> U{{0, 0, 0, 0, 0.3}, {0, 1, 1, 0, 0.2}, {0, 2, 1, 1, 0.15}, {1, 1, 2, 0, 0.15}};
  BoseHubbardModel m(random_hermitian(3, 21), U);
  for (std::uint64_t s = 0; s < 4; ++s) {
    cvec psi = random_state(3, 100 + s);
    rvec x = to_real(psi);
    rvec g(6);
    const double h = 1e-5;
    for (int i = 0; i < 6; ++i) {
      rvec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = (mf_hamiltonian(m, to_complex(xp)) - mf_hamiltonian(m, to_complex(xm))) / (2 * h);
    }
    CHECK((energy_gradient(m, psi) - g).norm() < 1e-6);
    // psi_dot = -i dH/dpsi*, dH/dpsi* = (dH/dq + i dH/dp)/2.
    cvec want(3);
    for (int l = 0; l < 3; ++l) want[l] = -cd(0, 1) * 0.5 * cd(g[l], g[3 + l]);
    CHECK((eom_rhs(m, psi) - want).norm() < 1e-6);
  }
}

TEST_CASE("free flow equals the matrix exponential") {
  cmat H = random_hermitian(3, 31);
  BoseHubbardModel m(H, {});
  cvec psi0 = random_state(3, 32);
  std::vector<double> ts;
  for (int i = 0; i <= 10; ++i) ts.push_back(5.0 * i);
  auto states = integrate_samples(m, psi0, ts);
  double err = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    cmat U = (-cd(0, 1) * ts[i] * H).exp();
    err = std::max(err, (states[i] - U * psi0).cwiseAbs().maxCoeff());
  }
  CHECK(err < 1e-10);
  CHECK((integrate(m, psi0, 0.0).psi - psi0).norm() == 0.0);
}

TEST_CASE("single interacting mode rotates at rate u (n - 1)") {
  const double u = 0.5;
  auto one = onsite_model(cmat::Zero(1, 1), u);
  cvec p(1);
  p << cd(1.2, -0.4);
  const double n = std::norm(p[0]);
  auto r = integrate(one, p, 17.0);
  CHECK(std::abs(r.psi[0] - p[0] * std::polar(1.0, -u * (n - 1) * 17.0)) < 1e-10);
}

TEST_CASE("tangent map") {
  cmat H = random_hermitian(2, 41);
  BoseHubbardModel free2(H, {});
  cvec psi0 = random_state(2, 42);
  auto tr = integrate_with_tangent(free2, psi0, 3.3);
  CHECK((tr.J - realify((-cd(0, 1) * 3.3 * H).exp())).cwiseAbs().maxCoeff() < 1e-10);
  auto t0 = integrate_with_tangent(free2, psi0, 0.0);
  CHECK((t0.J - rmat::Identity(4, 4)).norm() == 0.0);

  auto m = trimer(0.1);
  cvec s = random_state(3, 43, 1.5);
  auto t20 = integrate_with_tangent(m, s, 20.0);
  CHECK(symplectic_defect(t20.J) < 1e-8);
  CHECK(t20.diag.symplectic_defect < 1e-8);

  // Central differences along random directions.
  std::mt19937_64 rng(44);
  std::normal_distribution<double> nd(0.0, 1.0);
  IntegratorOptions tight{1e-13, 1e-15};
  auto t5 = integrate_with_tangent(m, s, 5.0, tight);
  const double eps = 1e-5;
  for (int k = 0; k < 3; ++k) {
    rvec d(6);
    for (int i = 0; i < 6; ++i) d[i] = nd(rng);
    d.normalize();
    rvec xp = to_real(integrate(m, to_complex(to_real(s) + eps * d), 5.0, tight).psi);
    rvec xm = to_real(integrate(m, to_complex(to_real(s) - eps * d), 5.0, tight).psi);
    CHECK(((xp - xm) / (2 * eps) - t5.J * d).norm() < 1e-6);
  }
}

TEST_CASE("conserved quantities") {
  cvec psi(2);
  psi << 1.0, cd(0, 1);
  CHECK(conserved_N(psi) == doctest::Approx(2.0));
  CHECK(conserved_N(cd(0.5, 2.0) * psi) == doctest::Approx(std::norm(cd(0.5, 2.0)) * 2.0));

  auto m = trimer(0.1);
  cvec s = random_state(3, 51, 1.5);
  Diagnostics d;
  std::vector<double> ts;
  for (int i = 0; i <= 100; ++i) ts.push_back(i);
  integrate_samples(m, s, ts, {}, &d);
  CHECK(d.max_drift_N < 1e-9);
  CHECK(d.max_drift_E < 1e-9);
}

TEST_CASE("gauge equivariance of the flow") {
  auto m = trimer(0.2);
  cvec s = random_state(3, 61);
  for (double th : {0.4, 2.9}) {
    cd ph = std::polar(1.0, th);
    CHECK((integrate(m, ph * s, 7.0).psi - ph * integrate(m, s, 7.0).psi).norm() < 1e-10);
  }
}

TEST_CASE("mode occupations") {
  cmat H = random_hermitian(3, 71);
  BoseHubbardModel m(H, {});
  auto sp = single_particle(m);
  rvec n1 = mode_occupations(m, sp.V.col(0));
  CHECK(std::abs(n1[0] - 1.0) < 1e-12);
  CHECK(n1.tail(2).norm() < 1e-12);
  cvec s = random_state(3, 72);
  rvec n0 = mode_occupations(m, s);
  CHECK(std::abs(n0.sum() - conserved_N(s)) < 1e-12);
  CHECK((mode_occupations(m, integrate(m, s, 30.0).psi) - n0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fixed points") {
  cmat H = random_hermitian(3, 81);
  BoseHubbardModel free3(H, {});
  auto sp = single_particle(free3);
  const double ng = 3.5;
  auto fps = find_fixed_points(free3, shell_samples(3, ng, 40, 3), ng);
  REQUIRE(fps.size() == 3);
  for (const auto& f : fps) {
    CHECK(f.residual < 1e-10);
    CHECK(std::abs(conserved_N(f.psi) - ng) < 1e-10);
    int hit = 0;
    for (int c = 0; c < 3; ++c)
      if (std::abs(f.mu - sp.e[c]) < 1e-9) {
        ++hit;
        CHECK(std::abs(std::abs(sp.V.col(c).dot(f.psi)) - std::sqrt(ng)) < 1e-9);
      }
    CHECK(hit == 1);
  }

  // Balanced dimer state is a relative equilibrium: eom_rhs = -i mu psi.
  cmat Hd(2, 2);
  Hd << 0.0, -1.0, -1.0, 0.0;
  auto dimer = onsite_model(Hd, 0.3);
  cvec bal(2);
  bal << 1.7, 1.7;
  cvec f = eom_rhs(dimer, bal);
  cd mu = cd(0, 1) * f[0] / bal[0];
  CHECK(std::abs(mu.imag()) < 1e-14);
  CHECK((f - (-cd(0, 1) * mu * bal)).norm() < 1e-14);
  auto dfp = find_fixed_points(dimer, shell_samples(2, 2.89 * 2, 30, 4), 2.89 * 2);
  bool found = false;
  for (const auto& p : dfp)
    if (phase_aligned_distance(p.psi, bal) < 1e-8) found = true;
  CHECK(found);
}
