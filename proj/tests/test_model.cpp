#include <cmath>
#include <numeric>

#include "doctest.h"

#include "bhtrace/grid.hpp"
#include "bhtrace/model.hpp"

using namespace bhtrace;

namespace {

cmat hop2() {
  cmat H(2, 2);
  H << 0.0, -1.0, -1.0, 0.0;
  return H;
}

}  // namespace

TEST_CASE("basis sizes and enumeration") {
  auto b = build_basis(2, 1);
  REQUIRE(b.size() == 2);
  CHECK(b.state(0) == std::vector<int>{1, 0});
  CHECK(b.state(1) == std::vector<int>{0, 1});
  CHECK(build_basis(3, 3).size() == 10);
  auto b1 = build_basis(1, 5);
  REQUIRE(b1.size() == 1);
  CHECK(b1.state(0) == std::vector<int>{5});
  CHECK(sector_dimension(3, 20) == 231);
}

TEST_CASE("basis is lexicographically descending and index inverts states") {
  auto b = build_basis(4, 5);
  CHECK(b.size() == sector_dimension(4, 5));
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(b.index(b.state(i)).value() == i);
    CHECK(std::accumulate(b.state(i).begin(), b.state(i).end(), 0) == 5);
    if (i > 0) CHECK(b.state(i - 1) > b.state(i));
  }
  CHECK_FALSE(b.index({1, 1, 1, 1}).has_value());
}

TEST_CASE("basis cap") {
  try {
    build_basis(10, 20, 1000);
    FAIL("expected size_overflow");
  } catch (const Error& e) {
    CHECK(e.code() == "size_overflow");
  }
}

TEST_CASE("hopping dimer with one particle") {
  BoseHubbardModel m(hop2(), {});
  auto s = exact_spectrum(m, 1);
  REQUIRE(s.energies.size() == 2);
  CHECK(s.energies[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(s.energies[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("single interacting mode") {
  cmat H(1, 1);
  H << 0.7;
  auto m = onsite_model(H, 0.3);
  for (int n : {0, 1, 4, 9}) {
    auto s = exact_spectrum(m, n);
    REQUIRE(s.energies.size() == 1);
    CHECK(s.energies[0] == doctest::Approx(0.7 * n + 0.15 * n * (n - 1)).epsilon(1e-13));
  }
}

TEST_CASE("interacting dimer N=2 against the hand-written 3x3 matrix") {
  // Basis (2,0),(1,1),(0,2): diagonal u n(n-1)/2 per site, hopping -sqrt(2).
  // Antisymmetric vector gives 0.2; the symmetric block [[0.2,-2],[-2,0]]
  // gives 0.1 -+ sqrt(4.01).
  auto m = onsite_model(hop2(), 0.2);
  auto s = exact_spectrum(m, 2);
  REQUIRE(s.energies.size() == 3);
  CHECK(std::abs(s.energies[0] - (0.1 - std::sqrt(4.01))) < 1e-12);
  CHECK(std::abs(s.energies[1] - 0.2) < 1e-12);
  CHECK(std::abs(s.energies[2] - (0.1 + std::sqrt(4.01))) < 1e-12);

  auto M = build_hamiltonian(m, build_basis(2, 2));
  CHECK(std::abs(M(0, 0).real() - 0.2) < 1e-15);
  CHECK(std::abs(M(0, 1).real() + std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(M(0, 2)) == 0.0);
}

TEST_CASE("free-field spectrum and vacuum") {
  cmat H = cmat::Zero(2, 2);
  H(0, 0) = 1.0;
  H(1, 1) = std::sqrt(2.0);
  BoseHubbardModel m(H, {});
  auto s = exact_spectrum(m, 2);
  REQUIRE(s.energies.size() == 3);
  CHECK(s.energies[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.energies[1] == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.energies[2] == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

  auto dimer = onsite_model(hop2(), 0.5);
  auto v = exact_spectrum(dimer, 0);
  REQUIRE(v.energies.size() == 1);
  CHECK(v.energies[0] == 0.0);
}

TEST_CASE("free-field factorization for a random Hermitian matrix") {
  cmat A = cmat::Random(3, 3);
  cmat H = 0.5 * (A + A.adjoint());
  BoseHubbardModel m(H, {});
  Eigen::SelfAdjointEigenSolver<cmat> es(H);
  const rvec e = es.eigenvalues();
  std::vector<double> want;
  const int N = 4;
  for (int a = 0; a <= N; ++a)
    for (int b = 0; a + b <= N; ++b) want.push_back(a * e[0] + b * e[1] + (N - a - b) * e[2]);
  std::sort(want.begin(), want.end());
  auto s = exact_spectrum(m, N);
  REQUIRE(s.energies.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(s.energies[i] - want[i]) < 1e-10);
}

TEST_CASE("sector matrix is Hermitian and number conserving") {
  cmat A = cmat::Random(3, 3);
  cmat H = 0.5 * (A + A.adjoint());
  std::vector<Coupling> U{{0, 0, 0, 0, 0.3}, {0, 1, 1, 0, 0.1}, {0, 1, 2, 0, 0.05}, {2, 0, 0, 1, 0.05}};
  BoseHubbardModel m(H, U);
  auto b = build_basis(3, 4);
  cmat M = build_hamiltonian(m, b);
  CHECK((M - M.adjoint()).cwiseAbs().maxCoeff() < 1e-14 * std::max(1.0, M.cwiseAbs().maxCoeff()));
}

TEST_CASE("model validation") {
  cmat H(2, 2);
  H << 0.0, 1.0, 2.0, 0.0;
  CHECK_THROWS_AS(BoseHubbardModel(H, {}), Error);
  CHECK_THROWS_AS(BoseHubbardModel(hop2(), {{0, 0, 0, 5, 1.0}}), Error);
  // Reordered duplicates are merged by symmetrization.
  BoseHubbardModel m(hop2(), {{0, 1, 1, 0, 0.2}, {1, 0, 0, 1, 0.2}});
  CHECK(m.u(0, 1, 1, 0) == doctest::Approx(0.2));
  CHECK(m.hash() == BoseHubbardModel(hop2(), {{1, 0, 0, 1, 0.2}, {0, 1, 1, 0, 0.2}}).hash());
}

TEST_CASE("smoothed DOS") {
  Spectrum one{0, {0.0}};
  DensityGrid g(-10.0, 10.0, 2001);
  auto d = smoothed_dos(one, g, 1.0);
  CHECK(d.values[1000] == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
  CHECK(std::abs(d.integral() - 1.0) < 1e-6);

  Spectrum three{2, {2.0, 1.0 + std::sqrt(2.0), 2.0 * std::sqrt(2.0)}};
  DensityGrid g3(1.0, 4.0, 3000);
  CHECK(std::abs(smoothed_dos(three, g3, 0.05).integral() - 3.0) < 1e-6 * 3.0);

  CHECK_THROWS_AS(smoothed_dos(Spectrum{0, {}}, g, 1.0), Error);
  CHECK_THROWS_AS(smoothed_dos(one, g, 0.0), Error);
}
