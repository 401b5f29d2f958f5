#pragma once

#include <complex>
#include <string>
#include <vector>

#include "bhtrace/grid.hpp"
#include "bhtrace/orbits.hpp"

namespace bhtrace {

/// Single-particle energies (ascending) and eigenvectors of a U = 0 model.
struct FreeFieldData {
  rvec e;
  cmat V;

  struct Commensurability {
    int a, b;  // 0-based mode indices
    long p, q; // e_a / e_b ~ p / q
  };
  std::vector<Commensurability> commensurable;

  int L() const { return static_cast<int>(e.size()); }
};

/// Diagonalizes H (U is ignored) and scans for commensurable pairs
/// |e_a/e_b - p/q| < tol with p, q <= max_pq.
FreeFieldData free_field_data(const BoseHubbardModel& model, double tol = 1e-9, int max_pq = 64);
FreeFieldData free_field_data(const rvec& e, double tol = 1e-9, int max_pq = 64);

/// Model with H = diag(e), U = 0.
BoseHubbardModel diagonal_model(const rvec& e, std::string label = {});

struct StabilityFactor {
  double value = 0.0;           // prod 2|sin(theta/2)|
  std::vector<double> angles;   // theta per transverse mode chi' != chi
  bool resonant = false;        // some factor < 1e-12
};

/// Rotation angles theta = (alpha + 2 pi k) e_chi'/e_chi - alpha.
StabilityFactor stability_factor(const FreeFieldData& d, int chi, int k, double alpha);

/// 2k + 2 sum floor((k + a/2pi) e_chi'/e_chi - a/2pi) + (L - 1).
int maslov_free(const FreeFieldData& d, int chi, int k, double alpha);

/// Same sum with the constant term fixed to 1.
int maslov_free_unit_constant(const FreeFieldData& d, int chi, int k, double alpha);

/// Eigenvector orbits psi0 = sqrt(N + L/2) v_chi, T = (alpha + 2 pi k)/e_chi
/// for every chi and 1 <= k <= k_max. Orbits with non-positive T are skipped.
std::vector<PseudoPeriodicOrbit> enumerate_orbits(const FreeFieldData& d, int N, int k_max,
                                                  double alpha, bool force = false);

struct FreeDosOptions {
  int k_max = 0;            // 0: from the truncation rule
  int n_alpha = 256;        // >= 64
  double truncation = 1e-6; // Gaussian factor below which repetitions are dropped
  double alpha_node_guard = 1e-9;
  // Re-evaluates with 2 n_alpha nodes and throws if the results differ by
  // more than 1e-4 relative to max |rho|.
  bool check_quadrature = false;
  int threads = 0;
};

struct FreeDosResult {
  DensityGrid grid;
  int k_max = 0;
  int shifted_nodes = 0;  // alpha nodes moved off a near-resonance
  double quadrature_discrepancy = -1.0;  // set when checked
};

/// Oscillatory DOS of the free field with the alpha integral done by the
/// midpoint rule; each repetition is damped by exp(-(T sigma)^2/2).
FreeDosResult freefield_osc_dos(const FreeFieldData& d, int N, const DensityGrid& grid,
                                double sigma, const FreeDosOptions& opts = {});

/// Levels sum n_chi e_chi with sum n_chi = N, ascending.
Spectrum ebk_levels(const FreeFieldData& d, int N);

struct ResidueCheck {
  std::complex<double> lhs, rhs;
  double gap = 0.0;
  int N = 0;
  double E = 0.0, alpha = 0.0, sigma = 0.0;
  int k_max = 0;
  int n_cap = 0;
};

/// Compares the smoothed, phase-weighted occupation sum with the pole sum
/// over k in [-k_max, k_max]. N is echoed into the report.
ResidueCheck residue_identity_check(const FreeFieldData& d, int N, double E, double alpha,
                                    double sigma, int k_max);

/// True if some factor sin((alpha + 2 pi k) e'/(2 e) - alpha/2) with
/// |k| <= k_max is below tol.
bool alpha_is_resonant(const FreeFieldData& d, double alpha, int k_max, double tol = 1e-9);

}  // namespace bhtrace
