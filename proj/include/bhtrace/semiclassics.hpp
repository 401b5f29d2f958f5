#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "bhtrace/grid.hpp"
#include "bhtrace/orbits.hpp"

namespace bhtrace {

/// How the shell average is scaled into a density of states.
enum class WeylNormalization {
  SumRule,  // integral = (N + L/2)^(L-1) / (L-1)!
  Literal,  // (4/pi)^L prefactor read directly, 4^L times the sum-rule value
};

struct WeylOptions {
  std::uint64_t seed = 1;
  int threads = 0;
  WeylNormalization normalization = WeylNormalization::SumRule;
};

struct WeylEstimate {
  DensityGrid grid;
  long long n_samples = 0;
  std::vector<double> standard_error;
  double integral = 0.0;     // sample mean of the mass on the grid, scaled
  double integral_se = 0.0;
};

/// Number of independent random streams; fixed so results do not depend on
/// the thread count.
constexpr int kWeylStreams = 64;

/// Monte Carlo shell average R^(2L-2)/(L-1)! <g_sigma(E - H_MF)> on
/// |psi|^2 = N + L/2.
WeylEstimate weyl_dos(const BoseHubbardModel& model, int N, const DensityGrid& grid,
                      long long n_samples, double sigma, const WeylOptions& opts = {});

/// Orbits of one family at fixed N_gamma, sorted by energy.
struct OrbitFamily {
  std::vector<PseudoPeriodicOrbit> members;
};

struct OscillatoryResult {
  DensityGrid grid;
  int used = 0;
  int excluded = 0;  // |det(M - 1)| below 1e-8
};

/// S_po = S~ - alpha N_gamma, the phase that enters the cosine.
double trace_action(const PseudoPeriodicOrbit& o);

/// Sum over families of T_ppo/(pi sqrt|det(M-1)|) cos(S_po(E) - sigma pi/2)
/// exp(-(T sigma_E)^2/2). S_po(E) is Hermite-interpolated with dS/dE = T
/// inside a family's range and linearized for single-member families.
OscillatoryResult oscillatory_dos(const std::vector<OrbitFamily>& families,
                                  const DensityGrid& grid, double sigma);

/// Bin-wise sum; throws on layout mismatch.
DensityGrid total_dos(const WeylEstimate& weyl, const DensityGrid& osc);

/// Hann window sin^2(pi (E - lo)/(hi - lo)) on [lo, hi].
struct EnergyWindow {
  double lo = 0.0;
  double hi = 0.0;
  double operator()(double E) const;
  double width() const { return hi - lo; }
};

/// C(t) = sum_n w(E_n) exp(i E_n t).
std::vector<std::complex<double>> time_spectrum(const Spectrum& spectrum, const EnergyWindow& w,
                                                const std::vector<double>& t_grid);

struct Peak {
  double t;
  double height;
};

/// Local maxima of |C| above floor, refined by a parabola through the three
/// neighbouring samples.
std::vector<Peak> find_peaks(const std::vector<double>& t_grid,
                             const std::vector<std::complex<double>>& C, double floor);

}  // namespace bhtrace
