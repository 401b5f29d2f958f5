#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bhtrace/meanfield.hpp"

namespace bhtrace {

/// psi(T) = psi(0) exp(-i alpha).
struct PseudoPeriodicOrbit {
  cvec psi0;
  double T = 0.0;
  double alpha = 0.0;  // in [0, 2 pi)
  double energy = 0.0;
  double n_gamma = 0.0;
  int repetition = 1;
  double T_primitive = 0.0;
  double alpha_primitive = 0.0;
  double action = 0.0;          // S~ = int theta.ndot + N alpha + 2 pi sum n_l k_l
  std::vector<int> windings;    // k_l
  bool action_cartesian = false;
  rmat monodromy_reduced;
  double stability = 0.0;       // sqrt|det(M - 1)|
  int maslov = 0;
  double residual = 0.0;
  bool degenerate = false;      // flow parallel to the gauge direction
  std::vector<std::string> flags;
};

struct OrbitOptions {
  double tol = 1e-10;
  int max_iter = 40;
  IntegratorOptions integ{1e-13, 1e-15};
  // Samples per unit time used by action, recurrence and Maslov scans.
  double samples_per_time = 40.0;
  // Maslov scans also take this many samples per radian of the fastest
  // linearized frequency.
  double samples_per_radian = 48.0;
  int min_samples = 400;
  int n_shift = 8;
  bool finalize = true;
};

/// Which quantities the Newton solve holds fixed besides the shell N.
struct OrbitConstraints {
  double n_target = 0.0;
  std::optional<double> energy;  // fix E(psi0)
  std::optional<double> alpha;   // fix the phase instead of solving for it
};

/// Components of psi(T) - psi0 e^{-i alpha} in the real layout.
rvec pseudo_residual(const BoseHubbardModel& model, const cvec& psi0, double T, double alpha,
                     const IntegratorOptions& opts = {1e-13, 1e-15});

struct OrbitSolve {
  PseudoPeriodicOrbit orbit;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double constraint_violation = 0.0;
  std::string diagnosis;
};

/// Bordered least-squares Newton in (psi0, T, alpha).
OrbitSolve find_orbit(const BoseHubbardModel& model, const cvec& psi0, double T, double alpha,
                      const OrbitConstraints& cons, const OrbitOptions& opts = {});

struct ActionResult {
  double action = 0.0;
  std::vector<int> windings;
  bool cartesian = false;
};

/// Action from a uniformly sampled trajectory over one pseudo-period.
ActionResult orbit_action(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                          const OrbitOptions& opts = {});

struct ReducedMonodromy {
  rmat M;                 // symplectic, standard form
  rmat basis;             // columns: symplectic basis of the transverse space
  bool degenerate = false;
};

/// Full tangent map composed with the phase rotation and projected onto the
/// complement of span{flow, gauge, grad E, grad N}.
ReducedMonodromy reduced_monodromy(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                                   const OrbitOptions& opts = {});

/// sqrt|det(M - 1)|; 1 for an empty matrix.
double stability_from_monodromy(const rmat& M);

struct Primitive {
  double T_primitive = 0.0;
  int m = 1;
  double alpha_primitive = 0.0;
  std::vector<double> recurrences;  // all detected recurrence times in (0, T]
  bool strict = false;              // full-cycle returns (degenerate orbits)
};

Primitive primitive_decomposition(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                                  const OrbitOptions& opts = {});

struct MaslovReport {
  int total = 0;
  int parallel = 0;          // 2 k from the winding of the orbit phase
  int transverse = 0;        // start + crossings + end terms
  int crossings = 0;         // signed zero crossings of the designated block
  int endpoint = 0;          // caustic (end-point) term
  std::vector<int> per_shift;
  bool closed_form = false;  // evaluated from the free-field formula
};

/// Counting procedure along the orbit with re-anchored initial points.
MaslovReport maslov_count(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                          const OrbitOptions& opts = {});

/// Free-field models use the closed form; otherwise maslov_count.
int maslov_index(const BoseHubbardModel& model, const PseudoPeriodicOrbit& orbit,
                 const OrbitOptions& opts = {});

/// Fills energy, N, residual, primitive data, action, monodromy, Maslov.
void finalize_orbit(const BoseHubbardModel& model, PseudoPeriodicOrbit& orbit,
                    const OrbitOptions& opts = {});

/// True when b is a time- and phase-shift of a within tol.
bool same_orbit(const BoseHubbardModel& model, const PseudoPeriodicOrbit& a,
                const PseudoPeriodicOrbit& b, double tol = 1e-6,
                const OrbitOptions& opts = {});

/// Deduplicating orbit collection.
class OrbitStore {
 public:
  explicit OrbitStore(const BoseHubbardModel& model, double tol = 1e-6)
      : model_(model), tol_(tol) {}
  bool add(const PseudoPeriodicOrbit& orbit);
  const std::vector<PseudoPeriodicOrbit>& orbits() const { return orbits_; }

 private:
  const BoseHubbardModel& model_;
  double tol_;
  std::vector<PseudoPeriodicOrbit> orbits_;
};

/// Small-oscillation seed around a relative equilibrium: returns
/// (psi0, T, alpha) for each elliptic transverse mode.
struct OrbitSeed {
  cvec psi0;
  double T = 0.0;
  double alpha = 0.0;
};
std::vector<OrbitSeed> seeds_near_fixed_point(const BoseHubbardModel& model, const FixedPoint& fp,
                                              double amplitude);

/// Follows a family at fixed N through a list of energies; stops at the
/// first failure. The first entry of the result is the input orbit.
std::vector<PseudoPeriodicOrbit> continue_in_energy(const BoseHubbardModel& model,
                                                    const PseudoPeriodicOrbit& start,
                                                    const std::vector<double>& energies,
                                                    const OrbitOptions& opts = {});

double wrap_phase(double a);  // to [0, 2 pi)

}  // namespace bhtrace
