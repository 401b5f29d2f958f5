#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bhtrace {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

/// Error raised for invalid inputs; `code` is a short machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// One sparse two-body entry U_{l1 l2 l3 l4}, 0-based.
struct Coupling {
  int l1, l2, l3, l4;
  double value;
};

/// H = sum H_ab a+_a a_b + 1/2 sum U_abcd a+_a a+_b a_c a_d.
class BoseHubbardModel {
 public:
  /// Validates H and symmetrizes U under (a,b,c,d) -> (b,a,d,c).
  /// Duplicate entries are summed.
  BoseHubbardModel(cmat H, const std::vector<Coupling>& U, std::string label = {});

  int L() const { return static_cast<int>(H_.rows()); }
  const cmat& H() const { return H_; }
  const std::vector<Coupling>& U() const { return U_; }
  const std::string& label() const { return label_; }
  bool is_free() const { return U_.empty(); }

  /// Coupling value, 0 when absent.
  double u(int a, int b, int c, int d) const;

  /// Stable 16-hex-digit digest of the numerical content.
  std::string hash() const;

 private:
  cmat H_;
  std::vector<Coupling> U_;  // sorted by index tuple, zeros dropped
  std::string label_;
};

/// On-site model: U_llll = u for every site.
BoseHubbardModel onsite_model(const cmat& H, double u, std::string label = {});

/// Occupation vectors of fixed total N, lexicographically descending.
class FockBasis {
 public:
  int L() const { return L_; }
  int N() const { return N_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<std::vector<int>>& states() const { return states_; }
  const std::vector<int>& state(std::size_t i) const { return states_[i]; }

  /// Position of an occupation vector, nullopt if not in the sector.
  std::optional<std::size_t> index(const std::vector<int>& n) const;

 private:
  friend FockBasis build_basis(int, int, std::size_t);
  int L_ = 0, N_ = 0;
  std::vector<std::vector<int>> states_;
};

/// Number of occupation vectors of L modes with total N, C(N+L-1, L-1).
/// Saturates at SIZE_MAX.
std::size_t sector_dimension(int L, int N);

inline constexpr std::size_t kDefaultBasisCap = 2'000'000;

FockBasis build_basis(int L, int N, std::size_t cap = kDefaultBasisCap);

/// Dense matrix of the Hamiltonian on the sector; column j is H|state_j>.
cmat build_hamiltonian(const BoseHubbardModel& model, const FockBasis& basis,
                       int threads = 0);

struct Spectrum {
  int N = 0;
  std::vector<double> energies;  // ascending
};

Spectrum exact_spectrum(const BoseHubbardModel& model, int N,
                        std::size_t cap = kDefaultBasisCap, int threads = 0);

}  // namespace bhtrace
