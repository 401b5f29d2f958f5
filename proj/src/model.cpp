#include "bhtrace/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>

#include "bhtrace/parallel.hpp"

namespace bhtrace {

namespace {

using Key = std::array<int, 4>;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

BoseHubbardModel::BoseHubbardModel(cmat H, const std::vector<Coupling>& U,
                                   std::string label)
    : H_(std::move(H)), label_(std::move(label)) {
  const int L = static_cast<int>(H_.rows());
  if (L < 1 || H_.cols() != L)
    throw Error("invalid_model", "H must be a non-empty square matrix");
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) {
      if (!std::isfinite(H_(a, b).real()) || !std::isfinite(H_(a, b).imag()))
        throw Error("invalid_model", "H has a non-finite entry");
      if (H_(a, b) != std::conj(H_(b, a)))
        throw Error("invalid_model", "H is not Hermitian");
    }

  std::map<Key, double> acc;
  for (const auto& c : U) {
    for (int l : {c.l1, c.l2, c.l3, c.l4})
      if (l < 0 || l >= L) throw Error("invalid_model", "U index out of range");
    if (!std::isfinite(c.value)) throw Error("invalid_model", "U has a non-finite entry");
    acc[{c.l1, c.l2, c.l3, c.l4}] += 0.5 * c.value;
    acc[{c.l2, c.l1, c.l4, c.l3}] += 0.5 * c.value;
  }
  for (const auto& [k, v] : acc) {
    auto sw = acc.find({k[1], k[0], k[3], k[2]});
    if (sw == acc.end() || sw->second != v)
      throw Error("invalid_model", "U symmetrization failed");
    // Real U must also satisfy U_abcd = U_dcba for a Hermitian operator.
    auto herm = acc.find({k[3], k[2], k[1], k[0]});
    double hv = herm == acc.end() ? 0.0 : herm->second;
    if (std::abs(hv - v) > 1e-14 * std::max(1.0, std::abs(v)))
      throw Error("invalid_model", "U is not Hermitian (U_abcd != U_dcba)");
    if (v != 0.0) U_.push_back({k[0], k[1], k[2], k[3], v});
  }
}

double BoseHubbardModel::u(int a, int b, int c, int d) const {
  Key k{a, b, c, d};
  auto it = std::lower_bound(U_.begin(), U_.end(), k, [](const Coupling& x, const Key& key) {
    return Key{x.l1, x.l2, x.l3, x.l4} < key;
  });
  if (it != U_.end() && Key{it->l1, it->l2, it->l3, it->l4} == k) return it->value;
  return 0.0;
}

std::string BoseHubbardModel::hash() const {
  std::string s = "L=" + std::to_string(L()) + ";H=";
  char buf[64];
  for (int a = 0; a < L(); ++a)
    for (int b = 0; b < L(); ++b) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g;", H_(a, b).real(), H_(a, b).imag());
      s += buf;
    }
  s += "U=";
  for (const auto& c : U_) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g;", c.l1, c.l2, c.l3, c.l4, c.value);
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

BoseHubbardModel onsite_model(const cmat& H, double u, std::string label) {
  std::vector<Coupling> U;
  if (u != 0.0)
    for (int l = 0; l < H.rows(); ++l) U.push_back({l, l, l, l, u});
  return BoseHubbardModel(H, U, std::move(label));
}

std::size_t sector_dimension(int L, int N) {
  if (L < 1 || N < 0) return 0;
  // C(N+L-1, L-1) with saturation.
  const std::size_t big = std::numeric_limits<std::size_t>::max();
  int k = std::min(L - 1, N);
  long double r = 1.0L;
  std::size_t exact = 1;
  bool overflow = false;
  for (int i = 1; i <= k; ++i) {
    r = r * (N + L - 1 - k + i) / i;
    if (!overflow) {
      // exact * (n-k+i) / i stays integral at every step.
      std::size_t num = static_cast<std::size_t>(N + L - 1 - k + i);
      if (exact > big / num) {
        overflow = true;
      } else {
        exact = exact * num / static_cast<std::size_t>(i);
      }
    }
  }
  if (overflow) return r >= static_cast<long double>(big) ? big : static_cast<std::size_t>(r);
  return exact;
}

FockBasis build_basis(int L, int N, std::size_t cap) {
  if (L < 1) throw Error("invalid_argument", "L must be >= 1");
  if (N < 0) throw Error("invalid_argument", "N must be >= 0");
  std::size_t dim = sector_dimension(L, N);
  if (dim > cap)
    throw Error("size_overflow", "sector dimension " + std::to_string(dim) +
                                     " exceeds cap " + std::to_string(cap));
  FockBasis b;
  b.L_ = L;
  b.N_ = N;
  b.states_.reserve(dim);
  std::vector<int> n(L, 0);
  n[0] = N;
  // Lexicographically descending enumeration.
  while (true) {
    b.states_.push_back(n);
    if (L == 1) break;
    // Find rightmost position j < L-1 with n[j] > 0; move one quantum right
    // and gather everything after j into position j+1.
    int j = L - 2;
    while (j >= 0 && n[j] == 0) --j;
    if (j < 0) break;
    n[j] -= 1;
    int rest = 1;
    for (int i = j + 1; i < L; ++i) {
      rest += n[i];
      n[i] = 0;
    }
    n[j + 1] = rest;
  }
  return b;
}

std::optional<std::size_t> FockBasis::index(const std::vector<int>& n) const {
  if (static_cast<int>(n.size()) != L_) return std::nullopt;
  int sum = 0;
  for (int x : n) {
    if (x < 0) return std::nullopt;
    sum += x;
  }
  if (sum != N_) return std::nullopt;
  std::size_t pos = 0;
  int rem = N_;
  for (int i = 0; i + 1 < L_; ++i) {
    // States earlier in order have a larger value at position i.
    for (int v = rem; v > n[i]; --v) pos += sector_dimension(L_ - i - 1, rem - v);
    rem -= n[i];
  }
  return pos;
}

namespace {

// Applies a_l (create=false) or a+_l to occupation n, scaling amp.
inline bool apply_op(std::vector<int>& n, int l, bool create, double& amp) {
  if (create) {
    n[l] += 1;
    amp *= std::sqrt(static_cast<double>(n[l]));
  } else {
    if (n[l] == 0) return false;
    amp *= std::sqrt(static_cast<double>(n[l]));
    n[l] -= 1;
  }
  return true;
}

}  // namespace

cmat build_hamiltonian(const BoseHubbardModel& model, const FockBasis& basis, int threads) {
  if (model.L() != basis.L())
    throw Error("index_mismatch", "model L=" + std::to_string(model.L()) +
                                      " but basis L=" + std::to_string(basis.L()));
  const int L = model.L();
  const std::size_t D = basis.size();
  cmat M = cmat::Zero(D, D);
  const cmat& H = model.H();
  const auto& U = model.U();
  parallel_for(D, threads, [&](std::size_t j) {
    const auto& n0 = basis.state(j);
    std::vector<int> n(L);
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) {
        if (H(a, b) == 0.0) continue;
        n = n0;
        double amp = 1.0;
        if (!apply_op(n, b, false, amp)) continue;
        apply_op(n, a, true, amp);
        M(*basis.index(n), j) += H(a, b) * amp;
      }
    for (const auto& c : U) {
      n = n0;
      double amp = 1.0;
      if (!apply_op(n, c.l4, false, amp)) continue;
      if (!apply_op(n, c.l3, false, amp)) continue;
      apply_op(n, c.l2, true, amp);
      apply_op(n, c.l1, true, amp);
      M(*basis.index(n), j) += 0.5 * c.value * amp;
    }
  });
  return M;
}

Spectrum exact_spectrum(const BoseHubbardModel& model, int N, std::size_t cap, int threads) {
  FockBasis basis = build_basis(model.L(), N, cap);
  cmat M = build_hamiltonian(model, basis, threads);
  Eigen::SelfAdjointEigenSolver<cmat> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error("eigensolver", "eigensolver did not converge for sector size " +
                                   std::to_string(basis.size()));
  Spectrum s;
  s.N = N;
  s.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(s.energies.begin(), s.energies.end());
  return s;
}

}  // namespace bhtrace
