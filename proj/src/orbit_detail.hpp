#pragma once

#include <vector>

#include "bhtrace/orbits.hpp"

namespace bhtrace::detail {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Orthonormal complex basis (columns) of the complement of
/// span{psi, dpsi/dt}; degenerate when the flow is parallel to psi.
cmat transverse_complex_basis(const BoseHubbardModel& model, const cvec& psi, bool& degenerate);

/// Real symplectic basis [Re-embedding of U, Re-embedding of iU].
rmat realify_basis(const cmat& U);

/// Real form [[Re G, -Im G], [Im G, Re G]] of a complex matrix.
rmat realify_matrix(const cmat& G);

/// Uniform sample count over a time span.
int sample_count(double T, const OrbitOptions& opts);

/// Lower-left (p-from-q) block of a 2m x 2m matrix.
rmat lower_left(const rmat& M);

/// Signature of a symmetric matrix; sets ok=false if an eigenvalue is below tol.
int signature(const rmat& S, double tol, bool& ok);

}  // namespace bhtrace::detail
