#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "mts/core.hpp"
#include "mts/hilbert_schmidt.hpp"
#include "mts/marginal.hpp"

// Vectors xi in C^n (x) C^n are identified with their n x n coefficient
// matrices X via xi(i n + j) = X(i, j); the Schmidt data of xi is the
// singular value decomposition of X.

namespace mts {

namespace detail {

template <typename Real>
Index factor_dim_of_vector(const CVec<Real>& xi, const char* who) {
  const Index m = xi.size();
  const Index n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(m))));
  if (n <= 0 || n * n != m)
    throw std::invalid_argument(std::string(who) + ": vector length must be a perfect square");
  return n;
}

template <typename Real>
CMat<Real> coefficient_matrix(const CVec<Real>& xi, Index n) {
  CMat<Real> x(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) x(i, j) = xi(i * n + j);
  return x;
}

}  // namespace detail

template <typename Real>
struct SchmidtDecomposition {
  Index n = 0;
  RVec<Real> coefficients;  // nonnegative, descending, sum of squares = 1
  CMat<Real> left_basis;    // orthonormal columns f_k
  CMat<Real> right_basis;   // orthonormal columns g_k
  Index schmidt_rank = 0;   // coefficients above the cutoff

  /// sum_k c_k f_k (x) g_k.
  CVec<Real> reconstruct() const {
    CVec<Real> out = CVec<Real>::Zero(n * n);
    for (Index k = 0; k < n; ++k) {
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          out(i * n + j) += coefficients(k) * left_basis(i, k) * right_basis(j, k);
    }
    return out;
  }
};

/// Schmidt data of a unit vector. The left factors are rephased so their
/// first nonvanishing component is positive real; the right factors absorb
/// the opposite phase, keeping the reconstruction intact.
template <typename Real>
SchmidtDecomposition<Real> schmidt_decompose(const CVec<Real>& xi, Real rank_cut = Real(1e-12)) {
  if (std::abs(xi.norm() - Real(1)) > Real(1e-10))
    throw std::invalid_argument("schmidt_decompose: vector must have unit norm");
  const Index n = detail::factor_dim_of_vector(xi, "schmidt_decompose");
  const CMat<Real> x = detail::coefficient_matrix(xi, n);
  Eigen::JacobiSVD<CMat<Real>> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);

  SchmidtDecomposition<Real> out;
  out.n = n;
  out.coefficients = svd.singularValues();
  out.left_basis = svd.matrixU();
  out.right_basis = svd.matrixV().conjugate();
  for (Index k = 0; k < n; ++k) {
    Index lead = 0;
    while (lead < n && std::abs(out.left_basis(lead, k)) <= Real(1e-12)) ++lead;
    if (lead == n) continue;
    const Complex<Real> entry = out.left_basis(lead, k);
    const Complex<Real> phase = entry / std::abs(entry);
    out.left_basis.col(k) *= std::conj(phase);
    out.right_basis.col(k) *= phase;
  }
  out.schmidt_rank = 0;
  while (out.schmidt_rank < n && out.coefficients(out.schmidt_rank) > rank_cut)
    ++out.schmidt_rank;
  return out;
}

/// All Schmidt coefficients within tol of 1/sqrt(n); equivalently sqrt(n)
/// times the coefficient matrix is unitary.
template <typename Real>
bool is_maximally_entangled(const CVec<Real>& xi, Real tol = Real(1e-9)) {
  const SchmidtDecomposition<Real> sd = schmidt_decompose(xi);
  const Real flat = Real(1) / std::sqrt(Real(sd.n));
  for (Index k = 0; k < sd.n; ++k)
    if (std::abs(sd.coefficients(k) - flat) > tol) return false;
  return true;
}

/// Both marginals of the vector state |xi><xi| against I/n. Requires the
/// first marginal to be tracial within tol; returns the second's agreement.
template <typename Real>
bool vector_marginals_tracial(const CVec<Real>& xi, Real tol = Real(1e-10)) {
  const Index n = detail::factor_dim_of_vector(xi, "vector_marginals_tracial");
  const CMat<Real> x = detail::coefficient_matrix(xi, n);
  const CMat<Real> id = CMat<Real>::Identity(n, n) / Real(n);
  const Real first = hs_norm(CMat<Real>(x * x.adjoint() - id));
  if (first > tol)
    throw std::invalid_argument("vector_marginals_tracial: first marginal is not tracial");
  const CMat<Real> second = (x.adjoint() * x).transpose();
  return hs_norm(CMat<Real>(second - id)) <= tol;
}

/// Solve (phi (x) I) xi = eta for phi, for a maximally entangled xi:
/// phi = Y X^{-1} on coefficient matrices. The residual of the returned
/// operator is verified below 1e-10.
template <typename Real>
CMat<Real> solve_local_operator(const CVec<Real>& xi, const CVec<Real>& eta,
                                Real entangle_tol = Real(1e-8)) {
  const Index n = detail::factor_dim_of_vector(xi, "solve_local_operator");
  if (eta.size() != xi.size())
    throw std::invalid_argument("solve_local_operator: vector length mismatch");
  if (!is_maximally_entangled(xi, entangle_tol))
    throw std::invalid_argument("solve_local_operator: xi is not maximally entangled");
  const CMat<Real> x = detail::coefficient_matrix(xi, n);
  const CMat<Real> y = detail::coefficient_matrix(eta, n);
  // sqrt(n) X is unitary, so the solve is perfectly conditioned
  const CMat<Real> phi = y * x.inverse();
  if ((phi * x - y).norm() > Real(1e-10))
    throw std::runtime_error("solve_local_operator: residual check failed");
  return phi;
}

/// Coefficient vector of a pure marginal tracial state with unitary lambda.
template <typename Real>
CVec<Real> vector_from_unitary(const CMat<Real>& lambda) {
  detail::require_square(lambda, "vector_from_unitary");
  const Index n = lambda.rows();
  const CMat<Real> defect = lambda.adjoint() * lambda - CMat<Real>::Identity(n, n);
  if (defect.norm() > Real(1e-10) * std::sqrt(Real(n)))
    throw std::invalid_argument("vector_from_unitary: input is not unitary");
  CVec<Real> xi(n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) xi(i * n + j) = lambda(i, j) / std::sqrt(Real(n));
  return xi;
}

}  // namespace mts
