#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mts/core.hpp"

// Inner-product space of m x m complex matrices under <a,b> = tau(b^* a),
// where tau = Tr/m is the normalized trace. All norms written ||.||_2 below
// are Hilbert-Schmidt norms with respect to tau.

namespace mts {

namespace detail {

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": matrix must be square and nonempty");
}

}  // namespace detail

/// tau(a) = Tr(a)/m. tau(identity) = 1 for every dimension.
template <typename Derived>
auto normalized_trace(const Eigen::MatrixBase<Derived>& a) {
  detail::require_square(a, "normalized_trace");
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  return Scalar(a.trace()) / Real(a.rows());
}

/// <a,b> = tau(b^* a); linear in a, conjugate-linear in b.
template <typename DerivedA, typename DerivedB>
auto hs_inner(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  detail::require_square(a, "hs_inner");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hs_inner: dimension mismatch");
  using Scalar = typename DerivedA::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  // Tr(b^* a) = sum_ij conj(b_ij) a_ij
  const Scalar raw = b.conjugate().cwiseProduct(a).sum();
  return raw / Real(a.rows());
}

/// ||a||_2 = sqrt(tau(a^* a)).
template <typename Derived>
auto hs_norm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  if (a.rows() == 0 || a.cols() == 0) return Real(0);
  return std::sqrt(a.squaredNorm() / Real(a.rows()));
}

/// ||a||_1 = tau(|a|) = (sum of singular values)/m.
template <typename Real>
Real trace_norm(const CMat<Real>& a) {
  detail::require_square(a, "trace_norm");
  Eigen::JacobiSVD<CMat<Real>> svd(a);
  return svd.singularValues().sum() / Real(a.rows());
}

/// Largest singular value.
template <typename Real>
Real operator_norm(const CMat<Real>& a) {
  detail::require_square(a, "operator_norm");
  Eigen::JacobiSVD<CMat<Real>> svd(a);
  return svd.singularValues()(0);
}

template <typename Real>
struct EighResult {
  RVec<Real> values;  // descending
  CMat<Real> vectors; // columns, orthonormal, aligned with values
};

/// Hermitian eigendecomposition with eigenvalues sorted descending.
/// Rejects inputs whose anti-Hermitian part exceeds herm_tol relatively.
template <typename Real>
EighResult<Real> eigh(const CMat<Real>& a, Real herm_tol = Real(1e-12)) {
  detail::require_square(a, "eigh");
  const Real scale = std::max(hs_norm(a), Real(1));
  if (hs_norm(CMat<Real>(a - a.adjoint())) > herm_tol * scale * 2)
    throw std::invalid_argument("eigh: input is not Hermitian");
  const CMat<Real> sym = (a + a.adjoint()) / Real(2);
  Eigen::SelfAdjointEigenSolver<CMat<Real>> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigh: eigensolver failed to converge");
  const Index m = a.rows();
  EighResult<Real> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = CMat<Real>(m, m);
  for (Index j = 0; j < m; ++j) out.vectors.col(j) = solver.eigenvectors().col(m - 1 - j);
  return out;
}

template <typename Real>
struct RangeProjection {
  CMat<Real> projector;   // orthogonal projection onto range(h)
  CMat<Real> basis;       // orthonormal columns spanning range(h)
  RVec<Real> eigenvalues; // descending, full spectrum
  Index rank = 0;
};

/// Spectral projection onto the range of a positive semidefinite matrix.
/// Eigenvalues <= rank_tol * lambda_max count as zero; eigenvalues below
/// -rank_tol * lambda_max are rejected as not positive semidefinite.
template <typename Real>
RangeProjection<Real> range_projection(const CMat<Real>& h, Real rank_tol = Real(1e-9)) {
  const EighResult<Real> eg = eigh(h);
  const Real lmax = std::max(eg.values(0), Real(0));
  const Real cut = rank_tol * lmax;
  if (eg.values(eg.values.size() - 1) < -cut)
    throw std::invalid_argument("range_projection: input is not positive semidefinite");
  Index rank = 0;
  while (rank < eg.values.size() && eg.values(rank) > cut) ++rank;
  RangeProjection<Real> out;
  out.rank = rank;
  out.eigenvalues = eg.values;
  out.basis = eg.vectors.leftCols(rank);
  out.projector = out.basis * out.basis.adjoint();
  return out;
}

/// Positive square root through the spectral decomposition. Eigenvalues
/// within psd_tol * lambda_max of zero are treated as exactly zero; without
/// this, O(eps) noise on a rank-deficient input turns into O(sqrt(eps)) noise
/// on the root.
template <typename Real>
CMat<Real> sqrt_spectral(const CMat<Real>& c, Real psd_tol = Real(1e-9)) {
  const EighResult<Real> eg = eigh(c);
  const Real lmax = std::max(eg.values(0), Real(0));
  if (eg.values(eg.values.size() - 1) < -psd_tol * lmax)
    throw std::invalid_argument("sqrt_spectral: input is not positive semidefinite");
  const Real cut = psd_tol * lmax;
  RVec<Real> roots(eg.values.size());
  for (Index i = 0; i < eg.values.size(); ++i)
    roots(i) = eg.values(i) > cut ? std::sqrt(eg.values(i)) : Real(0);
  return eg.vectors * roots.asDiagonal() * eg.vectors.adjoint();
}

/// Positive square root through the monotone quadratic fixed point
/// x <- x + (c - x^2)/2 on the unit-rescaled input; converges for spectra in
/// [0, 1]. Every iterate is a polynomial in the rescaled input, so the
/// recursion acts on each eigenvalue independently; the same recursion is
/// advanced on the spectrum to steer termination, because the squared
/// residual understates the error in the root by the reciprocal of the
/// smallest root. Stops once both ||x^2 - c||_2 <= tol * max(1, ||c||_2) and
/// ||x - sqrt(c)||_2 <= 10 * tol * max(1, ||c||_2^(1/2)) hold.
template <typename Real>
CMat<Real> sqrt_sznagy(const CMat<Real>& c, int max_iters = 200000, Real tol = Real(1e-10)) {
  const EighResult<Real> eg = eigh(c);
  const Real lmax = std::max(eg.values(0), Real(0));
  if (eg.values(eg.values.size() - 1) < -Real(1e-9) * lmax)
    throw std::invalid_argument("sqrt_sznagy: input is not positive semidefinite");
  const Index m = c.rows();
  const Real scale = c.trace().real();  // >= operator norm for PSD input
  if (scale <= Real(0)) return CMat<Real>::Zero(m, m);
  const CMat<Real> target = ((c + c.adjoint()) / Real(2)) / scale;
  const Real norm_c = hs_norm(c);
  const Real residual_target = tol * std::max(Real(1), norm_c) / scale;
  const Real error_target =
      Real(10) * tol * std::max(Real(1), std::sqrt(norm_c)) / std::sqrt(scale);
  RVec<Real> t(m), roots(m);
  for (Index i = 0; i < m; ++i) {
    t(i) = std::clamp(eg.values(i) / scale, Real(0), Real(1));
    roots(i) = std::sqrt(t(i));
  }
  RVec<Real> xs = RVec<Real>::Zero(m);
  CMat<Real> x = CMat<Real>::Zero(m, m);
  for (int iter = 0; iter < max_iters; ++iter) {
    const CMat<Real> defect = target - x * x;
    if (hs_norm(defect) <= residual_target && (roots - xs).maxCoeff() <= error_target)
      return std::sqrt(scale) * x;
    x += defect / Real(2);
    xs += (t - xs.cwiseProduct(xs)) / Real(2);
  }
  throw std::runtime_error("sqrt_sznagy: no convergence within the iteration budget");
}

/// Orthonormal family in the Hilbert-Schmidt space of m x m matrices.
template <typename Real>
struct SubspaceBasis {
  Index matrix_dim = 0;               // m; ambient space has complex dimension m^2
  std::vector<CMat<Real>> vectors;    // pairwise orthonormal under hs_inner

  Index size() const { return static_cast<Index>(vectors.size()); }
  bool empty() const { return vectors.empty(); }

  /// Columns are vec(v)/sqrt(m), Euclidean-orthonormal iff the basis is.
  CMat<Real> stacked() const {
    const Index m = matrix_dim;
    CMat<Real> out(m * m, size());
    for (Index k = 0; k < size(); ++k)
      out.col(k) = Eigen::Map<const CVec<Real>>(vectors[static_cast<std::size_t>(k)].data(), m * m) /
                   std::sqrt(Real(m));
    return out;
  }

  /// Largest deviation of the Gram matrix from the identity.
  Real gram_defect() const {
    if (empty()) return Real(0);
    const CMat<Real> x = stacked();
    return (x.adjoint() * x - CMat<Real>::Identity(size(), size())).cwiseAbs().maxCoeff();
  }

  /// Orthogonal projection of x onto the span.
  CMat<Real> project(const CMat<Real>& x) const {
    CMat<Real> out = CMat<Real>::Zero(matrix_dim, matrix_dim);
    for (const auto& v : vectors) out += hs_inner(x, v) * v;
    return out;
  }
};

/// Modified Gram-Schmidt with one re-orthogonalization pass. Vectors whose
/// residual drops below drop_tol times their original norm are discarded.
template <typename Real>
SubspaceBasis<Real> orthonormalize(const std::vector<CMat<Real>>& raw,
                                   Index matrix_dim,
                                   Real drop_tol = Real(1e-10)) {
  SubspaceBasis<Real> out;
  out.matrix_dim = matrix_dim;
  for (const auto& v : raw) {
    if (v.rows() != matrix_dim || v.cols() != matrix_dim)
      throw std::invalid_argument("orthonormalize: dimension mismatch");
    const Real original = hs_norm(v);
    if (original <= Real(0)) continue;
    CMat<Real> w = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : out.vectors) w -= hs_inner(w, u) * u;
    const Real residual = hs_norm(w);
    if (residual >= drop_tol * original) out.vectors.push_back(w / residual);
  }
  return out;
}

namespace detail {

// Pull a matrix back out of its stacked column representation.
template <typename Real>
CMat<Real> unstack(const CVec<Real>& column, Index m) {
  CMat<Real> out = Eigen::Map<const CMat<Real>>(column.data(), m, m);
  return out * std::sqrt(Real(m));
}

}  // namespace detail

/// Intersection of two spans via principal angles. A cosine sigma counts as
/// one (a shared direction) when sigma >= 1 - angle_tol. Representatives are
/// polished by alternating projections, finishing on the span of b, and are
/// returned orthonormal.
template <typename Real>
SubspaceBasis<Real> subspace_intersection(const SubspaceBasis<Real>& a,
                                          const SubspaceBasis<Real>& b,
                                          Real angle_tol = Real(1e-9)) {
  if (a.matrix_dim != b.matrix_dim)
    throw std::invalid_argument("subspace_intersection: ambient dimension mismatch");
  SubspaceBasis<Real> out;
  out.matrix_dim = a.matrix_dim;
  if (a.empty() || b.empty()) return out;

  const CMat<Real> x = a.stacked();
  const CMat<Real> y = b.stacked();
  const CMat<Real> gram = x.adjoint() * y;  // p x q, singular values = cos(angles)

  // Cosines and principal directions from the smaller Hermitian square;
  // only the near-unit end of the spectrum is consumed, which squaring keeps intact.
  const bool use_left = gram.rows() <= gram.cols();
  const CMat<Real> square = use_left ? CMat<Real>(gram * gram.adjoint())
                                     : CMat<Real>(gram.adjoint() * gram);
  const EighResult<Real> eg = eigh(square);
  const Real cut = Real(1) - angle_tol;

  std::vector<CMat<Real>> found;
  for (Index k = 0; k < eg.values.size(); ++k) {
    const Real cos2 = std::max(eg.values(k), Real(0));
    if (std::sqrt(cos2) < cut) break;
    CVec<Real> col = (use_left ? x : y) * eg.vectors.col(k);
    // polish: alternate between the two spans to drive both residuals to
    // rounding level, ending on span(b)
    for (int pass = 0; pass < 64; ++pass) {
      col = x * (x.adjoint() * col);
      col = y * (y.adjoint() * col);
      const Real norm = col.norm();
      if (norm <= Real(0)) break;
      col /= norm;
      const Real res_a = (col - x * (x.adjoint() * col)).norm();
      if (res_a <= Real(1e-14)) break;
    }
    if (col.norm() > Real(0)) found.push_back(detail::unstack(col, a.matrix_dim));
  }
  return orthonormalize(found, a.matrix_dim, Real(1e-6));
}

}  // namespace mts
