#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "mts/core.hpp"
#include "mts/hilbert_schmidt.hpp"

// States on the coupled algebra M_n (x) M_n, identified with positive matrices
// h of normalized trace one via phi(x) = tau(h x). A state is marginal tracial
// when both conditional expectations onto the tensor factors send h to the
// identity. Index convention: the basis vector e_i (x) e_k of C^n (x) C^n
// sits at position i*n + k, matching kroneckerProduct.

namespace mts {

namespace detail {

template <typename Real>
void require_coupled(const CMat<Real>& x, Index n, const char* who) {
  if (n <= 0) throw std::invalid_argument(std::string(who) + ": factor dimension must be positive");
  if (x.rows() != n * n || x.cols() != n * n)
    throw std::invalid_argument(std::string(who) + ": expected an n^2 x n^2 matrix");
}

}  // namespace detail

/// Trace over the second factor: out(i,j) = sum_k x(i n + k, j n + k).
template <typename Real>
CMat<Real> partial_trace_second(const CMat<Real>& x, Index n) {
  detail::require_coupled(x, n, "partial_trace_second");
  CMat<Real> out = CMat<Real>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) out(i, j) += x(i * n + k, j * n + k);
  return out;
}

/// Trace over the first factor: out(k,l) = sum_i x(i n + k, i n + l).
template <typename Real>
CMat<Real> partial_trace_first(const CMat<Real>& x, Index n) {
  detail::require_coupled(x, n, "partial_trace_first");
  CMat<Real> out = CMat<Real>::Zero(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index l = 0; l < n; ++l)
      for (Index i = 0; i < n; ++i) out(k, l) += x(i * n + k, i * n + l);
  return out;
}

/// Trace-preserving conditional expectation onto the first factor,
/// P(x) = (Tr_2 x / n) (x) I.
template <typename Real>
CMat<Real> cond_exp_first(const CMat<Real>& x, Index n) {
  const CMat<Real> reduced = partial_trace_second(x, n) / Real(n);
  return Eigen::kroneckerProduct(reduced, CMat<Real>::Identity(n, n));
}

/// Trace-preserving conditional expectation onto the second factor,
/// Q(x) = I (x) (Tr_1 x / n).
template <typename Real>
CMat<Real> cond_exp_second(const CMat<Real>& x, Index n) {
  const CMat<Real> reduced = partial_trace_first(x, n) / Real(n);
  return Eigen::kroneckerProduct(CMat<Real>::Identity(n, n), reduced);
}

/// (P - Q)^2 = P + Q - 2 tau(.) I: the orthogonal projection onto the sum of
/// the two traceless one-sided slots, N (x) I + I (x) N.
template <typename Real>
CMat<Real> proj_one_sided(const CMat<Real>& x, Index n) {
  detail::require_coupled(x, n, "proj_one_sided");
  const Complex<Real> t = normalized_trace(x);
  return cond_exp_first(x, n) + cond_exp_second(x, n) -
         Real(2) * t * CMat<Real>::Identity(n * n, n * n);
}

/// Complementary projection onto C I + (N (x) N): identity component plus the
/// fully correlated component.
template <typename Real>
CMat<Real> proj_scalar_correlated(const CMat<Real>& x, Index n) {
  return x - proj_one_sided(x, n);
}

/// Projection onto the correlated component V = N (x) N alone.
template <typename Real>
CMat<Real> proj_correlated(const CMat<Real>& x, Index n) {
  detail::require_coupled(x, n, "proj_correlated");
  const Complex<Real> t = normalized_trace(x);
  return x - cond_exp_first(x, n) - cond_exp_second(x, n) +
         t * CMat<Real>::Identity(n * n, n * n);
}

/// Hermitian orthonormal basis of the traceless part N of M_n:
/// n^2 - 1 elements, hs_inner-orthonormal, closed under adjoints.
template <typename Real>
std::vector<CMat<Real>> traceless_basis(Index n) {
  if (n <= 0) throw std::invalid_argument("traceless_basis: dimension must be positive");
  std::vector<CMat<Real>> out;
  out.reserve(static_cast<std::size_t>(n * n - 1));
  const Real offdiag = std::sqrt(Real(n) / Real(2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      CMat<Real> sym = CMat<Real>::Zero(n, n);
      sym(i, j) = offdiag;
      sym(j, i) = offdiag;
      out.push_back(sym);
      CMat<Real> skew = CMat<Real>::Zero(n, n);
      skew(i, j) = Complex<Real>(0, offdiag);
      skew(j, i) = Complex<Real>(0, -offdiag);
      out.push_back(skew);
    }
  }
  for (Index k = 1; k < n; ++k) {
    CMat<Real> diag = CMat<Real>::Zero(n, n);
    const Real scale = std::sqrt(Real(n) / Real(k * (k + 1)));
    for (Index i = 0; i < k; ++i) diag(i, i) = scale;
    diag(k, k) = -scale * Real(k);
    out.push_back(diag);
  }
  return out;
}

/// Orthonormal basis of N (x) I + I (x) N: 2(n^2 - 1) Hermitian elements.
template <typename Real>
SubspaceBasis<Real> one_sided_basis(Index n) {
  const auto single = traceless_basis<Real>(n);
  const CMat<Real> id = CMat<Real>::Identity(n, n);
  SubspaceBasis<Real> out;
  out.matrix_dim = n * n;
  for (const auto& u : single) out.vectors.push_back(Eigen::kroneckerProduct(u, id));
  for (const auto& u : single) out.vectors.push_back(Eigen::kroneckerProduct(id, u));
  return out;
}

/// Orthonormal basis of the correlated component V = N (x) N:
/// (n^2 - 1)^2 Hermitian elements.
template <typename Real>
SubspaceBasis<Real> correlated_basis(Index n) {
  const auto single = traceless_basis<Real>(n);
  SubspaceBasis<Real> out;
  out.matrix_dim = n * n;
  out.vectors.reserve(single.size() * single.size());
  for (const auto& u : single)
    for (const auto& v : single) out.vectors.push_back(Eigen::kroneckerProduct(u, v));
  return out;
}

/// Density element of a state on the coupled algebra: h is Hermitian,
/// positive semidefinite within rank_tol, with tau(h) = 1 (Tr h = n^2).
template <typename Real>
struct StateElement {
  Index n = 0;
  CMat<Real> h;
  Real rank_tol = Real(1e-9);

  Index coupled_dim() const { return n * n; }

  void validate() const {
    detail::require_coupled(h, n, "StateElement");
    if (!h.allFinite()) throw std::invalid_argument("StateElement: entries must be finite");
    const Real scale = std::max(hs_norm(h), Real(1));
    if (hs_norm(CMat<Real>(h - h.adjoint())) > Real(1e-12) * scale * 2)
      throw std::invalid_argument("StateElement: h is not Hermitian");
    if (std::abs(normalized_trace(h) - Complex<Real>(1, 0)) > Real(1e-12))
      throw std::invalid_argument("StateElement: normalized trace must equal one");
    Eigen::SelfAdjointEigenSolver<CMat<Real>> solver((h + h.adjoint()) / Real(2));
    const Real lmax = std::max(solver.eigenvalues().maxCoeff(), Real(0));
    if (solver.eigenvalues().minCoeff() < -rank_tol * lmax)
      throw std::invalid_argument("StateElement: h is not positive semidefinite");
  }
};

template <typename Real>
StateElement<Real> make_state(Index n, CMat<Real> h, Real rank_tol = Real(1e-9)) {
  StateElement<Real> s{n, std::move(h), rank_tol};
  s.validate();
  return s;
}

/// The tracial state tau (x) tau, h = identity. Marginal tracial and of full
/// rank, hence never extremal for n >= 2.
template <typename Real>
StateElement<Real> tracial_state(Index n) {
  return make_state<Real>(n, CMat<Real>::Identity(n * n, n * n));
}

template <typename Real>
struct MarginalReport {
  Real p_residual = 0;         // ||P(h) - I||_2
  Real q_residual = 0;         // ||Q(h) - I||_2
  Real one_sided_residual = 0; // ||(P-Q)^2 h||_2, zero iff both marginals are tracial
  Real tol = 0;
  bool is_marginal_tracial = false;
};

/// Both marginals against the tracial state. h is marginal tracial iff
/// P(h) = Q(h) = I, equivalently h lies in I + V.
template <typename Real>
MarginalReport<Real> check_marginal(const StateElement<Real>& state, Real tol = Real(1e-9)) {
  const Index m = state.coupled_dim();
  const CMat<Real> id = CMat<Real>::Identity(m, m);
  MarginalReport<Real> report;
  report.p_residual = hs_norm(CMat<Real>(cond_exp_first(state.h, state.n) - id));
  report.q_residual = hs_norm(CMat<Real>(cond_exp_second(state.h, state.n) - id));
  report.one_sided_residual = hs_norm(proj_one_sided(state.h, state.n));
  report.tol = tol;
  report.is_marginal_tracial = report.p_residual <= tol && report.q_residual <= tol;
  return report;
}

/// Convex combination of states over the same factor dimension.
template <typename Real>
StateElement<Real> mix(const std::vector<StateElement<Real>>& states,
                       const std::vector<Real>& weights) {
  if (states.empty() || states.size() != weights.size())
    throw std::invalid_argument("mix: need matching nonempty states and weights");
  const Index n = states.front().n;
  Real total = 0;
  for (const Real w : weights) {
    if (w < Real(0)) throw std::invalid_argument("mix: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - Real(1)) > Real(1e-12))
    throw std::invalid_argument("mix: weights must sum to one");
  CMat<Real> h = CMat<Real>::Zero(n * n, n * n);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].n != n) throw std::invalid_argument("mix: factor dimension mismatch");
    h += weights[i] * states[i].h;
  }
  Real rank_tol = states.front().rank_tol;
  for (const auto& s : states) rank_tol = std::max(rank_tol, s.rank_tol);
  return make_state<Real>(n, std::move(h), rank_tol);
}

/// Rank-one marginal tracial state built from a maximally entangled vector:
/// xi(i n + j) = lambda(i,j)/sqrt(n) for a unitary lambda, h = n^2 |xi><xi|.
template <typename Real>
StateElement<Real> pure_state_from_unitary(const CMat<Real>& lambda) {
  detail::require_square(lambda, "pure_state_from_unitary");
  const Index n = lambda.rows();
  const CMat<Real> defect = lambda.adjoint() * lambda - CMat<Real>::Identity(n, n);
  if (defect.norm() > Real(1e-10) * std::sqrt(Real(n)))
    throw std::invalid_argument("pure_state_from_unitary: input is not unitary");
  CVec<Real> xi(n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) xi(i * n + j) = lambda(i, j) / std::sqrt(Real(n));
  CMat<Real> h = Real(n * n) * (xi * xi.adjoint());
  return make_state<Real>(n, std::move(h));
}

enum class SampleMethod { mixture, project_shrink };

inline SampleMethod sample_method_from_string(const std::string& name) {
  if (name == "mixture") return SampleMethod::mixture;
  if (name == "project_shrink") return SampleMethod::project_shrink;
  throw std::invalid_argument("unknown sample method: " + name);
}

inline const char* to_string(SampleMethod method) {
  return method == SampleMethod::mixture ? "mixture" : "project_shrink";
}

/// Random marginal tracial state. `mixture` draws a convex combination of
/// random rank-one marginal tracial states; `project_shrink` projects a random
/// density onto C I + V and shrinks it toward the identity until positive.
template <typename Real>
StateElement<Real> sample_marginal_tracial(Index n, std::uint64_t seed,
                                           SampleMethod method = SampleMethod::mixture,
                                           Real rank_tol = Real(1e-9)) {
  if (n <= 0) throw std::invalid_argument("sample_marginal_tracial: dimension must be positive");
  RandomStream<Real> rng(mix_seed(seed));
  const Index m = n * n;
  if (method == SampleMethod::mixture) {
    const Index count = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    std::vector<StateElement<Real>> parts;
    parts.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i)
      parts.push_back(pure_state_from_unitary<Real>(rng.haar_unitary(n)));
    const std::vector<Real> weights = rng.simplex_weights(count);
    StateElement<Real> out = mix(parts, weights);
    out.rank_tol = rank_tol;
    out.validate();
    return out;
  }

  // project_shrink
  CMat<Real> w = rng.psd_matrix(m);
  Real trace = w.trace().real();
  while (trace <= Real(1e-6)) {
    w = rng.psd_matrix(m);
    trace = w.trace().real();
  }
  w *= Real(m) / trace;
  const CMat<Real> direction = proj_scalar_correlated(w, n) - CMat<Real>::Identity(m, m);
  if (hs_norm(direction) <= Real(1e-14)) return tracial_state<Real>(n);

  const auto positive = [&](Real t) {
    const CMat<Real> cand = CMat<Real>::Identity(m, m) + t * direction;
    Eigen::SelfAdjointEigenSolver<CMat<Real>> solver(cand);
    const Real lmax = std::max(solver.eigenvalues().maxCoeff(), Real(0));
    return solver.eigenvalues().minCoeff() >= -Real(1e-12) * lmax;
  };
  Real t = Real(1);
  if (!positive(t)) {
    Real lo = Real(0), hi = Real(1);
    while (hi - lo > Real(1e-12)) {
      const Real mid = (lo + hi) / Real(2);
      (positive(mid) ? lo : hi) = mid;
    }
    t = lo;
  }
  CMat<Real> h = CMat<Real>::Identity(m, m) + t * direction;
  h = (h + h.adjoint()) / Real(2);
  h *= Real(m) / h.trace().real();
  return make_state<Real>(n, std::move(h), rank_tol);
}

/// Right slice against a density rho on the second factor:
/// out(i,j) = (1/n) sum_{k,l} conj(rho(k,l)) x(i n + k, j n + l).
/// Sends h of a marginal tracial state to an element with trace one.
template <typename Real>
CMat<Real> slice_second(const CMat<Real>& x, const CMat<Real>& rho, Index n) {
  detail::require_coupled(x, n, "slice_second");
  if (rho.rows() != n || rho.cols() != n)
    throw std::invalid_argument("slice_second: density must be n x n");
  CMat<Real> out = CMat<Real>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      Complex<Real> acc(0, 0);
      for (Index k = 0; k < n; ++k)
        for (Index l = 0; l < n; ++l)
          acc += std::conj(rho(k, l)) * x(i * n + k, j * n + l);
      out(i, j) = acc / Real(n);
    }
  return out;
}

/// Left slice against a density rho on the first factor.
template <typename Real>
CMat<Real> slice_first(const CMat<Real>& x, const CMat<Real>& rho, Index n) {
  detail::require_coupled(x, n, "slice_first");
  if (rho.rows() != n || rho.cols() != n)
    throw std::invalid_argument("slice_first: density must be n x n");
  CMat<Real> out = CMat<Real>::Zero(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index l = 0; l < n; ++l) {
      Complex<Real> acc(0, 0);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          acc += std::conj(rho(i, j)) * x(i * n + k, j * n + l);
      out(k, l) = acc / Real(n);
    }
  return out;
}

}  // namespace mts
