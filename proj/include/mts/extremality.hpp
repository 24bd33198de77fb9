#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mts/core.hpp"
#include "mts/hilbert_schmidt.hpp"
#include "mts/marginal.hpp"

// Extremality of a marginal tracial state h with range projection R is
// decided by two independent routes:
//   - the intersection route: h is extremal iff the compressed corner
//     R (M (x) M) R meets the correlated component V = N (x) N only at zero;
//   - the block-kernel route: writing h, after a permutation, as
//     [[K, KA], [A* K, A* K A]] with K positive definite of size rank(h),
//     h is extremal iff no nonzero Hermitian L makes [[L, LA], [A* L, A* L A]]
//     orthogonal to the identity and to both one-sided slots.
// Both routes produce the same verdict and the same defect dimension; a
// certificate records both so disagreement is detectable.

namespace mts {

/// Orthonormal basis sqrt(m) u_i u_j^* of the compressed corner R M_m R,
/// built from an m x r matrix with orthonormal columns spanning range(R).
template <typename Real>
SubspaceBasis<Real> compression_basis(const CMat<Real>& range_basis) {
  const Index m = range_basis.rows();
  const Index r = range_basis.cols();
  if (m <= 0 || r < 0 || r > m)
    throw std::invalid_argument("compression_basis: invalid basis shape");
  const CMat<Real> gram = range_basis.adjoint() * range_basis;
  if ((gram - CMat<Real>::Identity(r, r)).cwiseAbs().maxCoeff() > Real(1e-10))
    throw std::invalid_argument("compression_basis: columns are not orthonormal");
  SubspaceBasis<Real> out;
  out.matrix_dim = m;
  out.vectors.reserve(static_cast<std::size_t>(r * r));
  const Real scale = std::sqrt(Real(m));
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j)
      out.vectors.push_back(scale * (range_basis.col(i) * range_basis.col(j).adjoint()));
  return out;
}

template <typename Real>
SubspaceBasis<Real> compression_basis(const RangeProjection<Real>& rp) {
  return compression_basis(rp.basis);
}

namespace detail {

// Hermitize, then alternate between the corner and the correlated component,
// finishing on the correlated side so descent steps preserve marginality to
// rounding. Returns nothing if the direction collapses.
template <typename Real>
std::optional<CMat<Real>> polish_witness(CMat<Real> w, const CMat<Real>& projector, Index n) {
  const CMat<Real> plus = (w + w.adjoint()) / Real(2);
  const CMat<Real> minus = Complex<Real>(0, 1) * (w - w.adjoint()) / Real(2);
  w = hs_norm(plus) >= hs_norm(minus) ? plus : minus;
  for (int pass = 0; pass < 64; ++pass) {
    w = projector * w * projector;
    w = proj_correlated(w, n);
    const Real norm = hs_norm(w);
    if (norm < Real(1e-13)) return std::nullopt;
    w /= norm;
    if (hs_norm(CMat<Real>(w - projector * w * projector)) <= Real(1e-14)) break;
  }
  w = (w + w.adjoint()) / Real(2);
  const Real norm = hs_norm(w);
  if (norm < Real(1e-13)) return std::nullopt;
  return CMat<Real>(w / norm);
}

}  // namespace detail

template <typename Real>
struct IntersectionTest {
  bool extremal = false;
  Index rank = 0;
  Index intersection_dim = 0;
  std::optional<CMat<Real>> witness;  // Hermitian, unit norm, in the corner and in V
  Real next_cosine = 0;               // largest principal cosine below the cutoff
  Real witness_correlated_residual = 0;
  Real witness_compression_residual = 0;
};

namespace detail {

template <typename Real>
IntersectionTest<Real> intersection_test_impl(const StateElement<Real>& state,
                                              const RangeProjection<Real>& rp,
                                              const SubspaceBasis<Real>& corner,
                                              const Tolerances& tols) {
  IntersectionTest<Real> out;
  out.rank = rp.rank;
  const SubspaceBasis<Real> correlated = correlated_basis<Real>(state.n);
  SubspaceBasis<Real> meet =
      subspace_intersection(corner, correlated, Real(tols.angle_tol));
  out.intersection_dim = meet.size();
  out.extremal = meet.empty();

  // audit: distance from the cutoff to the next principal cosine
  {
    const CMat<Real> x = corner.stacked();
    const CMat<Real> y = correlated.stacked();
    const CMat<Real> gram = x.adjoint() * y;
    const bool use_left = gram.rows() <= gram.cols();
    const CMat<Real> square = use_left ? CMat<Real>(gram * gram.adjoint())
                                       : CMat<Real>(gram.adjoint() * gram);
    const EighResult<Real> eg = eigh(square);
    if (out.intersection_dim < eg.values.size())
      out.next_cosine = std::sqrt(std::max(eg.values(out.intersection_dim), Real(0)));
  }

  if (!meet.empty()) {
    const auto polished =
        detail::polish_witness(meet.vectors.front(), rp.projector, state.n);
    if (polished) {
      out.witness = *polished;
      out.witness_correlated_residual =
          hs_norm(CMat<Real>(*polished - proj_correlated(*polished, state.n)));
      out.witness_compression_residual =
          hs_norm(CMat<Real>(*polished - rp.projector * *polished * rp.projector));
    }
  }
  return out;
}

}  // namespace detail

/// Intersection route. Requires a marginal tracial state.
template <typename Real>
IntersectionTest<Real> extremal_by_intersection(const StateElement<Real>& state,
                                                const Tolerances& tols = {}) {
  const MarginalReport<Real> rep = check_marginal(state, Real(tols.tol));
  if (!rep.is_marginal_tracial)
    throw std::invalid_argument("extremal_by_intersection: state is not marginal tracial");
  const RangeProjection<Real> rp = range_projection(state.h, Real(tols.rank_tol));
  return detail::intersection_test_impl(state, rp, compression_basis(rp), tols);
}

template <typename Real>
struct BlockForm {
  std::vector<Index> perm;     // position p of the permuted matrix holds row perm[p] of h
  CMat<Real> corner;           // K, r x r positive definite
  CMat<Real> coupling;         // A = K^{-1} h[S, S^c], r x (m - r)
  Real reassembly_residual = 0;
};

/// Principal-corner form of a rank-deficient state: a permutation moving a
/// positive definite r x r corner K to the front, with the remaining columns
/// expressed through A. Pivots are chosen greedily by the largest Schur
/// complement diagonal.
template <typename Real>
BlockForm<Real> block_form(const StateElement<Real>& state, const Tolerances& tols = {}) {
  const Index m = state.coupled_dim();
  const RangeProjection<Real> rp = range_projection(state.h, Real(tols.rank_tol));
  const Index r = rp.rank;
  if (r == m)
    throw std::invalid_argument("block_form: full-rank state has no proper corner");
  if (r == 0) throw std::invalid_argument("block_form: zero state");

  CMat<Real> work = state.h;
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  std::vector<Index> selected;
  selected.reserve(static_cast<std::size_t>(r));
  const Real diag_floor = Real(tols.rank_tol) * work.real().diagonal().maxCoeff();
  for (Index step = 0; step < r; ++step) {
    Index pivot = -1;
    Real best = diag_floor;
    for (Index p = 0; p < m; ++p) {
      if (used[static_cast<std::size_t>(p)]) continue;
      const Real d = work(p, p).real();
      if (d > best) {
        best = d;
        pivot = p;
      }
    }
    if (pivot < 0)
      throw std::runtime_error("block_form: pivots collapsed before reaching the rank");
    used[static_cast<std::size_t>(pivot)] = true;
    selected.push_back(pivot);
    const CVec<Real> col = work.col(pivot);
    work -= (col * col.adjoint()) / work(pivot, pivot).real();
  }

  BlockForm<Real> out;
  out.perm = selected;
  for (Index p = 0; p < m; ++p)
    if (!used[static_cast<std::size_t>(p)]) out.perm.push_back(p);

  CMat<Real> k(r, r), b(r, m - r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) k(i, j) = state.h(out.perm[i], out.perm[j]);
    for (Index j = r; j < m; ++j) b(i, j - r) = state.h(out.perm[i], out.perm[j]);
  }
  k = (k + k.adjoint()) / Real(2);
  Eigen::LLT<CMat<Real>> llt(k);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("block_form: corner is not positive definite");
  out.corner = k;
  out.coupling = llt.solve(b);

  // reassembly: the lower-right block must be reproduced by A* K A
  CMat<Real> rebuilt(m, m);
  rebuilt.topLeftCorner(r, r) = k;
  rebuilt.topRightCorner(r, m - r) = b;
  rebuilt.bottomLeftCorner(m - r, r) = b.adjoint();
  rebuilt.bottomRightCorner(m - r, m - r) = out.coupling.adjoint() * b;
  CMat<Real> restored(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) restored(out.perm[i], out.perm[j]) = rebuilt(i, j);
  out.reassembly_residual = hs_norm(CMat<Real>(restored - state.h));
  if (out.reassembly_residual > Real(1e-10) * std::max(hs_norm(state.h), Real(1)))
    throw std::runtime_error("block_form: reassembly residual exceeds the invariant");
  return out;
}

namespace detail {

// Frobenius-orthonormal Hermitian basis of r x r matrices, r^2 elements.
template <typename Real>
std::vector<CMat<Real>> hermitian_basis(Index r) {
  std::vector<CMat<Real>> out;
  out.reserve(static_cast<std::size_t>(r * r));
  for (Index t = 0; t < r; ++t) {
    CMat<Real> e = CMat<Real>::Zero(r, r);
    e(t, t) = Real(1);
    out.push_back(e);
  }
  const Real s = Real(1) / std::sqrt(Real(2));
  for (Index i = 0; i < r; ++i)
    for (Index j = i + 1; j < r; ++j) {
      CMat<Real> sym = CMat<Real>::Zero(r, r);
      sym(i, j) = s;
      sym(j, i) = s;
      out.push_back(sym);
      CMat<Real> skew = CMat<Real>::Zero(r, r);
      skew(i, j) = Complex<Real>(0, s);
      skew(j, i) = Complex<Real>(0, -s);
      out.push_back(skew);
    }
  return out;
}

// [[L, LA], [A* L, A* L A]] carried back to the original index order.
template <typename Real>
CMat<Real> block_direction(const CMat<Real>& l, const BlockForm<Real>& form, Index m) {
  const Index r = form.corner.rows();
  const CMat<Real> la = l * form.coupling;
  CMat<Real> blocks(m, m);
  blocks.topLeftCorner(r, r) = l;
  blocks.topRightCorner(r, m - r) = la;
  blocks.bottomLeftCorner(m - r, r) = la.adjoint();
  blocks.bottomRightCorner(m - r, m - r) = form.coupling.adjoint() * la;
  CMat<Real> out(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) out(form.perm[i], form.perm[j]) = blocks(i, j);
  return out;
}

}  // namespace detail

template <typename Real>
struct BlockKernelTest {
  bool extremal = false;
  Index rank = 0;
  Index kernel_dim = 0;
  BlockForm<Real> form;
  std::optional<CMat<Real>> witness;  // assembled direction, Hermitian, unit norm
  Real kernel_gap = 0;                // smallest retained singular value over the largest
  Real constraint_imag_max = 0;       // sanity: constraints are real for Hermitian inputs
  Real witness_correlated_residual = 0;
  Real witness_compression_residual = 0;
};

/// Block-kernel route. Requires a rank-deficient marginal tracial state.
template <typename Real>
BlockKernelTest<Real> extremal_by_block_kernel(const StateElement<Real>& state,
                                               const Tolerances& tols = {}) {
  const MarginalReport<Real> rep = check_marginal(state, Real(tols.tol));
  if (!rep.is_marginal_tracial)
    throw std::invalid_argument("extremal_by_block_kernel: state is not marginal tracial");

  BlockKernelTest<Real> out;
  out.form = block_form(state, tols);
  const Index m = state.coupled_dim();
  const Index r = out.form.corner.rows();
  out.rank = r;

  const auto directions = detail::hermitian_basis<Real>(r);
  std::vector<CMat<Real>> assembled;
  assembled.reserve(directions.size());
  for (const auto& l : directions)
    assembled.push_back(detail::block_direction(l, out.form, m));

  // One real constraint per Hermitian element of C I + one-sided slots.
  std::vector<CMat<Real>> constraints;
  constraints.push_back(CMat<Real>::Identity(m, m));
  for (auto& w : one_sided_basis<Real>(state.n).vectors) constraints.push_back(std::move(w));

  RMat<Real> system(static_cast<Index>(constraints.size()), static_cast<Index>(assembled.size()));
  for (Index c = 0; c < system.rows(); ++c)
    for (Index t = 0; t < system.cols(); ++t) {
      const Complex<Real> ip = hs_inner(assembled[static_cast<std::size_t>(t)],
                                        constraints[static_cast<std::size_t>(c)]);
      system(c, t) = ip.real();
      out.constraint_imag_max = std::max(out.constraint_imag_max, std::abs(ip.imag()));
    }

  Eigen::JacobiSVD<RMat<Real>> svd(system, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const Real smax = sigma.size() > 0 ? sigma(0) : Real(0);
  Index sys_rank = 0;
  while (sys_rank < sigma.size() && sigma(sys_rank) > Real(tols.null_tol) * smax) ++sys_rank;
  out.kernel_dim = static_cast<Index>(assembled.size()) - sys_rank;
  out.extremal = out.kernel_dim == 0;
  if (sys_rank > 0 && smax > Real(0)) out.kernel_gap = sigma(sys_rank - 1) / smax;

  if (out.kernel_dim > 0) {
    const RVec<Real> coeff = svd.matrixV().col(sys_rank);
    CMat<Real> l = CMat<Real>::Zero(r, r);
    for (Index t = 0; t < coeff.size(); ++t)
      l += coeff(t) * directions[static_cast<std::size_t>(t)];
    CMat<Real> w = detail::block_direction(l, out.form, m);
    const Real norm = hs_norm(w);
    if (norm > Real(0)) {
      w /= norm;
      out.witness = w;
      out.witness_correlated_residual =
          hs_norm(CMat<Real>(w - proj_correlated(w, state.n)));
      const RangeProjection<Real> rp = range_projection(state.h, Real(tols.rank_tol));
      out.witness_compression_residual =
          hs_norm(CMat<Real>(w - rp.projector * w * rp.projector));
    }
  }
  return out;
}

template <typename Real>
struct PurityInvariance {
  bool pure = false;
  Real max_leak = 0;             // distance of projected corner elements from the corner
  Real max_proportionality = 0;  // distance of projected corner elements from tau(k) h
};

template <typename Real>
struct PurityConditions {
  std::map<std::string, bool> verdicts;
  std::map<std::string, Real> residuals;
  bool all_pure() const {
    for (const auto& [key, ok] : verdicts)
      if (!ok) return false;
    return true;
  }
};

namespace detail {

template <typename Real>
PurityInvariance<Real> purity_invariance_impl(const StateElement<Real>& state,
                                              const RangeProjection<Real>& rp,
                                              const SubspaceBasis<Real>& corner,
                                              const Tolerances& tols) {
  PurityInvariance<Real> out;
  for (const auto& k : corner.vectors) {
    const CMat<Real> projected = proj_scalar_correlated(k, state.n);
    out.max_leak = std::max(
        out.max_leak,
        hs_norm(CMat<Real>(projected - rp.projector * projected * rp.projector)));
    out.max_proportionality = std::max(
        out.max_proportionality,
        hs_norm(CMat<Real>(projected - normalized_trace(k) * state.h)));
  }
  out.pure = out.max_leak <= Real(tols.tol);
  return out;
}

template <typename Real>
PurityConditions<Real> purity_conditions_impl(const StateElement<Real>& state,
                                              const SubspaceBasis<Real>& corner,
                                              const Tolerances& tols) {
  PurityConditions<Real> out;
  const Index n = state.n;
  const CMat<Real> root = sqrt_spectral(state.h, Real(tols.rank_tol));

  // corner elements restrict to multiples of h on the scalar + correlated part
  Real proportional = 0;
  for (const auto& k : corner.vectors)
    proportional = std::max(
        proportional, hs_norm(CMat<Real>(proj_scalar_correlated(k, n) -
                                         normalized_trace(k) * state.h)));
  out.residuals["compression_proportional"] = proportional;

  // sandwiched one-sided elements: restriction vanishes (coefficient route)
  // and the sandwich stays one-sided (projector route)
  const SubspaceBasis<Real> one_sided = one_sided_basis<Real>(n);
  const SubspaceBasis<Real> correlated = correlated_basis<Real>(n);
  const CMat<Real> id = CMat<Real>::Identity(n * n, n * n);
  Real restriction = 0, stays_one_sided = 0;
  for (const auto& w : one_sided.vectors) {
    const CMat<Real> sandwich = root * w * root;
    restriction = std::max(restriction, std::abs(hs_inner(sandwich, id)));
    for (const auto& v : correlated.vectors)
      restriction = std::max(restriction, std::abs(hs_inner(sandwich, v)));
    stays_one_sided =
        std::max(stays_one_sided, hs_norm(proj_scalar_correlated(sandwich, n)));
  }
  out.residuals["sandwich_restriction_vanishes"] = restriction;
  out.residuals["sandwich_preserves_one_sided"] = stays_one_sided;

  // sandwiched scalar + correlated elements stay scalar + correlated
  Real stays_correlated = hs_norm(proj_one_sided(CMat<Real>(root * root), n));
  for (const auto& v : correlated.vectors)
    stays_correlated =
        std::max(stays_correlated, hs_norm(proj_one_sided(CMat<Real>(root * v * root), n)));
  out.residuals["sandwich_preserves_scalar_correlated"] = stays_correlated;

  for (const auto& [key, value] : out.residuals)
    out.verdicts[key] = value <= Real(tols.tol);
  return out;
}

template <typename Real>
void require_extremal(const StateElement<Real>& state, const Tolerances& tols,
                      const char* who) {
  const IntersectionTest<Real> test = extremal_by_intersection(state, tols);
  if (!test.extremal)
    throw std::invalid_argument(std::string(who) + ": state is not extremal");
}

}  // namespace detail

/// Purity by corner invariance. Requires an extremal marginal tracial state.
template <typename Real>
PurityInvariance<Real> pure_by_corner_invariance(const StateElement<Real>& state,
                                                 const Tolerances& tols = {}) {
  detail::require_extremal(state, tols, "pure_by_corner_invariance");
  const RangeProjection<Real> rp = range_projection(state.h, Real(tols.rank_tol));
  return detail::purity_invariance_impl(state, rp, compression_basis(rp), tols);
}

/// The four equivalent purity conditions. Requires an extremal state.
template <typename Real>
PurityConditions<Real> purity_condition_checks(const StateElement<Real>& state,
                                               const Tolerances& tols = {}) {
  detail::require_extremal(state, tols, "purity_condition_checks");
  const RangeProjection<Real> rp = range_projection(state.h, Real(tols.rank_tol));
  return detail::purity_conditions_impl(state, compression_basis(rp), tols);
}

template <typename Real>
struct Certificate {
  Index n = 0;
  Index rank = 0;
  bool marginal = false;
  std::optional<bool> extremal_intersection;
  std::optional<bool> extremal_block_kernel;
  std::optional<bool> pure;
  std::optional<Index> intersection_dim;
  std::optional<Index> block_kernel_dim;
  std::optional<CMat<Real>> witness;
  std::map<std::string, bool> purity_conditions;
  std::map<std::string, Real> residuals;
  std::map<std::string, Real> tolerances;
  bool consistent = true;

  bool extremal() const {
    return extremal_intersection.value_or(false) && extremal_block_kernel.value_or(false);
  }
};

/// Full certification: validity, marginality, both extremality routes, and,
/// when extremal, purity with all cross-checks. Never throws on numerical
/// findings; structural misuse (wrong shape) still throws.
template <typename Real>
Certificate<Real> certify(Index n, const CMat<Real>& h, const Tolerances& tols = {}) {
  detail::require_coupled(h, n, "certify");
  Certificate<Real> cert;
  cert.n = n;
  for (const auto& [key, value] : tols.as_map()) cert.tolerances[key] = Real(value);

  const Index m = n * n;
  const Real scale = std::max(hs_norm(h), Real(1));
  cert.residuals["hermiticity"] = hs_norm(CMat<Real>(h - h.adjoint())) / scale;
  cert.residuals["tau_deviation"] = std::abs(normalized_trace(h) - Complex<Real>(1, 0));
  const CMat<Real> sym = (h + h.adjoint()) / Real(2);

  bool state_ok = cert.residuals["hermiticity"] <= Real(tols.tol) &&
                  cert.residuals["tau_deviation"] <= Real(tols.tol) && sym.allFinite();
  RangeProjection<Real> rp;
  if (state_ok) {
    try {
      rp = range_projection(sym, Real(tols.rank_tol));
    } catch (const std::invalid_argument&) {
      state_ok = false;
    }
  }
  if (state_ok && rp.eigenvalues.size() > 0) {
    const Real lmax = std::max(rp.eigenvalues(0), Real(0));
    cert.residuals["min_eigenvalue_rel"] =
        lmax > Real(0) ? rp.eigenvalues(rp.eigenvalues.size() - 1) / lmax : Real(0);
  }

  StateElement<Real> state{n, sym, Real(tols.rank_tol)};
  const MarginalReport<Real> report = check_marginal(state, Real(tols.tol));
  cert.residuals["marginal_p"] = report.p_residual;
  cert.residuals["marginal_q"] = report.q_residual;
  cert.residuals["marginal_one_sided"] = report.one_sided_residual;
  cert.marginal = state_ok && report.is_marginal_tracial;
  if (!cert.marginal) return cert;

  cert.rank = rp.rank;
  const SubspaceBasis<Real> corner = compression_basis(rp);

  const IntersectionTest<Real> meet = detail::intersection_test_impl(state, rp, corner, tols);
  cert.extremal_intersection = meet.extremal;
  cert.intersection_dim = meet.intersection_dim;
  cert.residuals["intersection_next_cosine"] = meet.next_cosine;
  if (meet.witness) {
    cert.witness = meet.witness;
    cert.residuals["witness_correlated"] = meet.witness_correlated_residual;
    cert.residuals["witness_compression"] = meet.witness_compression_residual;
  }

  if (rp.rank == m) {
    // Full rank: the corner is everything, so it contains all of the
    // correlated component and every direction is a perturbation; the proper
    // corner form does not exist. Both defect dimensions equal dim V.
    cert.extremal_block_kernel = false;
    cert.block_kernel_dim = (n * n - 1) * (n * n - 1);
    cert.residuals["full_rank_shortcut"] = Real(1);
  } else {
    try {
      const BlockKernelTest<Real> kernel = extremal_by_block_kernel(state, tols);
      cert.extremal_block_kernel = kernel.extremal;
      cert.block_kernel_dim = kernel.kernel_dim;
      cert.residuals["block_reassembly"] = kernel.form.reassembly_residual;
      cert.residuals["block_kernel_gap"] = kernel.kernel_gap;
      cert.residuals["block_constraint_imag"] = kernel.constraint_imag_max;
      if (kernel.witness) {
        cert.residuals["block_witness_correlated"] = kernel.witness_correlated_residual;
        cert.residuals["block_witness_compression"] = kernel.witness_compression_residual;
        if (!cert.witness) cert.witness = kernel.witness;
      }
    } catch (const std::exception&) {
      cert.residuals["block_kernel_failed"] = Real(1);
      cert.consistent = false;
    }
  }

  if (cert.extremal_block_kernel.has_value()) {
    cert.consistent = cert.consistent &&
                      *cert.extremal_intersection == *cert.extremal_block_kernel &&
                      *cert.intersection_dim == *cert.block_kernel_dim;
  }

  if (cert.extremal()) {
    const PurityInvariance<Real> inv = detail::purity_invariance_impl(state, rp, corner, tols);
    cert.pure = inv.pure;
    cert.residuals["purity_leak"] = inv.max_leak;
    cert.residuals["purity_proportionality"] = inv.max_proportionality;
    const PurityConditions<Real> conds = detail::purity_conditions_impl(state, corner, tols);
    cert.purity_conditions = conds.verdicts;
    for (const auto& [key, value] : conds.residuals)
      cert.residuals["cond_" + key] = value;
    for (const auto& [key, ok] : conds.verdicts)
      cert.consistent = cert.consistent && ok == *cert.pure;
  }
  return cert;
}

template <typename Real>
Certificate<Real> certify(const StateElement<Real>& state, const Tolerances& tols = {}) {
  return certify(state.n, state.h, tols);
}

}  // namespace mts
