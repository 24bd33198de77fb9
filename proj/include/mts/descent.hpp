#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "mts/core.hpp"
#include "mts/extremality.hpp"
#include "mts/hilbert_schmidt.hpp"
#include "mts/marginal.hpp"

// Extreme-point descent: while h is not extremal, the intersection test
// yields a Hermitian direction v in the corner and in the correlated
// component; moving to the positivity boundary along +-v keeps the state
// marginal tracial and strictly lowers its rank, so at most n^2 steps reach
// an extreme point.

namespace mts {

template <typename Real>
struct DescentStep {
  Index rank_before = 0;
  Index rank_after = 0;
  Real step_size = 0;       // magnitude t of the applied update h + s t v
  int direction_sign = -1;  // s
  Real marginal_residual = 0;
};

template <typename Real>
struct DescentTrace {
  std::vector<DescentStep<Real>> steps;
  StateElement<Real> terminal;
  Certificate<Real> terminal_certificate;
  bool reached_extremal = false;
  std::string failure;  // empty on success, "max_steps" when the budget ran out
};

namespace detail {

// Largest t >= 0 with h + t d positive semidefinite, by bisection on the
// smallest eigenvalue. Used only when the range-restricted solve is too
// ill-conditioned to trust.
template <typename Real>
Real max_step_bisect(const CMat<Real>& h, const CMat<Real>& d) {
  const auto feasible = [&](Real t) {
    Eigen::SelfAdjointEigenSolver<CMat<Real>> solver(h + t * d);
    const Real lmax = std::max(solver.eigenvalues().maxCoeff(), Real(0));
    return solver.eigenvalues().minCoeff() >= -Real(1e-12) * lmax;
  };
  Real hi = Real(1);
  if (feasible(hi)) {
    int grow = 0;
    while (feasible(hi * 2) && grow++ < 60) hi *= 2;
  }
  Real lo = Real(0);
  while (hi - lo > Real(1e-12) * std::max(hi, Real(1))) {
    const Real mid = (lo + hi) / Real(2);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

/// Descend from a marginal tracial state to an extreme point.
template <typename Real>
DescentTrace<Real> descend(StateElement<Real> state, const Tolerances& tols = {},
                           int max_steps = 0) {
  if (max_steps <= 0) max_steps = tols.descent_max_steps;
  DescentTrace<Real> trace;
  const Index m = state.coupled_dim();

  for (int step = 0; step < max_steps; ++step) {
    const IntersectionTest<Real> test = extremal_by_intersection(state, tols);
    if (test.extremal) {
      trace.terminal = state;
      trace.terminal_certificate = certify(state, tols);
      trace.reached_extremal = trace.terminal_certificate.extremal();
      return trace;
    }
    if (!test.witness)
      throw std::runtime_error("descend: intersection produced no usable direction");
    const CMat<Real>& v = *test.witness;

    const RangeProjection<Real> rp = range_projection(state.h, Real(tols.rank_tol));
    const CMat<Real>& u = rp.basis;
    const CMat<Real> g = u.adjoint() * state.h * u;
    const CMat<Real> vt = u.adjoint() * v * u;
    const EighResult<Real> ge = eigh(CMat<Real>((g + g.adjoint()) / Real(2)));
    const Real cond = ge.values(ge.values.size() - 1) / ge.values(0);

    Real t_minus = 0, t_plus = 0;
    if (cond >= Real(1e-10)) {
      RVec<Real> inv_root(ge.values.size());
      for (Index i = 0; i < ge.values.size(); ++i)
        inv_root(i) = Real(1) / std::sqrt(ge.values(i));
      const CMat<Real> gih = ge.vectors * inv_root.asDiagonal() * ge.vectors.adjoint();
      const CMat<Real> a = gih * vt * gih;
      const EighResult<Real> ae = eigh(CMat<Real>((a + a.adjoint()) / Real(2)));
      const Real amax = ae.values(0);
      const Real amin = ae.values(ae.values.size() - 1);
      // the restricted direction is traceless and nonzero, so both signs move
      if (amax <= Real(1e-12) || amin >= -Real(1e-12))
        throw std::runtime_error("descend: direction is one-sided on the range");
      t_minus = Real(1) / amax;
      t_plus = Real(1) / (-amin);
    } else {
      t_minus = detail::max_step_bisect(state.h, CMat<Real>(-v));
      t_plus = detail::max_step_bisect(state.h, v);
      if (t_minus <= Real(0) && t_plus <= Real(0))
        throw std::runtime_error("descend: no feasible step in either direction");
    }

    const int sign = (t_minus >= t_plus * (Real(1) - Real(1e-12))) ? -1 : 1;
    Real t = sign < 0 ? t_minus : t_plus;
    const CMat<Real> d = Real(sign) * v;

    const auto feasible = [&](Real tt) {
      Eigen::SelfAdjointEigenSolver<CMat<Real>> solver(state.h + tt * d);
      const Real lmax = std::max(solver.eigenvalues().maxCoeff(), Real(0));
      return solver.eigenvalues().minCoeff() >= -Real(1e-10) * lmax;
    };
    if (!feasible(t)) {
      Real lo = Real(0), hi = t;
      while (hi - lo > Real(1e-12) * std::max(t, Real(1))) {
        const Real mid = (lo + hi) / Real(2);
        (feasible(mid) ? lo : hi) = mid;
      }
      t = lo;
    }

    CMat<Real> next = state.h + t * d;
    next = (next + next.adjoint()) / Real(2);
    {
      // the boundary step may land within feasibility tolerance of the cone
      // yet outside it; clip so rank re-estimation never rejects the iterate
      const EighResult<Real> ne = eigh(next);
      if (ne.values(ne.values.size() - 1) < Real(0)) {
        const RVec<Real> clipped = ne.values.cwiseMax(Real(0));
        next = ne.vectors * clipped.asDiagonal() * ne.vectors.adjoint();
        next = (next + next.adjoint()) / Real(2);
      }
    }
    next *= Real(m) / next.trace().real();

    Index rank_after = range_projection(next, Real(tols.rank_tol)).rank;
    if (rank_after >= rp.rank) {
      rank_after = range_projection(next, Real(tols.rank_tol) / 10).rank;
      if (rank_after >= rp.rank)
        throw std::runtime_error("descend: rank did not decrease at the boundary");
    }

    StateElement<Real> moved{state.n, std::move(next), state.rank_tol};
    moved.validate();
    const MarginalReport<Real> rep = check_marginal(moved, Real(tols.tol));

    DescentStep<Real> record;
    record.rank_before = rp.rank;
    record.rank_after = rank_after;
    record.step_size = t;
    record.direction_sign = sign;
    record.marginal_residual = std::max(rep.p_residual, rep.q_residual);
    trace.steps.push_back(record);
    state = std::move(moved);
  }

  trace.terminal = state;
  trace.terminal_certificate = certify(state, tols);
  trace.reached_extremal = trace.terminal_certificate.extremal();
  trace.failure = "max_steps";
  return trace;
}

template <typename Real>
struct ProbeResult {
  Real value = 0;  // trace norm of the restriction of k to the scalar + correlated part
  bool projected_positive = false;
  Real projected_min_eigenvalue_rel = 0;
  // Present when value <= 1 + tol: the restriction keeps trace one, so within
  // that bound it is a candidate state; records whether it passes the
  // positivity and marginal checks and hence is itself marginal tracial.
  std::optional<bool> projected_marginal;
};

/// Trace norm of (I - (P-Q)^2)(k) for a state k supported on the range of an
/// extremal h0. Values above one exhibit a restriction that is not itself a
/// state; the open question is whether that ever happens.
template <typename Real>
ProbeResult<Real> probe_restriction(const StateElement<Real>& h0, const CMat<Real>& k,
                                    const Tolerances& tols = {},
                                    bool trust_extremal = false) {
  const Index m = h0.coupled_dim();
  if (k.rows() != m || k.cols() != m)
    throw std::invalid_argument("probe_restriction: dimension mismatch");
  const Real kscale = std::max(hs_norm(k), Real(1));
  if (hs_norm(CMat<Real>(k - k.adjoint())) > Real(1e-10) * kscale)
    throw std::invalid_argument("probe_restriction: k is not Hermitian");
  if (std::abs(normalized_trace(k) - Complex<Real>(1, 0)) > Real(1e-10))
    throw std::invalid_argument("probe_restriction: k must have normalized trace one");
  const RangeProjection<Real> rp = range_projection(h0.h, Real(tols.rank_tol));
  range_projection(k, Real(tols.rank_tol));  // positivity check
  if (hs_norm(CMat<Real>(rp.projector * k * rp.projector - k)) > Real(1e-8))
    throw std::invalid_argument("probe_restriction: k is not supported on the range of h0");
  if (!trust_extremal) detail::require_extremal(h0, tols, "probe_restriction");

  const CMat<Real> restricted = proj_scalar_correlated(k, h0.n);
  ProbeResult<Real> out;
  out.value = trace_norm(restricted);
  const EighResult<Real> eg = eigh(CMat<Real>((restricted + restricted.adjoint()) / Real(2)));
  const Real lmax = std::max(eg.values(0), Real(0));
  out.projected_min_eigenvalue_rel =
      lmax > Real(0) ? eg.values(eg.values.size() - 1) / lmax : Real(0);
  out.projected_positive = out.projected_min_eigenvalue_rel >= -Real(tols.rank_tol);
  if (out.value <= Real(1) + Real(tols.tol)) {
    const CMat<Real> id = CMat<Real>::Identity(m, m);
    const Real p_res = hs_norm(CMat<Real>(cond_exp_first(restricted, h0.n) - id));
    const Real q_res = hs_norm(CMat<Real>(cond_exp_second(restricted, h0.n) - id));
    out.projected_marginal =
        out.projected_positive && std::max(p_res, q_res) <= Real(tols.tol);
  }
  return out;
}

struct TrialFailure {
  std::uint64_t trial = 0;
  std::string message;
};

template <typename Real>
struct HuntCandidate {
  std::uint64_t trial = 0;
  StateElement<Real> terminal;
  Certificate<Real> certificate;
  Certificate<Real> recheck;  // verdicts at tolerances tightened tenfold
  Real probe_max = 0;
};

template <typename Real>
struct HuntReport {
  Index n = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  int probe_samples = 0;
  Tolerances tolerances;
  Index pure_count = 0;
  Index nonpure_extremal_count = 0;
  Index failure_count = 0;
  Index inconsistent_count = 0;
  Real max_probe = 0;
  std::map<Index, Index> rank_histogram;  // terminal rank -> trials
  std::map<int, Index> steps_histogram;   // descent length -> trials
  std::vector<HuntCandidate<Real>> candidates;
  std::vector<TrialFailure> failures;
};

namespace detail {

template <typename Real>
struct TrialOutcome {
  bool failed = false;
  std::string error;
  std::string method;
  int steps = 0;
  Index terminal_rank = 0;
  bool extremal = false;
  bool pure = false;
  bool consistent = true;
  Real probe_max = 0;
  std::optional<StateElement<Real>> terminal;
  std::optional<Certificate<Real>> certificate;
  std::optional<Certificate<Real>> recheck;
};

template <typename Real>
TrialOutcome<Real> run_hunt_trial(Index n, std::uint64_t master_seed, std::uint64_t trial,
                                  const Tolerances& tols, int probe_samples) {
  TrialOutcome<Real> out;
  const std::uint64_t trial_seed = derive_seed(master_seed, trial);
  const SampleMethod method =
      (trial % 2 == 0) ? SampleMethod::mixture : SampleMethod::project_shrink;
  out.method = to_string(method);
  try {
    const StateElement<Real> start =
        sample_marginal_tracial<Real>(n, trial_seed, method, Real(tols.rank_tol));
    DescentTrace<Real> trace = descend(start, tols);
    out.steps = static_cast<int>(trace.steps.size());
    const Certificate<Real>& cert = trace.terminal_certificate;
    out.terminal_rank = cert.rank;
    out.extremal = cert.extremal();
    out.pure = out.extremal && cert.pure.value_or(false);
    out.consistent = cert.consistent;
    if (!trace.failure.empty() || !out.extremal) {
      out.failed = true;
      out.error = !trace.failure.empty() ? "descent exhausted its step budget"
                                         : "terminal state is not extremal";
      return out;
    }

    // restriction probe on the terminal
    if (cert.rank == 1) {
      const ProbeResult<Real> probe =
          probe_restriction(trace.terminal, trace.terminal.h, tols, true);
      out.probe_max = probe.value;
    } else {
      RandomStream<Real> prng(derive_seed(trial_seed, 0x70726f6265ULL));
      const RangeProjection<Real> rp =
          range_projection(trace.terminal.h, Real(tols.rank_tol));
      for (int s = 0; s < probe_samples; ++s) {
        CMat<Real> c = prng.psd_matrix(cert.rank);
        const Real tr = c.trace().real();
        if (tr <= Real(0)) continue;
        c *= Real(n * n) / tr;
        const CMat<Real> k = rp.basis * c * rp.basis.adjoint();
        const ProbeResult<Real> probe = probe_restriction(trace.terminal, k, tols, true);
        out.probe_max = std::max(out.probe_max, probe.value);
      }
    }

    if (!out.pure) {
      out.terminal = trace.terminal;
      out.certificate = cert;
      out.recheck = certify(trace.terminal, tols.tightened(10));
    }
  } catch (const std::exception& err) {
    out.failed = true;
    out.error = err.what();
  }
  return out;
}

}  // namespace detail

/// Randomized search for non-pure extreme points: sample, descend, certify,
/// probe. The report depends only on (n, trials, seed, tolerances,
/// probe_samples), not on the worker count.
template <typename Real>
HuntReport<Real> hunt(Index n, std::uint64_t trials, std::uint64_t seed,
                      const Tolerances& tols = {}, int jobs = 1, int probe_samples = 1000) {
  if (n <= 0) throw std::invalid_argument("hunt: dimension must be positive");
  if (jobs <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    jobs = hw > 0 ? static_cast<int>(hw) : 1;
  }

  std::vector<detail::TrialOutcome<Real>> outcomes(trials);
  std::atomic<std::uint64_t> cursor{0};
  const auto worker = [&]() {
    for (;;) {
      const std::uint64_t i = cursor.fetch_add(1);
      if (i >= trials) return;
      outcomes[i] = detail::run_hunt_trial<Real>(n, seed, i, tols, probe_samples);
    }
  };
  if (jobs == 1 || trials <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  HuntReport<Real> report;
  report.n = n;
  report.trials = trials;
  report.seed = seed;
  report.probe_samples = probe_samples;
  report.tolerances = tols;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const auto& out = outcomes[i];
    if (out.failed) {
      ++report.failure_count;
      report.failures.push_back({i, out.error});
      continue;
    }
    ++report.rank_histogram[out.terminal_rank];
    ++report.steps_histogram[out.steps];
    report.max_probe = std::max(report.max_probe, out.probe_max);
    if (!out.consistent) ++report.inconsistent_count;
    if (out.pure) {
      ++report.pure_count;
    } else {
      ++report.nonpure_extremal_count;
      HuntCandidate<Real> candidate;
      candidate.trial = i;
      candidate.terminal = *out.terminal;
      candidate.certificate = *out.certificate;
      candidate.recheck = *out.recheck;
      candidate.probe_max = out.probe_max;
      report.candidates.push_back(std::move(candidate));
    }
  }
  return report;
}

}  // namespace mts
