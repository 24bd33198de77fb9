#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "mts/core.hpp"
#include "mts/extremality.hpp"
#include "mts/hilbert_schmidt.hpp"
#include "mts/marginal.hpp"

#include "oracles.hpp"

using namespace mts;
using Cplx = std::complex<double>;

namespace {

// rank-2 mixture of two orthogonal rank-one states; non-extremal with a
// two-dimensional perturbation space
StateElement<double> bell_mixture() {
  CMat<double> flip = CMat<double>::Identity(2, 2);
  flip(1, 1) = -1.0;
  std::vector<StateElement<double>> parts{
      pure_state_from_unitary<double>(CMat<double>::Identity(2, 2)),
      pure_state_from_unitary<double>(flip)};
  return mix(parts, {0.5, 0.5});
}

void check_witness_sound(const CMat<double>& w, const StateElement<double>& state) {
  const Index n = state.n;
  CHECK(hs_norm(CMat<double>(w - w.adjoint())) < 1e-10);
  CHECK(std::abs(hs_norm(w) - 1.0) < 1e-10);
  CHECK(std::abs(normalized_trace(w)) < 1e-9);
  const RangeProjection<double> rp = range_projection(state.h, 1e-9);
  const CMat<double> compressed = rp.projector * w * rp.projector;
  CHECK(hs_norm(CMat<double>(compressed - w)) < 1e-8);
  CHECK(hs_norm(CMat<double>(proj_correlated(w, n) - w)) < 1e-8);
}

}  // namespace

TEST_CASE("compression basis spans exactly the compressed algebra") {
  RandomStream<double> rng(41);
  const Index m = 9;
  CMat<double> g = rng.psd_matrix(m, 3);
  const RangeProjection<double> rp = range_projection(g, 1e-9);
  REQUIRE(rp.rank == 3);
  const SubspaceBasis<double> corner = compression_basis(rp);
  CHECK(corner.size() == rp.rank * rp.rank);
  CHECK(corner.gram_defect() < 1e-12);
  const CMat<double> x = rng.gaussian_matrix(m, m);
  const CMat<double> compressed = rp.projector * x * rp.projector;
  CHECK(hs_norm(CMat<double>(corner.project(x) - compressed)) < 1e-11);
  CHECK(hs_norm(CMat<double>(corner.project(compressed) - compressed)) < 1e-11);
}

TEST_CASE("rank-one states are extremal by both routes") {
  RandomStream<double> rng(42);
  for (const Index n : {2, 3}) {
    const StateElement<double> s = pure_state_from_unitary<double>(rng.haar_unitary(n));
    const auto meet = extremal_by_intersection(s);
    CHECK(meet.extremal);
    CHECK(meet.rank == 1);
    CHECK(meet.intersection_dim == 0);
    CHECK_FALSE(meet.witness.has_value());
    CHECK(meet.next_cosine < 0.999);

    const auto kernel = extremal_by_block_kernel(s);
    CHECK(kernel.extremal);
    CHECK(kernel.kernel_dim == 0);
    CHECK(kernel.constraint_imag_max < 1e-12);
    CHECK_FALSE(kernel.witness.has_value());
  }
}

TEST_CASE("the tracial state is maximally non-extremal") {
  for (const Index n : {2, 3}) {
    const StateElement<double> tau = tracial_state<double>(n);
    const auto meet = extremal_by_intersection(tau);
    const Index expected = (n * n - 1) * (n * n - 1);
    CHECK_FALSE(meet.extremal);
    CHECK(meet.intersection_dim == expected);
    REQUIRE(meet.witness.has_value());
    check_witness_sound(*meet.witness, tau);

    // full rank leaves no proper corner for the block route
    CHECK_THROWS_AS(block_form(tau), std::invalid_argument);
  }
  // independent count of the overlap for the smallest case
  const StateElement<double> tau2 = tracial_state<double>(2);
  const RangeProjection<double> rp = range_projection(tau2.h, 1e-9);
  const auto corner = compression_basis(rp);
  const auto correlated = correlated_basis<double>(2);
  CHECK(oracle::intersection_dim(corner.stacked(), correlated.stacked()) == 9);
}

TEST_CASE("rank-two mixture: both routes see a two-dimensional defect") {
  const StateElement<double> s = bell_mixture();
  const auto meet = extremal_by_intersection(s);
  CHECK_FALSE(meet.extremal);
  CHECK(meet.rank == 2);
  CHECK(meet.intersection_dim == 2);
  REQUIRE(meet.witness.has_value());
  check_witness_sound(*meet.witness, s);
  CHECK(meet.witness_correlated_residual < 1e-8);
  CHECK(meet.witness_compression_residual < 1e-8);

  const auto kernel = extremal_by_block_kernel(s);
  CHECK_FALSE(kernel.extremal);
  CHECK(kernel.kernel_dim == 2);
  CHECK(kernel.constraint_imag_max < 1e-12);
  REQUIRE(kernel.witness.has_value());
  check_witness_sound(*kernel.witness, s);

  const RangeProjection<double> rp = range_projection(s.h, 1e-9);
  const auto corner = compression_basis(rp);
  const auto correlated = correlated_basis<double>(2);
  CHECK(oracle::intersection_dim(corner.stacked(), correlated.stacked()) == 2);
}

namespace {

// Columns vec(R x R) for x running over the identity and the one-sided basis.
CMat<double> compressed_one_sided_span(const RangeProjection<double>& rp, Index n) {
  const SubspaceBasis<double> one_sided = one_sided_basis<double>(n);
  const Index m = n * n;
  CMat<double> cols(m * m, 1 + one_sided.size());
  cols.col(0) = Eigen::Map<const CVec<double>>(rp.projector.data(), m * m);
  for (Index j = 0; j < one_sided.size(); ++j) {
    const CMat<double> y =
        rp.projector * one_sided.vectors[static_cast<std::size_t>(j)] * rp.projector;
    cols.col(1 + j) = Eigen::Map<const CVec<double>>(y.data(), m * m);
  }
  return cols;
}

}  // namespace

TEST_CASE("compressed one-sided pieces fill the corner exactly at extremal states") {
  // at an extremal state the images R x R of the identity and the one-sided
  // basis span the whole r^2-dimensional corner
  RandomStream<double> rng(46);
  for (const Index n : {2, 3}) {
    const StateElement<double> s = pure_state_from_unitary<double>(rng.haar_unitary(n));
    const RangeProjection<double> rp = range_projection(s.h, 1e-9);
    CHECK(oracle::rank_of(compressed_one_sided_span(rp, n), 1e-8) == rp.rank * rp.rank);
  }

  // the non-extremal rank-two mixture falls short: only the corner identity
  // and one off-diagonal direction survive the compression, giving 2 < 4
  const StateElement<double> mixed = bell_mixture();
  const RangeProjection<double> rp = range_projection(mixed.h, 1e-9);
  CHECK(oracle::rank_of(compressed_one_sided_span(rp, 2), 1e-8) == 2);
}

TEST_CASE("pure corner elements recenter into the one-sided part") {
  // for b in the corner of a pure state, b - tau(b) h has no correlated
  // component; the rank-two mixture violates this by a definite margin
  RandomStream<double> rng(47);
  for (const Index n : {2, 3}) {
    const StateElement<double> s = pure_state_from_unitary<double>(rng.haar_unitary(n));
    const SubspaceBasis<double> corner = compression_basis(range_projection(s.h, 1e-9));
    for (const auto& b : corner.vectors) {
      const CMat<double> a = b - normalized_trace(b) * s.h;
      CHECK(hs_norm(CMat<double>(a - proj_one_sided(a, n))) < 1e-8);
    }
  }

  const StateElement<double> mixed = bell_mixture();
  const SubspaceBasis<double> corner = compression_basis(range_projection(mixed.h, 1e-9));
  double worst = 0;
  for (const auto& b : corner.vectors) {
    const CMat<double> a = b - normalized_trace(b) * mixed.h;
    worst = std::max(worst, hs_norm(CMat<double>(a - proj_one_sided(a, 2))));
  }
  // the difference of the two projections sits entirely in the correlated part
  CHECK(worst > 0.5);
}

TEST_CASE("block form is a faithful permuted factorization") {
  const StateElement<double> s = bell_mixture();
  const BlockForm<double> form = block_form(s);
  const Index m = 4, r = 2;
  REQUIRE(static_cast<Index>(form.perm.size()) == m);
  std::vector<bool> seen(m, false);
  for (const Index p : form.perm) {
    REQUIRE(p >= 0);
    REQUIRE(p < m);
    CHECK_FALSE(seen[static_cast<std::size_t>(p)]);
    seen[static_cast<std::size_t>(p)] = true;
  }
  CHECK(form.corner.rows() == r);
  CHECK(form.coupling.rows() == r);
  CHECK(form.coupling.cols() == m - r);
  Eigen::SelfAdjointEigenSolver<CMat<double>> solver(form.corner);
  CHECK(solver.eigenvalues().minCoeff() > 0.0);
  CHECK(form.reassembly_residual < 1e-10 * std::max(hs_norm(s.h), 1.0));
}

TEST_CASE("preconditions are enforced") {
  // extremality tests require a marginal tracial state
  RandomStream<double> rng(43);
  CMat<double> w = rng.psd_matrix(4);
  w *= 4.0 / w.trace().real();
  const StateElement<double> generic = make_state<double>(2, w);
  CHECK_THROWS_AS(extremal_by_intersection(generic), std::invalid_argument);

  // purity checks require extremality
  const StateElement<double> s = bell_mixture();
  CHECK_THROWS_AS(pure_by_corner_invariance(s), std::invalid_argument);
  CHECK_THROWS_AS(purity_condition_checks(s), std::invalid_argument);
}

TEST_CASE("rank-one states are pure under every criterion") {
  RandomStream<double> rng(44);
  for (const Index n : {2, 3}) {
    const StateElement<double> s = pure_state_from_unitary<double>(rng.haar_unitary(n));
    const auto inv = pure_by_corner_invariance(s);
    CHECK(inv.pure);
    CHECK(inv.max_leak < 1e-9);
    CHECK(inv.max_proportionality < 1e-8);

    const auto conds = purity_condition_checks(s);
    CHECK(conds.verdicts.size() == 4);
    CHECK(conds.all_pure());
    for (const auto& [key, residual] : conds.residuals) {
      INFO(key);
      CHECK(residual < 1e-8);
    }
  }
}

TEST_CASE("certificates: rank-one state") {
  RandomStream<double> rng(45);
  const auto cert = certify(pure_state_from_unitary<double>(rng.haar_unitary(2)));
  CHECK(cert.n == 2);
  CHECK(cert.rank == 1);
  CHECK(cert.marginal);
  REQUIRE(cert.extremal_intersection.has_value());
  REQUIRE(cert.extremal_block_kernel.has_value());
  CHECK(*cert.extremal_intersection);
  CHECK(*cert.extremal_block_kernel);
  CHECK(cert.extremal());
  CHECK(*cert.intersection_dim == 0);
  CHECK(*cert.block_kernel_dim == 0);
  REQUIRE(cert.pure.has_value());
  CHECK(*cert.pure);
  CHECK(cert.purity_conditions.size() == 4);
  CHECK(cert.consistent);
  CHECK(cert.residuals.at("marginal_p") < 1e-10);
  CHECK(cert.residuals.at("purity_leak") < 1e-9);
}

TEST_CASE("certificates: tracial state uses the full-rank shortcut") {
  const auto cert = certify(tracial_state<double>(2));
  CHECK(cert.marginal);
  CHECK(cert.rank == 4);
  CHECK_FALSE(cert.extremal());
  CHECK(*cert.intersection_dim == 9);
  CHECK(*cert.block_kernel_dim == 9);
  CHECK(cert.residuals.at("full_rank_shortcut") == 1.0);
  CHECK(cert.consistent);
  CHECK_FALSE(cert.pure.has_value());
  REQUIRE(cert.witness.has_value());
  check_witness_sound(*cert.witness, tracial_state<double>(2));
}

TEST_CASE("certificates: rank-two mixture stays consistent across routes") {
  const auto cert = certify(bell_mixture());
  CHECK(cert.marginal);
  CHECK(cert.rank == 2);
  CHECK_FALSE(cert.extremal());
  CHECK(*cert.intersection_dim == 2);
  CHECK(*cert.block_kernel_dim == 2);
  CHECK(cert.consistent);
  CHECK_FALSE(cert.pure.has_value());
  REQUIRE(cert.witness.has_value());
}

TEST_CASE("certificates: invalid inputs never throw, they report") {
  RandomStream<double> rng(46);
  // non-Hermitian garbage
  const auto garbage = certify<double>(2, rng.gaussian_matrix(4, 4));
  CHECK_FALSE(garbage.marginal);
  CHECK(garbage.residuals.at("hermiticity") > 1e-3);
  CHECK_FALSE(garbage.extremal_intersection.has_value());

  // marginal-looking but indefinite: correct marginals, negative eigenvalue
  CMat<double> h = CMat<double>::Identity(4, 4);
  h(0, 0) = 4.0;
  h(1, 1) = -2.0;
  h(2, 2) = -2.0;
  h(3, 3) = 4.0;
  const auto indefinite = certify<double>(2, h);
  CHECK_FALSE(indefinite.marginal);
  CHECK(indefinite.residuals.at("marginal_p") < 1e-14);
  CHECK(indefinite.residuals.at("marginal_q") < 1e-14);

  // valid density without the marginal property
  CMat<double> w = rng.psd_matrix(4);
  w *= 4.0 / w.trace().real();
  const auto off = certify<double>(2, w);
  CHECK_FALSE(off.marginal);
  CHECK_FALSE(off.extremal_intersection.has_value());
}

TEST_CASE("random states: routes agree and extremal ranks obey the bound") {
  int extremal_seen = 0;
  for (const Index n : {2, 3}) {
    for (std::uint64_t seed = 100; seed < 108; ++seed) {
      const SampleMethod method =
          seed % 2 == 0 ? SampleMethod::mixture : SampleMethod::project_shrink;
      const StateElement<double> s = sample_marginal_tracial<double>(n, seed, method);
      const auto cert = certify(s);
      REQUIRE(cert.marginal);
      CHECK(cert.consistent);
      if (cert.extremal()) {
        ++extremal_seen;
        CHECK(cert.rank < n * n);
        CHECK(cert.rank * cert.rank <= 2 * n * n - 1);
        REQUIRE(cert.pure.has_value());
      } else {
        REQUIRE(cert.witness.has_value());
        check_witness_sound(*cert.witness, s);
      }
    }
  }
  CHECK(extremal_seen > 0);
}
