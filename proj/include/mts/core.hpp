#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mts {

using Index = Eigen::Index;

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CMat = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using CVec = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using RMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

/// Shared numerical thresholds. All rank/angle cutoffs are relative.
struct Tolerances {
  double tol = 1e-9;        // marginality, purity and witness acceptance
  double rank_tol = 1e-9;   // eigenvalue cutoff relative to the largest eigenvalue
  double angle_tol = 1e-9;  // principal-angle cutoff for subspace intersections
  double null_tol = 1e-8;   // singular-value cutoff for kernel dimensions
  double sqrt_tol = 1e-10;        // residual target for iterative square roots
  int sqrt_max_iters = 200000;    // iteration budget for the square-root fixed point
  int descent_max_steps = 64;     // rank strictly decreases, so n^2 steps suffice

  /// Uniformly tighter copy; used when re-verifying candidates.
  Tolerances tightened(double factor = 10.0) const {
    Tolerances t = *this;
    t.tol /= factor;
    t.rank_tol /= factor;
    t.angle_tol /= factor;
    t.null_tol /= factor;
    return t;
  }

  std::map<std::string, double> as_map() const {
    return {{"tol", tol},
            {"rank_tol", rank_tol},
            {"angle_tol", angle_tol},
            {"null_tol", null_tol},
            {"sqrt_tol", sqrt_tol}};
  }
};

/// 64-bit finalizer (splitmix64). Used to decorrelate derived seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent child seed for stream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) + index);
}

/// Deterministic random source. Gaussian variates use Box-Muller on top of
/// mt19937_64 so sequences do not depend on the standard library in use.
template <typename Real = double>
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53-bit resolution.
  Real uniform() {
    return static_cast<Real>(gen_() >> 11) * static_cast<Real>(0x1.0p-53);
  }

  /// Uniform integer in {0, ..., bound - 1}; bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("RandomStream::below: zero bound");
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal variate.
  Real gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    Real u1 = uniform();
    while (u1 <= Real(0)) u1 = uniform();
    const Real u2 = uniform();
    const Real radius = std::sqrt(Real(-2) * std::log(u1));
    const Real angle = Real(2) * std::numbers::pi_v<Real> * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Standard complex normal variate, E|z|^2 = 1.
  Complex<Real> cgaussian() {
    const Real re = gaussian();
    const Real im = gaussian();
    return Complex<Real>(re, im) / std::sqrt(Real(2));
  }

  CMat<Real> gaussian_matrix(Index rows, Index cols) {
    CMat<Real> g(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) g(i, j) = cgaussian();
    return g;
  }

  CVec<Real> unit_vector(Index dim) {
    CVec<Real> v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = cgaussian();
    const Real norm = v.norm();
    if (norm == Real(0)) return unit_vector(dim);
    return v / norm;
  }

  /// Haar-distributed unitary: QR of a Gaussian matrix with the diagonal of R
  /// rephased to be positive real.
  CMat<Real> haar_unitary(Index dim) {
    const CMat<Real> g = gaussian_matrix(dim, dim);
    Eigen::HouseholderQR<CMat<Real>> qr(g);
    CMat<Real> q = qr.householderQ() * CMat<Real>::Identity(dim, dim);
    const CMat<Real> r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Index j = 0; j < dim; ++j) {
      const Complex<Real> d = r(j, j);
      const Real a = std::abs(d);
      q.col(j) *= (a > Real(0)) ? d / a : Complex<Real>(1, 0);
    }
    return q;
  }

  /// Wishart-type positive semidefinite sample g g^*.
  CMat<Real> psd_matrix(Index dim, Index factor_cols = 0) {
    if (factor_cols <= 0) factor_cols = dim;
    const CMat<Real> g = gaussian_matrix(dim, factor_cols);
    return g * g.adjoint();
  }

  /// Flat Dirichlet weights: nonnegative, summing to one.
  std::vector<Real> simplex_weights(Index count) {
    std::vector<Real> w(static_cast<std::size_t>(count));
    Real total = Real(0);
    for (auto& x : w) {
      Real u = uniform();
      while (u <= Real(0)) u = uniform();
      x = -std::log(u);
      total += x;
    }
    for (auto& x : w) x /= total;
    return w;
  }

 private:
  std::mt19937_64 gen_;
  Real spare_ = Real(0);
  bool have_spare_ = false;
};

}  // namespace mts
