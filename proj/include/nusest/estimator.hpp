#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nusest/errors.hpp"
#include "nusest/sinc.hpp"

namespace nusest {

template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using CVectorX = Eigen::Vector<std::complex<Scalar>, Eigen::Dynamic>;

// Minimum spacing (in dimensionless abscissa units) below which two sample
// positions are treated as duplicates.
inline constexpr double kDefaultMinAbscissaGap = 1e-9;

// Gram matrix of the sinc kernel: [G]_{m,m'} = sinc(x_m - x_{m'}).
// Symmetric by construction with an exactly unit diagonal.
template <typename Scalar>
MatrixX<Scalar> build_gram(const VectorX<Scalar>& abscissas,
                           Scalar min_gap = Scalar(kDefaultMinAbscissaGap)) {
  const Eigen::Index m = abscissas.size();
  MatrixX<Scalar> gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    gram(i, i) = Scalar(1);
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(abscissas[i] - abscissas[j]) < min_gap) {
        throw DuplicateAbscissa("abscissas " + std::to_string(j) + " and " +
                                std::to_string(i) + " are closer than the minimum gap");
      }
      const Scalar value = sinc(abscissas[i] - abscissas[j]);
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  return gram;
}

// Kernel cross-vector [g(x)]_m = sinc(x - x_m).
template <typename Scalar>
VectorX<Scalar> kernel_vector(const VectorX<Scalar>& abscissas, Scalar x) {
  return abscissas.unaryExpr([x](Scalar xm) { return sinc(x - xm); });
}

// Noisy samples z_m paired with an EstimatorDesign. noise_variance is the
// total complex variance per sample; amplitude_bound is A with |s(x)| <= A.
// The matched regularization for these samples is mu = noise_variance / A^2.
template <typename Scalar>
struct SampleVector {
  CVectorX<Scalar> values;
  Scalar noise_variance = Scalar(0);
  Scalar amplitude_bound = Scalar(1);

  Scalar matched_mu() const {
    return noise_variance / (amplitude_bound * amplitude_bound);
  }
};

// Regularized sinc-Gram design for a signal with spectral support inside
// ]-1/2, 1/2[, sampled at distinct abscissas x_m. Factors (G + mu I) once;
// immutable afterwards, so concurrent read-only use is safe.
//
// mu = 0 designs attempt the plain factorization first; if it fails (the Gram
// matrix can be numerically semidefinite for clustered abscissas), the solve
// retries with ridge 1e-12 * trace(G) / M, reported via applied_ridge().
template <typename Scalar>
class EstimatorDesign {
 public:
  explicit EstimatorDesign(VectorX<Scalar> abscissas, Scalar mu = Scalar(0),
                           Scalar min_gap = Scalar(kDefaultMinAbscissaGap))
      : abscissas_(std::move(abscissas)),
        mu_(mu),
        gram_(build_gram<Scalar>(abscissas_, min_gap)) {
    if (!(std::isfinite(mu_)) || mu_ < Scalar(0)) {
      throw ConfigError("regularization mu must be finite and non-negative");
    }
    MatrixX<Scalar> system = gram_;
    system.diagonal().array() += mu_;
    llt_.compute(system);
    if (llt_.info() != Eigen::Success && mu_ == Scalar(0)) {
      applied_ridge_ = Scalar(1e-12) * gram_.trace() / Scalar(gram_.rows());
      system = gram_;
      system.diagonal().array() += applied_ridge_;
      llt_.compute(system);
    }
    if (llt_.info() != Eigen::Success) {
      throw SingularSystem("factorization of the regularized Gram system failed");
    }
  }

  Eigen::Index size() const { return abscissas_.size(); }
  const VectorX<Scalar>& abscissas() const { return abscissas_; }
  Scalar mu() const { return mu_; }
  const MatrixX<Scalar>& gram() const { return gram_; }

  // Non-zero only when the mu = 0 factorization needed the fallback ridge.
  Scalar applied_ridge() const { return applied_ridge_; }

  // Estimator coefficients c(x) = (G + mu I)^{-1} g(x); real by design, the
  // unique minimizer of the worst-case squared-error quadratic form.
  VectorX<Scalar> coefficients(Scalar x) const {
    return llt_.solve(kernel_vector(abscissas_, x));
  }

  // Point estimate c(x)^T z for complex samples z; linear in z.
  std::complex<Scalar> estimate(const CVectorX<Scalar>& values, Scalar x) const {
    if (values.size() != abscissas_.size()) {
      throw ConfigError("sample vector length does not match the design");
    }
    const VectorX<Scalar> c = coefficients(x);
    std::complex<Scalar> acc(0, 0);
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      acc += c[m] * values[m];
    }
    return acc;
  }

  std::complex<Scalar> estimate(const SampleVector<Scalar>& samples, Scalar x) const {
    return estimate(samples.values, x);
  }

  // Worst-case expected squared error at x over finite sinc-series signals
  // whose coefficient sequence has energy at most A^2 (in particular every
  // integer-spaced sample then satisfies |s(p)| <= A):
  // A^2 (1 - g(x)^T (G + mu I)^{-1} g(x)), clamped at zero against roundoff.
  Scalar error_bound(Scalar amplitude_bound, Scalar x) const {
    const VectorX<Scalar> g = kernel_vector(abscissas_, x);
    const Scalar quad = g.dot(llt_.solve(g));
    const Scalar bound = amplitude_bound * amplitude_bound * (Scalar(1) - quad);
    return std::max(Scalar(0), bound);
  }

 private:
  VectorX<Scalar> abscissas_;
  Scalar mu_ = Scalar(0);
  MatrixX<Scalar> gram_;
  Eigen::LLT<MatrixX<Scalar>> llt_;
  Scalar applied_ridge_ = Scalar(0);
};

}
