#include "nusest/tdl.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace nusest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Shared conditioning check on the column-pivoted factorization: the
// normal-equations matrix W^H W has condition ~ (largest/smallest |R| diag)^2.
void require_well_conditioned(const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd>& qr,
                              Eigen::Index tap_count) {
  const auto r_diag = qr.matrixR().diagonal().head(tap_count).cwiseAbs().eval();
  const double largest = r_diag.maxCoeff();
  const double smallest = r_diag.minCoeff();
  if (!(smallest > 0.0) || (largest / smallest) * (largest / smallest) > 1e12) {
    throw RankDeficient("tapped-delay-line system is numerically singular");
  }
}

}

TdlModelSpec centered_tap_range(int tap_count, double spacing, double delay_spread_bound) {
  if (tap_count < 1 || !(spacing > 0.0) || !(delay_spread_bound > 0.0)) {
    throw ConfigError("tap range requires tap_count >= 1 and positive spacing/bound");
  }
  const int span = static_cast<int>(std::llround(delay_spread_bound / spacing));
  const int extra = tap_count - span - 1;
  const int first = extra > 0 ? -((extra + 1) / 2) : 0;
  return TdlModelSpec{spacing, first, first + tap_count - 1};
}

Eigen::MatrixXcd build_design_matrix(const TdlModelSpec& spec,
                                     const Eigen::VectorXd& pilot_freqs) {
  const Eigen::Index m = pilot_freqs.size();
  const Eigen::Index n = spec.tap_count();
  if (n > m) {
    throw IdentifiabilityViolation("tap count " + std::to_string(n) +
                                   " exceeds the number of pilots " + std::to_string(m));
  }
  Eigen::MatrixXcd design(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double delay = static_cast<double>(spec.first_tap + j) * spec.spacing;
    for (Eigen::Index i = 0; i < m; ++i) {
      design(i, j) = spec.spacing * std::polar(1.0, -kTwoPi * delay * pilot_freqs[i]);
    }
  }
  return design;
}

TdlFit ml_fit(const PilotObservations& obs, const TdlModelSpec& spec) {
  const Eigen::MatrixXcd design = build_design_matrix(spec, obs.grid.frequencies());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(design);
  require_well_conditioned(qr, design.cols());
  return TdlFit{spec, qr.solve(obs.values)};
}

std::complex<double> tdl_spectrum(const TdlFit& fit, double freq) {
  std::complex<double> acc(0.0, 0.0);
  for (Eigen::Index j = 0; j < fit.tap_weights.size(); ++j) {
    const double delay = static_cast<double>(fit.model.first_tap + j) * fit.model.spacing;
    acc += fit.tap_weights[j] * fit.model.spacing * std::polar(1.0, -kTwoPi * delay * freq);
  }
  return acc;
}

TdlWeightSolver::TdlWeightSolver(const TdlModelSpec& spec, const Eigen::VectorXd& pilot_freqs)
    : spec_(spec) {
  const Eigen::MatrixXcd design = build_design_matrix(spec, pilot_freqs);
  const Eigen::Index m = design.rows();
  const Eigen::Index n = design.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(design);
  require_well_conditioned(qr, n);
  // W P = Q R (thin), so the pseudo-inverse is P R^{-1} Q^H.
  Eigen::MatrixXcd thin_q =
      qr.householderQ() * Eigen::MatrixXcd::Identity(m, n);
  Eigen::MatrixXcd rinv_qh = thin_q.adjoint();
  qr.matrixR()
      .topLeftCorner(n, n)
      .triangularView<Eigen::Upper>()
      .solveInPlace(rinv_qh);
  pinv_ = qr.colsPermutation() * rinv_qh;
}

Eigen::VectorXcd TdlWeightSolver::weights(double freq) const {
  const Eigen::Index n = spec_.tap_count();
  Eigen::VectorXcd basis(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double delay = static_cast<double>(spec_.first_tap + j) * spec_.spacing;
    basis[j] = spec_.spacing * std::polar(1.0, -kTwoPi * delay * freq);
  }
  // w(f)^T = a(f)^T pinv  =>  w(f) = pinv^T a(f) (plain transpose, no conjugation)
  return pinv_.transpose() * basis;
}

Eigen::MatrixXcd TdlWeightSolver::weight_matrix(const Eigen::VectorXd& freqs) const {
  const Eigen::Index n = spec_.tap_count();
  Eigen::MatrixXcd basis(freqs.size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double delay = static_cast<double>(spec_.first_tap + j) * spec_.spacing;
    for (Eigen::Index i = 0; i < freqs.size(); ++i) {
      basis(i, j) = spec_.spacing * std::polar(1.0, -kTwoPi * delay * freqs[i]);
    }
  }
  return basis * pinv_;
}

TdlModelSpec sweep_tap_count(const std::vector<TdlModelSpec>& candidates,
                             const std::function<double(const TdlModelSpec&)>& aggregate_rms,
                             std::vector<double>* aggregates_out) {
  if (candidates.empty()) {
    throw ConfigError("tap-count sweep needs at least one candidate");
  }
  if (aggregates_out) {
    aggregates_out->clear();
    aggregates_out->reserve(candidates.size());
  }
  std::size_t best_index = 0;
  double best_value = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double value = aggregate_rms(candidates[i]);
    if (aggregates_out) {
      aggregates_out->push_back(value);
    }
    if (i == 0 || value < best_value - kSweepTieTolerance) {
      best_index = i;
      best_value = value;
    }
  }
  return candidates[best_index];
}

}
