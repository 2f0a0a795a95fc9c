#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "nusest/channel.hpp"
#include "nusest/errors.hpp"

namespace nusest {

// Tapped-delay-line model: equally spaced taps at delays q * spacing for
// integer q in [first_tap, last_tap]. Identifiability requires the tap count
// to stay at or below the number of pilot observations.
struct TdlModelSpec {
  double spacing = 0.0;  // seconds
  int first_tap = 0;
  int last_tap = 0;

  int tap_count() const { return last_tap - first_tap + 1; }
};

// Tap window of the requested size covering the impulse-response support
// [0, delay_spread_bound]: the support needs round(T_h / T) + 1 taps; any
// additional taps are split evenly between the two sides (extra one leading),
// mirroring how the sinc tails of the effective discrete response spill over
// both edges of the support.
TdlModelSpec centered_tap_range(int tap_count, double spacing, double delay_spread_bound);

// Design matrix [W]_{m,q} = T exp(-j 2 pi q T f_m), columns ordered by q.
Eigen::MatrixXcd build_design_matrix(const TdlModelSpec& spec,
                                     const Eigen::VectorXd& pilot_freqs);

struct TdlFit {
  TdlModelSpec model;
  Eigen::VectorXcd tap_weights;  // one per tap index, q ascending
};

// Least-squares tap estimate: minimizes ||v - W h||_2 over tap weights h.
TdlFit ml_fit(const PilotObservations& obs, const TdlModelSpec& spec);

// Fitted-model spectrum at freq: sum_q tap_weights[q] * T exp(-j 2 pi q T f).
std::complex<double> tdl_spectrum(const TdlFit& fit, double freq);

// The fit-then-interpolate estimator expressed as explicit linear weights:
// H_hat(f) = w(f)^T v with w(f)^T = a(f)^T (W^H W)^{-1} W^H and
// [a(f)]_q = T exp(-j 2 pi q T f). Shares the analytic expected-squared-error
// evaluation used for every linear estimator in the experiments.
class TdlWeightSolver {
 public:
  TdlWeightSolver(const TdlModelSpec& spec, const Eigen::VectorXd& pilot_freqs);

  const TdlModelSpec& model() const { return spec_; }

  Eigen::VectorXcd weights(double freq) const;
  // One row w(f)^T per requested frequency.
  Eigen::MatrixXcd weight_matrix(const Eigen::VectorXd& freqs) const;

 private:
  TdlModelSpec spec_;
  Eigen::MatrixXcd pinv_;  // tap_count x M pseudo-inverse of the design matrix
};

// Absolute tolerance under which two sweep aggregates count as tied; ties are
// broken toward the earlier (fewer-tap) candidate.
inline constexpr double kSweepTieTolerance = 1e-12;

// Argmin of aggregate_rms over the candidates, evaluated in order. Optionally
// reports every candidate's aggregate through aggregates_out.
TdlModelSpec sweep_tap_count(const std::vector<TdlModelSpec>& candidates,
                             const std::function<double(const TdlModelSpec&)>& aggregate_rms,
                             std::vector<double>* aggregates_out = nullptr);

}
