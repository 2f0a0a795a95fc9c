#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "nusest/channel.hpp"
#include "nusest/tdl.hpp"

namespace nusest {

// OFDM benchmark configuration. Defaults reproduce the reference setup:
// 512-point DFT, 433 modulated carriers (indices 0..432), 28 pilots at
// i_m = 16 m, unit carrier spacing, 30 dB SNR, and a delay-spread bound of
// T_h = alpha / B_av where B_av is the average pilot spacing.
struct ExperimentConfig {
  int dft_size = 512;
  int n_modulated = 433;
  int n_pilots = 28;
  int pilot_index_step = 16;
  double frequency_spacing = 1.0;  // Hz
  double gamma_db = 30.0;          // SNR relative to unit channel power
  double alpha = 0.25;             // spectral usage ratio, in ]0, 1]
  double amplitude_bound = 1.0;    // A with |s| <= A; mu = noise_variance / A^2
  double lambda = 9.0;             // Poisson parameter of the channel ensemble
  int trials = 2000;
  std::uint64_t seed = 1;
  std::uint64_t trial_offset = 0;  // first channel stream index (advanced)
  bool data_carriers_only = false;
  bool use_ml = true;
  bool use_pe = true;
  bool use_peinf = true;

  void validate() const;  // throws ConfigError

  PilotGrid pilot_grid() const;
  Eigen::VectorXi eval_carriers() const;
  double noise_variance() const;  // 10^(-gamma_db / 10)
  double tap_spacing() const;     // 1 / (dft_size * frequency_spacing)
};

// Average pilot spacing B_av = (i_last - i_first) / (M - 1) * frequency_spacing.
double average_pilot_bandwidth(const PilotGrid& grid);

// Delay-spread bound T_h = alpha / B_av; the normalized pilot abscissas are
// then x_m = f_m * T_h (= alpha * m on the uniform reference grid).
double delay_spread_from_alpha(double alpha, double b_av);

// 10 log10(value), intended for squared-error quantities (equivalently
// 20 log10 of an RMS). Values below 1e-300 clamp to -3000 dB.
double db(double value);

// Exact expected squared error of a linear estimator w applied to noisy
// samples of pilot_values: |true_value - w^T pilot_values|^2 plus
// noise_variance * sum |w_m|^2 (i.i.d. circular complex Gaussian noise).
double analytic_linear_mse(const Eigen::VectorXcd& weights,
                           const Eigen::VectorXcd& pilot_values,
                           std::complex<double> true_value, double noise_variance);
double analytic_linear_mse(const Eigen::VectorXcd& weights, const SparseChannel& channel,
                           const Eigen::VectorXd& pilot_freqs, double noise_variance,
                           double freq);

struct RunMetadata {
  double delay_spread_bound = 0.0;
  double noise_variance = 0.0;
  double pe_mu = 0.0;
  double peinf_applied_ridge = 0.0;
  int selected_ml_taps = 0;
  int ml_first_tap = 0;
  std::vector<double> sweep_aggregate_rms;  // indexed by tap count - 1
  int trials = 0;
  std::uint64_t seed = 0;
};

// Per-carrier RMS error of each estimator (linear scale, not dB).
struct RmsCurve {
  Eigen::VectorXi carrier_indices;
  Eigen::VectorXd frequencies;
  Eigen::VectorXd rms_ml;
  Eigen::VectorXd rms_pe;
  Eigen::VectorXd rms_peinf;
  RunMetadata metadata;
};

// reduction_db(i, j) = 10 log10(MSE_PE / MSE_ML) for a unit impulse at
// delays[i], evaluated at frequencies[j]; negative where the bounded
// band-limited estimator wins.
struct RmsSurface {
  Eigen::VectorXd delays;       // seconds
  Eigen::VectorXd frequencies;  // Hz
  Eigen::MatrixXd reduction_db;
  RunMetadata metadata;
};

// Deterministic tap-count selection for the least-squares baseline: for each
// candidate count (1..M, centered windows) evaluate the worst case over a
// fixed grid of 33 admissible single-tap delays of the mean-over-carriers
// analytic MSE, and keep the argmin (ties toward fewer taps). The receiver
// knows only the delay-spread bound, hence the worst-case criterion.
TdlModelSpec select_ml_taps(const ExperimentConfig& config,
                            std::vector<double>* aggregates_out = nullptr);

// Monte Carlo benchmark over random channels: per carrier and estimator,
// averages the exact per-channel MSE (the noise term is analytic, so only
// channels are sampled) and reports RMS = sqrt(mean MSE). Deterministic for
// a given seed; trial t always uses channel stream index trial_offset + t,
// so prefix averages are stable as trials grow.
RmsCurve run_rms_curves(const ExperimentConfig& config);

// Deterministic single-tap sweep: tau_points midpoint delays inside
// ]0, T_h[ crossed with the evaluation carriers.
RmsSurface run_delay_frequency_surface(const ExperimentConfig& config, int tau_points = 101);

// Median of reduction_db over the interior cells: the central (1 - 2 * trim)
// fraction of the delay rows and of the frequency columns, trimming
// floor(trim * n) cells from each edge.
double interior_median_reduction_db(const RmsSurface& surface, double trim = 0.1);

// Mean over carriers of the per-carrier RMS expressed in dB (20 log10).
double mean_rms_db(const Eigen::VectorXd& rms);

// Mean over carriers of (RMS_base,dB - RMS_other,dB); positive when `other`
// improves on `base`.
double mean_improvement_db(const Eigen::VectorXd& rms_base, const Eigen::VectorXd& rms_other);

}
