#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "nusest/rng.hpp"

namespace nusest {

struct ChannelTap {
  double delay = 0.0;  // seconds
  std::complex<double> amplitude{0.0, 0.0};
};

// Sparse multipath channel h(t) = sum_k a_k delta(t - tau_k). All delays lie
// strictly inside ]0, delay_spread_bound[.
struct SparseChannel {
  std::vector<ChannelTap> taps;
  double delay_spread_bound = 0.0;  // seconds
};

// Exact spectrum H(f) = sum_k a_k exp(-j 2 pi tau_k f).
std::complex<double> channel_spectrum(const SparseChannel& channel, double freq);
Eigen::VectorXcd channel_spectrum(const SparseChannel& channel, const Eigen::VectorXd& freqs);

// Random channel ensemble: tap count K - 1 ~ Poisson(lambda); tap k (1-based)
// has zero-mean complex Gaussian amplitude with total variance
// sigma_a2 * exp(-2 (k-1) / K); delays are i.i.d. uniform on the open
// interval ]0, delay_spread_bound[ (endpoint hits are redrawn).
struct ChannelModelParams {
  double lambda = 9.0;
  double delay_spread_bound = 0.0;  // seconds
  double sigma_a2 = 1.0;            // base complex variance of the first tap
  std::uint64_t rng_seed = 0;
};

SparseChannel draw_channel(const ChannelModelParams& params, StreamRng& rng);

// E over K of sum_{k=1..K} exp(-2 (k-1) / K) with K - 1 ~ Poisson(lambda),
// computed by a truncated Poisson series (truncation at cumulative
// probability 1 - 1e-12).
double expected_profile_power(double lambda);

// Base variance sigma_a2 that calibrates the ensemble average spectrum power
// E|H(f)|^2 (frequency-independent) to target_power.
double calibrate_sigma_a(double lambda, double target_power);

// Pilot carrier layout: f_m = carrier_indices[m] * frequency_spacing.
struct PilotGrid {
  Eigen::VectorXi carrier_indices;
  double frequency_spacing = 1.0;  // Hz

  Eigen::Index size() const { return carrier_indices.size(); }
  Eigen::VectorXd frequencies() const {
    return carrier_indices.cast<double>() * frequency_spacing;
  }
};

PilotGrid uniform_pilot_grid(int n_pilots, int index_step, double frequency_spacing);

// Noisy pilot samples V_m = H(f_m) + E_m with E_m i.i.d. circular complex
// Gaussian of total variance noise_variance.
struct PilotObservations {
  PilotGrid grid;
  Eigen::VectorXcd values;
  double noise_variance = 0.0;
};

PilotObservations observe_pilots(const SparseChannel& channel, const PilotGrid& grid,
                                 double noise_variance, StreamRng& rng);

// Unit-band normalization: x_m = f_m * T_h and z_m = V_m e^{j pi x_m} turn
// channel-spectrum samples into samples of a signal s(x) = H(x/T_h) e^{j pi x}
// whose spectral support lies strictly inside ]-1/2, 1/2[. The unit-modulus
// rotation leaves the noise statistics unchanged.
struct NormalizedSamples {
  Eigen::VectorXd abscissas;
  Eigen::VectorXcd values;
  double noise_variance = 0.0;
};

NormalizedSamples normalize_to_unit_band(const PilotObservations& obs,
                                         double delay_spread_bound);

// Inverse map at x = f * T_h: H_hat(f) = s_hat e^{-j pi f T_h}.
std::complex<double> denormalize_estimate(std::complex<double> estimate, double freq,
                                          double delay_spread_bound);

// Line-based text serialization: a file header with the delay-spread bound,
// seed and channel count, then per channel a header line and one
// "tau re(a) im(a)" line per tap.
void write_channels(std::ostream& out, const std::vector<SparseChannel>& channels,
                    std::uint64_t seed);
std::vector<SparseChannel> read_channels(std::istream& in);

}
