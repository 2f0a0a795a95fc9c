#include "nusest/channel.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "nusest/errors.hpp"

namespace nusest {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::complex<double> channel_spectrum(const SparseChannel& channel, double freq) {
  std::complex<double> acc(0.0, 0.0);
  for (const ChannelTap& tap : channel.taps) {
    acc += tap.amplitude * std::polar(1.0, -kTwoPi * tap.delay * freq);
  }
  return acc;
}

Eigen::VectorXcd channel_spectrum(const SparseChannel& channel, const Eigen::VectorXd& freqs) {
  Eigen::VectorXcd values = Eigen::VectorXcd::Zero(freqs.size());
  for (const ChannelTap& tap : channel.taps) {
    for (Eigen::Index i = 0; i < freqs.size(); ++i) {
      values[i] += tap.amplitude * std::polar(1.0, -kTwoPi * tap.delay * freqs[i]);
    }
  }
  return values;
}

SparseChannel draw_channel(const ChannelModelParams& params, StreamRng& rng) {
  if (!(params.lambda > 0.0) || !(params.delay_spread_bound > 0.0) ||
      !(params.sigma_a2 > 0.0)) {
    throw ConfigError("channel model parameters must be positive");
  }
  const long k_total = 1 + rng.poisson(params.lambda);
  SparseChannel channel;
  channel.delay_spread_bound = params.delay_spread_bound;
  channel.taps.resize(static_cast<std::size_t>(k_total));
  const double edge = 1e-12 * params.delay_spread_bound;
  for (long k = 0; k < k_total; ++k) {
    const double variance =
        params.sigma_a2 * std::exp(-2.0 * static_cast<double>(k) / static_cast<double>(k_total));
    ChannelTap& tap = channel.taps[static_cast<std::size_t>(k)];
    tap.amplitude = rng.complex_normal(variance);
    // Uniform on the open interval: endpoint hits (measure zero up to
    // rounding) are redrawn so the delay-spread support stays strict.
    do {
      tap.delay = rng.uniform(0.0, params.delay_spread_bound);
    } while (tap.delay <= edge || tap.delay >= params.delay_spread_bound - edge);
  }
  return channel;
}

double expected_profile_power(double lambda) {
  if (!(lambda >= 0.0)) {
    throw ConfigError("lambda must be non-negative");
  }
  // sum_{k=1..K} exp(-2 (k-1)/K) has the closed form
  // (1 - e^{-2}) / (1 - e^{-2/K}); averaged over K = 1 + Poisson(lambda).
  const double numer = 1.0 - std::exp(-2.0);
  double pmf = std::exp(-lambda);  // P(N = 0)
  double cdf = 0.0;
  double acc = 0.0;
  for (long n = 0; cdf <= 1.0 - 1e-12; ++n) {
    if (n > 0) {
      pmf *= lambda / static_cast<double>(n);
    }
    const double k = static_cast<double>(n + 1);
    const double profile_sum = (n == 0) ? 1.0 : numer / (1.0 - std::exp(-2.0 / k));
    acc += pmf * profile_sum;
    cdf += pmf;
  }
  return acc;
}

double calibrate_sigma_a(double lambda, double target_power) {
  if (!(target_power > 0.0)) {
    throw ConfigError("target power must be positive");
  }
  return target_power / expected_profile_power(lambda);
}

PilotGrid uniform_pilot_grid(int n_pilots, int index_step, double frequency_spacing) {
  if (n_pilots < 2 || index_step < 1 || !(frequency_spacing > 0.0)) {
    throw ConfigError("pilot grid requires n_pilots >= 2, index_step >= 1, spacing > 0");
  }
  PilotGrid grid;
  grid.carrier_indices = Eigen::VectorXi::LinSpaced(n_pilots, 0, index_step * (n_pilots - 1));
  grid.frequency_spacing = frequency_spacing;
  return grid;
}

PilotObservations observe_pilots(const SparseChannel& channel, const PilotGrid& grid,
                                 double noise_variance, StreamRng& rng) {
  if (!(noise_variance >= 0.0)) {
    throw ConfigError("noise variance must be non-negative");
  }
  PilotObservations obs;
  obs.grid = grid;
  obs.noise_variance = noise_variance;
  obs.values = channel_spectrum(channel, grid.frequencies());
  if (noise_variance > 0.0) {
    for (Eigen::Index m = 0; m < obs.values.size(); ++m) {
      obs.values[m] += rng.complex_normal(noise_variance);
    }
  }
  return obs;
}

NormalizedSamples normalize_to_unit_band(const PilotObservations& obs,
                                         double delay_spread_bound) {
  if (!(delay_spread_bound > 0.0)) {
    throw ConfigError("delay spread bound must be positive");
  }
  NormalizedSamples out;
  out.abscissas = obs.grid.frequencies() * delay_spread_bound;
  out.values.resize(obs.values.size());
  for (Eigen::Index m = 0; m < obs.values.size(); ++m) {
    out.values[m] = obs.values[m] * std::polar(1.0, std::numbers::pi * out.abscissas[m]);
  }
  out.noise_variance = obs.noise_variance;
  return out;
}

std::complex<double> denormalize_estimate(std::complex<double> estimate, double freq,
                                          double delay_spread_bound) {
  return estimate * std::polar(1.0, -std::numbers::pi * freq * delay_spread_bound);
}

namespace {

std::string format_full(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}

void write_channels(std::ostream& out, const std::vector<SparseChannel>& channels,
                    std::uint64_t seed) {
  const double bound = channels.empty() ? 0.0 : channels.front().delay_spread_bound;
  out << "# delay_spread_bound " << format_full(bound) << " seed " << seed << " channels "
      << channels.size() << "\n";
  for (std::size_t c = 0; c < channels.size(); ++c) {
    out << "# channel " << c << " taps " << channels[c].taps.size() << "\n";
    for (const ChannelTap& tap : channels[c].taps) {
      out << format_full(tap.delay) << " " << format_full(tap.amplitude.real()) << " "
          << format_full(tap.amplitude.imag()) << "\n";
    }
  }
  if (!out) {
    throw IoError("failed while writing channel dump");
  }
}

std::vector<SparseChannel> read_channels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("channel dump is empty");
  }
  std::istringstream header(line);
  std::string hash, key;
  double bound = 0.0;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  header >> hash >> key >> bound;
  header >> key >> seed;
  header >> key >> count;
  if (hash != "#" || !header) {
    throw IoError("malformed channel dump header");
  }

  std::vector<SparseChannel> channels(count);
  for (std::size_t c = 0; c < count; ++c) {
    if (!std::getline(in, line)) {
      throw IoError("truncated channel dump");
    }
    std::istringstream channel_header(line);
    std::size_t index = 0;
    std::size_t taps = 0;
    channel_header >> hash >> key >> index >> key >> taps;
    if (hash != "#" || !channel_header || index != c) {
      throw IoError("malformed channel header line");
    }
    channels[c].delay_spread_bound = bound;
    channels[c].taps.resize(taps);
    for (std::size_t k = 0; k < taps; ++k) {
      if (!std::getline(in, line)) {
        throw IoError("truncated channel dump");
      }
      std::istringstream tap_line(line);
      double delay = 0.0;
      double re = 0.0;
      double im = 0.0;
      tap_line >> delay >> re >> im;
      if (!tap_line) {
        throw IoError("malformed tap line");
      }
      channels[c].taps[k] = ChannelTap{delay, {re, im}};
    }
  }
  return channels;
}

}
