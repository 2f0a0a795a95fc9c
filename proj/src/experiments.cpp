#include "nusest/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "nusest/errors.hpp"
#include "nusest/estimator.hpp"
#include "nusest/parallel.hpp"

namespace nusest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Delay grid for the worst-case tap-count selection: interior midpoints, the
// coarsest grid whose argmin is already stable under refinement.
constexpr int kSweepDelayPoints = 33;

// Trials per parallel work item; partial sums are reduced in block order, so
// results do not depend on the worker count.
constexpr int kTrialBlock = 32;

Eigen::VectorXd interior_midpoints(double upper, int points) {
  Eigen::VectorXd grid(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(points) * upper;
  }
  return grid;
}

// Unit-impulse channel spectrum e^{-j 2 pi tau f} over a frequency grid.
Eigen::VectorXcd impulse_spectrum(double delay, const Eigen::VectorXd& freqs) {
  Eigen::VectorXcd values(freqs.size());
  for (Eigen::Index i = 0; i < freqs.size(); ++i) {
    values[i] = std::polar(1.0, -kTwoPi * delay * freqs[i]);
  }
  return values;
}

// Rows are the complex pilot-combination weights of the sinc-Gram estimator
// expressed directly in the channel-spectrum domain: the design solve runs in
// the normalized real domain and the unit-band rotations are folded in as
// w_m(f) = c_m(f T_h) e^{j pi (x_m - f T_h)}.
Eigen::MatrixXcd gram_weight_matrix(const EstimatorDesign<double>& design,
                                    const Eigen::VectorXd& eval_freqs,
                                    double delay_spread_bound) {
  const Eigen::VectorXd& x = design.abscissas();
  Eigen::MatrixXcd weights(eval_freqs.size(), x.size());
  for (Eigen::Index i = 0; i < eval_freqs.size(); ++i) {
    const double xf = eval_freqs[i] * delay_spread_bound;
    const Eigen::VectorXd c = design.coefficients(xf);
    for (Eigen::Index m = 0; m < x.size(); ++m) {
      weights(i, m) = c[m] * std::polar(1.0, std::numbers::pi * (x[m] - xf));
    }
  }
  return weights;
}

Eigen::VectorXd noise_term(const Eigen::MatrixXcd& weights, double noise_variance) {
  return noise_variance * weights.cwiseAbs2().rowwise().sum();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dft_size < 1 || n_modulated < 1 || !(frequency_spacing > 0.0)) {
    throw ConfigError("dft_size, n_modulated and frequency_spacing must be positive");
  }
  if (n_pilots < 2 || pilot_index_step < 1) {
    throw ConfigError("need at least two pilots with a positive index step");
  }
  if ((n_pilots - 1) * pilot_index_step > n_modulated - 1) {
    throw ConfigError("pilot indices must stay within the modulated band");
  }
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ConfigError("alpha must lie in ]0, 1]");
  }
  if (std::isnan(gamma_db)) {
    throw ConfigError("gamma_db must be a number");
  }
  if (!(amplitude_bound > 0.0)) {
    throw ConfigError("amplitude_bound must be positive");
  }
  if (!(lambda > 0.0)) {
    throw ConfigError("lambda must be positive");
  }
  if (trials < 1) {
    throw ConfigError("trials must be at least 1");
  }
}

PilotGrid ExperimentConfig::pilot_grid() const {
  return uniform_pilot_grid(n_pilots, pilot_index_step, frequency_spacing);
}

Eigen::VectorXi ExperimentConfig::eval_carriers() const {
  if (!data_carriers_only) {
    return Eigen::VectorXi::LinSpaced(n_modulated, 0, n_modulated - 1);
  }
  Eigen::VectorXi indices(n_modulated - n_pilots);
  Eigen::Index out = 0;
  for (int i = 0; i < n_modulated; ++i) {
    const bool is_pilot = i % pilot_index_step == 0 && i / pilot_index_step < n_pilots;
    if (!is_pilot) {
      indices[out++] = i;
    }
  }
  return indices;
}

double ExperimentConfig::noise_variance() const {
  return std::pow(10.0, -gamma_db / 10.0);
}

double ExperimentConfig::tap_spacing() const {
  return 1.0 / (static_cast<double>(dft_size) * frequency_spacing);
}

double average_pilot_bandwidth(const PilotGrid& grid) {
  const Eigen::Index m = grid.size();
  if (m < 2) {
    throw ConfigError("average pilot bandwidth needs at least two pilots");
  }
  return static_cast<double>(grid.carrier_indices[m - 1] - grid.carrier_indices[0]) /
         static_cast<double>(m - 1) * grid.frequency_spacing;
}

double delay_spread_from_alpha(double alpha, double b_av) {
  if (!(alpha > 0.0) || alpha > 1.0 || !(b_av > 0.0)) {
    throw ConfigError("alpha must lie in ]0, 1] and b_av must be positive");
  }
  return alpha / b_av;
}

double db(double value) {
  if (!(value >= 0.0)) {
    throw ConfigError("dB conversion requires a non-negative value");
  }
  if (value < 1e-300) {
    return -3000.0;
  }
  return 10.0 * std::log10(value);
}

double analytic_linear_mse(const Eigen::VectorXcd& weights,
                           const Eigen::VectorXcd& pilot_values,
                           std::complex<double> true_value, double noise_variance) {
  if (weights.size() != pilot_values.size()) {
    throw ConfigError("weights and pilot values must have matching length");
  }
  std::complex<double> combined(0.0, 0.0);
  for (Eigen::Index m = 0; m < weights.size(); ++m) {
    combined += weights[m] * pilot_values[m];
  }
  return std::norm(true_value - combined) + noise_variance * weights.squaredNorm();
}

double analytic_linear_mse(const Eigen::VectorXcd& weights, const SparseChannel& channel,
                           const Eigen::VectorXd& pilot_freqs, double noise_variance,
                           double freq) {
  return analytic_linear_mse(weights, channel_spectrum(channel, pilot_freqs),
                             channel_spectrum(channel, freq), noise_variance);
}

TdlModelSpec select_ml_taps(const ExperimentConfig& config, std::vector<double>* aggregates_out) {
  config.validate();
  const PilotGrid grid = config.pilot_grid();
  const Eigen::VectorXd pilot_freqs = grid.frequencies();
  const double t_h = delay_spread_from_alpha(config.alpha, average_pilot_bandwidth(grid));
  const double spacing = config.tap_spacing();
  const double sigma2 = config.noise_variance();
  const Eigen::VectorXd eval_freqs =
      config.eval_carriers().cast<double>() * config.frequency_spacing;
  const Eigen::VectorXd delays = interior_midpoints(t_h, kSweepDelayPoints);

  std::vector<TdlModelSpec> candidates;
  candidates.reserve(static_cast<std::size_t>(grid.size()));
  for (int taps = 1; taps <= grid.size(); ++taps) {
    candidates.push_back(centered_tap_range(taps, spacing, t_h));
  }

  const auto worst_case_mean_rms = [&](const TdlModelSpec& spec) {
    const TdlWeightSolver solver(spec, pilot_freqs);
    const Eigen::MatrixXcd weights = solver.weight_matrix(eval_freqs);
    const Eigen::VectorXd noise = noise_term(weights, sigma2);
    double worst = 0.0;
    for (Eigen::Index d = 0; d < delays.size(); ++d) {
      const Eigen::VectorXcd pilot_values = impulse_spectrum(delays[d], pilot_freqs);
      const Eigen::VectorXcd true_values = impulse_spectrum(delays[d], eval_freqs);
      const double mean_mse =
          ((true_values - weights * pilot_values).cwiseAbs2() + noise).mean();
      worst = std::max(worst, mean_mse);
    }
    return std::sqrt(worst);
  };

  return sweep_tap_count(candidates, worst_case_mean_rms, aggregates_out);
}

RmsCurve run_rms_curves(const ExperimentConfig& config) {
  config.validate();
  const PilotGrid grid = config.pilot_grid();
  const Eigen::VectorXd pilot_freqs = grid.frequencies();
  const double b_av = average_pilot_bandwidth(grid);
  const double t_h = delay_spread_from_alpha(config.alpha, b_av);
  const double sigma2 = config.noise_variance();
  const double mu = sigma2 / (config.amplitude_bound * config.amplitude_bound);

  RmsCurve curve;
  curve.carrier_indices = config.eval_carriers();
  curve.frequencies = curve.carrier_indices.cast<double>() * config.frequency_spacing;
  const Eigen::Index n_eval = curve.frequencies.size();

  curve.metadata.delay_spread_bound = t_h;
  curve.metadata.noise_variance = sigma2;
  curve.metadata.pe_mu = mu;
  curve.metadata.trials = config.trials;
  curve.metadata.seed = config.seed;

  const Eigen::VectorXd abscissas = pilot_freqs * t_h;

  // Precompute every estimator's weight matrix; the Monte Carlo loop then
  // only evaluates channel spectra and bias norms against read-only data.
  std::vector<Eigen::MatrixXcd> weight_mats;
  std::vector<int> slots;  // 0 = ml, 1 = pe, 2 = peinf
  if (config.use_ml) {
    const TdlModelSpec spec = select_ml_taps(config, &curve.metadata.sweep_aggregate_rms);
    curve.metadata.selected_ml_taps = spec.tap_count();
    curve.metadata.ml_first_tap = spec.first_tap;
    weight_mats.push_back(
        TdlWeightSolver(spec, pilot_freqs).weight_matrix(curve.frequencies));
    slots.push_back(0);
  }
  if (config.use_pe) {
    const EstimatorDesign<double> design(abscissas, mu);
    weight_mats.push_back(gram_weight_matrix(design, curve.frequencies, t_h));
    slots.push_back(1);
  }
  if (config.use_peinf) {
    const EstimatorDesign<double> design(abscissas, 0.0);
    curve.metadata.peinf_applied_ridge = design.applied_ridge();
    weight_mats.push_back(gram_weight_matrix(design, curve.frequencies, t_h));
    slots.push_back(2);
  }
  const std::size_t n_est = weight_mats.size();

  const ChannelModelParams params{config.lambda, t_h,
                                  calibrate_sigma_a(config.lambda, 1.0), config.seed};

  const std::size_t n_blocks =
      (static_cast<std::size_t>(config.trials) + kTrialBlock - 1) / kTrialBlock;
  std::vector<Eigen::MatrixXd> partial(n_blocks);

  parallel_for(n_blocks, [&](std::size_t block) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_eval, static_cast<Eigen::Index>(n_est));
    const int lo = static_cast<int>(block) * kTrialBlock;
    const int hi = std::min(config.trials, lo + kTrialBlock);
    for (int t = lo; t < hi; ++t) {
      StreamRng rng(config.seed, RngDomain::channel,
                    config.trial_offset + static_cast<std::uint64_t>(t));
      const SparseChannel channel = draw_channel(params, rng);
      const Eigen::VectorXcd pilot_values = channel_spectrum(channel, pilot_freqs);
      const Eigen::VectorXcd true_values = channel_spectrum(channel, curve.frequencies);
      for (std::size_t e = 0; e < n_est; ++e) {
        acc.col(static_cast<Eigen::Index>(e)) +=
            (true_values - weight_mats[e] * pilot_values).cwiseAbs2();
      }
    }
    partial[block] = std::move(acc);
  });

  // Fixed block-order reduction with Kahan compensation keeps the outcome
  // independent of the worker count and insensitive to summation roundoff.
  Eigen::MatrixXd bias_sum = Eigen::MatrixXd::Zero(n_eval, static_cast<Eigen::Index>(n_est));
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n_eval, static_cast<Eigen::Index>(n_est));
  for (const Eigen::MatrixXd& block : partial) {
    const Eigen::MatrixXd y = block - comp;
    const Eigen::MatrixXd t = bias_sum + y;
    comp = (t - bias_sum) - y;
    bias_sum = t;
  }

  for (std::size_t e = 0; e < n_est; ++e) {
    const Eigen::VectorXd mse =
        bias_sum.col(static_cast<Eigen::Index>(e)) / static_cast<double>(config.trials) +
        noise_term(weight_mats[e], sigma2);
    Eigen::VectorXd rms = mse.cwiseSqrt();
    switch (slots[e]) {
      case 0: curve.rms_ml = std::move(rms); break;
      case 1: curve.rms_pe = std::move(rms); break;
      default: curve.rms_peinf = std::move(rms); break;
    }
  }
  return curve;
}

RmsSurface run_delay_frequency_surface(const ExperimentConfig& config, int tau_points) {
  config.validate();
  if (tau_points < 1) {
    throw ConfigError("tau_points must be at least 1");
  }
  const PilotGrid grid = config.pilot_grid();
  const Eigen::VectorXd pilot_freqs = grid.frequencies();
  const double t_h = delay_spread_from_alpha(config.alpha, average_pilot_bandwidth(grid));
  const double sigma2 = config.noise_variance();
  const double mu = sigma2 / (config.amplitude_bound * config.amplitude_bound);

  RmsSurface surface;
  surface.delays = interior_midpoints(t_h, tau_points);
  surface.frequencies = config.eval_carriers().cast<double>() * config.frequency_spacing;
  surface.reduction_db.resize(tau_points, surface.frequencies.size());

  surface.metadata.delay_spread_bound = t_h;
  surface.metadata.noise_variance = sigma2;
  surface.metadata.pe_mu = mu;
  surface.metadata.trials = 0;
  surface.metadata.seed = config.seed;

  const TdlModelSpec spec = select_ml_taps(config, &surface.metadata.sweep_aggregate_rms);
  surface.metadata.selected_ml_taps = spec.tap_count();
  surface.metadata.ml_first_tap = spec.first_tap;
  const Eigen::MatrixXcd w_ml =
      TdlWeightSolver(spec, pilot_freqs).weight_matrix(surface.frequencies);

  const Eigen::VectorXd abscissas = pilot_freqs * t_h;
  const EstimatorDesign<double> design(abscissas, mu);
  surface.metadata.peinf_applied_ridge = design.applied_ridge();
  const Eigen::MatrixXcd w_pe = gram_weight_matrix(design, surface.frequencies, t_h);

  const Eigen::VectorXd noise_ml = noise_term(w_ml, sigma2);
  const Eigen::VectorXd noise_pe = noise_term(w_pe, sigma2);

  parallel_for(static_cast<std::size_t>(tau_points), [&](std::size_t row) {
    const double delay = surface.delays[static_cast<Eigen::Index>(row)];
    const Eigen::VectorXcd pilot_values = impulse_spectrum(delay, pilot_freqs);
    const Eigen::VectorXcd true_values = impulse_spectrum(delay, surface.frequencies);
    const Eigen::VectorXd mse_ml =
        (true_values - w_ml * pilot_values).cwiseAbs2() + noise_ml;
    const Eigen::VectorXd mse_pe =
        (true_values - w_pe * pilot_values).cwiseAbs2() + noise_pe;
    for (Eigen::Index j = 0; j < surface.frequencies.size(); ++j) {
      surface.reduction_db(static_cast<Eigen::Index>(row), j) = db(mse_pe[j]) - db(mse_ml[j]);
    }
  });
  return surface;
}

double interior_median_reduction_db(const RmsSurface& surface, double trim) {
  if (!(trim >= 0.0) || trim >= 0.5) {
    throw ConfigError("trim fraction must lie in [0, 0.5[");
  }
  const Eigen::Index rows = surface.reduction_db.rows();
  const Eigen::Index cols = surface.reduction_db.cols();
  const Eigen::Index row_trim = static_cast<Eigen::Index>(trim * static_cast<double>(rows));
  const Eigen::Index col_trim = static_cast<Eigen::Index>(trim * static_cast<double>(cols));
  std::vector<double> cells;
  cells.reserve(static_cast<std::size_t>((rows - 2 * row_trim) * (cols - 2 * col_trim)));
  for (Eigen::Index i = row_trim; i < rows - row_trim; ++i) {
    for (Eigen::Index j = col_trim; j < cols - col_trim; ++j) {
      cells.push_back(surface.reduction_db(i, j));
    }
  }
  if (cells.empty()) {
    throw ConfigError("no interior cells left after trimming");
  }
  const std::size_t mid = cells.size() / 2;
  std::nth_element(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(mid),
                   cells.end());
  double median = cells[mid];
  if (cells.size() % 2 == 0) {
    std::nth_element(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                     cells.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + cells[mid - 1]);
  }
  return median;
}

double mean_rms_db(const Eigen::VectorXd& rms) {
  if (rms.size() == 0) {
    throw ConfigError("mean_rms_db needs a non-empty curve");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rms.size(); ++i) {
    acc += db(rms[i] * rms[i]);
  }
  return acc / static_cast<double>(rms.size());
}

double mean_improvement_db(const Eigen::VectorXd& rms_base, const Eigen::VectorXd& rms_other) {
  if (rms_base.size() != rms_other.size() || rms_base.size() == 0) {
    throw ConfigError("improvement needs two equally sized non-empty curves");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rms_base.size(); ++i) {
    acc += db(rms_base[i] * rms_base[i]) - db(rms_other[i] * rms_other[i]);
  }
  return acc / static_cast<double>(rms_base.size());
}

}
