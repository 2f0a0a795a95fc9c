#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "nusest/errors.hpp"
#include "nusest/estimator.hpp"
#include "nusest/experiments.hpp"
#include "oracles.hpp"

using nusest::analytic_linear_mse;
using nusest::average_pilot_bandwidth;
using nusest::ChannelTap;
using nusest::db;
using nusest::delay_spread_from_alpha;
using nusest::EstimatorDesign;
using nusest::ExperimentConfig;
using nusest::mean_improvement_db;
using nusest::mean_rms_db;
using nusest::RmsCurve;
using nusest::RmsSurface;
using nusest::run_delay_frequency_surface;
using nusest::run_rms_curves;
using nusest::select_ml_taps;
using nusest::SparseChannel;
using nusest::StreamRng;
using nusest::TdlModelSpec;
using nusest::TdlWeightSolver;

namespace {

// Mirrors the estimator-to-channel-domain weight fold used by the runner:
// w_m(f) = c_m(f T_h) e^{j pi (x_m - f T_h)}.
Eigen::VectorXcd pe_weights(const EstimatorDesign<double>& design, double freq, double t_h) {
  const double xf = freq * t_h;
  const Eigen::VectorXd c = design.coefficients(xf);
  Eigen::VectorXcd w(c.size());
  for (Eigen::Index m = 0; m < c.size(); ++m) {
    w[m] = c[m] * std::polar(1.0, std::numbers::pi * (design.abscissas()[m] - xf));
  }
  return w;
}

double median_by_sort(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) {
    return values[mid];
  }
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

TEST_CASE("configuration helpers reproduce the reference layout") {
  ExperimentConfig config;
  config.validate();
  const auto grid = config.pilot_grid();
  CHECK(average_pilot_bandwidth(grid) == 16.0);
  CHECK(delay_spread_from_alpha(0.25, 16.0) == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
  CHECK(delay_spread_from_alpha(0.125, 16.0) == doctest::Approx(1.0 / 128.0).epsilon(1e-15));
  CHECK(config.tap_spacing() == 1.0 / 512.0);
  CHECK(config.noise_variance() == doctest::Approx(1e-3).epsilon(1e-15));

  const auto wide = nusest::uniform_pilot_grid(2, 10, 2.0);
  CHECK(average_pilot_bandwidth(wide) == 20.0);
  // alpha = 1 puts the normalized abscissas on the integer grid.
  const double t_h = delay_spread_from_alpha(1.0, 16.0);
  for (int m = 0; m < 28; ++m) {
    CHECK(grid.frequencies()[m] * t_h == doctest::Approx(static_cast<double>(m)).epsilon(1e-15));
  }

  const Eigen::VectorXi all = config.eval_carriers();
  REQUIRE(all.size() == 433);
  CHECK(all[0] == 0);
  CHECK(all[432] == 432);

  ExperimentConfig data_only = config;
  data_only.data_carriers_only = true;
  const Eigen::VectorXi data = data_only.eval_carriers();
  REQUIRE(data.size() == 405);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    CHECK(data[i] % 16 != 0);
  }
  CHECK(data[0] == 1);
  CHECK(data[14] == 15);
  CHECK(data[15] == 17);
}

TEST_CASE("configuration validation rejects out-of-range setups") {
  ExperimentConfig config;
  config.trials = 0;
  CHECK_THROWS_AS(config.validate(), nusest::ConfigError);
  config = ExperimentConfig{};
  config.alpha = 0.0;
  CHECK_THROWS_AS(config.validate(), nusest::ConfigError);
  config.alpha = 1.5;
  CHECK_THROWS_AS(config.validate(), nusest::ConfigError);
  config = ExperimentConfig{};
  config.pilot_index_step = 17;  // last pilot would land outside the band
  CHECK_THROWS_AS(config.validate(), nusest::ConfigError);
  config = ExperimentConfig{};
  config.gamma_db = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(config.validate(), nusest::ConfigError);
  config.gamma_db = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("decibel conversion") {
  CHECK(db(1.0) == 0.0);
  CHECK(db(1e-3) == doctest::Approx(-30.0).epsilon(1e-15));
  CHECK(db(0.0) == -3000.0);
  CHECK(db(1e-310) == -3000.0);
  CHECK_THROWS_AS(db(-1e-6), nusest::ConfigError);
}

TEST_CASE("analytic mse: exact pilot pick-off has zero error without noise") {
  SparseChannel channel;
  channel.delay_spread_bound = 1e-2;
  channel.taps.push_back(ChannelTap{1.5e-3, {0.7, 0.2}});
  channel.taps.push_back(ChannelTap{6.0e-3, {-0.1, 0.9}});
  Eigen::VectorXd pilot_freqs(3);
  pilot_freqs << 0.0, 16.0, 32.0;
  Eigen::VectorXcd weights = Eigen::VectorXcd::Zero(3);
  weights[2] = 1.0;
  CHECK(analytic_linear_mse(weights, channel, pilot_freqs, 0.0, 32.0) == 0.0);
}

TEST_CASE("analytic mse: zero channel leaves only the noise term") {
  const Eigen::VectorXcd pilot_values = Eigen::VectorXcd::Zero(4);
  Eigen::VectorXcd weights(4);
  weights << std::complex<double>(0.5, 0.5), std::complex<double>(-1.0, 0.0),
      std::complex<double>(0.0, 2.0), std::complex<double>(0.25, 0.0);
  const double sigma2 = 0.02;
  CHECK(analytic_linear_mse(weights, pilot_values, {0.0, 0.0}, sigma2) ==
        doctest::Approx(sigma2 * weights.squaredNorm()).epsilon(1e-15));
}

TEST_CASE("analytic mse matches a Monte Carlo oracle") {
  SparseChannel channel;
  channel.delay_spread_bound = 1.0;
  channel.taps.push_back(ChannelTap{0.08, {0.9, -0.3}});
  channel.taps.push_back(ChannelTap{0.61, {-0.4, 0.5}});
  Eigen::VectorXd pilot_freqs(3);
  pilot_freqs << 0.0, 1.0, 2.0;
  Eigen::VectorXcd weights(3);
  weights << std::complex<double>(0.4, 0.1), std::complex<double>(0.3, -0.2),
      std::complex<double>(0.2, 0.05);
  const double sigma2 = 0.01;
  const double freq = 1.3;

  const double exact = analytic_linear_mse(weights, channel, pilot_freqs, sigma2, freq);
  const Eigen::VectorXcd clean = nusest::channel_spectrum(channel, pilot_freqs);
  const std::complex<double> truth = nusest::channel_spectrum(channel, freq);

  StreamRng rng(31, nusest::RngDomain::noise, 0);
  oracles::Welford mse;
  for (int t = 0; t < 200000; ++t) {
    std::complex<double> combined(0.0, 0.0);
    for (int m = 0; m < 3; ++m) {
      combined += weights[m] * (clean[m] + rng.complex_normal(sigma2));
    }
    mse.add(std::norm(truth - combined));
  }
  CHECK(mse.mean == doctest::Approx(exact).epsilon(0.01));

  const double via_values = analytic_linear_mse(weights, clean, truth, sigma2);
  CHECK(via_values == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("baseline tap-count selection is pinned for the benchmark setups") {
  ExperimentConfig config;
  std::vector<double> aggregates;

  config.alpha = 0.25;
  const TdlModelSpec quarter = select_ml_taps(config, &aggregates);
  CHECK(quarter.tap_count() == 17);
  CHECK(quarter.first_tap == -4);
  REQUIRE(aggregates.size() == 28);
  const double best = *std::min_element(aggregates.begin(), aggregates.end());
  CHECK(aggregates[16] <= best + nusest::kSweepTieTolerance);
  for (const double value : aggregates) {
    CHECK(value > 0.0);
    CHECK(std::isfinite(value));
  }

  config.alpha = 0.125;
  const TdlModelSpec eighth = select_ml_taps(config);
  CHECK(eighth.tap_count() == 15);
  CHECK(eighth.first_tap == -5);
}

TEST_CASE("rms curve layout and metadata") {
  ExperimentConfig config;
  config.trials = 8;
  config.seed = 2;
  const RmsCurve curve = run_rms_curves(config);
  REQUIRE(curve.frequencies.size() == 433);
  REQUIRE(curve.rms_ml.size() == 433);
  REQUIRE(curve.rms_pe.size() == 433);
  REQUIRE(curve.rms_peinf.size() == 433);
  CHECK(curve.carrier_indices[0] == 0);
  CHECK(curve.carrier_indices[432] == 432);
  CHECK(curve.metadata.delay_spread_bound == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
  CHECK(curve.metadata.noise_variance == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(curve.metadata.pe_mu == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(curve.metadata.peinf_applied_ridge == doctest::Approx(1e-12).epsilon(1e-12));
  CHECK(curve.metadata.selected_ml_taps == 17);
  CHECK(curve.metadata.ml_first_tap == -4);
  CHECK(curve.metadata.trials == 8);
  CHECK(curve.metadata.seed == 2);
  REQUIRE(curve.metadata.sweep_aggregate_rms.size() == 28);

  ExperimentConfig no_ml = config;
  no_ml.use_ml = false;
  const RmsCurve partial = run_rms_curves(no_ml);
  CHECK(partial.rms_ml.size() == 0);
  CHECK(partial.rms_pe.size() == 433);
  CHECK(partial.rms_peinf.size() == 433);
  CHECK(partial.metadata.selected_ml_taps == 0);
}

TEST_CASE("rms curves agree with the closed-form ensemble error") {
  ExperimentConfig config;
  config.trials = 600;
  config.seed = 11;
  const RmsCurve curve = run_rms_curves(config);

  const auto grid = config.pilot_grid();
  const Eigen::VectorXd pilot_freqs = grid.frequencies();
  const double t_h = curve.metadata.delay_spread_bound;
  const double sigma2 = config.noise_variance();
  const Eigen::VectorXd abscissas = pilot_freqs * t_h;

  const TdlWeightSolver ml_solver(select_ml_taps(config), pilot_freqs);
  const EstimatorDesign<double> pe_design(abscissas, sigma2);
  const EstimatorDesign<double> peinf_design(abscissas, 0.0);

  double exact_ml = 0.0;
  double exact_pe = 0.0;
  double exact_peinf = 0.0;
  double got_ml = 0.0;
  double got_pe = 0.0;
  double got_peinf = 0.0;
  for (Eigen::Index i = 0; i < curve.frequencies.size(); ++i) {
    const double f = curve.frequencies[i];
    exact_ml += oracles::closed_form_ensemble_mse(ml_solver.weights(f), f, pilot_freqs, sigma2, t_h);
    exact_pe +=
        oracles::closed_form_ensemble_mse(pe_weights(pe_design, f, t_h), f, pilot_freqs, sigma2, t_h);
    exact_peinf += oracles::closed_form_ensemble_mse(pe_weights(peinf_design, f, t_h), f,
                                                     pilot_freqs, sigma2, t_h);
    got_ml += curve.rms_ml[i] * curve.rms_ml[i];
    got_pe += curve.rms_pe[i] * curve.rms_pe[i];
    got_peinf += curve.rms_peinf[i] * curve.rms_peinf[i];
  }
  CHECK(got_ml / exact_ml == doctest::Approx(1.0).epsilon(0.12));
  CHECK(got_pe / exact_pe == doctest::Approx(1.0).epsilon(0.12));
  CHECK(got_peinf / exact_peinf == doctest::Approx(1.0).epsilon(0.12));

  const double exact_improvement = 10.0 * std::log10(exact_ml / exact_pe);
  const double got_improvement = mean_improvement_db(curve.rms_ml, curve.rms_pe);
  // Different averaging orders (dB of means vs mean of dBs), so compare loosely.
  CHECK(std::abs(got_improvement - exact_improvement) < 0.6);

  // The analytic noise term is a hard per-carrier floor on the mean square error.
  for (Eigen::Index i = 0; i < curve.frequencies.size(); ++i) {
    const double f = curve.frequencies[i];
    const double floor_pe = sigma2 * pe_weights(pe_design, f, t_h).squaredNorm();
    CHECK(curve.rms_pe[i] * curve.rms_pe[i] + 1e-15 >= floor_pe);
  }
}

TEST_CASE("matched-regularization curve sits on its worst-case bound") {
  // For this channel ensemble the expected squared error of the matched
  // estimator equals the worst-case bound, so the Monte Carlo estimate must
  // scatter tightly around it.
  ExperimentConfig config;
  config.trials = 600;
  config.seed = 11;
  config.use_ml = false;
  config.use_peinf = false;
  const RmsCurve curve = run_rms_curves(config);

  const Eigen::VectorXd pilot_freqs = config.pilot_grid().frequencies();
  const double t_h = curve.metadata.delay_spread_bound;
  const double sigma2 = config.noise_variance();
  const EstimatorDesign<double> design(pilot_freqs * t_h, sigma2);

  double ratio_sum = 0.0;
  for (Eigen::Index i = 0; i < curve.frequencies.size(); ++i) {
    const double bound = design.error_bound(1.0, curve.frequencies[i] * t_h);
    const double mse = curve.rms_pe[i] * curve.rms_pe[i];
    CHECK(mse <= bound * 1.30 + 1e-12);
    ratio_sum += mse / bound;
  }
  CHECK(ratio_sum / static_cast<double>(curve.frequencies.size()) ==
        doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("trial streams are prefix-stable under splitting") {
  ExperimentConfig config;
  config.trials = 40;
  config.seed = 5;
  const RmsCurve whole = run_rms_curves(config);

  ExperimentConfig head = config;
  head.trials = 20;
  const RmsCurve first = run_rms_curves(head);
  ExperimentConfig tail = head;
  tail.trial_offset = 20;
  const RmsCurve second = run_rms_curves(tail);

  for (Eigen::Index i = 0; i < whole.frequencies.size(); ++i) {
    const auto merged = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      return 0.5 * (a[i] * a[i] + b[i] * b[i]);
    };
    CHECK(whole.rms_ml[i] * whole.rms_ml[i] ==
          doctest::Approx(merged(first.rms_ml, second.rms_ml)).epsilon(1e-12));
    CHECK(whole.rms_pe[i] * whole.rms_pe[i] ==
          doctest::Approx(merged(first.rms_pe, second.rms_pe)).epsilon(1e-12));
    CHECK(whole.rms_peinf[i] * whole.rms_peinf[i] ==
          doctest::Approx(merged(first.rms_peinf, second.rms_peinf)).epsilon(1e-12));
  }
}

TEST_CASE("identical configurations reproduce bitwise") {
  ExperimentConfig config;
  config.trials = 16;
  config.seed = 9;
  const RmsCurve a = run_rms_curves(config);
  const RmsCurve b = run_rms_curves(config);
  CHECK((a.rms_ml - b.rms_ml).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.rms_pe - b.rms_pe).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.rms_peinf - b.rms_peinf).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vanishing noise collapses the matched and limit estimators") {
  ExperimentConfig config;
  config.gamma_db = 120.0;
  config.trials = 8;
  config.use_ml = false;
  const RmsCurve curve = run_rms_curves(config);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < curve.frequencies.size(); ++i) {
    worst = std::max(worst, std::abs(curve.rms_pe[i] - curve.rms_peinf[i]) / curve.rms_pe[i]);
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("delay-frequency surface layout and determinism") {
  ExperimentConfig config;
  const RmsSurface surface = run_delay_frequency_surface(config, 3);
  REQUIRE(surface.delays.size() == 3);
  REQUIRE(surface.frequencies.size() == 433);
  REQUIRE(surface.reduction_db.rows() == 3);
  REQUIRE(surface.reduction_db.cols() == 433);
  const double t_h = surface.metadata.delay_spread_bound;
  for (int i = 0; i < 3; ++i) {
    CHECK(surface.delays[i] == (static_cast<double>(i) + 0.5) / 3.0 * t_h);
    CHECK(surface.delays[i] > 0.0);
    CHECK(surface.delays[i] < t_h);
  }
  CHECK(surface.reduction_db.allFinite());

  const RmsSurface again = run_delay_frequency_surface(config, 3);
  CHECK((surface.reduction_db - again.reduction_db).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("surface cells match the closed-form single-impulse error") {
  ExperimentConfig config;
  const RmsSurface surface = run_delay_frequency_surface(config, 3);

  const Eigen::VectorXd pilot_freqs = config.pilot_grid().frequencies();
  const double t_h = surface.metadata.delay_spread_bound;
  const double sigma2 = config.noise_variance();
  const TdlWeightSolver ml_solver(select_ml_taps(config), pilot_freqs);
  const EstimatorDesign<double> pe_design(pilot_freqs * t_h, sigma2);

  SparseChannel impulse;
  impulse.delay_spread_bound = t_h;
  impulse.taps.push_back(ChannelTap{surface.delays[0], {1.0, 0.0}});

  for (const int carrier : {0, 100, 216, 432}) {
    const double f = static_cast<double>(carrier);
    const double mse_ml =
        analytic_linear_mse(ml_solver.weights(f), impulse, pilot_freqs, sigma2, f);
    const double mse_pe =
        analytic_linear_mse(pe_weights(pe_design, f, t_h), impulse, pilot_freqs, sigma2, f);
    const double expected = db(mse_pe) - db(mse_ml);
    CHECK(surface.reduction_db(0, carrier) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("noise-free surface stays finite with the limit design") {
  ExperimentConfig config;
  config.gamma_db = std::numeric_limits<double>::infinity();
  const RmsSurface surface = run_delay_frequency_surface(config, 3);
  CHECK(surface.reduction_db.allFinite());
  CHECK(surface.metadata.noise_variance == 0.0);
  CHECK(surface.metadata.peinf_applied_ridge > 0.0);
}

TEST_CASE("interior median trims both axes symmetrically") {
  RmsSurface surface;
  surface.delays = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
  surface.frequencies = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
  surface.reduction_db.resize(10, 10);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      surface.reduction_db(i, j) = 10.0 * i + j;
    }
  }
  std::vector<double> interior;
  for (int i = 1; i <= 8; ++i) {
    for (int j = 1; j <= 8; ++j) {
      interior.push_back(10.0 * i + j);
    }
  }
  CHECK(nusest::interior_median_reduction_db(surface, 0.1) ==
        doctest::Approx(median_by_sort(interior)).epsilon(1e-15));

  // Small grids trim nothing: floor(0.1 * 5) = 0.
  RmsSurface small;
  small.delays = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  small.frequencies = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  small.reduction_db.resize(5, 5);
  std::vector<double> all;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      small.reduction_db(i, j) = static_cast<double>(7 * i - 3 * j);
      all.push_back(small.reduction_db(i, j));
    }
  }
  CHECK(nusest::interior_median_reduction_db(small, 0.1) ==
        doctest::Approx(median_by_sort(all)).epsilon(1e-15));

  CHECK_THROWS_AS(nusest::interior_median_reduction_db(small, 0.5), nusest::ConfigError);
}

TEST_CASE("mean dB helpers") {
  Eigen::VectorXd rms(2);
  rms << 1.0, 0.1;
  CHECK(mean_rms_db(rms) == doctest::Approx(-10.0).epsilon(1e-12));
  Eigen::VectorXd base(2);
  base << 1.0, 1.0;
  Eigen::VectorXd other(2);
  other << 0.1, 0.1;
  CHECK(mean_improvement_db(base, other) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(mean_improvement_db(other, base) == doctest::Approx(-20.0).epsilon(1e-12));
  Eigen::VectorXd three = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(mean_improvement_db(base, three), nusest::ConfigError);
  CHECK_THROWS_AS(mean_rms_db(Eigen::VectorXd()), nusest::ConfigError);
}
