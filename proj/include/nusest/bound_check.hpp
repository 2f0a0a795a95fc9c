#pragma once

#include <cstdint>
#include <vector>

namespace nusest {

// Randomized dominance check of the worst-case error bound: each
// configuration draws a small set of abscissas, a finite sinc-sum signal
// whose coefficient sequence has energy at most A^2 = 1 (the class the bound
// provably dominates; per-coefficient amplitude caps alone admit genuine
// violations), and a noise level; the empirical mean squared error over
// noise_draws must not exceed the bound (scaled by bound_scale) by more than
// 5 Monte Carlo standard errors at any test point.
// bound_scale < 1 is a self-test hook: the signal is then aligned with the
// estimator's residual direction, whose error sits just under the unscaled
// bound, so scaling the bound down forces detectable violations.
struct BoundCheckConfig {
  int configurations = 50;
  std::uint64_t seed = 1;
  int noise_draws = 10000;
  int test_points = 10;
  int max_abscissas = 12;
  double bound_scale = 1.0;
};

struct BoundCheckRecord {
  int config_index = 0;
  int n_abscissas = 0;
  double noise_variance = 0.0;
  double mu = 0.0;
  // max over test points of mse - bound * scale - 5 * se; passing <= 0
  double worst_excess = 0.0;
  // max over test points of mse / bound (diagnostic; bound floored away from 0)
  double worst_ratio = 0.0;
  bool pass = true;
};

struct BoundCheckReport {
  std::vector<BoundCheckRecord> records;
  bool all_pass = true;
};

BoundCheckReport run_bound_check(const BoundCheckConfig& config);

}
