#pragma once

#include <cmath>
#include <numbers>

namespace nusest {

// Normalized sinc, sin(pi x)/(pi x), with the removable singularity handled:
// below |x| = 1e-6 the truncated power series keeps relative error < 1e-15.
template <typename Scalar>
Scalar sinc(Scalar x) {
  const Scalar pix = std::numbers::pi_v<Scalar> * x;
  if (std::abs(x) > Scalar(1e-6)) {
    return std::sin(pix) / pix;
  }
  const Scalar p2 = pix * pix;
  return Scalar(1) - p2 / Scalar(6) + p2 * p2 / Scalar(120);
}

// |sum_{p=-P..P} sinc(y-p) sinc(y2-p) - sinc(y-y2)|. The full bilateral sum
// telescopes to sinc(y-y2) exactly; the truncated tail decays like O(1/P).
// Test utility, not used on the estimation path.
template <typename Scalar>
Scalar kernel_identity_residual(Scalar y, Scalar y2, long truncation) {
  Scalar acc = 0;
  for (long p = -truncation; p <= truncation; ++p) {
    acc += sinc(y - Scalar(p)) * sinc(y2 - Scalar(p));
  }
  return std::abs(acc - sinc(y - y2));
}

}
