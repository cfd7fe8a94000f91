#pragma once

#include <span>

namespace kahlerlab::fit {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit linear(std::span<const double> x, std::span<const double> y);

struct TailFit {
  double exponent = 0.0;       // slope of log|y| against log r
  double first_half = 0.0;     // same fit on the lower half of the window
  double second_half = 0.0;    // and on the upper half
  bool robust = false;         // halves agree within the split tolerance
  std::size_t points = 0;
};

/// Fits log|y| = c + p log r over r in [r_hi / 10^decades, r_hi]. Nodes where
/// y is zero or r <= 0 are skipped.
TailFit loglog_tail(std::span<const double> r, std::span<const double> y,
                    double decades = 2.0, double split_tol = 0.02);

/// Slope of y against log r over the last `decades` decades (for running
/// integrals that grow or decay logarithmically).
TailFit semilog_tail(std::span<const double> r, std::span<const double> y,
                     double decades = 2.0, double split_tol = 0.02);

struct PowerOffsetFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double p = 0.0;
  double rms = 0.0;
};

/// y = c1 + c2 x^p with p searched in [p_lo, p_hi] (variable projection:
/// c1, c2 are solved linearly for each trial p).
PowerOffsetFit power_offset(std::span<const double> x, std::span<const double> y,
                            double p_lo, double p_hi);

}  // namespace kahlerlab::fit
