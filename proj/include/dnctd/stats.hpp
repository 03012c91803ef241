#pragma once

#include <span>

namespace dnctd {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_sigma = 0.0;  // from the supplied y errors, or residuals if none
  double chi2 = 0.0;
  int dof = 0;
};

/// Least squares y = a + b x. With sigma given, points are weighted by
/// 1/sigma^2 and slope_sigma follows from those errors.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma = {});

}  // namespace dnctd
