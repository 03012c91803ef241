#include "dnctd/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace dnctd {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma) {
  if (x.size() != y.size() || (!sigma.empty() && sigma.size() != x.size()))
    throw std::invalid_argument("fit inputs differ in length");
  if (x.size() < 2) throw std::invalid_argument("need at least two points to fit");
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double w = 1.0;
    if (!sigma.empty()) {
      if (!(sigma[i] > 0.0)) throw std::invalid_argument("fit errors must be positive");
      w = 1.0 / (sigma[i] * sigma[i]);
    }
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  if (det <= 0.0) throw std::invalid_argument("degenerate x values");
  LinearFit f;
  f.slope = (s * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.dof = static_cast<int>(x.size()) - 2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.chi2 += sigma.empty() ? r * r : r * r / (sigma[i] * sigma[i]);
  }
  if (!sigma.empty()) {
    f.slope_sigma = std::sqrt(s / det);
  } else {
    const double var = f.dof > 0 ? f.chi2 / f.dof : 0.0;
    f.slope_sigma = std::sqrt(var * s / det);
  }
  return f;
}

}  // namespace dnctd
