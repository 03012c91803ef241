#pragma once

// Sampled-spectrum propagation of pure, unchirped Gaussian states: the joint
// spectral amplitude is discretized, multiplied by exp(i gdd w^2 / 2) on each
// photon and Fourier transformed to time. Used to cross-check the closed-form
// moment algebra in chrono_gaussian.hpp.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dnctd/chrono_gaussian.hpp"

namespace dnctd {

/// Raised when significant energy reaches the edge of a frequency or time grid.
class AliasingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform frequency axis of `points` samples spanning `span` rad/ps, centered
/// on the state's mean frequency. The conjugate time grid has spacing
/// 2 pi / span and is centered on `time_center` (ps).
struct FrequencyAxis {
  std::size_t points = 256;
  double span = 1.0;
  double time_center = 0.0;
};

inline constexpr double kEdgeLeakThreshold = 1e-6;

struct SampledDensity1D {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> p;  // normalized so that sum(p) == 1

  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  Gaussian1D moments() const;
};

struct SampledDensity2D {
  double t0_probe = 0.0, dt_probe = 0.0;
  double t0_ref = 0.0, dt_ref = 0.0;
  std::size_t n_probe = 0, n_ref = 0;
  std::vector<double> p;  // row-major [probe][ref], sum == 1

  Eigen::Vector2d mean() const;
  Eigen::Matrix2d cov() const;
  Gaussian1D difference() const;
};

/// Full two-dimensional propagation on a (w_probe, w_ref) grid.
SampledDensity2D numeric_propagate(const ChronocyclicGaussian2& state,
                                   const FrequencyAxis& probe_axis,
                                   const FrequencyAxis& ref_axis, double gdd_probe,
                                   double gdd_ref);

/// Density of t_probe - t_ref. The transform runs along (w_p - w_r)/2 for each
/// sample of (w_p + w_r)/2; summing |amplitude|^2 over those samples
/// marginalizes t_p + t_r by Parseval. `difference_axis` sets the FFT grid,
/// `sum_axis` the quadrature over the other variable.
SampledDensity1D numeric_difference_density(const ChronocyclicGaussian2& state,
                                            const FrequencyAxis& difference_axis,
                                            const FrequencyAxis& sum_axis,
                                            double gdd_probe, double gdd_ref);

/// Arrival-time density of one photon, marginalizing the partner by Parseval.
SampledDensity1D numeric_marginal_density(const ChronocyclicGaussian2& state, Photon which,
                                          const FrequencyAxis& photon_axis,
                                          const FrequencyAxis& partner_axis,
                                          double gdd_probe, double gdd_ref);

/// Single pure wavepacket.
SampledDensity1D numeric_propagate_single(const ChronocyclicGaussian1& wp,
                                          const FrequencyAxis& axis, double gdd);

}  // namespace dnctd
