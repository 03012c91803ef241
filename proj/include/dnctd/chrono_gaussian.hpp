#pragma once

// Gaussian chronocyclic (time/frequency moment-space) model of SPDC photon
// pairs and single wavepackets.
//
// Units throughout: time in ps, angular frequency offsets in rad/ps,
// group-delay dispersion in ps^2. The time/frequency pair obeys
// Var(t) Var(w) - Cov(t,w)^2 >= 1/4.

#include <Eigen/Dense>

namespace dnctd {

inline constexpr double kSpeedOfLightNmPerPs = 2.99792458e5;
inline constexpr double kSpeedOfLightCmPerPs = 2.99792458e-2;

/// Gaussian FWHM to standard deviation, fwhm / sqrt(8 ln 2).
double fwhm_to_sigma(double fwhm);
double sigma_to_fwhm(double sigma);

/// One-dimensional normal density (arrival or difference times).
struct Gaussian1D {
  double mean = 0.0;  // ps
  double var = 0.0;   // ps^2

  double stddev() const;
  double fwhm() const;
};

enum class Photon { probe, reference };

/// A single (possibly mixed) wavepacket over (t, w).
class ChronocyclicGaussian1 {
 public:
  /// Throws std::invalid_argument unless cov is symmetric positive definite
  /// and satisfies the uncertainty bound.
  ChronocyclicGaussian1(double mean_t, double mean_w, const Eigen::Matrix2d& cov);

  /// Pure, unchirped wavepacket with intensity std sigma_t.
  static ChronocyclicGaussian1 transform_limited(double sigma_t, double mean_t = 0.0);

  double mean_t() const { return mean_t_; }
  double mean_w() const { return mean_w_; }
  const Eigen::Matrix2d& cov() const { return cov_; }
  double var_t() const { return cov_(0, 0); }
  double var_w() const { return cov_(1, 1); }
  double cov_tw() const { return cov_(0, 1); }

  /// Var(t) Var(w) - Cov(t,w)^2; equals 1/4 for pure states.
  double uncertainty_product() const;
  bool is_pure(double rel_tol = 1e-9) const;

  Gaussian1D arrival() const { return {mean_t_, var_t()}; }

 private:
  double mean_t_;
  double mean_w_;
  Eigen::Matrix2d cov_;
};

/// Photon-pair state over (t_s, t_i, w_s, w_i). Slot 0 is the "s" photon,
/// slot 1 the "i" photon; probe_slot() says which one travels to the target.
class ChronocyclicGaussian2 {
 public:
  ChronocyclicGaussian2(const Eigen::Vector4d& mean, const Eigen::Matrix4d& cov,
                        int probe_slot = 0);

  const Eigen::Vector4d& mean() const { return mean_; }
  const Eigen::Matrix4d& cov() const { return cov_; }
  int probe_slot() const { return probe_slot_; }
  int reference_slot() const { return 1 - probe_slot_; }
  int slot(Photon p) const { return p == Photon::probe ? probe_slot_ : 1 - probe_slot_; }

  /// det(cov); 1/16 for a pure two-photon state.
  double determinant() const { return cov_.determinant(); }
  bool is_pure(double rel_tol = 1e-9) const;
  /// True when every time/frequency cross-covariance vanishes.
  bool is_unchirped(double abs_tol = 1e-12) const;

 private:
  Eigen::Vector4d mean_;
  Eigen::Matrix4d cov_;
  int probe_slot_;
};

/// Quadratic spectral phase element. Negative gdd is anomalous dispersion.
struct DispersionElement {
  double gdd = 0.0;  // ps^2

  /// From fiber dispersion parameter D (ps/(nm km)), length (km) and
  /// center wavelength (nm): gdd = -D L lambda^2 / (2 pi c).
  static DispersionElement from_fiber(double d_ps_nm_km, double length_km,
                                      double wavelength_nm);
};

double gdd_from_dispersion(double d_ps_nm_km, double length_km, double wavelength_nm);

/// Pure, unchirped, symmetric biphoton whose difference time t_s - t_i has
/// intensity FWHM tau_minus and whose sum t_s + t_i has FWHM tau_plus.
/// For tau_plus > tau_minus the frequencies are anti-correlated.
ChronocyclicGaussian2 biphoton_from_principal_fwhm(double tau_minus_fwhm, double tau_plus_fwhm);

/// Shear t <- t + gdd w on each photon.
ChronocyclicGaussian2 apply_gdd_pair(const ChronocyclicGaussian2& state, double gdd_probe,
                                     double gdd_ref);
ChronocyclicGaussian1 apply_gdd_single(const ChronocyclicGaussian1& wp, double gdd);

ChronocyclicGaussian1 marginal(const ChronocyclicGaussian2& state, Photon which);

/// Density of t_probe - t_reference.
Gaussian1D difference_time_density(const ChronocyclicGaussian2& state);

/// Density of t_noise - t_reference for independent photons sharing the
/// pulse clock.
Gaussian1D false_difference_density(const ChronocyclicGaussian1& noise,
                                    const ChronocyclicGaussian1& ref);
Gaussian1D false_difference_density(const Gaussian1D& noise_arrival,
                                    const Gaussian1D& ref_arrival);

}  // namespace dnctd
