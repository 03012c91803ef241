#include "dnctd/chrono_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dnctd {

namespace {

const double kFwhmPerSigma = std::sqrt(8.0 * std::numbers::ln2);

template <int N>
bool is_symmetric(const Eigen::Matrix<double, N, N>& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (scale > 0 ? scale : 1.0);
}

// Robertson-Schroedinger condition cov + (i/2) J >= 0 with J the symplectic
// form pairing each t with its w.
template <int N>
bool satisfies_uncertainty(const Eigen::Matrix<double, N, N>& cov) {
  constexpr int modes = N / 2;
  Eigen::Matrix<std::complex<double>, N, N> h = cov.template cast<std::complex<double>>();
  for (int k = 0; k < modes; ++k) {
    h(k, k + modes) += std::complex<double>(0.0, 0.5);
    h(k + modes, k) -= std::complex<double>(0.0, 0.5);
  }
  Eigen::SelfAdjointEigenSolver<decltype(h)> es(h, Eigen::EigenvaluesOnly);
  const double tol = 1e-9 * std::max(1.0, cov.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace

double fwhm_to_sigma(double fwhm) {
  if (!(fwhm >= 0.0)) throw std::invalid_argument("fwhm must be non-negative");
  return fwhm / kFwhmPerSigma;
}

double sigma_to_fwhm(double sigma) { return sigma * kFwhmPerSigma; }

double Gaussian1D::stddev() const { return std::sqrt(var); }
double Gaussian1D::fwhm() const { return sigma_to_fwhm(stddev()); }

// ---------------------------------------------------------------------------

ChronocyclicGaussian1::ChronocyclicGaussian1(double mean_t, double mean_w,
                                             const Eigen::Matrix2d& cov)
    : mean_t_(mean_t), mean_w_(mean_w), cov_(cov) {
  if (!is_symmetric<2>(cov_)) throw std::invalid_argument("wavepacket covariance not symmetric");
  if (Eigen::LLT<Eigen::Matrix2d>(cov_).info() != Eigen::Success)
    throw std::invalid_argument("wavepacket covariance not positive definite");
  if (!satisfies_uncertainty<2>(cov_))
    throw std::invalid_argument("wavepacket violates the time-frequency uncertainty bound");
}

ChronocyclicGaussian1 ChronocyclicGaussian1::transform_limited(double sigma_t, double mean_t) {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("sigma_t must be positive");
  Eigen::Matrix2d cov;
  cov << sigma_t * sigma_t, 0.0, 0.0, 1.0 / (4.0 * sigma_t * sigma_t);
  return ChronocyclicGaussian1(mean_t, 0.0, cov);
}

double ChronocyclicGaussian1::uncertainty_product() const { return cov_.determinant(); }

bool ChronocyclicGaussian1::is_pure(double rel_tol) const {
  return std::abs(uncertainty_product() - 0.25) <= rel_tol * 0.25;
}

// ---------------------------------------------------------------------------

ChronocyclicGaussian2::ChronocyclicGaussian2(const Eigen::Vector4d& mean,
                                             const Eigen::Matrix4d& cov, int probe_slot)
    : mean_(mean), cov_(cov), probe_slot_(probe_slot) {
  if (probe_slot != 0 && probe_slot != 1) throw std::invalid_argument("probe_slot must be 0 or 1");
  if (!is_symmetric<4>(cov_)) throw std::invalid_argument("biphoton covariance not symmetric");
  if (Eigen::LLT<Eigen::Matrix4d>(cov_).info() != Eigen::Success)
    throw std::invalid_argument("biphoton covariance not positive definite");
  if (!satisfies_uncertainty<4>(cov_))
    throw std::invalid_argument("biphoton violates the time-frequency uncertainty bound");
}

bool ChronocyclicGaussian2::is_pure(double rel_tol) const {
  return std::abs(determinant() - 1.0 / 16.0) <= rel_tol / 16.0;
}

bool ChronocyclicGaussian2::is_unchirped(double abs_tol) const {
  return cov_.block<2, 2>(0, 2).cwiseAbs().maxCoeff() <= abs_tol;
}

// ---------------------------------------------------------------------------

double gdd_from_dispersion(double d_ps_nm_km, double length_km, double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw std::invalid_argument("wavelength must be positive");
  if (!(length_km >= 0.0)) throw std::invalid_argument("fiber length must be non-negative");
  // D L has units ps/nm; lambda^2/(2 pi c) converts to ps^2.
  return -d_ps_nm_km * length_km * wavelength_nm * wavelength_nm /
         (2.0 * std::numbers::pi * kSpeedOfLightNmPerPs);
}

DispersionElement DispersionElement::from_fiber(double d_ps_nm_km, double length_km,
                                                double wavelength_nm) {
  return {gdd_from_dispersion(d_ps_nm_km, length_km, wavelength_nm)};
}

ChronocyclicGaussian2 biphoton_from_principal_fwhm(double tau_minus_fwhm, double tau_plus_fwhm) {
  if (!(tau_minus_fwhm > 0.0) || !(tau_plus_fwhm > 0.0))
    throw std::invalid_argument("biphoton widths must be positive");
  const double vm = std::pow(fwhm_to_sigma(tau_minus_fwhm), 2);  // Var(t_s - t_i)
  const double vp = std::pow(fwhm_to_sigma(tau_plus_fwhm), 2);   // Var(t_s + t_i)
  // (w_s + w_i)/2 is conjugate to t_s + t_i, so Var(w_s + w_i) = 1/vp.
  const double wp = 1.0 / vp;
  const double wm = 1.0 / vm;

  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  cov(0, 0) = cov(1, 1) = (vp + vm) / 4.0;
  cov(0, 1) = cov(1, 0) = (vp - vm) / 4.0;
  cov(2, 2) = cov(3, 3) = (wp + wm) / 4.0;
  cov(2, 3) = cov(3, 2) = (wp - wm) / 4.0;
  return ChronocyclicGaussian2(Eigen::Vector4d::Zero(), cov, 0);
}

ChronocyclicGaussian2 apply_gdd_pair(const ChronocyclicGaussian2& state, double gdd_probe,
                                     double gdd_ref) {
  Eigen::Matrix4d shear = Eigen::Matrix4d::Identity();
  shear(state.probe_slot(), 2 + state.probe_slot()) = gdd_probe;
  shear(state.reference_slot(), 2 + state.reference_slot()) = gdd_ref;
  Eigen::Matrix4d cov = shear * state.cov() * shear.transpose();
  // Restore exact symmetry lost to rounding.
  cov = 0.5 * (cov + cov.transpose()).eval();
  return ChronocyclicGaussian2(shear * state.mean(), cov, state.probe_slot());
}

ChronocyclicGaussian1 apply_gdd_single(const ChronocyclicGaussian1& wp, double gdd) {
  Eigen::Matrix2d shear;
  shear << 1.0, gdd, 0.0, 1.0;
  Eigen::Matrix2d cov = shear * wp.cov() * shear.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return ChronocyclicGaussian1(wp.mean_t() + gdd * wp.mean_w(), wp.mean_w(), cov);
}

ChronocyclicGaussian1 marginal(const ChronocyclicGaussian2& state, Photon which) {
  const int k = state.slot(which);
  Eigen::Matrix2d cov;
  cov << state.cov()(k, k), state.cov()(k, k + 2), state.cov()(k + 2, k),
      state.cov()(k + 2, k + 2);
  return ChronocyclicGaussian1(state.mean()(k), state.mean()(k + 2), cov);
}

Gaussian1D difference_time_density(const ChronocyclicGaussian2& state) {
  Eigen::Vector4d c = Eigen::Vector4d::Zero();
  c(state.probe_slot()) = 1.0;
  c(state.reference_slot()) = -1.0;
  return {c.dot(state.mean()), c.dot(state.cov() * c)};
}

Gaussian1D false_difference_density(const ChronocyclicGaussian1& noise,
                                    const ChronocyclicGaussian1& ref) {
  return false_difference_density(noise.arrival(), ref.arrival());
}

Gaussian1D false_difference_density(const Gaussian1D& noise_arrival,
                                    const Gaussian1D& ref_arrival) {
  if (noise_arrival.var < 0.0 || ref_arrival.var < 0.0)
    throw std::invalid_argument("negative variance");
  return {noise_arrival.mean - ref_arrival.mean, noise_arrival.var + ref_arrival.var};
}

}  // namespace dnctd
