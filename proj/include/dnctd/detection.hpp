#pragma once

// Detector response and scheme-level SNR analytics for classical (singles),
// coincidence, and dispersed-coincidence target detection.

#include <optional>
#include <string>
#include <string_view>

#include "dnctd/chrono_gaussian.hpp"

namespace dnctd {

enum class Scheme { ctd, nctd, dnctd };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

enum class NoiseMode { pulsed, cw };

std::string_view to_string(NoiseMode m);
NoiseMode noise_mode_from_string(std::string_view s);

struct DetectorModel {
  double jitter_fwhm_ps = 83.3;  // combined coincidence timing uncertainty
  double efficiency = 1.0;
  double dead_time_ns = 0.0;
  double dark_rate_cps = 0.0;
  double probe_jitter_share = 0.5;  // fraction of the jitter variance on the probe detector

  void validate() const;
  double jitter_var() const;
  double probe_jitter_sigma() const;
  double ref_jitter_sigma() const;
};

struct SchemeConfig {
  Scheme scheme = Scheme::dnctd;
  double pair_rate = 1e6;     // nu, pairs/s
  double tau_p = 0.1;         // probe path transmission
  double tau_r = 0.5;         // reference path transmission
  double noise_rate = 1e5;    // N, counts/s at the probe detector before efficiency
  NoiseMode noise_mode = NoiseMode::pulsed;
  double window_ps = 200.0;
  double window_offset_ps = 0.0;  // window center in t_probe - t_ref
  double relative_delay_ps = 0.0;  // true-peak position in t_probe - t_ref
  double gdd_probe = 0.0;     // ps^2
  double gdd_ref = 0.0;       // ps^2

  void validate() const;
};

/// Source pulse train; the pair probability per pulse is pair_rate / rep_rate.
struct SourceModel {
  double rep_rate = 76e6;  // pulses/s
  double tau_minus_fwhm_ps = 0.1;
  double tau_plus_fwhm_ps = 17.7;

  void validate() const;
  double pair_probability(double pair_rate) const { return pair_rate / rep_rate; }
  ChronocyclicGaussian2 biphoton() const;
};

struct SnrResult {
  Scheme scheme = Scheme::ctd;
  double snr = 0.0;       // linear signal/background
  double snr_db = 0.0;
  double true_rate = 0.0;   // counts/s attributable to the target
  double false_rate = 0.0;  // background counts/s
  double normalized_noise_db = 0.0;
  std::optional<double> uncertainty_db;  // set for estimates from counts
  bool infinite = false;
  bool noise_floor_limited = false;
  std::string diagnostic;
};

/// The three schemes evaluated on one operating point.
struct SchemeComparison {
  SnrResult ctd, nctd, dnctd;
  double trial_normalization_s = 0.0;  // pulse period, the per-trial time unit

  const SnrResult& get(Scheme s) const;
  double improvement_db(Scheme better, Scheme worse) const;
};

Gaussian1D convolve_jitter(const Gaussian1D& d, double jitter_fwhm);

/// Probability mass of d inside [offset - w/2, offset + w/2].
double window_capture(const Gaussian1D& d, double w, double offset);

/// nu tau_p / N. Returns +inf when N == 0.
double snr_ctd(double nu, double tau_p, double noise);
/// (nu tau_p tau_r) / (N nu tau_r) with nu and N per trial.
double snr_nctd(double nu, double tau_p, double tau_r, double noise);

double normalized_noise_power(double noise, double nu, double tau_p);
double normalized_probe_power(double noise, double nu, double tau_p);

double to_db(double ratio);
double from_db(double db);

/// Timing densities of true and false coincidences after the scheme's
/// dispersion and detector jitter.
struct CoincidenceDensities {
  Gaussian1D true_pairs;
  Gaussian1D false_pairs;
};

CoincidenceDensities coincidence_densities(const ChronocyclicGaussian2& state, double gdd_probe,
                                           double gdd_ref, double relative_delay_ps,
                                           const DetectorModel& detector);

/// Analytic SNR of one scheme: (present - absent) / absent count rates, where
/// "absent" is the same configuration with the probe path blocked.
SnrResult scheme_snr(const SchemeConfig& cfg, const SourceModel& source,
                     const DetectorModel& detector, const ChronocyclicGaussian2& state);

/// Evaluates CTD, NCTD (no dispersion) and DNCTD (gdd_probe/gdd_ref) on the
/// same operating point.
SchemeComparison compare_schemes(const SchemeConfig& base, double gdd_probe, double gdd_ref,
                                 const SourceModel& source, const DetectorModel& detector);

}  // namespace dnctd
