#include "dnctd/detection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dnctd {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool is_fraction(double x) { return x >= 0.0 && x <= 1.0; }

constexpr double kPsPerSecond = 1e12;

}  // namespace

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::ctd: return "CTD";
    case Scheme::nctd: return "NCTD";
    case Scheme::dnctd: return "DNCTD";
  }
  return "?";
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "CTD" || s == "ctd") return Scheme::ctd;
  if (s == "NCTD" || s == "nctd") return Scheme::nctd;
  if (s == "DNCTD" || s == "dnctd") return Scheme::dnctd;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

std::string_view to_string(NoiseMode m) { return m == NoiseMode::pulsed ? "pulsed" : "cw"; }

NoiseMode noise_mode_from_string(std::string_view s) {
  if (s == "pulsed") return NoiseMode::pulsed;
  if (s == "cw") return NoiseMode::cw;
  throw std::invalid_argument("unknown noise mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

void DetectorModel::validate() const {
  require(jitter_fwhm_ps >= 0.0, "detector jitter must be non-negative");
  require(is_fraction(efficiency), "detector efficiency must lie in [0, 1]");
  require(dead_time_ns >= 0.0, "dead time must be non-negative");
  require(dark_rate_cps >= 0.0, "dark rate must be non-negative");
  require(is_fraction(probe_jitter_share), "probe jitter share must lie in [0, 1]");
}

double DetectorModel::jitter_var() const { return std::pow(fwhm_to_sigma(jitter_fwhm_ps), 2); }

double DetectorModel::probe_jitter_sigma() const {
  return std::sqrt(jitter_var() * probe_jitter_share);
}

double DetectorModel::ref_jitter_sigma() const {
  return std::sqrt(jitter_var() * (1.0 - probe_jitter_share));
}

void SchemeConfig::validate() const {
  require(pair_rate >= 0.0, "pair rate must be non-negative");
  require(noise_rate >= 0.0, "noise rate must be non-negative");
  require(is_fraction(tau_p), "tau_p must lie in [0, 1]");
  require(is_fraction(tau_r), "tau_r must lie in [0, 1]");
  require(window_ps > 0.0, "coincidence window must be positive");
  require(std::isfinite(window_offset_ps) && std::isfinite(relative_delay_ps),
          "window offset and delay must be finite");
  if (scheme != Scheme::dnctd)
    require(gdd_probe == 0.0 && gdd_ref == 0.0, "CTD and NCTD take no dispersion");
}

void SourceModel::validate() const {
  require(rep_rate > 0.0, "repetition rate must be positive");
  require(tau_minus_fwhm_ps > 0.0 && tau_plus_fwhm_ps > 0.0, "biphoton widths must be positive");
}

ChronocyclicGaussian2 SourceModel::biphoton() const {
  return biphoton_from_principal_fwhm(tau_minus_fwhm_ps, tau_plus_fwhm_ps);
}

const SnrResult& SchemeComparison::get(Scheme s) const {
  switch (s) {
    case Scheme::ctd: return ctd;
    case Scheme::nctd: return nctd;
    case Scheme::dnctd: return dnctd;
  }
  throw std::logic_error("bad scheme");
}

double SchemeComparison::improvement_db(Scheme better, Scheme worse) const {
  return get(better).snr_db - get(worse).snr_db;
}

// ---------------------------------------------------------------------------

Gaussian1D convolve_jitter(const Gaussian1D& d, double jitter_fwhm) {
  return {d.mean, d.var + std::pow(fwhm_to_sigma(jitter_fwhm), 2)};
}

double window_capture(const Gaussian1D& d, double w, double offset) {
  require(w > 0.0, "window width must be positive");
  if (std::isinf(w)) return 1.0;
  const double lo = offset - 0.5 * w - d.mean;
  const double hi = offset + 0.5 * w - d.mean;
  if (d.var <= 0.0) return (lo <= 0.0 && hi >= 0.0) ? 1.0 : 0.0;
  const double s = std::sqrt(2.0 * d.var);
  // erfc on the far side keeps precision in the tails.
  if (lo >= 0.0) return 0.5 * (std::erfc(lo / s) - std::erfc(hi / s));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi / s) - std::erfc(-lo / s));
  return 0.5 * (std::erf(hi / s) - std::erf(lo / s));
}

double snr_ctd(double nu, double tau_p, double noise) {
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return nu * tau_p / noise;
}

double snr_nctd(double nu, double tau_p, double tau_r, double noise) {
  const double den = noise * nu * tau_r;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return nu * tau_p * tau_r / den;
}

double to_db(double ratio) { return 10.0 * std::log10(ratio); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

double normalized_noise_power(double noise, double nu, double tau_p) {
  return to_db(noise / (nu * tau_p));
}

double normalized_probe_power(double noise, double nu, double tau_p) {
  return -normalized_noise_power(noise, nu, tau_p);
}

CoincidenceDensities coincidence_densities(const ChronocyclicGaussian2& state, double gdd_probe,
                                           double gdd_ref, double relative_delay_ps,
                                           const DetectorModel& detector) {
  const auto dispersed = apply_gdd_pair(state, gdd_probe, gdd_ref);
  Gaussian1D truth = difference_time_density(dispersed);
  // Noise shares the probe's temporal/spectral distribution and its path.
  const auto noise = apply_gdd_single(marginal(state, Photon::probe), gdd_probe);
  Gaussian1D accidental = false_difference_density(noise, marginal(dispersed, Photon::reference));
  truth.mean += relative_delay_ps;
  accidental.mean += relative_delay_ps;
  return {convolve_jitter(truth, detector.jitter_fwhm_ps),
          convolve_jitter(accidental, detector.jitter_fwhm_ps)};
}

SnrResult scheme_snr(const SchemeConfig& cfg, const SourceModel& source,
                     const DetectorModel& detector, const ChronocyclicGaussian2& state) {
  cfg.validate();
  source.validate();
  detector.validate();

  const double eta = detector.efficiency;
  const double dark = detector.dark_rate_cps;
  const double nu = cfg.pair_rate;
  const double mu = source.pair_probability(nu);
  if (mu > 1.0) throw std::invalid_argument("pair rate exceeds one pair per pulse");

  SnrResult r;
  r.scheme = cfg.scheme;
  r.normalized_noise_db = normalized_noise_power(cfg.noise_rate, nu, cfg.tau_p);

  if (cfg.scheme == Scheme::ctd) {
    r.true_rate = nu * cfg.tau_p * eta;
    r.false_rate = cfg.noise_rate * eta + dark;
  } else {
    const auto dens = coincidence_densities(state, cfg.gdd_probe, cfg.gdd_ref,
                                            cfg.relative_delay_ps, detector);
    const double p_true = window_capture(dens.true_pairs, cfg.window_ps, cfg.window_offset_ps);
    const double p_false = window_capture(dens.false_pairs, cfg.window_ps, cfg.window_offset_ps);
    const double w_s = cfg.window_ps / kPsPerSecond;
    const double noise_clicks = cfg.noise_rate * eta;
    const double ref_clicks = nu * cfg.tau_r * eta;
    const double probe_signal_clicks = nu * cfg.tau_p * eta;

    double accidental = cfg.noise_mode == NoiseMode::pulsed
                            ? noise_clicks * (ref_clicks / source.rep_rate) * p_false
                            : noise_clicks * ref_clicks * w_s;
    // Dark counts are uniform in time on both detectors.
    accidental += (dark * (ref_clicks + dark) + noise_clicks * dark) * w_s;

    r.true_rate = nu * cfg.tau_p * cfg.tau_r * eta * eta * p_true + probe_signal_clicks * dark * w_s;
    r.false_rate = accidental;
  }

  if (r.false_rate == 0.0) {
    r.infinite = true;
    r.snr = std::numeric_limits<double>::infinity();
    r.snr_db = std::numeric_limits<double>::infinity();
    r.diagnostic = "background rate is zero";
  } else {
    r.snr = r.true_rate / r.false_rate;
    r.snr_db = to_db(r.snr);
  }
  return r;
}

SchemeComparison compare_schemes(const SchemeConfig& base, double gdd_probe, double gdd_ref,
                                 const SourceModel& source, const DetectorModel& detector) {
  const auto state = source.biphoton();
  SchemeComparison out;
  out.trial_normalization_s = 1.0 / source.rep_rate;
  SchemeConfig c = base;
  c.gdd_probe = 0.0;
  c.gdd_ref = 0.0;
  c.scheme = Scheme::ctd;
  out.ctd = scheme_snr(c, source, detector, state);
  c.scheme = Scheme::nctd;
  out.nctd = scheme_snr(c, source, detector, state);
  c.scheme = Scheme::dnctd;
  c.gdd_probe = gdd_probe;
  c.gdd_ref = gdd_ref;
  out.dnctd = scheme_snr(c, source, detector, state);
  return out;
}

}  // namespace dnctd
