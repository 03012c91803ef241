#pragma once

// JSON configuration. Every field is optional; defaults reproduce the
// reference experiment (100 fs / 17.7 ps biphoton, 18 ps/(nm km) x 5 km
// fiber at 1560 nm, 83.3 ps jitter, 76 MHz pulses). Unknown keys and
// out-of-range values are rejected with the offending field path.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnctd/montecarlo.hpp"

namespace dnctd {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct FiberConfig {
  double dispersion_ps_nm_km = 18.0;
  double length_km = 5.0;
  double wavelength_nm = 1560.0;
  /// Probe GDD (anomalous) derived from the fiber; the reference gets -gdd.
  double probe_gdd() const;
};

struct SceneConfig {
  std::string letters = "UOT";
  std::vector<double> depths_cm{100.0, 110.0, 120.0};
  double tilt_cm_per_px = 0.0;
  int width = 64, height = 64;
  double dwell_s = 0.1;
  std::vector<double> noise_db{0.0, 25.0};
  std::vector<Scheme> schemes{Scheme::ctd, Scheme::dnctd};
  double pair_rate = 1e5;
  double tau_p = 0.01;
};

struct SweepConfig {
  std::vector<double> noise_db{0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  std::vector<double> probe_db{-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0};
  std::vector<double> window_ps{10.0, 20.0, 50.0, 100.0, 150.0, 200.0};
  std::vector<double> pair_rate{1e5, 2e5, 5e5, 1e6, 2e6, 5e6};
};

struct SaturationConfig {
  double dead_time_ns = kDefaultDeadTimeNs;
  std::vector<double> noise_rates{1e5, 3e5, 1e6, 2e6, 3e6, 5e6, 1e7, 3e7, 1e8};
  double duration_s = 0.02;
};

struct HistogramConfig {
  double bin_ps = 1.0;
  double range_ps = 5000.0;
};

struct AppConfig {
  RunConfig run;
  FiberConfig fiber;
  /// Dispersion used whenever the scheme is DNCTD.
  double gdd_probe = 0.0, gdd_ref = 0.0;
  bool gdd_from_fiber = true;  // false when scheme.gdd_* were given explicitly
  double duration_s = 1.0;
  HistogramConfig histograms;
  SweepConfig sweep;
  SceneConfig scene;
  SaturationConfig saturation;

  /// Paper defaults with the fiber GDD applied.
  static AppConfig defaults();
  /// Sets run.scheme to s with the matching dispersion (none for CTD/NCTD).
  void apply_scheme(Scheme s);
};

AppConfig config_from_json(const nlohmann::json& j);
AppConfig load_config(const std::string& path);
nlohmann::json config_to_json(const AppConfig& c);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const AppConfig& c);

}  // namespace dnctd
