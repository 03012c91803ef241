#pragma once

// Pulse-by-pulse stochastic model of the ranging experiment. Produces
// detector click streams with ground-truth labels.
//
// Pulses are grouped in fixed blocks of kPulsesPerBlock, each with its own
// RNG stream derived from (seed, block index). Output is therefore identical
// for the serial and the OpenMP execution paths and for any thread count.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnctd/chrono_gaussian.hpp"
#include "dnctd/detection.hpp"
#include "dnctd/execution.hpp"
#include "dnctd/tagstream.hpp"

namespace dnctd {

inline constexpr std::uint64_t kPulsesPerBlock = std::uint64_t{1} << 22;
/// Every timestamp is offset by this much so early arrivals stay positive.
inline constexpr double kTimeOriginPs = 1e6;
/// Dead time giving 3 dB compression near 3.2e6 counts/s for cw light.
inline constexpr double kDefaultDeadTimeNs = 312.5;

/// Temporal/spectral shape of environmental noise photons. Defaults to the
/// probe photon's marginal.
struct NoiseModel {
  std::optional<ChronocyclicGaussian1> wavepacket;
};

struct RunConfig {
  SchemeConfig scheme;
  SourceModel source;
  DetectorModel detector;
  NoiseModel noise;
  double ref_delay_ps = 0.0;  // probe arrives at ref_delay + scheme.relative_delay_ps

  void validate() const;
  /// Non-fatal notes, e.g. pair probability above 0.1.
  std::vector<std::string> warnings() const;
};

struct RunStreams {
  TagStream probe;
  TagStream reference;
  std::uint64_t pulses = 0;
};

/// Raw detector clicks (loss, noise, efficiency, jitter; no dead time).
RunStreams simulate_run(const RunConfig& cfg, double duration_s, std::uint64_t seed,
                        Execution exec = Execution::parallel);

/// Non-paralyzable dead time applied per channel.
TagStream apply_dead_time(std::span<const TagRecord> s, double dead_time_ns);

struct SnrEstimate {
  SnrResult result;
  std::uint64_t present_counts = 0;
  std::uint64_t absent_counts = 0;
  double snr_sigma = 0.0;  // linear
  double duration_s = 0.0;
};

/// Target-present and target-absent (tau_p = 0) runs; SNR is
/// (present - absent) / absent in windowed coincidences (singles for CTD).
SnrEstimate run_snr_experiment(const RunConfig& cfg, double duration_s, std::uint64_t seed,
                               Execution exec = Execution::parallel);

/// Same pair of runs counted at several window widths (offset from cfg).
/// CTD ignores the window and returns the singles estimate for each entry.
std::vector<SnrEstimate> run_snr_windows(const RunConfig& cfg, std::span<const double> windows_ps,
                                         double duration_s, std::uint64_t seed,
                                         Execution exec = Execution::parallel);

struct SaturationRow {
  NoiseMode mode = NoiseMode::cw;
  double offered_rate = 0.0;   // clicks/s without dead time
  double accepted_rate = 0.0;  // clicks/s after dead time (Monte Carlo)
  double analytic_rate = 0.0;  // closed-form prediction
  double compression_db = 0.0;
};

struct SaturationReport {
  double dead_time_ns = 0.0;
  std::vector<SaturationRow> rows;
  /// Offered rate at 3 dB compression; empty if the sweep never reaches it.
  std::optional<double> onset_cw, onset_pulsed;
  std::optional<double> analytic_onset_cw, analytic_onset_pulsed;
};

/// Closed-form accepted rates. The pulsed form treats each pulse's noise as a
/// single detection opportunity, valid when the dead time exceeds the noise
/// spread within a pulse.
double accepted_rate_cw(double offered, double dead_time_ns);
double accepted_rate_pulsed(double offered, double dead_time_ns, double rep_rate);
std::optional<double> analytic_onset(NoiseMode mode, double dead_time_ns, double rep_rate);

SaturationReport saturation_scan(const RunConfig& cfg, const std::vector<double>& noise_rates,
                                 double dead_time_ns, double duration_s, std::uint64_t seed,
                                 Execution exec = Execution::parallel);

/// Deterministic child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dnctd
