#include "dnctd/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dnctd/tagcount.hpp"

namespace dnctd {

namespace {

constexpr double kPsPerSecond = 1e12;
constexpr double kPsPerNs = 1e3;
// 3 dB compression: accepted = offered / 10^0.3.
const double kThreeDb = std::pow(10.0, 0.3);

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Everything a block needs, fixed before generation starts.
struct Plan {
  double period_ps = 0.0;
  double mu = 0.0;
  double tau_p = 0.0, tau_r = 0.0, eta = 1.0;
  double probe_delay = 0.0, ref_delay = 0.0;
  // Detected pair times including jitter: (t_p, t_r) = mean + L z.
  double mean_p = 0.0, mean_r = 0.0;
  double l00 = 0.0, l10 = 0.0, l11 = 0.0;
  NoiseMode noise_mode = NoiseMode::pulsed;
  double noise_rate = 0.0;       // photons/s at the probe detector
  double noise_per_pulse = 0.0;  // pulsed mean
  double noise_mean = 0.0, noise_sigma = 0.0;  // sigma includes probe jitter
  double dark = 0.0;
  std::uint64_t pulses = 0;
};

Plan make_plan(const RunConfig& cfg, double duration_s) {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s))
    throw std::invalid_argument("duration must be finite and non-negative");
  const double n = duration_s * cfg.source.rep_rate;
  if (n > 9007199254740992.0) throw std::overflow_error("duration x rep_rate overflows the pulse counter");

  Plan p;
  p.pulses = static_cast<std::uint64_t>(std::llround(n));
  p.period_ps = kPsPerSecond / cfg.source.rep_rate;
  p.mu = cfg.source.pair_probability(cfg.scheme.pair_rate);
  p.tau_p = cfg.scheme.tau_p;
  p.tau_r = cfg.scheme.tau_r;
  p.eta = cfg.detector.efficiency;
  p.ref_delay = cfg.ref_delay_ps;
  p.probe_delay = cfg.ref_delay_ps + cfg.scheme.relative_delay_ps;

  const auto state = cfg.source.biphoton();
  const auto dispersed = apply_gdd_pair(state, cfg.scheme.gdd_probe, cfg.scheme.gdd_ref);
  const int sp = dispersed.probe_slot(), sr = dispersed.reference_slot();
  Eigen::Matrix2d tt;
  tt << dispersed.cov()(sp, sp), dispersed.cov()(sp, sr), dispersed.cov()(sr, sp),
      dispersed.cov()(sr, sr);
  // Detector jitter is independent of the arrival times, so it folds into
  // the sampled covariance.
  tt(0, 0) += std::pow(cfg.detector.probe_jitter_sigma(), 2);
  tt(1, 1) += std::pow(cfg.detector.ref_jitter_sigma(), 2);
  const Eigen::LLT<Eigen::Matrix2d> llt(tt);
  if (llt.info() != Eigen::Success) throw std::runtime_error("pair time covariance not positive definite");
  const Eigen::Matrix2d l = llt.matrixL();
  p.l00 = l(0, 0);
  p.l10 = l(1, 0);
  p.l11 = l(1, 1);
  p.mean_p = dispersed.mean()(sp);
  p.mean_r = dispersed.mean()(sr);

  const auto wp = cfg.noise.wavepacket.value_or(marginal(state, Photon::probe));
  const auto noise = apply_gdd_single(wp, cfg.scheme.gdd_probe);
  p.noise_mode = cfg.scheme.noise_mode;
  p.noise_rate = cfg.scheme.noise_rate;
  p.noise_per_pulse = cfg.scheme.noise_rate / cfg.source.rep_rate;
  p.noise_mean = noise.mean_t();
  p.noise_sigma = std::sqrt(noise.var_t() + std::pow(cfg.detector.probe_jitter_sigma(), 2));
  p.dark = cfg.detector.dark_rate_cps;
  return p;
}

std::uint64_t to_tick(double t_ps) {
  return t_ps <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(t_ps));
}

// Zero-truncated Poisson by inversion.
std::uint64_t zero_truncated_poisson(double lambda, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u = u01(rng) * -std::expm1(-lambda);
  double term = lambda * std::exp(-lambda);
  std::uint64_t k = 1;
  while (u > term && k < 1000) {
    u -= term;
    ++k;
    term *= lambda / static_cast<double>(k);
  }
  return k;
}

// Insertion sort. Linear for the nearly ordered sequences produced here:
// records are generated pulse by pulse and only jitter/dispersion shuffle them.
// Falls back to a full sort if the input turns out to be badly shuffled.
void insertion_fixup(TagStream& s) {
  std::size_t budget = 64 * s.size() + 1024;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!tag_less(s[i], s[i - 1])) continue;
    TagRecord r = s[i];
    std::size_t j = i;
    while (j > 0 && tag_less(r, s[j - 1])) {
      s[j] = s[j - 1];
      --j;
      if (--budget == 0) {
        s[j] = r;
        std::sort(s.begin(), s.end(), tag_less);
        return;
      }
    }
    s[j] = r;
  }
}

void append_sorted(TagStream& dst, TagStream& src) {
  insertion_fixup(src);
  const auto mid = static_cast<std::ptrdiff_t>(dst.size());
  dst.insert(dst.end(), src.begin(), src.end());
  std::inplace_merge(dst.begin(), dst.begin() + mid, dst.end(), tag_less);
  TagStream().swap(src);
}

struct Block {
  TagStream probe, reference;
};

void generate_block(const Plan& p, std::uint64_t k0, std::uint64_t k1, std::uint64_t seed,
                    Block& out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto keep = [&](double prob) { return prob >= 1.0 || u01(rng) < prob; };
  auto pulse_time = [&](std::uint64_t k) { return kTimeOriginPs + static_cast<double>(k) * p.period_ps; };
  const double pulses = static_cast<double>(k1 - k0);
  const double pairs = p.mu * pulses;
  out.probe.reserve(static_cast<std::size_t>(1.05 * pairs * p.tau_p * p.eta + 64));
  out.reference.reserve(static_cast<std::size_t>(1.05 * pairs * p.tau_r * p.eta + 64));

  // Pairs: geometric skip between emitting pulses.
  if (p.mu > 0.0) {
    std::geometric_distribution<std::uint64_t> skip(std::min(p.mu, 1.0));
    for (std::uint64_t k = k0 + (p.mu >= 1.0 ? 0 : skip(rng)); k < k1;
         k += 1 + (p.mu >= 1.0 ? 0 : skip(rng))) {
      const double z1 = normal(rng), z2 = normal(rng);
      const double tp = p.mean_p + p.l00 * z1;
      const double tr = p.mean_r + p.l10 * z1 + p.l11 * z2;
      const double t0 = pulse_time(k);
      if (keep(p.tau_p) && keep(p.eta))
        out.probe.push_back({to_tick(t0 + p.probe_delay + tp), Channel::probe, Origin::pair, k});
      if (keep(p.tau_r) && keep(p.eta))
        out.reference.push_back({to_tick(t0 + p.ref_delay + tr), Channel::reference, Origin::pair, k});
    }
  }

  const double span_lo = pulse_time(k0), span_hi = pulse_time(k1);

  insertion_fixup(out.probe);
  insertion_fixup(out.reference);
  TagStream extra;
  extra.reserve(static_cast<std::size_t>(
      1.05 * (p.noise_rate * p.eta + p.dark) * pulses * p.period_ps / kPsPerSecond + 64));

  if (p.noise_rate > 0.0) {
    if (p.noise_mode == NoiseMode::pulsed) {
      const double lam = p.noise_per_pulse;
      auto emit_pulse_noise = [&](std::uint64_t k, std::uint64_t count) {
        for (std::uint64_t j = 0; j < count; ++j) {
          const double t = p.noise_mean + p.noise_sigma * normal(rng);
          if (keep(p.eta))
            extra.push_back({to_tick(pulse_time(k) + p.probe_delay + t), Channel::probe, Origin::noise, k});
        }
      };
      if (lam > 1.0) {
        std::poisson_distribution<std::uint64_t> pois(lam);
        for (std::uint64_t k = k0; k < k1; ++k) emit_pulse_noise(k, pois(rng));
      } else {
        const double hit = -std::expm1(-lam);
        std::geometric_distribution<std::uint64_t> skip(hit);
        for (std::uint64_t k = k0 + skip(rng); k < k1; k += 1 + skip(rng))
          emit_pulse_noise(k, zero_truncated_poisson(lam, rng));
      }
    } else {
      std::exponential_distribution<double> gap(p.noise_rate * p.eta / kPsPerSecond);
      for (double t = span_lo + gap(rng); t < span_hi; t += gap(rng))
        extra.push_back({to_tick(t), Channel::probe, Origin::noise, kNoPulse});
    }
    append_sorted(out.probe, extra);
  }

  if (p.dark > 0.0) {
    std::exponential_distribution<double> gap(p.dark / kPsPerSecond);
    for (double t = span_lo + gap(rng); t < span_hi; t += gap(rng))
      extra.push_back({to_tick(t), Channel::probe, Origin::dark, kNoPulse});
    append_sorted(out.probe, extra);
    for (double t = span_lo + gap(rng); t < span_hi; t += gap(rng))
      extra.push_back({to_tick(t), Channel::reference, Origin::dark, kNoPulse});
    append_sorted(out.reference, extra);
  }
}

TagStream concatenate(std::vector<Block>& blocks, TagStream Block::*member) {
  std::size_t n = 0;
  for (const auto& b : blocks) n += (b.*member).size();
  TagStream out;
  out.reserve(n);
  for (auto& b : blocks) {
    out.insert(out.end(), (b.*member).begin(), (b.*member).end());
    TagStream().swap(b.*member);
  }
  insertion_fixup(out);
  return out;
}

std::uint64_t count_channel(std::span<const TagRecord> s, Channel c) {
  return static_cast<std::uint64_t>(
      std::count_if(s.begin(), s.end(), [c](const TagRecord& r) { return r.channel == c; }));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

void RunConfig::validate() const {
  scheme.validate();
  source.validate();
  detector.validate();
  if (source.pair_probability(scheme.pair_rate) > 1.0)
    throw std::invalid_argument("pair rate exceeds one pair per pulse");
  if (noise.wavepacket && noise.wavepacket->var_t() <= 0.0)
    throw std::invalid_argument("noise wavepacket must have positive duration");
}

std::vector<std::string> RunConfig::warnings() const {
  std::vector<std::string> w;
  if (source.pair_probability(scheme.pair_rate) > 0.1)
    w.emplace_back("pair probability per pulse exceeds 0.1; multi-pair emission is not modeled");
  return w;
}

RunStreams simulate_run(const RunConfig& cfg, double duration_s, std::uint64_t seed,
                        Execution exec) {
  cfg.validate();
  const Plan plan = make_plan(cfg, duration_s);
  const std::uint64_t nblocks = (plan.pulses + kPulsesPerBlock - 1) / kPulsesPerBlock;
  std::vector<Block> blocks(nblocks);

  auto run_block = [&](std::uint64_t b) {
    const std::uint64_t k0 = b * kPulsesPerBlock;
    const std::uint64_t k1 = std::min(plan.pulses, k0 + kPulsesPerBlock);
    generate_block(plan, k0, k1, derive_seed(seed, b), blocks[b]);
  };
  if (exec == Execution::serial) {
    for (std::uint64_t b = 0; b < nblocks; ++b) run_block(b);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::uint64_t b = 0; b < nblocks; ++b) run_block(b);
  }

  RunStreams out;
  out.pulses = plan.pulses;
  out.probe = concatenate(blocks, &Block::probe);
  out.reference = concatenate(blocks, &Block::reference);
  return out;
}

TagStream apply_dead_time(std::span<const TagRecord> s, double dead_time_ns) {
  if (!(dead_time_ns >= 0.0)) throw std::invalid_argument("dead time must be non-negative");
  if (!is_time_sorted(s)) throw UnsortedStreamError("stream is not time-sorted");
  if (dead_time_ns == 0.0) return TagStream(s.begin(), s.end());
  const double td = dead_time_ns * kPsPerNs;
  TagStream out;
  out.reserve(s.size());
  // Channels seen so far with their last accepted click.
  std::vector<std::pair<Channel, std::uint64_t>> last;
  for (const auto& r : s) {
    auto it = std::find_if(last.begin(), last.end(), [&](const auto& e) { return e.first == r.channel; });
    if (it == last.end()) {
      last.emplace_back(r.channel, r.timestamp_ps);
      out.push_back(r);
    } else if (static_cast<double>(r.timestamp_ps - it->second) >= td) {
      it->second = r.timestamp_ps;
      out.push_back(r);
    }
  }
  return out;
}

namespace {

SnrEstimate estimate_from_counts(const RunConfig& cfg, std::uint64_t present,
                                 std::uint64_t absent, double duration_s) {
  SnrEstimate est;
  est.duration_s = duration_s;
  est.present_counts = present;
  est.absent_counts = absent;
  const double p = static_cast<double>(present);
  const double a = static_cast<double>(absent);
  SnrResult& r = est.result;
  r.scheme = cfg.scheme.scheme;
  r.normalized_noise_db =
      normalized_noise_power(cfg.scheme.noise_rate, cfg.scheme.pair_rate, cfg.scheme.tau_p);
  r.true_rate = (p - a) / duration_s;
  r.false_rate = a / duration_s;
  if (absent == 0) {
    r.infinite = true;
    r.noise_floor_limited = true;
    r.snr = std::numeric_limits<double>::infinity();
    r.snr_db = std::numeric_limits<double>::infinity();
    r.diagnostic = "no background counts in the target-absent run";
    return est;
  }
  r.snr = (p - a) / a;
  r.snr_db = r.snr > 0.0 ? to_db(r.snr) : -std::numeric_limits<double>::infinity();
  // Var(P/A) to first order for independent Poisson P and A.
  est.snr_sigma = std::sqrt(p / (a * a) + p * p / (a * a * a));
  if (r.snr > 0.0) r.uncertainty_db = 10.0 / std::numbers::ln10 * est.snr_sigma / r.snr;
  return est;
}

RunStreams detected_run(const RunConfig& c, double duration_s, std::uint64_t seed, Execution exec) {
  auto run = simulate_run(c, duration_s, seed, exec);
  if (c.detector.dead_time_ns > 0.0) {
    run.probe = apply_dead_time(run.probe, c.detector.dead_time_ns);
    run.reference = apply_dead_time(run.reference, c.detector.dead_time_ns);
  }
  return run;
}

}  // namespace

std::vector<SnrEstimate> run_snr_windows(const RunConfig& cfg, std::span<const double> windows_ps,
                                         double duration_s, std::uint64_t seed, Execution exec) {
  cfg.validate();
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
  if (windows_ps.empty()) throw std::invalid_argument("no coincidence windows given");
  for (double w : windows_ps)
    if (!(w > 0.0)) throw std::invalid_argument("window width must be positive");

  RunConfig absent = cfg;
  absent.scheme.tau_p = 0.0;
  const auto on = detected_run(cfg, duration_s, derive_seed(seed, 0), exec);
  const auto off = detected_run(absent, duration_s, derive_seed(seed, 1), exec);

  std::vector<SnrEstimate> out;
  if (cfg.scheme.scheme == Scheme::ctd) {
    const auto e = estimate_from_counts(cfg, count_channel(on.probe, Channel::probe),
                                        count_channel(off.probe, Channel::probe), duration_s);
    out.assign(windows_ps.size(), e);
    return out;
  }
  const auto on_p = timestamps(on.probe), on_r = timestamps(on.reference);
  const auto off_p = timestamps(off.probe), off_r = timestamps(off.reference);
  const double offset = cfg.scheme.window_offset_ps;
  for (double w : windows_ps) {
    RunConfig c = cfg;
    c.scheme.window_ps = w;
    out.push_back(estimate_from_counts(c, count_in_window(on_p, on_r, w, offset, exec),
                                       count_in_window(off_p, off_r, w, offset, exec), duration_s));
  }
  return out;
}

SnrEstimate run_snr_experiment(const RunConfig& cfg, double duration_s, std::uint64_t seed,
                               Execution exec) {
  const double w[] = {cfg.scheme.window_ps};
  return run_snr_windows(cfg, w, duration_s, seed, exec).front();
}

// ---------------------------------------------------------------------------

double accepted_rate_cw(double offered, double dead_time_ns) {
  return offered / (1.0 + offered * dead_time_ns * 1e-9);
}

double accepted_rate_pulsed(double offered, double dead_time_ns, double rep_rate) {
  if (offered <= 0.0) return 0.0;
  if (dead_time_ns <= 0.0) return offered;
  const double period = 1.0 / rep_rate;
  const double hit = -std::expm1(-offered / rep_rate);
  // Pulses skipped after a click, then a geometric wait for the next hit.
  const double blocked = std::ceil(dead_time_ns * 1e-9 / period) - 1.0;
  return 1.0 / (period * (blocked + 1.0 / hit));
}

std::optional<double> analytic_onset(NoiseMode mode, double dead_time_ns, double rep_rate) {
  if (dead_time_ns <= 0.0) return std::nullopt;
  if (mode == NoiseMode::cw) return (kThreeDb - 1.0) / (dead_time_ns * 1e-9);
  auto compressed = [&](double x) { return x / accepted_rate_pulsed(x, dead_time_ns, rep_rate) >= kThreeDb; };
  double lo = 1.0, hi = 1.0;
  while (!compressed(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) return std::nullopt;
  }
  for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-12; ++i) {
    const double mid = std::sqrt(lo * hi);
    (compressed(mid) ? hi : lo) = mid;
  }
  return hi;
}

SaturationReport saturation_scan(const RunConfig& cfg, const std::vector<double>& noise_rates,
                                 double dead_time_ns, double duration_s, std::uint64_t seed,
                                 Execution exec) {
  if (!(dead_time_ns >= 0.0)) throw std::invalid_argument("dead time must be non-negative");
  if (!std::is_sorted(noise_rates.begin(), noise_rates.end()))
    throw std::invalid_argument("noise rates must be increasing");
  SaturationReport rep;
  rep.dead_time_ns = dead_time_ns;
  rep.analytic_onset_cw = analytic_onset(NoiseMode::cw, dead_time_ns, cfg.source.rep_rate);
  rep.analytic_onset_pulsed = analytic_onset(NoiseMode::pulsed, dead_time_ns, cfg.source.rep_rate);

  std::uint64_t stream = 0;
  for (NoiseMode mode : {NoiseMode::cw, NoiseMode::pulsed}) {
    std::optional<double> onset;
    double prev_x = 0.0, prev_c = 0.0;
    for (double rate : noise_rates) {
      RunConfig c = cfg;
      c.scheme.pair_rate = 0.0;
      c.scheme.noise_rate = rate;
      c.scheme.noise_mode = mode;
      c.detector.dark_rate_cps = 0.0;
      c.detector.dead_time_ns = dead_time_ns;
      const auto run = simulate_run(c, duration_s, derive_seed(seed, stream++), exec);
      const auto kept = apply_dead_time(run.probe, dead_time_ns);

      SaturationRow row;
      row.mode = mode;
      row.offered_rate = static_cast<double>(run.probe.size()) / duration_s;
      row.accepted_rate = static_cast<double>(kept.size()) / duration_s;
      const double offered = rate * c.detector.efficiency;
      row.analytic_rate = mode == NoiseMode::cw
                              ? accepted_rate_cw(offered, dead_time_ns)
                              : accepted_rate_pulsed(offered, dead_time_ns, c.source.rep_rate);
      row.compression_db =
          row.accepted_rate > 0.0 ? to_db(row.offered_rate / row.accepted_rate) : 0.0;
      if (!onset && row.compression_db >= 3.0 && row.offered_rate > 0.0) {
        // Log-linear interpolation between the bracketing rows.
        if (prev_x > 0.0 && row.compression_db > prev_c) {
          const double f = (3.0 - prev_c) / (row.compression_db - prev_c);
          onset = std::exp(std::log(prev_x) + f * (std::log(row.offered_rate) - std::log(prev_x)));
        } else {
          onset = row.offered_rate;
        }
      }
      prev_x = row.offered_rate;
      prev_c = row.compression_db;
      rep.rows.push_back(row);
    }
    (mode == NoiseMode::cw ? rep.onset_cw : rep.onset_pulsed) = onset;
  }
  return rep;
}

}  // namespace dnctd
