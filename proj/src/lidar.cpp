#include "dnctd/lidar.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace dnctd {

namespace {

// 5x7 glyphs, one string per row, '#' = ink.
using Glyph = std::array<const char*, 7>;

const Glyph* glyph(char c) {
  static const Glyph font[26] = {
      {" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},  // A
      {"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "},  // B
      {" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "},  // C
      {"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "},  // D
      {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"},  // E
      {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "},  // F
      {" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ####"},  // G
      {"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},  // H
      {" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "},  // I
      {"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "},  // J
      {"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"},  // K
      {"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"},  // L
      {"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"},  // M
      {"#   #", "#   #", "##  #", "# # #", "#  ##", "#   #", "#   #"},  // N
      {" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},  // O
      {"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "},  // P
      {" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"},  // Q
      {"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"},  // R
      {" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "},  // S
      {"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "},  // T
      {"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},  // U
      {"#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "},  // V
      {"#   #", "#   #", "#   #", "# # #", "# # #", "# # #", " # # "},  // W
      {"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"},  // X
      {"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "},  // Y
      {"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"},  // Z
  };
  const int k = std::toupper(static_cast<unsigned char>(c)) - 'A';
  return (k >= 0 && k < 26) ? &font[k] : nullptr;
}

}  // namespace

std::vector<bool> Scene::mirror_mask() const {
  std::vector<bool> m(reflectivity.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = reflectivity[i] >= 0.5;
  return m;
}

void Scene::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("scene dimensions must be positive");
  const auto n = static_cast<std::size_t>(width) * height;
  if (reflectivity.size() != n || depth_cm.size() != n)
    throw std::invalid_argument("scene maps do not match its dimensions");
  for (double r : reflectivity)
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("reflectivity must lie in [0, 1]");
  for (double d : depth_cm)
    if (!std::isfinite(d)) throw std::invalid_argument("depths must be finite");
  if (noise_db && !std::isfinite(*noise_db)) throw std::invalid_argument("noise level must be finite");
}

Scene make_letter_scene(const std::string& letters, const std::vector<double>& depths_cm,
                        double tilt_cm_per_px, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("scene dimensions must be positive");
  Scene s;
  s.width = width;
  s.height = height;
  const auto n = static_cast<std::size_t>(width) * height;
  s.reflectivity.assign(n, 1.0);
  auto depth_of = [&](std::size_t i) {
    if (depths_cm.empty()) return 100.0;
    return depths_cm[std::min(i, depths_cm.size() - 1)];
  };

  const int count = static_cast<int>(letters.size());
  if (count == 0) {
    s.depth_cm.assign(n, depth_of(0));
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) s.depth_cm[s.index(x, y)] += tilt_cm_per_px * x;
    return s;
  }

  s.depth_cm.assign(n, 0.0);
  const int scale = std::max(1, std::min(width / count * 4 / 5 / 5, height * 3 / 4 / 7));
  for (int i = 0; i < count; ++i) {
    const int x0 = width * i / count, x1 = width * (i + 1) / count;
    for (int y = 0; y < height; ++y)
      for (int x = x0; x < x1; ++x)
        s.depth_cm[s.index(x, y)] = depth_of(static_cast<std::size_t>(i)) + tilt_cm_per_px * (x - x0);
    const Glyph* g = glyph(letters[static_cast<std::size_t>(i)]);
    if (!g) continue;
    const int gx = x0 + (x1 - x0 - 5 * scale) / 2;
    const int gy = (height - 7 * scale) / 2;
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 5; ++c) {
        if ((*g)[r][c] != '#') continue;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx) {
            const int x = gx + c * scale + dx, y = gy + r * scale + dy;
            if (x >= 0 && x < width && y >= 0 && y < height) s.reflectivity[s.index(x, y)] = 0.0;
          }
      }
  }
  return s;
}

double depth_to_delay_ps(double depth_cm) { return 2.0 * depth_cm / kSpeedOfLightCmPerPs; }
double delay_to_depth_cm(double delay_ps) { return 0.5 * delay_ps * kSpeedOfLightCmPerPs; }

DepthEstimate estimate_depth(const Histogram& h, double reference_delay_ps,
                             double peak_halfwidth_ps) {
  if (!(peak_halfwidth_ps > 0.0)) throw std::invalid_argument("peak half-width must be positive");
  DepthEstimate est;
  const std::size_t n = h.counts.size();
  if (n == 0 || h.pairs == 0) {
    est.diagnostic = "empty histogram";
    return est;
  }
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(peak_halfwidth_ps / h.bin_width_ps)));

  // Largest moving sum over 2 half + 1 bins.
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + static_cast<double>(h.counts[i]);
  std::size_t peak = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0, hi = std::min(n, i + half + 1);
    const double s = cum[hi] - cum[lo];
    if (s > best) best = s, peak = i;
  }
  const std::size_t lo = peak >= half ? peak - half : 0, hi = std::min(n, peak + half + 1);

  double bg_sum = 0.0;
  std::size_t bg_bins = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = i > peak ? i - peak : peak - i;
    if (d > 3 * half) bg_sum += static_cast<double>(h.counts[i]), ++bg_bins;
  }
  est.background_per_bin = bg_bins ? bg_sum / static_cast<double>(bg_bins) : 0.0;

  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double c = static_cast<double>(h.counts[i]) - est.background_per_bin;
    s0 += c;
    s1 += c * h.bin_center(i);
  }
  const double background = est.background_per_bin * static_cast<double>(hi - lo);
  est.signal_counts = s0;
  if (s0 < 5.0 * std::sqrt(std::max(background, 1.0))) {
    est.diagnostic = "no significant peak";
    return est;
  }
  const double mean = s1 / s0;
  double s2 = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double c = static_cast<double>(h.counts[i]) - est.background_per_bin;
    s2 += c * std::pow(h.bin_center(i) - mean, 2);
  }
  est.defined = true;
  est.delay_ps = mean;
  est.peak_sigma_ps = std::sqrt(std::max(s2 / s0, 0.0));
  est.depth_cm = delay_to_depth_cm(mean - reference_delay_ps);
  est.uncertainty_cm = delay_to_depth_cm(est.peak_sigma_ps / std::sqrt(s0));
  return est;
}

ImageCube scan_scene(const Scene& scene, Scheme scheme, const RunConfig& base,
                     const ScanOptions& opt, std::uint64_t seed, Execution exec) {
  scene.validate();
  base.validate();
  if (!(opt.dwell_s > 0.0)) throw std::invalid_argument("dwell time must be positive");

  RunConfig cfg = base;
  cfg.scheme.scheme = scheme;
  if (scheme != Scheme::dnctd) cfg.scheme.gdd_probe = cfg.scheme.gdd_ref = 0.0;
  const double full_tau_p = base.scheme.tau_p;
  cfg.scheme.noise_rate =
      scene.noise_db ? from_db(*scene.noise_db) * base.scheme.pair_rate * full_tau_p : 0.0;

  ImageCube img;
  img.width = scene.width;
  img.height = scene.height;
  img.scheme = scheme;
  const auto n = static_cast<std::size_t>(scene.width) * scene.height;
  img.intensity.assign(n, 0.0);
  img.depth_cm.assign(n, 0.0);
  img.depth_err_cm.assign(n, 0.0);
  img.depth_defined.assign(n, false);

  const double expected = base.scheme.pair_rate * full_tau_p * base.detector.efficiency *
                          (scheme == Scheme::ctd ? 1.0 : base.scheme.tau_r * base.detector.efficiency) *
                          opt.dwell_s;
  if (expected < 1.0) img.warnings.push_back("dwell too short: fewer than one expected signal count per pixel");

  // Range gate over every depth in the scene, in t_probe - t_ref.
  const auto [dmin, dmax] = std::minmax_element(scene.depth_cm.begin(), scene.depth_cm.end());
  const double margin = 0.5 * cfg.scheme.window_ps + opt.peak_halfwidth_ps;
  const double gate_lo = cfg.scheme.relative_delay_ps + depth_to_delay_ps(*dmin);
  const double gate_hi = cfg.scheme.relative_delay_ps + depth_to_delay_ps(*dmax);
  const double gate_center = 0.5 * (gate_lo + gate_hi);
  const double gate_range = 0.5 * (gate_hi - gate_lo) + margin + 4.0 * opt.peak_halfwidth_ps;

  auto pixel = [&](std::size_t i) {
    RunConfig c = cfg;
    c.scheme.tau_p = full_tau_p * scene.reflectivity[i];
    c.scheme.relative_delay_ps = cfg.scheme.relative_delay_ps + depth_to_delay_ps(scene.depth_cm[i]);
    const auto run = simulate_run(c, opt.dwell_s, derive_seed(seed, i), Execution::serial);
    if (scheme == Scheme::ctd) {
      img.intensity[i] = static_cast<double>(run.probe.size());
      return;
    }
    const auto tp = timestamps(run.probe), tr = timestamps(run.reference);
    const auto dts = pair_differences(tp, tr, gate_range, gate_center);
    const auto peak = max_window_count(dts, c.scheme.window_ps, gate_lo, gate_hi);
    img.intensity[i] = static_cast<double>(peak.count);
    if (!opt.estimate_depths) return;
    const auto h = coincidence_histogram(tp, tr, kDefaultBinPs, gate_range, gate_center, Execution::serial);
    const auto d = estimate_depth(h, cfg.scheme.relative_delay_ps, opt.peak_halfwidth_ps);
    img.depth_defined[i] = d.defined;
    if (d.defined) {
      img.depth_cm[i] = d.depth_cm;
      img.depth_err_cm[i] = d.uncertainty_cm;
    }
  };

  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) pixel(i);
  } else {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t i = 0; i < n; ++i) pixel(i);
  }
  return img;
}

double otsu_threshold(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("no values to threshold");
  std::vector<double> v(values);
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  double best = -1.0, thr = v.front();
  double sum_lo = 0.0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    sum_lo += v[k];
    if (v[k] == v[k + 1]) continue;
    const double n_lo = static_cast<double>(k + 1), n_hi = n - n_lo;
    const double m_lo = sum_lo / n_lo, m_hi = (total - sum_lo) / n_hi;
    const double between = n_lo * n_hi * (m_lo - m_hi) * (m_lo - m_hi);
    if (between > best) best = between, thr = 0.5 * (v[k] + v[k + 1]);
  }
  return thr;
}

double classification_accuracy(const std::vector<double>& intensity, const std::vector<bool>& mask) {
  if (intensity.size() != mask.size()) throw std::invalid_argument("image and mask sizes differ");
  if (intensity.empty()) throw std::invalid_argument("empty image");
  const double thr = otsu_threshold(intensity);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) hits += (intensity[i] > thr) == mask[i];
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

void write_image_csv(std::ostream& os, const ImageCube& img) {
  os << "x,y,intensity,depth_cm,depth_err_cm\n";
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto i = static_cast<std::size_t>(y) * img.width + x;
      os << x << ',' << y << ',' << img.intensity[i] << ',';
      if (img.depth_defined[i]) os << img.depth_cm[i] << ',' << img.depth_err_cm[i];
      else os << "nan,nan";
      os << '\n';
    }
}

void write_mask_pgm(std::ostream& os, int width, int height, const std::vector<bool>& mask) {
  os << "P2\n" << width << ' ' << height << "\n255\n";
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x)
      os << (x ? " " : "") << (mask[static_cast<std::size_t>(y) * width + x] ? 255 : 0);
    os << '\n';
  }
}

void write_intensity_pgm(std::ostream& os, const ImageCube& img) {
  const auto [lo, hi] = std::minmax_element(img.intensity.begin(), img.intensity.end());
  const double span = (lo == img.intensity.end() || *hi <= *lo) ? 1.0 : *hi - *lo;
  os << "P2\n" << img.width << ' ' << img.height << "\n255\n";
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double v = img.intensity[static_cast<std::size_t>(y) * img.width + x];
      os << (x ? " " : "") << static_cast<int>(std::lround(255.0 * (v - *lo) / span));
    }
    os << '\n';
  }
}

}  // namespace dnctd
