#pragma once

// Raster-scan imaging: letter scenes on a mirror, per-pixel photon counting,
// intensity images and time-of-flight depth maps.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dnctd/detection.hpp"
#include "dnctd/execution.hpp"
#include "dnctd/montecarlo.hpp"
#include "dnctd/tagcount.hpp"

namespace dnctd {

struct Scene {
  int width = 0, height = 0;
  std::vector<double> reflectivity;  // row-major, multiplies tau_p
  std::vector<double> depth_cm;
  /// Normalized noise power N / (nu tau_p) in dB at full reflectivity; empty
  /// means no environmental noise.
  std::optional<double> noise_db;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  /// Pixels with reflectivity >= 0.5.
  std::vector<bool> mirror_mask() const;
  void validate() const;
};

inline constexpr int kDefaultImageSize = 64;
inline constexpr double kDefaultDwellS = 0.1;

/// Letters drawn as reflectivity-0 glyphs on a reflectivity-1 mirror. The
/// image is split into one vertical tile per letter; tile i sits at
/// depths[i] plus tilt * (x - tile left edge). Missing depths repeat the last
/// one (100 cm if none given).
Scene make_letter_scene(const std::string& letters, const std::vector<double>& depths_cm,
                        double tilt_cm_per_px, int width = kDefaultImageSize,
                        int height = kDefaultImageSize);

/// Round-trip delay 2 d / c in ps.
double depth_to_delay_ps(double depth_cm);
double delay_to_depth_cm(double delay_ps);

struct DepthEstimate {
  bool defined = false;
  double delay_ps = 0.0;
  double depth_cm = 0.0;
  double uncertainty_cm = 0.0;
  double peak_sigma_ps = 0.0;
  double signal_counts = 0.0;      // background-subtracted
  double background_per_bin = 0.0;
  std::string diagnostic;
};

/// Background-subtracted centroid of the strongest peak. The peak region is
/// +-peak_halfwidth around the largest moving sum; background is the mean bin
/// count outside three half-widths. Undefined unless the peak exceeds the
/// background by 5 sigma.
DepthEstimate estimate_depth(const Histogram& h, double reference_delay_ps = 0.0,
                             double peak_halfwidth_ps = 150.0);

struct ImageCube {
  int width = 0, height = 0;
  Scheme scheme = Scheme::ctd;
  std::vector<double> intensity;
  std::vector<double> depth_cm;
  std::vector<double> depth_err_cm;
  std::vector<bool> depth_defined;
  std::vector<std::string> warnings;
};

struct ScanOptions {
  double dwell_s = kDefaultDwellS;
  bool estimate_depths = true;
  double peak_halfwidth_ps = 150.0;
};

/// Per-pixel Monte Carlo. tau_p is scaled by reflectivity and the probe is
/// delayed by the round trip. Intensity is probe singles for CTD and, for
/// coincidence schemes, the largest windowed count over the scene's range
/// gate.
ImageCube scan_scene(const Scene& scene, Scheme scheme, const RunConfig& base,
                     const ScanOptions& opt, std::uint64_t seed,
                     Execution exec = Execution::parallel);

/// Fraction of pixels whose Otsu-thresholded intensity matches the mask
/// (true = bright).
double classification_accuracy(const std::vector<double>& intensity, const std::vector<bool>& mask);
double otsu_threshold(const std::vector<double>& values);

void write_image_csv(std::ostream& os, const ImageCube& img);
void write_mask_pgm(std::ostream& os, int width, int height, const std::vector<bool>& mask);
/// Intensity scaled to 0..255.
void write_intensity_pgm(std::ostream& os, const ImageCube& img);

}  // namespace dnctd
