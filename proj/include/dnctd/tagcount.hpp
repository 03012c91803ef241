#pragma once

// Coincidence counting on time-sorted click streams.
//
// Every kernel has a serial reference path and an OpenMP path. Both produce
// identical integer counts; the parallel path splits the first stream into
// contiguous blocks and locates each block's partner range by binary search.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dnctd/execution.hpp"
#include "dnctd/tagstream.hpp"

namespace dnctd {

class UnsortedStreamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultBinPs = 1.0;
inline constexpr double kDefaultRangePs = 5000.0;

/// Histogram of dt = t_a - t_b. Bins are centered on center + k * bin_width
/// for k in [-half_bins, half_bins]; dt is assigned to the nearest center with
/// ties rounded away from the center, so histogram(a, b) mirrored equals
/// histogram(b, a).
struct Histogram {
  double center_ps = 0.0;
  double bin_width_ps = kDefaultBinPs;
  double range_ps = kDefaultRangePs;  // only pairs with |dt - center| <= range
  std::int64_t half_bins = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t pairs = 0;  // pairs counted (sum of counts)

  double bin_center(std::size_t i) const {
    return center_ps + bin_width_ps * static_cast<double>(static_cast<std::int64_t>(i) - half_bins);
  }
};

Histogram coincidence_histogram(std::span<const std::uint64_t> a,
                                std::span<const std::uint64_t> b, double bin_ps,
                                double range_ps, double center_ps = 0.0,
                                Execution exec = Execution::parallel);
Histogram coincidence_histogram(const TagStream& a, const TagStream& b, double bin_ps,
                                double range_ps, double center_ps = 0.0,
                                Execution exec = Execution::parallel);

/// Pairs with dt in [offset - w/2, offset + w/2].
std::uint64_t count_in_window(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                              double w_ps, double offset_ps,
                              Execution exec = Execution::parallel);
std::uint64_t count_in_window(const TagStream& a, const TagStream& b, double w_ps,
                              double offset_ps, Execution exec = Execution::parallel);

struct AccidentalEstimate {
  double counts = 0.0;      // expected accidentals in one window of width w
  double sigma = 0.0;       // standard error of `counts`
  std::vector<std::uint64_t> per_offset;
};

/// Mean windowed count over off-peak offsets.
AccidentalEstimate accidental_estimate(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b, double w_ps,
                                       std::span<const double> offsets_ps);

/// Sorted differences t_a - t_b with |dt - center| <= range (serial).
std::vector<std::int64_t> pair_differences(std::span<const std::uint64_t> a,
                                           std::span<const std::uint64_t> b, double range_ps,
                                           double center_ps = 0.0);

/// Largest count in any window of width w whose center lies in [lo, hi], and
/// where it sits. Input must be sorted differences.
struct WindowPeak {
  std::uint64_t count = 0;
  double center_ps = 0.0;
};
WindowPeak max_window_count(std::span<const std::int64_t> sorted_dt, double w_ps, double lo_ps,
                            double hi_ps);

}  // namespace dnctd
