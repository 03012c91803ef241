#include "dnctd/tagcount.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace dnctd {

namespace {

void require_sorted(std::span<const std::uint64_t> s, const char* name) {
  if (!std::is_sorted(s.begin(), s.end()))
    throw UnsortedStreamError(std::string(name) + " stream is not time-sorted");
}

std::int64_t round_half_away(double x) {
  return x >= 0.0 ? static_cast<std::int64_t>(std::floor(x + 0.5))
                  : -static_cast<std::int64_t>(std::floor(-x + 0.5));
}

// First index in b at or after `from` with b[idx] >= x.
std::size_t seek_ge(std::span<const std::uint64_t> b, std::size_t from, double x) {
  while (from < b.size() && static_cast<double>(b[from]) < x) ++from;
  return from;
}

std::size_t lower_index(std::span<const std::uint64_t> b, double x) {
  if (x <= 0.0) return 0;
  const auto it = std::lower_bound(b.begin(), b.end(), x,
                                   [](std::uint64_t v, double t) { return static_cast<double>(v) < t; });
  return static_cast<std::size_t>(it - b.begin());
}

// Histogram the a-range [begin, end) into counts.
void histogram_range(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                     std::size_t begin, std::size_t end, const Histogram& h,
                     std::vector<std::uint64_t>& counts) {
  if (begin >= end) return;
  const double c = h.center_ps, r = h.range_ps, w = h.bin_width_ps;
  std::size_t lo = lower_index(b, static_cast<double>(a[begin]) - c - r);
  for (std::size_t i = begin; i < end; ++i) {
    const double ta = static_cast<double>(a[i]);
    lo = seek_ge(b, lo, ta - c - r);
    const double hi_t = ta - c + r;
    for (std::size_t j = lo; j < b.size() && static_cast<double>(b[j]) <= hi_t; ++j) {
      const auto dt = static_cast<std::int64_t>(a[i]) - static_cast<std::int64_t>(b[j]);
      const double off = static_cast<double>(dt) - c;
      if (std::abs(off) > r) continue;
      const std::int64_t k = round_half_away(off / w) + h.half_bins;
      ++counts[static_cast<std::size_t>(k)];
    }
  }
}

std::uint64_t window_range(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                           std::size_t begin, std::size_t end, double lo_off, double hi_off) {
  if (begin >= end) return 0;
  std::uint64_t total = 0;
  // b in [ta - hi_off, ta - lo_off]
  std::size_t lo = lower_index(b, static_cast<double>(a[begin]) - hi_off);
  std::size_t hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    const double ta = static_cast<double>(a[i]);
    lo = seek_ge(b, lo, ta - hi_off);
    if (hi < lo) hi = lo;
    while (hi < b.size() && static_cast<double>(b[hi]) <= ta - lo_off) ++hi;
    total += hi - lo;
  }
  return total;
}

std::size_t chunk_count(std::size_t n) {
  const auto threads = static_cast<std::size_t>(omp_get_max_threads());
  return std::clamp<std::size_t>(n / 4096, 1, 8 * threads);
}

}  // namespace

Histogram coincidence_histogram(std::span<const std::uint64_t> a,
                                std::span<const std::uint64_t> b, double bin_ps,
                                double range_ps, double center_ps, Execution exec) {
  if (!(bin_ps > 0.0)) throw std::invalid_argument("bin width must be positive");
  if (!(range_ps >= 0.0)) throw std::invalid_argument("range must be non-negative");
  require_sorted(a, "first");
  require_sorted(b, "second");

  Histogram h;
  h.center_ps = center_ps;
  h.bin_width_ps = bin_ps;
  h.range_ps = range_ps;
  h.half_bins = round_half_away(range_ps / bin_ps);
  const auto nbins = static_cast<std::size_t>(2 * h.half_bins + 1);
  h.counts.assign(nbins, 0);

  if (exec == Execution::serial) {
    histogram_range(a, b, 0, a.size(), h, h.counts);
  } else {
    const std::size_t chunks = chunk_count(a.size());
    std::vector<std::vector<std::uint64_t>> partial(chunks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t k = 0; k < chunks; ++k) {
      partial[k].assign(nbins, 0);
      histogram_range(a, b, a.size() * k / chunks, a.size() * (k + 1) / chunks, h, partial[k]);
    }
    for (const auto& p : partial)
      for (std::size_t i = 0; i < nbins; ++i) h.counts[i] += p[i];
  }
  for (auto c : h.counts) h.pairs += c;
  return h;
}

Histogram coincidence_histogram(const TagStream& a, const TagStream& b, double bin_ps,
                                double range_ps, double center_ps, Execution exec) {
  const auto ta = timestamps(a), tb = timestamps(b);
  return coincidence_histogram(ta, tb, bin_ps, range_ps, center_ps, exec);
}

std::uint64_t count_in_window(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                              double w_ps, double offset_ps, Execution exec) {
  if (!(w_ps > 0.0)) throw std::invalid_argument("window width must be positive");
  require_sorted(a, "first");
  require_sorted(b, "second");
  const double lo_off = offset_ps - 0.5 * w_ps, hi_off = offset_ps + 0.5 * w_ps;
  if (exec == Execution::serial) return window_range(a, b, 0, a.size(), lo_off, hi_off);

  const std::size_t chunks = chunk_count(a.size());
  std::uint64_t total = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : total)
  for (std::size_t k = 0; k < chunks; ++k)
    total += window_range(a, b, a.size() * k / chunks, a.size() * (k + 1) / chunks, lo_off, hi_off);
  return total;
}

std::uint64_t count_in_window(const TagStream& a, const TagStream& b, double w_ps,
                              double offset_ps, Execution exec) {
  const auto ta = timestamps(a), tb = timestamps(b);
  return count_in_window(ta, tb, w_ps, offset_ps, exec);
}

AccidentalEstimate accidental_estimate(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b, double w_ps,
                                       std::span<const double> offsets_ps) {
  if (offsets_ps.empty()) throw std::invalid_argument("no sideband offsets given");
  AccidentalEstimate est;
  std::uint64_t sum = 0;
  for (double off : offsets_ps) {
    const auto c = count_in_window(a, b, w_ps, off, Execution::serial);
    est.per_offset.push_back(c);
    sum += c;
  }
  const auto n = static_cast<double>(offsets_ps.size());
  est.counts = static_cast<double>(sum) / n;
  est.sigma = std::sqrt(static_cast<double>(sum)) / n;
  return est;
}

std::vector<std::int64_t> pair_differences(std::span<const std::uint64_t> a,
                                           std::span<const std::uint64_t> b, double range_ps,
                                           double center_ps) {
  require_sorted(a, "first");
  require_sorted(b, "second");
  std::vector<std::int64_t> out;
  std::size_t lo = 0;
  for (std::uint64_t t : a) {
    const double ta = static_cast<double>(t);
    lo = seek_ge(b, lo, ta - center_ps - range_ps);
    for (std::size_t j = lo; j < b.size() && static_cast<double>(b[j]) <= ta - center_ps + range_ps; ++j)
      out.push_back(static_cast<std::int64_t>(t) - static_cast<std::int64_t>(b[j]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

WindowPeak max_window_count(std::span<const std::int64_t> sorted_dt, double w_ps, double lo_ps,
                            double hi_ps) {
  if (!(w_ps > 0.0)) throw std::invalid_argument("window width must be positive");
  if (hi_ps < lo_ps) throw std::invalid_argument("empty search interval");
  auto count_at = [&](double x) {
    const auto first = std::lower_bound(sorted_dt.begin(), sorted_dt.end(), x - 0.5 * w_ps,
                                        [](std::int64_t v, double t) { return static_cast<double>(v) < t; });
    const auto last = std::upper_bound(sorted_dt.begin(), sorted_dt.end(), x + 0.5 * w_ps,
                                       [](double t, std::int64_t v) { return t < static_cast<double>(v); });
    return static_cast<std::uint64_t>(last - first);
  };
  WindowPeak best{count_at(lo_ps), lo_ps};
  if (const auto c = count_at(hi_ps); c > best.count) best = {c, hi_ps};
  for (std::int64_t dt : sorted_dt) {
    const double x = std::clamp(static_cast<double>(dt) + 0.5 * w_ps, lo_ps, hi_ps);
    const auto c = count_at(x);
    if (c > best.count) best = {c, x};
  }
  return best;
}

}  // namespace dnctd
