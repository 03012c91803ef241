#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace dnctd {

enum class Channel : std::uint32_t { probe = 0, reference = 1 };

/// Ground truth of a click. Never written to TagFiles.
enum class Origin : std::uint8_t { pair = 0, noise = 1, dark = 2 };

inline constexpr std::uint64_t kNoPulse = std::numeric_limits<std::uint64_t>::max();

struct TagRecord {
  std::uint64_t timestamp_ps = 0;
  Channel channel = Channel::probe;
  Origin origin = Origin::pair;
  std::uint64_t pulse = kNoPulse;  // emitting pulse index, kNoPulse for cw/dark

  friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

/// Strict weak order used for stream sorting: time first, then truth fields
/// so that equal timestamps sort deterministically.
inline bool tag_less(const TagRecord& a, const TagRecord& b) {
  if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
  if (a.channel != b.channel) return a.channel < b.channel;
  if (a.origin != b.origin) return a.origin < b.origin;
  return a.pulse < b.pulse;
}

using TagStream = std::vector<TagRecord>;

bool is_time_sorted(std::span<const TagRecord> s);
std::vector<std::uint64_t> timestamps(std::span<const TagRecord> s);
/// Records of one channel, order preserved.
TagStream select_channel(std::span<const TagRecord> s, Channel c);
/// Time-ordered merge of two sorted streams.
TagStream merge_streams(std::span<const TagRecord> a, std::span<const TagRecord> b);

}  // namespace dnctd
