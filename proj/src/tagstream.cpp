#include "dnctd/tagstream.hpp"

#include <algorithm>

namespace dnctd {

bool is_time_sorted(std::span<const TagRecord> s) {
  return std::is_sorted(s.begin(), s.end(), [](const TagRecord& a, const TagRecord& b) {
    return a.timestamp_ps < b.timestamp_ps;
  });
}

std::vector<std::uint64_t> timestamps(std::span<const TagRecord> s) {
  std::vector<std::uint64_t> out(s.size());
  std::transform(s.begin(), s.end(), out.begin(), [](const TagRecord& r) { return r.timestamp_ps; });
  return out;
}

TagStream select_channel(std::span<const TagRecord> s, Channel c) {
  TagStream out;
  std::copy_if(s.begin(), s.end(), std::back_inserter(out),
               [c](const TagRecord& r) { return r.channel == c; });
  return out;
}

TagStream merge_streams(std::span<const TagRecord> a, std::span<const TagRecord> b) {
  TagStream out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out), tag_less);
  return out;
}

}  // namespace dnctd
