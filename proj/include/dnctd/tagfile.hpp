#pragma once

// On-disk click streams.
//
// Binary layout, little-endian:
//   "QTAG"  u32 version (=1)  u64 record count
//   records of 16 bytes: u64 timestamp (ps), u32 channel, u32 reserved (=0)
// Records are sorted by timestamp. Channel 0 is the probe, 1 the reference.
//
// CSV alternative: header "timestamp_ps,channel", one record per line. An
// optional third "origin" column carries ground truth and is only written on
// request.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>

#include "dnctd/tagstream.hpp"

namespace dnctd {

inline constexpr std::uint32_t kTagFileVersion = 1;
inline constexpr std::size_t kTagHeaderBytes = 16;
inline constexpr std::size_t kTagRecordBytes = 16;

class TagFormatError : public std::runtime_error {
 public:
  TagFormatError(const std::string& what, std::uint64_t offset);
  /// Byte offset (binary) or line number (CSV) where parsing failed.
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

void write_tagfile(std::ostream& os, std::span<const TagRecord> s);
void write_tagfile(const std::filesystem::path& path, std::span<const TagRecord> s);
/// Truth fields of the result are reset (origin pair, pulse kNoPulse).
TagStream read_tagfile(std::istream& is);
TagStream read_tagfile(const std::filesystem::path& path);

void write_tag_csv(std::ostream& os, std::span<const TagRecord> s, bool with_truth = false);
TagStream read_tag_csv(std::istream& is);

/// Reads either format, chosen by the leading magic bytes.
TagStream load_tags(const std::filesystem::path& path);

std::string_view to_string(Origin o);

}  // namespace dnctd
