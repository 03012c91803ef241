#include "dnctd/tagfile.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dnctd {

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'T', 'A', 'G'};

template <typename T>
void put_le(char* dst, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

template <typename T>
T get_le(const char* src) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(src[i])) << (8 * i);
  return v;
}

std::string origin_name(Origin o) { return std::string(to_string(o)); }

Origin origin_from(std::string_view s, std::uint64_t line) {
  if (s == "pair") return Origin::pair;
  if (s == "noise") return Origin::noise;
  if (s == "dark") return Origin::dark;
  throw TagFormatError("unknown origin '" + std::string(s) + "'", line);
}

template <typename T>
T parse_field(std::string_view s, std::uint64_t line, const char* what) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw TagFormatError(std::string("bad ") + what + " '" + std::string(s) + "'", line);
  return v;
}

}  // namespace

TagFormatError::TagFormatError(const std::string& what, std::uint64_t offset)
    : std::runtime_error(what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::pair: return "pair";
    case Origin::noise: return "noise";
    case Origin::dark: return "dark";
  }
  return "?";
}

void write_tagfile(std::ostream& os, std::span<const TagRecord> s) {
  if (!is_time_sorted(s)) throw std::invalid_argument("records must be time-sorted");
  char header[kTagHeaderBytes];
  std::memcpy(header, kMagic.data(), 4);
  put_le<std::uint32_t>(header + 4, kTagFileVersion);
  put_le<std::uint64_t>(header + 8, s.size());
  os.write(header, sizeof header);
  std::vector<char> buf;
  buf.reserve(std::min<std::size_t>(s.size(), 1 << 16) * kTagRecordBytes);
  for (std::size_t i = 0; i < s.size(); ++i) {
    char rec[kTagRecordBytes];
    put_le<std::uint64_t>(rec, s[i].timestamp_ps);
    put_le<std::uint32_t>(rec + 8, static_cast<std::uint32_t>(s[i].channel));
    put_le<std::uint32_t>(rec + 12, 0);
    buf.insert(buf.end(), rec, rec + kTagRecordBytes);
    if (buf.size() >= (1 << 20)) {
      os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("failed writing tag file");
}

void write_tagfile(const std::filesystem::path& path, std::span<const TagRecord> s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tagfile(os, s);
}

TagStream read_tagfile(std::istream& is) {
  char header[kTagHeaderBytes];
  is.read(header, sizeof header);
  if (is.gcount() < 4 || std::memcmp(header, kMagic.data(), 4) != 0)
    throw TagFormatError("bad magic", 0);
  if (is.gcount() < static_cast<std::streamsize>(kTagHeaderBytes))
    throw TagFormatError("truncated header", static_cast<std::uint64_t>(is.gcount()));
  const auto version = get_le<std::uint32_t>(header + 4);
  if (version != kTagFileVersion)
    throw TagFormatError("unsupported version " + std::to_string(version), 4);
  const auto count = get_le<std::uint64_t>(header + 8);

  TagStream out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1 << 24)));
  std::uint64_t offset = kTagHeaderBytes;
  std::uint64_t prev = 0;
  char rec[kTagRecordBytes];
  for (std::uint64_t i = 0; i < count; ++i, offset += kTagRecordBytes) {
    is.read(rec, sizeof rec);
    if (is.gcount() != static_cast<std::streamsize>(kTagRecordBytes))
      throw TagFormatError("truncated record " + std::to_string(i),
                           offset + static_cast<std::uint64_t>(is.gcount()));
    TagRecord r;
    r.timestamp_ps = get_le<std::uint64_t>(rec);
    const auto ch = get_le<std::uint32_t>(rec + 8);
    if (ch > 1) throw TagFormatError("invalid channel " + std::to_string(ch), offset + 8);
    if (get_le<std::uint32_t>(rec + 12) != 0) throw TagFormatError("reserved field not zero", offset + 12);
    if (r.timestamp_ps < prev) throw TagFormatError("records not sorted by timestamp", offset);
    prev = r.timestamp_ps;
    r.channel = static_cast<Channel>(ch);
    out.push_back(r);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw TagFormatError("trailing bytes", offset);
  return out;
}

TagStream read_tagfile(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_tagfile(is);
}

void write_tag_csv(std::ostream& os, std::span<const TagRecord> s, bool with_truth) {
  os << (with_truth ? "timestamp_ps,channel,origin\n" : "timestamp_ps,channel\n");
  for (const auto& r : s) {
    os << r.timestamp_ps << ',' << static_cast<std::uint32_t>(r.channel);
    if (with_truth) os << ',' << origin_name(r.origin);
    os << '\n';
  }
}

TagStream read_tag_csv(std::istream& is) {
  std::string line;
  std::uint64_t lineno = 1;
  if (!std::getline(is, line)) throw TagFormatError("empty CSV", lineno);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool truth = false;
  if (line == "timestamp_ps,channel,origin") truth = true;
  else if (line != "timestamp_ps,channel") throw TagFormatError("bad CSV header", lineno);

  TagStream out;
  std::uint64_t prev = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view v(line);
    const auto c1 = v.find(',');
    if (c1 == std::string_view::npos) throw TagFormatError("missing channel", lineno);
    TagRecord r;
    r.timestamp_ps = parse_field<std::uint64_t>(v.substr(0, c1), lineno, "timestamp");
    auto rest = v.substr(c1 + 1);
    const auto c2 = rest.find(',');
    if (truth != (c2 != std::string_view::npos)) throw TagFormatError("wrong column count", lineno);
    const auto ch = parse_field<std::uint32_t>(rest.substr(0, c2), lineno, "channel");
    if (ch > 1) throw TagFormatError("invalid channel " + std::to_string(ch), lineno);
    r.channel = static_cast<Channel>(ch);
    if (truth) r.origin = origin_from(rest.substr(c2 + 1), lineno);
    if (r.timestamp_ps < prev) throw TagFormatError("records not sorted by timestamp", lineno);
    prev = r.timestamp_ps;
    out.push_back(r);
  }
  return out;
}

TagStream load_tags(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char head[4] = {};
  is.read(head, 4);
  is.clear();
  is.seekg(0);
  if (std::memcmp(head, kMagic.data(), 4) == 0) return read_tagfile(is);
  return read_tag_csv(is);
}

}  // namespace dnctd
