#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dnctd/tagfile.hpp"

using namespace dnctd;

namespace {
TagStream sample() {
  return {{5, Channel::probe}, {7, Channel::reference}, {7, Channel::probe},
          {0x0102030405060708ull, Channel::reference}};
}

std::string to_bytes(const TagStream& s) {
  std::ostringstream os(std::ios::binary);
  write_tagfile(os, s);
  return os.str();
}

std::uint64_t error_offset(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  try {
    read_tagfile(is);
  } catch (const TagFormatError& e) {
    return e.offset();
  }
  return ~std::uint64_t{0};
}
}  // namespace

TEST_SUITE("tagfile") {
  TEST_CASE("bit-exact layout") {
    const std::string b = to_bytes(sample());
    REQUIRE(b.size() == 16 + 4 * 16);
    const unsigned char header[16] = {'Q', 'T', 'A', 'G', 1, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0};
    CHECK(std::equal(header, header + 16, reinterpret_cast<const unsigned char*>(b.data())));
    const unsigned char last[16] = {8, 7, 6, 5, 4, 3, 2, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    CHECK(std::equal(last, last + 16, reinterpret_cast<const unsigned char*>(b.data()) + 64));
  }

  TEST_CASE("round trip") {
    std::mt19937_64 rng(3);
    TagStream s;
    std::uint64_t t = 0;
    for (int i = 0; i < 5000; ++i) {
      t += rng() % 1000;
      s.push_back({t, rng() % 2 ? Channel::probe : Channel::reference});
    }
    std::istringstream is(to_bytes(s), std::ios::binary);
    CHECK(read_tagfile(is) == s);

    const auto path = std::filesystem::temp_directory_path() / "dnctd_roundtrip.qtag";
    write_tagfile(path, s);
    CHECK(read_tagfile(path) == s);
    CHECK(load_tags(path) == s);

    std::ostringstream csv;
    write_tag_csv(csv, s);
    std::istringstream cin(csv.str());
    CHECK(read_tag_csv(cin) == s);
    const auto cpath = std::filesystem::temp_directory_path() / "dnctd_roundtrip.csv";
    std::ofstream(cpath) << csv.str();
    CHECK(load_tags(cpath) == s);
    std::filesystem::remove(path);
    std::filesystem::remove(cpath);

    std::istringstream empty(to_bytes({}), std::ios::binary);
    CHECK(read_tagfile(empty).empty());
  }

  TEST_CASE("truth fields are dropped from binary and optional in CSV") {
    TagStream s{{1, Channel::probe, Origin::noise, 4}, {2, Channel::reference, Origin::dark, kNoPulse}};
    std::istringstream is(to_bytes(s), std::ios::binary);
    const auto r = read_tagfile(is);
    CHECK(r[0].origin == Origin::pair);
    CHECK(r[0].pulse == kNoPulse);

    std::ostringstream plain, truth;
    write_tag_csv(plain, s);
    write_tag_csv(truth, s, true);
    CHECK(plain.str() == "timestamp_ps,channel\n1,0\n2,1\n");
    CHECK(truth.str() == "timestamp_ps,channel,origin\n1,0,noise\n2,1,dark\n");
    std::istringstream back(truth.str());
    CHECK(read_tag_csv(back)[1].origin == Origin::dark);
  }

  TEST_CASE("binary errors carry byte offsets") {
    const std::string good = to_bytes(sample());
    CHECK(error_offset("QTAX" + good.substr(4)) == 0);
    CHECK(error_offset(good.substr(0, 10)) == 10);
    std::string v = good;
    v[4] = 2;
    CHECK(error_offset(v) == 4);
    CHECK(error_offset(good.substr(0, 16 + 16 + 5)) == 37);
    std::string ch = good;
    ch[16 + 16 + 8] = 2;
    CHECK(error_offset(ch) == 40);
    std::string res = good;
    res[16 + 12] = 1;
    CHECK(error_offset(res) == 28);
    std::string uns = good;
    std::swap_ranges(uns.begin() + 16, uns.begin() + 32, uns.begin() + 64);
    CHECK(error_offset(uns) == 32);
    CHECK(error_offset(good + "x") == 80);
    std::ostringstream os(std::ios::binary);
    TagStream unsorted{{9, Channel::probe}, {3, Channel::probe}};
    CHECK_THROWS_AS(write_tagfile(os, unsorted), std::invalid_argument);
  }

  TEST_CASE("CSV errors carry line numbers") {
    auto line_of = [](const std::string& text) -> std::uint64_t {
      std::istringstream is(text);
      try {
        read_tag_csv(is);
      } catch (const TagFormatError& e) {
        return e.offset();
      }
      return 0;
    };
    CHECK(line_of("") == 1);
    CHECK(line_of("time,chan\n") == 1);
    CHECK(line_of("timestamp_ps,channel\n1,0\n2,x\n") == 3);
    CHECK(line_of("timestamp_ps,channel\n1,0\n2,5\n") == 3);
    CHECK(line_of("timestamp_ps,channel\n5,0\n2,0\n") == 3);
    CHECK(line_of("timestamp_ps,channel\n-5,0\n") == 2);
    CHECK(line_of("timestamp_ps,channel\n5\n") == 2);
    CHECK(line_of("timestamp_ps,channel,origin\n5,0,ghost\n") == 2);
    std::istringstream crlf("timestamp_ps,channel\r\n5,1\r\n");
    CHECK(read_tag_csv(crlf).size() == 1);
  }
}
