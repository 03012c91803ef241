#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dnctd/montecarlo.hpp"
#include "dnctd/tagcount.hpp"

using namespace dnctd;
using doctest::Approx;

namespace {
std::vector<std::uint64_t> random_stream(std::mt19937_64& rng, std::size_t n, std::uint64_t span) {
  std::uniform_int_distribution<std::uint64_t> u(0, span);
  std::vector<std::uint64_t> s(n);
  for (auto& t : s) t = u(rng);
  std::sort(s.begin(), s.end());
  return s;
}

std::int64_t round_away(double x) {
  return x >= 0 ? static_cast<std::int64_t>(std::floor(x + 0.5))
                : -static_cast<std::int64_t>(std::floor(-x + 0.5));
}

std::vector<std::uint64_t> brute_histogram(const std::vector<std::uint64_t>& a,
                                           const std::vector<std::uint64_t>& b, double bin,
                                           double range, double center) {
  const std::int64_t half = round_away(range / bin);
  std::vector<std::uint64_t> h(static_cast<std::size_t>(2 * half + 1), 0);
  for (auto x : a)
    for (auto y : b) {
      const double off = static_cast<double>(static_cast<std::int64_t>(x) - static_cast<std::int64_t>(y)) - center;
      if (std::abs(off) <= range) ++h[static_cast<std::size_t>(round_away(off / bin) + half)];
    }
  return h;
}

std::uint64_t brute_window(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                           double w, double offset) {
  std::uint64_t n = 0;
  for (auto x : a)
    for (auto y : b) {
      const double dt = static_cast<double>(static_cast<std::int64_t>(x) - static_cast<std::int64_t>(y));
      if (dt >= offset - w / 2 && dt <= offset + w / 2) ++n;
    }
  return n;
}
}  // namespace

TEST_SUITE("tagcount") {
  TEST_CASE("single pair") {
    const std::vector<std::uint64_t> a{0}, b{10};
    const auto h = coincidence_histogram(a, b, 1.0, 100.0);
    CHECK(h.pairs == 1);
    REQUIRE(h.counts.size() == 201);
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      if (h.counts[i]) CHECK(h.bin_center(i) == -10.0);
    CHECK(count_in_window(a, b, 20.0, -10.0) == 1);
    CHECK(count_in_window(a, b, 19.0, 0.0) == 0);
    CHECK(count_in_window(a, b, 20.0, 0.0) == 1);  // closed window edge
  }

  TEST_CASE("brute-force equivalence") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t na = 1 + static_cast<std::size_t>(u(rng) * 1000);
      const std::size_t nb = 1 + static_cast<std::size_t>(u(rng) * 1000);
      const std::uint64_t span = 1000 + static_cast<std::uint64_t>(u(rng) * 200000);
      const auto a = random_stream(rng, na, span), b = random_stream(rng, nb, span);
      const double bin = trial % 3 == 0 ? 1.0 : 0.5 + 10.0 * u(rng);
      const double range = 50.0 + 2000.0 * u(rng);
      const double center = trial % 2 ? 0.0 : std::round(400.0 * (u(rng) - 0.5));
      const auto ref = brute_histogram(a, b, bin, range, center);
      for (auto ex : {Execution::serial, Execution::parallel}) {
        const auto h = coincidence_histogram(a, b, bin, range, center, ex);
        REQUIRE(h.counts == ref);
      }
      const double w = 1.0 + 500.0 * u(rng), off = std::round(200.0 * (u(rng) - 0.5));
      const auto bw = brute_window(a, b, w, off);
      CHECK(count_in_window(a, b, w, off, Execution::serial) == bw);
      CHECK(count_in_window(a, b, w, off, Execution::parallel) == bw);
    }
  }

  TEST_CASE("mirror symmetry") {
    std::mt19937_64 rng(5);
    const auto a = random_stream(rng, 3000, 1000000), b = random_stream(rng, 2500, 1000000);
    for (double bin : {1.0, 3.0, 2.5}) {
      auto ab = coincidence_histogram(a, b, bin, 5000.0);
      const auto ba = coincidence_histogram(b, a, bin, 5000.0);
      std::reverse(ab.counts.begin(), ab.counts.end());
      CHECK(ab.counts == ba.counts);
    }
  }

  TEST_CASE("window integrates the histogram") {
    std::mt19937_64 rng(6);
    const auto a = random_stream(rng, 5000, 2000000), b = random_stream(rng, 5000, 2000000);
    const auto h = coincidence_histogram(a, b, 1.0, 5000.0);
    CHECK(count_in_window(a, b, 10000.0, 0.0) == h.pairs);
    std::uint64_t inner = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      if (std::abs(h.bin_center(i) - 30.0) <= 50.0) inner += h.counts[i];
    CHECK(count_in_window(a, b, 100.0, 30.0) == inner);
  }

  TEST_CASE("serial and parallel agree on a large run") {
    std::mt19937_64 rng(7);
    const auto a = random_stream(rng, 400000, 4000000000ull), b = random_stream(rng, 300000, 4000000000ull);
    const auto hs = coincidence_histogram(a, b, 1.0, 5000.0, 0.0, Execution::serial);
    const auto hp = coincidence_histogram(a, b, 1.0, 5000.0, 0.0, Execution::parallel);
    CHECK(hs.counts == hp.counts);
    CHECK(count_in_window(a, b, 200.0, 0.0, Execution::serial) ==
          count_in_window(a, b, 200.0, 0.0, Execution::parallel));
  }

  TEST_CASE("empty and invalid input") {
    const std::vector<std::uint64_t> e, a{1, 2, 3}, bad{3, 1};
    CHECK(count_in_window(e, a, 10.0, 0.0) == 0);
    CHECK(count_in_window(a, e, 10.0, 0.0) == 0);
    CHECK(coincidence_histogram(e, e, 1.0, 10.0).pairs == 0);
    CHECK_THROWS_AS(count_in_window(bad, a, 10.0, 0.0), UnsortedStreamError);
    CHECK_THROWS_AS(coincidence_histogram(a, bad, 1.0, 10.0), UnsortedStreamError);
    CHECK_THROWS_AS(count_in_window(a, a, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(coincidence_histogram(a, a, 0.0, 10.0), std::invalid_argument);
  }

  TEST_CASE("pair differences and window peak") {
    const std::vector<std::uint64_t> a{100, 200, 300}, b{90, 210};
    const auto d = pair_differences(a, b, 120.0);
    CHECK(d == std::vector<std::int64_t>{-110, -10, 10, 90, 110});
    const auto p = max_window_count(d, 25.0, -200.0, 200.0);
    CHECK(p.count == 2);
    CHECK(p.center_ps >= -2.5);
    CHECK(p.center_ps <= 2.5);
    CHECK(max_window_count({}, 10.0, 0.0, 1.0).count == 0);
    CHECK_THROWS_AS(max_window_count(d, 10.0, 1.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("accidental estimates") {
    // cw noise against cw reference clicks: N_a N_b w T
    RunConfig c;
    c.scheme.scheme = Scheme::nctd;
    c.scheme.pair_rate = 0.0;
    c.scheme.noise_rate = 2e5;
    c.scheme.noise_mode = NoiseMode::cw;
    c.detector.dark_rate_cps = 1e5;  // also populates the reference channel
    const double T = 0.5;
    const auto r = simulate_run(c, T, 77);
    const auto ta = timestamps(r.probe), tb = timestamps(r.reference);
    const double offs[] = {-20000, -15000, -10000, 10000, 15000, 20000};
    const auto est = accidental_estimate(ta, tb, 1000.0, offs);
    const double expect = static_cast<double>(ta.size()) * static_cast<double>(tb.size()) * 1000.0 / (T * 1e12);
    CHECK(std::abs(est.counts - expect) < 3.0 * std::sqrt(expect / 6.0) + 3.0 * est.sigma);
    CHECK(est.per_offset.size() == 6);

    // zero noise: offsets far from the peak see nothing
    RunConfig q;
    q.scheme.scheme = Scheme::nctd;
    q.scheme.noise_rate = 0.0;
    const auto z = simulate_run(q, 0.05, 78);
    const double far[] = {-1000.0, 1000.0};
    CHECK(accidental_estimate(timestamps(z.probe), timestamps(z.reference), 200.0, far).counts == 0.0);
  }

  TEST_CASE("offset sidebands match the target-absent run") {
    const double A = -gdd_from_dispersion(18, 5, 1560);
    RunConfig c;
    c.scheme.scheme = Scheme::dnctd;
    c.scheme.gdd_probe = -A;
    c.scheme.gdd_ref = A;
    c.scheme.noise_rate = 1e7;
    c.scheme.window_ps = 200.0;
    RunConfig absent = c;
    absent.scheme.tau_p = 0.0;
    const auto run = simulate_run(c, 0.1, 91);
    const auto abs_run = simulate_run(absent, 0.1, 92);
    const double truth = static_cast<double>(
        count_in_window(abs_run.probe, abs_run.reference, 200.0, 0.0));
    // flat region of the dispersed noise peak: sample symmetric offsets
    const double offs[] = {-600, -400, 400, 600};
    const auto est = accidental_estimate(timestamps(run.probe), timestamps(run.reference), 200.0, offs);
    // sidebands sit lower on the broad Gaussian; rescale by the analytic density ratio
    const auto dens = coincidence_densities(c.source.biphoton(), -A, A, 0.0, c.detector).false_pairs;
    double side = 0.0;
    for (double o : offs) side += window_capture(dens, 200.0, o);
    const double scale = window_capture(dens, 200.0, 0.0) / (side / 4.0);
    const double scaled = est.counts * scale;
    CHECK(std::abs(scaled - truth) < 3.0 * std::sqrt(truth + est.sigma * est.sigma * scale * scale));
  }
}
