#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dnctd/lidar.hpp"
#include "dnctd/stats.hpp"

using namespace dnctd;
using doctest::Approx;

namespace {
RunConfig ranging(double depth_cm) {
  RunConfig c;
  c.scheme.scheme = Scheme::nctd;
  c.scheme.pair_rate = 1e6;
  c.scheme.tau_p = 0.2;
  c.scheme.tau_r = 1.0;
  c.scheme.noise_rate = 0.0;
  c.scheme.relative_delay_ps = depth_to_delay_ps(depth_cm);
  return c;
}

DepthEstimate range_once(double depth_cm, double duration, std::uint64_t seed) {
  const auto c = ranging(depth_cm);
  const auto r = simulate_run(c, duration, seed);
  const auto h = coincidence_histogram(r.probe, r.reference, 1.0, 1500.0,
                                       std::round(c.scheme.relative_delay_ps));
  return estimate_depth(h);
}

int count_dark(const Scene& s, int x0, int x1) {
  int n = 0;
  for (int y = 0; y < s.height; ++y)
    for (int x = x0; x < x1; ++x) n += s.reflectivity[s.index(x, y)] == 0.0;
  return n;
}
}  // namespace

TEST_SUITE("lidar") {
  TEST_CASE("letter scenes") {
    const auto s = make_letter_scene("UOT", {100, 110, 120}, 0.0);
    CHECK(s.width == 64);
    CHECK(s.height == 64);
    s.validate();
    const int edges[] = {0, 21, 42, 64};
    const double depth[] = {100, 110, 120};
    for (int i = 0; i < 3; ++i) {
      CHECK(count_dark(s, edges[i], edges[i + 1]) > 50);
      for (int y = 0; y < 64; ++y)
        for (int x = edges[i]; x < edges[i + 1]; ++x) REQUIRE(s.depth_cm[s.index(x, y)] == depth[i]);
    }
    const auto mask = s.mirror_mask();
    const auto bright = std::count(mask.begin(), mask.end(), true);
    CHECK(bright > 64 * 64 / 2);
    CHECK(bright < 64 * 64);

    const auto blank = make_letter_scene("", {}, 0.0, 10, 8);
    CHECK(std::all_of(blank.reflectivity.begin(), blank.reflectivity.end(), [](double r) { return r == 1.0; }));
    CHECK(std::all_of(blank.depth_cm.begin(), blank.depth_cm.end(), [](double d) { return d == 100.0; }));

    const auto tilted = make_letter_scene("UOT", {100, 110, 120}, 0.05);
    for (int i = 0; i < 3; ++i) {
      const double first = tilted.depth_cm[tilted.index(edges[i], 10)];
      const double last = tilted.depth_cm[tilted.index(edges[i + 1] - 1, 10)];
      CHECK(first == depth[i]);
      CHECK(last - first == Approx(0.05 * (edges[i + 1] - edges[i] - 1)));
    }
    CHECK_THROWS_AS(make_letter_scene("A", {}, 0.0, 0, 10), std::invalid_argument);
    Scene bad = s;
    bad.reflectivity[3] = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("depth conversion") {
    CHECK(depth_to_delay_ps(100.0) == Approx(2.0 * 100.0 / 2.99792458e-2));
    CHECK(delay_to_depth_cm(depth_to_delay_ps(123.456)) == Approx(123.456).epsilon(1e-14));
  }

  TEST_CASE("noiseless depth is unbiased") {
    const auto d = range_once(100.0, 0.05, 1);
    REQUIRE(d.defined);
    CHECK(d.signal_counts > 5000);
    CHECK(std::abs(d.depth_cm - 100.0) < 3.0 * d.uncertainty_cm);
    CHECK(d.peak_sigma_ps == Approx(35.3743).epsilon(0.03));
  }

  TEST_CASE("uncertainty at 1000 coincidences") {
    // standard error (c/2) sigma / sqrt(N) with sigma 36.2 ps
    const double oracle = 0.5 * 2.99792458e-2 * 36.2 / std::sqrt(1000.0);
    CHECK(oracle == Approx(0.01716).epsilon(1e-3));
    // about 1000 pairs: nu tau_p tau_r T = 1e6 * 0.2 * 1 * 0.005
    const auto d = range_once(50.0, 0.005, 2);
    REQUIRE(d.defined);
    CHECK(d.signal_counts == Approx(1000).epsilon(0.1));
    CHECK(d.uncertainty_cm <= 0.09);
    CHECK(d.uncertainty_cm == Approx(0.5 * 2.99792458e-2 * 35.37 / std::sqrt(d.signal_counts)).epsilon(0.1));
  }

  TEST_CASE("resolves 0.18 cm") {
    const auto a = range_once(100.0, 0.05, 3), b = range_once(100.18, 0.05, 4);
    REQUIRE(a.defined);
    REQUIRE(b.defined);
    const double combined = std::hypot(a.uncertainty_cm, b.uncertainty_cm);
    CHECK(b.depth_cm - a.depth_cm > combined);
    CHECK(std::abs(b.depth_cm - a.depth_cm - 0.18) < 4.0 * combined);
  }

  TEST_CASE("depth linearity") {
    std::vector<double> depth, delay, err;
    for (int i = 0; i <= 6; ++i) {
      const double d = 20.0 + 40.0 * i;
      const auto e = range_once(d, 0.01, 10 + i);
      REQUIRE(e.defined);
      REQUIRE(e.signal_counts > 1000);
      depth.push_back(d);
      delay.push_back(e.delay_ps);
      err.push_back(e.peak_sigma_ps / std::sqrt(e.signal_counts));
    }
    const auto fit = linear_fit(depth, delay, err);
    CHECK(fit.slope == Approx(2.0 / 2.99792458e-2).epsilon(0.01));
  }

  TEST_CASE("no peak leaves depth undefined") {
    Histogram h;
    h.bin_width_ps = 1.0;
    h.half_bins = 1000;
    h.counts.assign(2001, 3);
    h.pairs = 3 * 2001;
    const auto d = estimate_depth(h);
    CHECK_FALSE(d.defined);
    CHECK_FALSE(d.diagnostic.empty());
    CHECK_FALSE(estimate_depth(Histogram{}).defined);
    CHECK_THROWS_AS(estimate_depth(h, 0.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("otsu and classification") {
    CHECK(otsu_threshold({0, 0, 0, 10, 10, 10}) == Approx(5.0));
    CHECK(otsu_threshold({1, 2, 3, 100, 101}) == Approx(51.5));
    const std::vector<bool> mask{false, false, true, true};
    CHECK(classification_accuracy({1, 2, 50, 60}, mask) == 1.0);
    CHECK(classification_accuracy({60, 50, 2, 1}, mask) == 0.0);
    CHECK_THROWS_AS(classification_accuracy({1, 2}, mask), std::invalid_argument);
    CHECK_THROWS_AS(otsu_threshold({}), std::invalid_argument);

    std::mt19937_64 rng(9);
    std::poisson_distribution<int> p(1000);
    std::vector<double> noise(4096);
    std::vector<bool> half(4096);
    for (std::size_t i = 0; i < noise.size(); ++i) {
      noise[i] = p(rng);
      half[i] = i % 2;
    }
    CHECK(classification_accuracy(noise, half) == Approx(0.5).epsilon(0.1));
  }

  TEST_CASE("scan determinism and execution paths") {
    auto scene = make_letter_scene("T", {80}, 0.0, 12, 12);
    scene.noise_db = 10.0;
    RunConfig base;
    base.scheme.pair_rate = 1e5;
    base.scheme.tau_p = 0.003;
    base.scheme.gdd_probe = gdd_from_dispersion(18, 5, 1560);
    base.scheme.gdd_ref = -base.scheme.gdd_probe;
    ScanOptions opt;
    opt.dwell_s = 0.05;
    for (Scheme s : {Scheme::ctd, Scheme::dnctd}) {
      const auto a = scan_scene(scene, s, base, opt, 5, Execution::parallel);
      const auto b = scan_scene(scene, s, base, opt, 5, Execution::serial);
      CHECK(a.intensity == b.intensity);
      CHECK(a.depth_cm == b.depth_cm);
      CHECK(a.scheme == s);
      CHECK(std::all_of(a.intensity.begin(), a.intensity.end(), [](double v) { return v >= 0.0; }));
      CHECK(std::all_of(a.depth_err_cm.begin(), a.depth_err_cm.end(), [](double v) { return v >= 0.0; }));
    }
    opt.dwell_s = 1e-4;
    CHECK_FALSE(scan_scene(scene, Scheme::ctd, base, opt, 5).warnings.empty());
  }

  TEST_CASE("CTD scan statistics match the singles model") {
    const int n = 16;
    Scene mirror = make_letter_scene("", {100}, 0.0, n, n);
    Scene black = mirror;
    std::fill(black.reflectivity.begin(), black.reflectivity.end(), 0.0);
    mirror.noise_db = black.noise_db = 5.0;
    RunConfig base;
    base.scheme.pair_rate = 1e5;
    base.scheme.tau_p = 0.003;
    ScanOptions opt;
    opt.dwell_s = 0.1;
    opt.estimate_depths = false;
    const auto on = scan_scene(mirror, Scheme::ctd, base, opt, 1);
    const auto off = scan_scene(black, Scheme::ctd, base, opt, 2);
    double p = 0.0, a = 0.0;
    for (double v : on.intensity) p += v;
    for (double v : off.intensity) a += v;
    const double snr = (p - a) / a;
    const double sigma = std::sqrt(p / (a * a) + p * p / (a * a * a));
    CHECK(std::abs(snr - from_db(-5.0)) < 3.0 * sigma);
  }

  TEST_CASE("CTD accuracy degrades with noise") {
    const auto scene0 = make_letter_scene("UOT", {100, 110, 120}, 0.0, 32, 32);
    const auto mask = scene0.mirror_mask();
    RunConfig base;
    base.scheme.pair_rate = 1e5;
    base.scheme.tau_p = 0.003;
    ScanOptions opt;
    opt.dwell_s = 0.05;
    opt.estimate_depths = false;
    double prev = 1.01;
    for (double db : {0.0, 10.0, 15.0, 20.0}) {
      Scene s = scene0;
      s.noise_db = db;
      const double acc = classification_accuracy(scan_scene(s, Scheme::ctd, base, opt, 3).intensity, mask);
      CHECK(acc <= prev + 0.02);
      prev = acc;
    }
    CHECK(prev < 0.8);
  }

  TEST_CASE("image writers") {
    ImageCube img;
    img.width = 2;
    img.height = 1;
    img.intensity = {0.0, 10.0};
    img.depth_cm = {0.0, 100.5};
    img.depth_err_cm = {0.0, 0.01};
    img.depth_defined = {false, true};
    std::ostringstream csv, pgm, mask;
    write_image_csv(csv, img);
    CHECK(csv.str() == "x,y,intensity,depth_cm,depth_err_cm\n0,0,0,nan,nan\n1,0,10,100.5,0.01\n");
    write_intensity_pgm(pgm, img);
    CHECK(pgm.str() == "P2\n2 1\n255\n0 255\n");
    write_mask_pgm(mask, 2, 1, {true, false});
    CHECK(mask.str() == "P2\n2 1\n255\n255 0\n");
  }
}
