#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dnctd/detection.hpp"

using namespace dnctd;
using doctest::Approx;

namespace {
// mpmath oracles
constexpr double kSigmaOf833 = 35.3742529819959931;
constexpr double kTrueStdUndispersed = 35.3742784718368;
constexpr double kTrueStdDispersed = 38.6088623704675;
constexpr double kFalseStdUndispersed = 35.7713229599306;
constexpr double kFalseStdDispersed = 1936.48840411147;
constexpr double kCapture833 = 0.760968108550488;
constexpr double kTrueCapture10Dispersed = 0.103041096645334;
constexpr double kTrueCapture10Undispersed = 0.112403103325866;
constexpr double kJitter773 = 36.2089860950877;

const double A = -gdd_from_dispersion(18, 5, 1560);

struct Advantage {
  double w, db;
};
constexpr Advantage kAdvantage[] = {{200, 13.8087033906234}, {150, 14.8598328346120},
                                    {100, 15.8937398224394}, {50, 16.6672751852639},
                                    {20, 16.9077465843084},  {10, 16.9430021744424}};

double advantage(SchemeConfig c) {
  return compare_schemes(c, -A, A, SourceModel{}, DetectorModel{})
      .improvement_db(Scheme::dnctd, Scheme::nctd);
}
}  // namespace

TEST_SUITE("detection") {
  TEST_CASE("jitter convolution") {
    CHECK(convolve_jitter({0, 0}, 83.3).stddev() == Approx(kSigmaOf833).epsilon(1e-13));
    CHECK(convolve_jitter({0, 7.73 * 7.73}, 83.3).stddev() == Approx(kJitter773).epsilon(1e-12));
    const Gaussian1D g{3.0, 11.0};
    CHECK(convolve_jitter(g, 0.0).var == g.var);
    CHECK(convolve_jitter(g, 0.0).mean == g.mean);
  }

  TEST_CASE("window capture") {
    const Gaussian1D d{0.0, kSigmaOf833 * kSigmaOf833};
    CHECK(window_capture(d, 83.3, 0.0) == Approx(kCapture833).epsilon(1e-12));
    CHECK(window_capture(d, std::numeric_limits<double>::infinity(), 0.0) == 1.0);
    CHECK(window_capture(d, 1e6, 0.0) == Approx(1.0).epsilon(1e-15));
    CHECK(window_capture(d, 1e-9, 0.0) < 1e-10);
    CHECK_THROWS_AS(window_capture(d, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(window_capture(d, -1.0, 0.0), std::invalid_argument);
    double prev = 0.0;
    for (double w = 1.0; w < 1000.0; w *= 1.3) {
      const double p = window_capture(d, w, 20.0);
      CHECK(p >= prev);
      prev = p;
    }
    // far tail keeps relative precision
    CHECK(window_capture({0.0, 1.0}, 1.0, 30.0) > 0.0);
  }

  TEST_CASE("scheme formulas") {
    CHECK(snr_ctd(1e6, 0.1, 1e5) == Approx(1.0));
    CHECK(snr_ctd(1e6, 0.1, 1e7) == Approx(0.01));
    CHECK(to_db(snr_ctd(1e6, 0.1, 1e7)) == Approx(-20.0));
    CHECK(snr_ctd(1e6, 0.1 * 7, 1e5 * 7) == Approx(snr_ctd(1e6, 0.1, 1e5)));
    CHECK(std::isinf(snr_ctd(1e6, 0.1, 0.0)));
    // as printed: (nu tau_p tau_r) / (N nu tau_r) = tau_p / N
    CHECK(snr_nctd(1e6, 0.1, 0.5, 1e5) == Approx(1e-6));
    CHECK(snr_nctd(1e6, 0.1, 1.0, 1e5) == Approx(snr_nctd(1e6, 0.1, 0.5, 1e5)));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int i = 0; i < 100; ++i) {
      const double nu = std::pow(10.0, 3 + 4 * u(rng)), tp = u(rng), tr = u(rng);
      const double n = std::pow(10.0, 2 + 6 * u(rng));
      CHECK(snr_nctd(nu, tp, tr, n) / snr_ctd(nu, tp, n) == Approx(1.0 / nu).epsilon(1e-12));
    }
  }

  TEST_CASE("normalized powers") {
    CHECK(normalized_noise_power(1e5, 1e6, 0.1) == Approx(0.0));
    CHECK(normalized_noise_power(316.227766 * 1e5, 1e6, 0.1) == Approx(25.0).epsilon(1e-8));
    CHECK(normalized_noise_power(3e5, 4e6, 0.2) == Approx(normalized_noise_power(6e5, 8e6, 0.2)));
    CHECK(normalized_probe_power(3e5, 4e6, 0.2) == -normalized_noise_power(3e5, 4e6, 0.2));
    CHECK(from_db(to_db(42.0)) == Approx(42.0));
  }

  TEST_CASE("coincidence densities") {
    const auto s = biphoton_from_principal_fwhm(0.1, 17.7);
    const DetectorModel det;
    const auto n = coincidence_densities(s, 0, 0, 0, det);
    const auto d = coincidence_densities(s, -A, A, 0, det);
    CHECK(n.true_pairs.stddev() == Approx(kTrueStdUndispersed).epsilon(1e-12));
    CHECK(d.true_pairs.stddev() == Approx(kTrueStdDispersed).epsilon(1e-12));
    CHECK(n.false_pairs.stddev() == Approx(kFalseStdUndispersed).epsilon(1e-12));
    CHECK(d.false_pairs.stddev() == Approx(kFalseStdDispersed).epsilon(1e-12));
    CHECK(window_capture(d.true_pairs, 10, 0) == Approx(kTrueCapture10Dispersed).epsilon(1e-10));
    CHECK(window_capture(n.true_pairs, 10, 0) == Approx(kTrueCapture10Undispersed).epsilon(1e-10));
    CHECK(n.true_pairs.fwhm() == Approx(83.3).epsilon(0.01));
    const auto shifted = coincidence_densities(s, -A, A, 250.0, det);
    CHECK(shifted.true_pairs.mean == 250.0);
    CHECK(shifted.false_pairs.mean == 250.0);
  }

  TEST_CASE("dispersion advantage by window") {
    SchemeConfig c;
    for (const auto& a : kAdvantage) {
      c.window_ps = a.w;
      CHECK(advantage(c) == Approx(a.db).epsilon(1e-10));
    }
    c.window_ps = 10;
    const double a10 = advantage(c);
    c.window_ps = 200;
    CHECK(a10 - advantage(c) == Approx(3.13429878381906).epsilon(1e-9));
  }

  TEST_CASE("advantage is independent of rates") {
    SchemeConfig c;
    const double ref = advantage(c);
    for (auto [nu, tp, tr, n] : {std::tuple{1e5, 0.5, 0.3, 1e3}, {5e6, 0.01, 1.0, 1e8},
                                 {2e4, 1.0, 0.05, 1e6}}) {
      c.pair_rate = nu;
      c.tau_p = tp;
      c.tau_r = tr;
      c.noise_rate = n;
      CHECK(advantage(c) == Approx(ref).epsilon(1e-12));
    }
  }

  TEST_CASE("scheme_snr at the default operating point") {
    SchemeConfig c;
    c.noise_rate = 1e7;
    const SourceModel src;
    const auto r = compare_schemes(c, -A, A, src, DetectorModel{});
    CHECK(r.ctd.snr_db == Approx(-20.0).epsilon(1e-12));
    CHECK(r.nctd.snr_db == Approx(-1.190).epsilon(1e-3));
    CHECK(r.dnctd.snr_db == Approx(12.619).epsilon(1e-3));
    CHECK(r.trial_normalization_s == Approx(1.0 / 76e6));

    // Eq. (3) with window capture: NCTD/CTD = (rep / nu) * P_true / P_false
    const auto d = coincidence_densities(src.biphoton(), 0, 0, 0, DetectorModel{});
    const double ratio = src.rep_rate / c.pair_rate * window_capture(d.true_pairs, 200, 0) /
                         window_capture(d.false_pairs, 200, 0);
    CHECK(r.nctd.snr / r.ctd.snr == Approx(ratio).epsilon(1e-12));
  }

  TEST_CASE("noise and probe power slopes") {
    SchemeConfig c;
    const SourceModel src;
    const DetectorModel det;
    const auto base = compare_schemes(c, -A, A, src, det);
    c.noise_rate *= 10.0;
    const auto more_noise = compare_schemes(c, -A, A, src, det);
    c.noise_rate /= 10.0;
    c.tau_p /= 10.0;
    const auto less_probe = compare_schemes(c, -A, A, src, det);
    for (Scheme s : {Scheme::ctd, Scheme::nctd, Scheme::dnctd}) {
      CHECK(more_noise.get(s).snr_db - base.get(s).snr_db == Approx(-10.0).epsilon(1e-9));
      CHECK(less_probe.get(s).snr_db - base.get(s).snr_db == Approx(-10.0).epsilon(1e-9));
    }
  }

  TEST_CASE("degenerate configurations") {
    const auto s = biphoton_from_principal_fwhm(0.1, 17.7);
    SchemeConfig c;
    c.scheme = Scheme::nctd;
    const auto nctd = scheme_snr(c, SourceModel{}, DetectorModel{}, s);
    c.scheme = Scheme::dnctd;
    const auto zero_gdd = scheme_snr(c, SourceModel{}, DetectorModel{}, s);
    CHECK(zero_gdd.snr == nctd.snr);
    CHECK(zero_gdd.true_rate == nctd.true_rate);

    c.noise_rate = 0.0;
    const auto inf = scheme_snr(c, SourceModel{}, DetectorModel{}, s);
    CHECK(inf.infinite);
    CHECK(std::isinf(inf.snr_db));
    CHECK_FALSE(inf.diagnostic.empty());

    c.noise_rate = 1e5;
    c.scheme = Scheme::nctd;
    c.gdd_probe = 1.0;
    CHECK_THROWS_AS(scheme_snr(c, SourceModel{}, DetectorModel{}, s), std::invalid_argument);
    c.gdd_probe = 0.0;
    c.tau_p = 1.5;
    CHECK_THROWS_AS(scheme_snr(c, SourceModel{}, DetectorModel{}, s), std::invalid_argument);
    c.tau_p = 0.1;
    c.pair_rate = 1e9;
    CHECK_THROWS_AS(scheme_snr(c, SourceModel{}, DetectorModel{}, s), std::invalid_argument);
    DetectorModel bad;
    bad.efficiency = 1.1;
    c.pair_rate = 1e6;
    CHECK_THROWS_AS(scheme_snr(c, SourceModel{}, bad, s), std::invalid_argument);
  }

  TEST_CASE("scheme names") {
    CHECK(scheme_from_string("DNCTD") == Scheme::dnctd);
    CHECK(scheme_from_string("ctd") == Scheme::ctd);
    CHECK(to_string(Scheme::nctd) == "NCTD");
    CHECK_THROWS_AS(scheme_from_string("QI"), std::invalid_argument);
    CHECK(noise_mode_from_string("cw") == NoiseMode::cw);
    CHECK_THROWS_AS(noise_mode_from_string("burst"), std::invalid_argument);
  }
}
