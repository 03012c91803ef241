#include "dnctd/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace dnctd {

using nlohmann::json;

namespace {

// Reads the fields of one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out, double lo = -HUGE_VAL, double hi = HUGE_VAL,
              bool open_lo = false) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (open_lo && x == lo))
      throw ConfigError(at(key), "value " + v->dump() + " out of range");
    out = x;
  }

  void integer(const std::string& key, int& out, int lo, int hi) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto x = v->get<long long>();
    if (x < lo || x > hi) throw ConfigError(at(key), "value " + v->dump() + " out of range");
    out = static_cast<int>(x);
  }

  void text(const std::string& key, std::string& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    out = v->get<std::string>();
  }

  void numbers(const std::string& key, std::vector<double>& out, double lo = -HUGE_VAL,
               bool allow_empty = false) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> xs;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      const std::string p = at(key) + "[" + std::to_string(i) + "]";
      if (!e.is_number()) throw ConfigError(p, "expected a number");
      const double x = e.get<double>();
      if (!std::isfinite(x) || x < lo) throw ConfigError(p, "value " + e.dump() + " out of range");
      xs.push_back(x);
    }
    if (xs.empty() && !allow_empty) throw ConfigError(at(key), "must not be empty");
    out = std::move(xs);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError(at(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void with_section(Section& parent, const std::string& key, Fn fn) {
  if (const json* v = parent.find(key)) {
    Section s(*v, parent.at(key));
    fn(s);
    s.finish();
  }
}

template <typename Parse>
auto parse_enum(Section& s, const std::string& key, Parse parse) -> std::optional<decltype(parse(""))> {
  const json* v = s.find(key);
  if (!v) return std::nullopt;
  if (!v->is_string()) throw ConfigError(s.at(key), "expected a string");
  try {
    return parse(v->get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.at(key), e.what());
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(path) {}

double FiberConfig::probe_gdd() const {
  // Anomalous (negative) GDD on the probe for positive D.
  return gdd_from_dispersion(dispersion_ps_nm_km, length_km, wavelength_nm);
}

AppConfig AppConfig::defaults() {
  AppConfig c;
  c.gdd_probe = c.fiber.probe_gdd();
  c.gdd_ref = -c.gdd_probe;
  c.apply_scheme(c.run.scheme.scheme);
  return c;
}

void AppConfig::apply_scheme(Scheme s) {
  run.scheme.scheme = s;
  run.scheme.gdd_probe = s == Scheme::dnctd ? gdd_probe : 0.0;
  run.scheme.gdd_ref = s == Scheme::dnctd ? gdd_ref : 0.0;
}

AppConfig config_from_json(const json& j) {
  AppConfig c = AppConfig::defaults();
  Section root(j, "");
  bool explicit_gdd = false;

  with_section(root, "source", [&](Section& s) {
    s.number("rep_rate", c.run.source.rep_rate, 0.0, HUGE_VAL, true);
    s.number("tau_minus_fwhm_ps", c.run.source.tau_minus_fwhm_ps, 0.0, HUGE_VAL, true);
    s.number("tau_plus_fwhm_ps", c.run.source.tau_plus_fwhm_ps, 0.0, HUGE_VAL, true);
  });
  with_section(root, "fiber", [&](Section& s) {
    s.number("dispersion_ps_nm_km", c.fiber.dispersion_ps_nm_km);
    s.number("length_km", c.fiber.length_km, 0.0);
    s.number("wavelength_nm", c.fiber.wavelength_nm, 0.0, HUGE_VAL, true);
  });
  with_section(root, "scheme", [&](Section& s) {
    auto& sc = c.run.scheme;
    if (auto v = parse_enum(s, "scheme", scheme_from_string)) sc.scheme = *v;
    s.number("pair_rate", sc.pair_rate, 0.0);
    s.number("tau_p", sc.tau_p, 0.0, 1.0);
    s.number("tau_r", sc.tau_r, 0.0, 1.0);
    s.number("noise_rate", sc.noise_rate, 0.0);
    if (auto v = parse_enum(s, "noise_mode", noise_mode_from_string)) sc.noise_mode = *v;
    s.number("window_ps", sc.window_ps, 0.0, HUGE_VAL, true);
    s.number("window_offset_ps", sc.window_offset_ps);
    s.number("relative_delay_ps", sc.relative_delay_ps);
    explicit_gdd = s.find("gdd_probe_ps2") || s.find("gdd_ref_ps2");
    s.number("gdd_probe_ps2", c.gdd_probe);
    s.number("gdd_ref_ps2", c.gdd_ref);
  });
  with_section(root, "detector", [&](Section& s) {
    auto& d = c.run.detector;
    s.number("jitter_fwhm_ps", d.jitter_fwhm_ps, 0.0);
    s.number("efficiency", d.efficiency, 0.0, 1.0);
    s.number("dead_time_ns", d.dead_time_ns, 0.0);
    s.number("dark_rate_cps", d.dark_rate_cps, 0.0);
    s.number("probe_jitter_share", d.probe_jitter_share, 0.0, 1.0);
  });
  with_section(root, "noise", [&](Section& s) {
    with_section(s, "wavepacket", [&](Section& w) {
      double var_t = 0.0, var_w = 0.0, cov_tw = 0.0, mean_t = 0.0;
      w.number("var_t_ps2", var_t, 0.0, HUGE_VAL, true);
      w.number("var_w", var_w, 0.0, HUGE_VAL, true);
      w.number("cov_tw", cov_tw);
      w.number("mean_t_ps", mean_t);
      if (var_t == 0.0 || var_w == 0.0) throw ConfigError(w.at("var_t_ps2"), "var_t_ps2 and var_w are required");
      Eigen::Matrix2d cov;
      cov << var_t, cov_tw, cov_tw, var_w;
      try {
        c.run.noise.wavepacket = ChronocyclicGaussian1(mean_t, 0.0, cov);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(w.at("var_t_ps2"), e.what());
      }
    });
  });
  with_section(root, "run", [&](Section& s) {
    s.number("duration_s", c.duration_s, 0.0, HUGE_VAL, true);
    s.number("ref_delay_ps", c.run.ref_delay_ps);
  });
  with_section(root, "histograms", [&](Section& s) {
    s.number("bin_ps", c.histograms.bin_ps, 0.0, HUGE_VAL, true);
    s.number("range_ps", c.histograms.range_ps, 0.0, HUGE_VAL, true);
  });
  with_section(root, "sweep", [&](Section& s) {
    s.numbers("noise_db", c.sweep.noise_db);
    s.numbers("probe_db", c.sweep.probe_db);
    s.numbers("window_ps", c.sweep.window_ps, 1e-9);
    s.numbers("pair_rate", c.sweep.pair_rate, 1e-9);
  });
  with_section(root, "scene", [&](Section& s) {
    auto& sc = c.scene;
    s.text("letters", sc.letters);
    s.numbers("depths_cm", sc.depths_cm, -HUGE_VAL, true);
    s.number("tilt_cm_per_px", sc.tilt_cm_per_px);
    s.integer("width", sc.width, 1, 4096);
    s.integer("height", sc.height, 1, 4096);
    s.number("dwell_s", sc.dwell_s, 0.0, HUGE_VAL, true);
    s.numbers("noise_db", sc.noise_db);
    s.number("pair_rate", sc.pair_rate, 0.0);
    s.number("tau_p", sc.tau_p, 0.0, 1.0);
    if (const json* v = s.find("schemes")) {
      if (!v->is_array() || v->empty()) throw ConfigError(s.at("schemes"), "expected a non-empty array");
      sc.schemes.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string p = s.at("schemes") + "[" + std::to_string(i) + "]";
        if (!(*v)[i].is_string()) throw ConfigError(p, "expected a string");
        try {
          sc.schemes.push_back(scheme_from_string((*v)[i].get<std::string>()));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(p, e.what());
        }
      }
    }
  });
  with_section(root, "saturation", [&](Section& s) {
    s.number("dead_time_ns", c.saturation.dead_time_ns, 0.0);
    s.numbers("noise_rates", c.saturation.noise_rates, 0.0);
    s.number("duration_s", c.saturation.duration_s, 0.0, HUGE_VAL, true);
  });
  root.finish();

  c.gdd_from_fiber = !explicit_gdd;
  if (c.gdd_from_fiber) {
    c.gdd_probe = c.fiber.probe_gdd();
    c.gdd_ref = -c.gdd_probe;
  }
  c.apply_scheme(c.run.scheme.scheme);
  try {
    c.run.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("<config>", e.what());
  }
  if (c.run.source.pair_probability(c.scene.pair_rate) > 1.0)
    throw ConfigError("scene.pair_rate", "exceeds one pair per pulse");
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, "cannot open config file");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("JSON parse error: ") + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const AppConfig& c) {
  const auto& r = c.run;
  json j;
  j["source"] = {{"rep_rate", r.source.rep_rate},
                 {"tau_minus_fwhm_ps", r.source.tau_minus_fwhm_ps},
                 {"tau_plus_fwhm_ps", r.source.tau_plus_fwhm_ps}};
  j["fiber"] = {{"dispersion_ps_nm_km", c.fiber.dispersion_ps_nm_km},
                {"length_km", c.fiber.length_km},
                {"wavelength_nm", c.fiber.wavelength_nm}};
  j["scheme"] = {{"scheme", std::string(to_string(r.scheme.scheme))},
                 {"pair_rate", r.scheme.pair_rate},
                 {"tau_p", r.scheme.tau_p},
                 {"tau_r", r.scheme.tau_r},
                 {"noise_rate", r.scheme.noise_rate},
                 {"noise_mode", std::string(to_string(r.scheme.noise_mode))},
                 {"window_ps", r.scheme.window_ps},
                 {"window_offset_ps", r.scheme.window_offset_ps},
                 {"relative_delay_ps", r.scheme.relative_delay_ps},
                 {"gdd_probe_ps2", c.gdd_probe},
                 {"gdd_ref_ps2", c.gdd_ref}};
  j["detector"] = {{"jitter_fwhm_ps", r.detector.jitter_fwhm_ps},
                   {"efficiency", r.detector.efficiency},
                   {"dead_time_ns", r.detector.dead_time_ns},
                   {"dark_rate_cps", r.detector.dark_rate_cps},
                   {"probe_jitter_share", r.detector.probe_jitter_share}};
  j["noise"] = json::object();
  if (r.noise.wavepacket) {
    const auto& w = *r.noise.wavepacket;
    j["noise"]["wavepacket"] = {{"var_t_ps2", w.var_t()}, {"var_w", w.var_w()},
                                {"cov_tw", w.cov_tw()}, {"mean_t_ps", w.mean_t()}};
  }
  j["run"] = {{"duration_s", c.duration_s}, {"ref_delay_ps", r.ref_delay_ps}};
  j["histograms"] = {{"bin_ps", c.histograms.bin_ps}, {"range_ps", c.histograms.range_ps}};
  j["sweep"] = {{"noise_db", c.sweep.noise_db},
                {"probe_db", c.sweep.probe_db},
                {"window_ps", c.sweep.window_ps},
                {"pair_rate", c.sweep.pair_rate}};
  json schemes = json::array();
  for (Scheme s : c.scene.schemes) schemes.push_back(std::string(to_string(s)));
  j["scene"] = {{"letters", c.scene.letters},
                {"depths_cm", c.scene.depths_cm},
                {"tilt_cm_per_px", c.scene.tilt_cm_per_px},
                {"width", c.scene.width},
                {"height", c.scene.height},
                {"dwell_s", c.scene.dwell_s},
                {"noise_db", c.scene.noise_db},
                {"pair_rate", c.scene.pair_rate},
                {"tau_p", c.scene.tau_p},
                {"schemes", schemes}};
  j["saturation"] = {{"dead_time_ns", c.saturation.dead_time_ns},
                     {"noise_rates", c.saturation.noise_rates},
                     {"duration_s", c.saturation.duration_s}};
  return j;
}

std::string config_hash(const AppConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dnctd
