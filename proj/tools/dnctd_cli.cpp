// dnctd: dispersion-compensated coincidence LiDAR simulator.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnctd/config.hpp"
#include "dnctd/detection.hpp"
#include "dnctd/lidar.hpp"
#include "dnctd/montecarlo.hpp"
#include "dnctd/stats.hpp"
#include "dnctd/tagcount.hpp"
#include "dnctd/tagfile.hpp"

#ifndef DNCTD_VERSION
#define DNCTD_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dnctd;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::string format = "csv";
  bool mc_off = false;
  double duration = 0.0;  // 0: take from config
};

struct Context {
  AppConfig cfg;
  Common opt;
  std::string command;
  std::string hash;

  double duration() const { return opt.duration > 0.0 ? opt.duration : cfg.duration_s; }

  json provenance() const {
    return {{"tool", "dnctd"}, {"version", DNCTD_VERSION}, {"command", command},
            {"config_hash", hash}, {"seed", opt.seed}};
  }

  std::string provenance_line() const {
    std::ostringstream os;
    os << "# dnctd " << DNCTD_VERSION << " command=" << command << " config_hash=" << hash
       << " seed=" << opt.seed;
    return os.str();
  }

  fs::path path(const std::string& name) const { return fs::path(opt.out_dir) / name; }
};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_json(const Context& ctx, const std::string& name, json body) {
  body["provenance"] = ctx.provenance();
  auto os = open_out(ctx.path(name));
  os << body.dump(2) << '\n';
}

/// A table written as CSV (with a provenance comment) or as JSON rows.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write(const Context& ctx, const std::string& stem) const {
    if (ctx.opt.format == "json") {
      json rs = json::array();
      for (const auto& r : rows) {
        json o;
        for (std::size_t i = 0; i < columns.size(); ++i) o[columns[i]] = jnum(r[i]);
        rs.push_back(o);
      }
      write_json(ctx, stem + ".json", {{"columns", columns}, {"rows", rs}});
      return;
    }
    auto os = open_out(ctx.path(stem + ".csv"));
    os << ctx.provenance_line() << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << num(r[i]);
      os << '\n';
    }
  }
};

double gaussian_pdf(const Gaussian1D& g, double t) {
  return std::exp(-0.5 * (t - g.mean) * (t - g.mean) / g.var) /
         std::sqrt(2.0 * std::numbers::pi * g.var);
}

// ---------------------------------------------------------------------------

void cmd_histograms(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto state = c.run.source.biphoton();
  const auto plain = coincidence_densities(state, 0.0, 0.0, 0.0, c.run.detector);
  const auto disp = coincidence_densities(state, c.gdd_probe, c.gdd_ref, 0.0, c.run.detector);
  const double bin = c.histograms.bin_ps, range = c.histograms.range_ps;
  const auto half = static_cast<long long>(std::llround(range / bin));

  Table analytic{{"dt_ps", "true_nondispersed", "true_dispersed", "false_nondispersed", "false_dispersed"}, {}};
  for (long long k = -half; k <= half; ++k) {
    const double t = static_cast<double>(k) * bin;
    analytic.rows.push_back({t, gaussian_pdf(plain.true_pairs, t), gaussian_pdf(disp.true_pairs, t),
                             gaussian_pdf(plain.false_pairs, t), gaussian_pdf(disp.false_pairs, t)});
  }
  analytic.write(ctx, "histograms_analytic");

  json summary = {
      {"true_nondispersed_fwhm_ps", plain.true_pairs.fwhm()},
      {"true_dispersed_fwhm_ps", disp.true_pairs.fwhm()},
      {"false_nondispersed_fwhm_ps", plain.false_pairs.fwhm()},
      {"false_dispersed_fwhm_ps", disp.false_pairs.fwhm()},
      {"true_broadening", disp.true_pairs.fwhm() / plain.true_pairs.fwhm()},
      {"false_broadening", disp.false_pairs.fwhm() / plain.false_pairs.fwhm()},
      {"gdd_probe_ps2", c.gdd_probe},
      {"gdd_ref_ps2", c.gdd_ref},
  };

  if (!ctx.opt.mc_off) {
    Table mc{{"dt_ps", "true_nondispersed", "true_dispersed", "false_nondispersed", "false_dispersed"}, {}};
    std::vector<std::vector<std::uint64_t>> cols;
    std::uint64_t stream = 0;
    json counts = json::object();
    for (bool dispersed : {false, true}) {
      RunConfig r = c.run;
      r.scheme.scheme = dispersed ? Scheme::dnctd : Scheme::nctd;
      r.scheme.gdd_probe = dispersed ? c.gdd_probe : 0.0;
      r.scheme.gdd_ref = dispersed ? c.gdd_ref : 0.0;
      const auto run = simulate_run(r, ctx.duration(), derive_seed(ctx.opt.seed, stream++));
      TagStream pairs, noise;
      for (const auto& t : run.probe) (t.origin == Origin::pair ? pairs : noise).push_back(t);
      const auto ht = coincidence_histogram(pairs, run.reference, bin, range);
      const auto hf = coincidence_histogram(noise, run.reference, bin, range);
      cols.push_back(ht.counts);
      cols.push_back(hf.counts);
      counts[dispersed ? "dispersed" : "nondispersed"] = {{"true_pairs", ht.pairs}, {"false_pairs", hf.pairs}};
    }
    // cols holds true_nd, false_nd, true_d, false_d.
    for (std::size_t i = 0; i < cols[0].size(); ++i)
      mc.rows.push_back({static_cast<double>(static_cast<long long>(i) - half) * bin,
                         static_cast<double>(cols[0][i]), static_cast<double>(cols[2][i]),
                         static_cast<double>(cols[1][i]), static_cast<double>(cols[3][i])});
    mc.write(ctx, "histograms_mc");
    summary["mc_counts"] = counts;
    summary["mc_duration_s"] = ctx.duration();
  }
  write_json(ctx, "histograms_summary.json", summary);
}

// ---------------------------------------------------------------------------

void cmd_sweep(const Context& ctx, const std::string& kind) {
  const auto& c = ctx.cfg;
  std::vector<double> xs;
  if (kind == "noise") xs = c.sweep.noise_db;
  else if (kind == "probe") xs = c.sweep.probe_db;
  else if (kind == "window") xs = c.sweep.window_ps;
  else if (kind == "pairrate") xs = c.sweep.pair_rate;
  else throw std::invalid_argument("unknown sweep kind '" + kind + "'");

  auto point = [&](double x) {
    SchemeConfig s = c.run.scheme;
    if (kind == "noise") s.noise_rate = from_db(x) * s.pair_rate * s.tau_p;
    if (kind == "probe") s.tau_p = from_db(x) * s.noise_rate / s.pair_rate;
    if (kind == "window") s.window_ps = x;
    if (kind == "pairrate") s.pair_rate = x;
    return s;
  };

  const Scheme schemes[] = {Scheme::ctd, Scheme::nctd, Scheme::dnctd};
  Table t{{"x", "snr_ctd_db", "snr_nctd_db", "snr_dnctd_db", "err_ctd_db", "err_nctd_db",
           "err_dnctd_db", "model_ctd_db", "model_nctd_db", "model_dnctd_db"},
          {}};
  std::vector<double> model[3], mc[3], err[3];
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const SchemeConfig base = point(xs[i]);
    const auto cmp = compare_schemes(base, c.gdd_probe, c.gdd_ref, c.run.source, c.run.detector);
    std::vector<double> row{xs[i], 0, 0, 0, NAN, NAN, NAN, 0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      const double m = cmp.get(schemes[k]).snr_db;
      model[k].push_back(m);
      row[7 + k] = m;
      row[1 + k] = m;
      if (ctx.opt.mc_off) continue;
      RunConfig r = c.run;
      r.scheme = base;
      r.scheme.scheme = schemes[k];
      r.scheme.gdd_probe = schemes[k] == Scheme::dnctd ? c.gdd_probe : 0.0;
      r.scheme.gdd_ref = schemes[k] == Scheme::dnctd ? c.gdd_ref : 0.0;
      const auto e = run_snr_experiment(r, ctx.duration(), derive_seed(ctx.opt.seed, 3 * i + k));
      row[1 + k] = e.result.snr_db;
      row[4 + k] = e.result.uncertainty_db.value_or(NAN);
      mc[k].push_back(e.result.snr_db);
      err[k].push_back(e.result.uncertainty_db.value_or(NAN));
      if (e.result.noise_floor_limited)
        notes.push_back(std::string(to_string(schemes[k])) + " at x=" + num(xs[i]) + ": " + e.result.diagnostic);
    }
    t.rows.push_back(row);
  }
  t.write(ctx, "sweep_" + kind);

  auto fit_x = [&](double x) { return kind == "pairrate" ? 10.0 * std::log10(x) : x; };
  std::vector<double> fx;
  for (double x : xs) fx.push_back(fit_x(x));
  json slopes = json::object(), mc_slopes = json::object();
  for (int k = 0; k < 3; ++k) {
    const std::string name(to_string(schemes[k]));
    if (xs.size() >= 2) slopes[name] = jnum(linear_fit(fx, model[k]).slope);
    if (!ctx.opt.mc_off && xs.size() >= 2) {
      std::vector<double> gx, gy, ge;
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::isfinite(mc[k][i]) && std::isfinite(err[k][i]) && err[k][i] > 0)
          gx.push_back(fx[i]), gy.push_back(mc[k][i]), ge.push_back(err[k][i]);
      if (gx.size() >= 2) {
        const auto f = linear_fit(gx, gy, ge);
        mc_slopes[name] = {{"slope", f.slope}, {"sigma", f.slope_sigma}};
      }
    }
  }
  auto mean_diff = [&](const std::vector<double>* v, int a, int b) {
    double s = 0;
    int n = 0;
    for (std::size_t i = 0; i < v[a].size(); ++i)
      if (std::isfinite(v[a][i]) && std::isfinite(v[b][i])) s += v[a][i] - v[b][i], ++n;
    return n ? s / n : NAN;
  };
  json summary = {
      {"kind", kind},
      {"x_axis", kind == "noise"    ? "normalized noise power (dB)"
                 : kind == "probe"  ? "normalized probe power (dB)"
                 : kind == "window" ? "coincidence window (ps)"
                                    : "pair rate (pairs/s); slopes per 10 log10(rate)"},
      {"model_slopes_db_per_unit", slopes},
      {"model_mean_improvement_db",
       {{"NCTD_over_CTD", jnum(mean_diff(model, 1, 0))},
        {"DNCTD_over_NCTD", jnum(mean_diff(model, 2, 1))},
        {"DNCTD_over_CTD", jnum(mean_diff(model, 2, 0))}}},
  };
  if (!ctx.opt.mc_off) {
    summary["mc_slopes_db_per_unit"] = mc_slopes;
    summary["mc_mean_improvement_db"] = {{"NCTD_over_CTD", jnum(mean_diff(mc, 1, 0))},
                                         {"DNCTD_over_NCTD", jnum(mean_diff(mc, 2, 1))},
                                         {"DNCTD_over_CTD", jnum(mean_diff(mc, 2, 0))}};
    summary["mc_duration_s"] = ctx.duration();
    summary["notes"] = notes;
  }
  write_json(ctx, "sweep_" + kind + "_summary.json", summary);
}

// ---------------------------------------------------------------------------

void cmd_scan(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto& sc = c.scene;
  Scene scene = make_letter_scene(sc.letters, sc.depths_cm, sc.tilt_cm_per_px, sc.width, sc.height);
  const auto mask = scene.mirror_mask();
  {
    auto os = open_out(ctx.path("scan_mask.pgm"));
    os << ctx.provenance_line() << '\n';
    write_mask_pgm(os, scene.width, scene.height, mask);
  }
  RunConfig base = c.run;
  base.scheme.pair_rate = sc.pair_rate;
  base.scheme.tau_p = sc.tau_p;
  base.scheme.gdd_probe = c.gdd_probe;
  base.scheme.gdd_ref = c.gdd_ref;
  ScanOptions opt;
  opt.dwell_s = ctx.opt.duration > 0.0 ? ctx.opt.duration : sc.dwell_s;

  json regimes = json::array();
  std::uint64_t stream = 0;
  for (double db : sc.noise_db) {
    scene.noise_db = db;
    for (Scheme s : sc.schemes) {
      const auto img = scan_scene(scene, s, base, opt, derive_seed(ctx.opt.seed, stream++));
      const std::string stem = "scan_" + std::string(to_string(s)) + "_" + num(db) + "dB";
      if (ctx.opt.format == "json") {
        json px = json::array();
        for (int y = 0; y < img.height; ++y)
          for (int x = 0; x < img.width; ++x) {
            const auto i = scene.index(x, y);
            px.push_back({{"x", x}, {"y", y}, {"intensity", img.intensity[i]},
                          {"depth_cm", img.depth_defined[i] ? jnum(img.depth_cm[i]) : json(nullptr)},
                          {"depth_err_cm", img.depth_defined[i] ? jnum(img.depth_err_cm[i]) : json(nullptr)}});
          }
        write_json(ctx, stem + ".json", {{"width", img.width}, {"height", img.height}, {"pixels", px}});
      } else {
        auto os = open_out(ctx.path(stem + ".csv"));
        os << ctx.provenance_line() << '\n';
        write_image_csv(os, img);
      }
      {
        auto os = open_out(ctx.path(stem + ".pgm"));
        os << ctx.provenance_line() << '\n';
        write_intensity_pgm(os, img);
      }
      std::size_t defined = 0;
      double err_sum = 0.0;
      for (std::size_t i = 0; i < img.depth_defined.size(); ++i)
        if (img.depth_defined[i] && mask[i]) ++defined, err_sum += img.depth_err_cm[i];
      regimes.push_back({{"scheme", std::string(to_string(s))},
                         {"noise_db", db},
                         {"accuracy", classification_accuracy(img.intensity, mask)},
                         {"mirror_pixels_with_depth", defined},
                         {"mean_depth_err_cm", defined ? jnum(err_sum / defined) : json(nullptr)},
                         {"warnings", img.warnings},
                         {"file", stem}});
    }
  }
  write_json(ctx, "scan_summary.json",
             {{"width", scene.width}, {"height", scene.height}, {"dwell_s", opt.dwell_s}, {"regimes", regimes}});
}

// ---------------------------------------------------------------------------

struct CountOptions {
  std::vector<std::string> files;
  double window = 200.0, offset = 0.0;
  double bin = kDefaultBinPs, range = kDefaultRangePs;
};

void cmd_count(const Context& ctx, const CountOptions& o) {
  if (o.files.empty() || o.files.size() > 2) throw std::invalid_argument("count takes one or two tag files");
  TagStream a, b;
  if (o.files.size() == 1) {
    const auto all = load_tags(o.files[0]);
    a = select_channel(all, Channel::probe);
    b = select_channel(all, Channel::reference);
  } else {
    a = load_tags(o.files[0]);
    b = load_tags(o.files[1]);
  }
  const auto ta = timestamps(a), tb = timestamps(b);
  const auto h = coincidence_histogram(ta, tb, o.bin, o.range);
  const auto n = count_in_window(ta, tb, o.window, o.offset);
  Table t{{"dt_ps", "count"}, {}};
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    t.rows.push_back({h.bin_center(i), static_cast<double>(h.counts[i])});
  t.write(ctx, "count_histogram");
  write_json(ctx, "count_summary.json",
             {{"clicks_a", a.size()}, {"clicks_b", b.size()}, {"window_ps", o.window},
              {"offset_ps", o.offset}, {"window_count", n}, {"histogram_pairs", h.pairs},
              {"bin_ps", o.bin}, {"range_ps", o.range}});
}

// ---------------------------------------------------------------------------

void cmd_simulate(const Context& ctx, bool truth, const std::string& name) {
  auto run = simulate_run(ctx.cfg.run, ctx.duration(), ctx.opt.seed);
  if (ctx.cfg.run.detector.dead_time_ns > 0.0) {
    run.probe = apply_dead_time(run.probe, ctx.cfg.run.detector.dead_time_ns);
    run.reference = apply_dead_time(run.reference, ctx.cfg.run.detector.dead_time_ns);
  }
  const auto all = merge_streams(run.probe, run.reference);
  if (ctx.opt.format == "csv") {
    auto os = open_out(ctx.path(name + ".csv"));
    write_tag_csv(os, all, truth);
  } else {
    auto os = open_out(ctx.path(name + ".qtag"), true);
    write_tagfile(os, all);
  }
  write_json(ctx, name + "_summary.json",
             {{"pulses", run.pulses}, {"probe_clicks", run.probe.size()},
              {"reference_clicks", run.reference.size()}, {"duration_s", ctx.duration()},
              {"warnings", ctx.cfg.run.warnings()}});
}

void cmd_saturation(const Context& ctx) {
  const auto& s = ctx.cfg.saturation;
  const double duration = ctx.opt.duration > 0.0 ? ctx.opt.duration : s.duration_s;
  const auto rep = saturation_scan(ctx.cfg.run, s.noise_rates, s.dead_time_ns, duration, ctx.opt.seed);
  Table t{{"mode_pulsed", "offered_rate", "accepted_rate", "analytic_rate", "compression_db"}, {}};
  for (const auto& r : rep.rows)
    t.rows.push_back({r.mode == NoiseMode::pulsed ? 1.0 : 0.0, r.offered_rate, r.accepted_rate,
                      r.analytic_rate, r.compression_db});
  t.write(ctx, "saturation");
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  write_json(ctx, "saturation_summary.json",
             {{"dead_time_ns", rep.dead_time_ns},
              {"onset_cw", opt(rep.onset_cw)},
              {"onset_pulsed", opt(rep.onset_pulsed)},
              {"analytic_onset_cw", opt(rep.analytic_onset_cw)},
              {"analytic_onset_pulsed", opt(rep.analytic_onset_pulsed)}});
}

void error_json(const std::string& type, const std::string& message, json extra = json::object()) {
  extra["type"] = type;
  extra["message"] = message;
  std::cerr << json{{"error", extra}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dispersion-compensated coincidence LiDAR simulator", "dnctd"};
  app.set_version_flag("--version", DNCTD_VERSION);
  app.require_subcommand(1);

  Common opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON configuration file");
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    sub->add_option("--format", opt.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_flag("--mc-off", opt.mc_off, "Analytic results only");
    sub->add_option("--duration", opt.duration, "Simulated time per run in seconds (scan: dwell per pixel)")
        ->check(CLI::PositiveNumber);
  };

  auto* hist = app.add_subcommand("histograms", "Analytic and simulated coincidence densities");
  add_common(hist);
  std::string kind;
  auto* sweep = app.add_subcommand("sweep", "SNR of all schemes across a parameter sweep");
  add_common(sweep);
  sweep->add_option("kind", kind, "noise | probe | window | pairrate")
      ->required()
      ->check(CLI::IsMember({"noise", "probe", "window", "pairrate"}));
  auto* scan = app.add_subcommand("scan", "Raster-scan imaging of the letter scene");
  add_common(scan);
  CountOptions copt;
  auto* count = app.add_subcommand("count", "Coincidence analysis of stored tag files");
  add_common(count);
  count->add_option("files", copt.files, "One file with both channels, or probe and reference files")->required();
  count->add_option("--window", copt.window, "Coincidence window (ps)")->capture_default_str();
  count->add_option("--offset", copt.offset, "Window center (ps)")->capture_default_str();
  count->add_option("--bin", copt.bin, "Histogram bin width (ps)")->capture_default_str();
  count->add_option("--range", copt.range, "Histogram half range (ps)")->capture_default_str();
  bool truth = false;
  std::string name = "tags";
  auto* sim = app.add_subcommand("simulate", "Write a simulated tag stream (binary TagFile by default)");
  add_common(sim);
  sim->add_flag("--truth", truth, "Add the ground-truth origin column (CSV only)");
  sim->add_option("--name", name, "Output file stem")->capture_default_str();
  auto* sat = app.add_subcommand("saturation", "Dead-time compression of pulsed and cw noise");
  add_common(sat);
  auto* cfgcmd = app.add_subcommand("config", "Print the effective configuration");
  add_common(cfgcmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_json("usage", e.what());
    return 64;
  }

  try {
    Context ctx;
    ctx.opt = opt;
    ctx.cfg = opt.config_path.empty() ? AppConfig::defaults() : load_config(opt.config_path);
    ctx.hash = config_hash(ctx.cfg);
    for (const auto* s : app.get_subcommands()) ctx.command = s->get_name();
    if (sim->parsed() && sim->count("--format") == 0) ctx.opt.format = "binary";
    if (truth && ctx.opt.format != "csv") throw std::invalid_argument("--truth requires --format csv");
    if (ctx.command != "config") fs::create_directories(ctx.opt.out_dir);

    if (ctx.command == "histograms") cmd_histograms(ctx);
    else if (ctx.command == "sweep") cmd_sweep(ctx, kind);
    else if (ctx.command == "scan") cmd_scan(ctx);
    else if (ctx.command == "count") cmd_count(ctx, copt);
    else if (ctx.command == "simulate") cmd_simulate(ctx, truth, name);
    else if (ctx.command == "saturation") cmd_saturation(ctx);
    else if (ctx.command == "config") {
      json j = config_to_json(ctx.cfg);
      j["provenance"] = ctx.provenance();
      std::cout << j.dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    error_json("config", e.what(), {{"path", e.path()}});
    return 2;
  } catch (const TagFormatError& e) {
    error_json("tagfile", e.what(), {{"offset", e.offset()}});
    return 3;
  } catch (const std::exception& e) {
    error_json("runtime", e.what());
    return 1;
  }
  return 0;
}
