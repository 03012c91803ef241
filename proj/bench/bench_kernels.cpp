#include <chrono>
#include <cstdio>
#include <functional>

#include <CLI11.hpp>
#include <omp.h>

#include "dnctd/config.hpp"
#include "dnctd/montecarlo.hpp"
#include "dnctd/tagcount.hpp"

using namespace dnctd;

namespace {

double best_of(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double items, double ts, double tp) {
  std::printf("%-16s %12.3e %10.4f %10.4f %12.3e %12.3e %7.2fx\n", name, items, ts, tp, items / ts, items / tp,
              ts / tp);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel timings"};
  double duration = 0.5, noise = 1e7;
  int reps = 3;
  app.add_option("--duration", duration, "simulated seconds")->check(CLI::PositiveNumber);
  app.add_option("--noise", noise, "noise rate (cps)")->check(CLI::NonNegativeNumber);
  app.add_option("--reps", reps, "repetitions, best time kept")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  auto cfg = AppConfig::defaults().run;
  cfg.scheme.noise_rate = noise;
  std::printf("threads %d, duration %.3g s, noise %.3g cps\n", omp_get_max_threads(), duration, noise);
  std::printf("%-16s %12s %10s %10s %12s %12s %8s\n", "kernel", "items", "serial_s", "omp_s", "serial/s",
              "omp/s", "speedup");

  RunStreams runs;
  const double t_sim_s = best_of(reps, [&] { runs = simulate_run(cfg, duration, 1, Execution::serial); });
  const double t_sim_p = best_of(reps, [&] { runs = simulate_run(cfg, duration, 1, Execution::parallel); });
  const auto a = timestamps(runs.probe), b = timestamps(runs.reference);
  const double tags = static_cast<double>(a.size() + b.size());
  row("simulate_run", tags, t_sim_s, t_sim_p);

  const double t_win_s = best_of(reps, [&] { (void)count_in_window(a, b, 200.0, 0.0, Execution::serial); });
  const double t_win_p = best_of(reps, [&] { (void)count_in_window(a, b, 200.0, 0.0, Execution::parallel); });
  row("count_in_window", tags, t_win_s, t_win_p);

  const double t_hist_s =
      best_of(reps, [&] { (void)coincidence_histogram(a, b, 1.0, 5000.0, 0.0, Execution::serial); });
  const double t_hist_p =
      best_of(reps, [&] { (void)coincidence_histogram(a, b, 1.0, 5000.0, 0.0, Execution::parallel); });
  row("histogram", tags, t_hist_s, t_hist_p);
}
