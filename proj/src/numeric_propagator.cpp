#include "dnctd/numeric_propagator.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <fftw3.h>

namespace dnctd {

namespace {

using cplx = std::complex<double>;

class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n)
      : data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data_) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* raw() { return data_; }
  cplx* data() { return reinterpret_cast<cplx*>(data_); }

 private:
  fftw_complex* data_;
};

class FftwPlan {
 public:
  explicit FftwPlan(fftw_plan p) : plan_(p) {
    if (!plan_) throw std::runtime_error("fftw planning failed");
  }
  ~FftwPlan() { fftw_destroy_plan(plan_); }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

std::size_t edge_width(std::size_t n) { return std::max<std::size_t>(1, n / 32); }

void check_axis(const FrequencyAxis& a, const char* name) {
  if (a.points < 8) throw std::invalid_argument(std::string(name) + ": need at least 8 points");
  if (!(a.span > 0.0)) throw std::invalid_argument(std::string(name) + ": span must be positive");
}

void check_leak(double edge, double total, const std::string& where) {
  if (!(total > 0.0)) throw AliasingError(where + ": grid holds no energy");
  if (edge > kEdgeLeakThreshold * total)
    throw AliasingError(where + ": edge energy fraction " + std::to_string(edge / total) +
                        " exceeds threshold");
}

// Pure, unchirped joint spectral amplitude in (w_probe, w_ref) including the
// mean-time and dispersion phases.
class JointAmplitude {
 public:
  JointAmplitude(const ChronocyclicGaussian2& state, double gdd_probe, double gdd_ref)
      : gdd_p_(gdd_probe), gdd_r_(gdd_ref) {
    if (!state.is_pure(1e-6) || !state.is_unchirped(1e-12 * state.cov().cwiseAbs().maxCoeff()))
      throw std::invalid_argument("numeric propagation requires a pure unchirped state");
    const int p = state.probe_slot(), r = state.reference_slot();
    Eigen::Matrix2d sw;
    sw << state.cov()(2 + p, 2 + p), state.cov()(2 + p, 2 + r), state.cov()(2 + r, 2 + p),
        state.cov()(2 + r, 2 + r);
    precision_ = sw.inverse();
    mean_w_ << state.mean()(2 + p), state.mean()(2 + r);
    mean_t_ << state.mean()(p), state.mean()(r);
  }

  const Eigen::Vector2d& mean_w() const { return mean_w_; }

  cplx operator()(double wp, double wr) const {
    const Eigen::Vector2d d(wp - mean_w_(0), wr - mean_w_(1));
    const double mag = std::exp(-0.25 * d.dot(precision_ * d));
    const double phase =
        wp * mean_t_(0) + wr * mean_t_(1) + 0.5 * (gdd_p_ * wp * wp + gdd_r_ * wr * wr);
    return std::polar(mag, phase);
  }

 private:
  double gdd_p_, gdd_r_;
  Eigen::Matrix2d precision_;
  Eigen::Vector2d mean_w_, mean_t_;
};

// Density of u where (w_p, w_r) = map(w_u, w_v). FFT along w_u, quadrature
// along w_v.
template <class Map>
SampledDensity1D slice_density(const JointAmplitude& amp, double mean_u, double mean_v,
                               const FrequencyAxis& u_axis, const FrequencyAxis& v_axis,
                               Map map) {
  check_axis(u_axis, "transform axis");
  check_axis(v_axis, "quadrature axis");
  const std::size_t n = u_axis.points;
  const double dw = u_axis.span / static_cast<double>(n);
  const double dt = 2.0 * std::numbers::pi / u_axis.span;
  const double t0 = u_axis.time_center - dt * static_cast<double>(n / 2);
  const double w0 = mean_u - 0.5 * u_axis.span;
  const double dv = v_axis.span / static_cast<double>(v_axis.points);
  const double v0 = mean_v - 0.5 * v_axis.span + 0.5 * dv;

  FftwBuffer buf(n);
  FftwPlan plan(fftw_plan_dft_1d(static_cast<int>(n), buf.raw(), buf.raw(), FFTW_FORWARD,
                                 FFTW_ESTIMATE));

  std::vector<double> acc(n, 0.0);
  const std::size_t eu = edge_width(n), ev = edge_width(v_axis.points);
  double spec_total = 0.0, spec_edge_u = 0.0, spec_edge_v = 0.0;

  for (std::size_t m = 0; m < v_axis.points; ++m) {
    const double wv = v0 + dv * static_cast<double>(m);
    const bool v_edge = m < ev || m >= v_axis.points - ev;
    cplx* x = buf.data();
    for (std::size_t k = 0; k < n; ++k) {
      const double wu = w0 + dw * static_cast<double>(k);
      const auto [wp, wr] = map(wu, wv);
      const cplx a = amp(wp, wr);
      const double e = std::norm(a);
      spec_total += e;
      if (k < eu || k >= n - eu) spec_edge_u += e;
      if (v_edge) spec_edge_v += e;
      x[k] = a * std::polar(1.0, -wu * t0);
    }
    plan.execute();
    for (std::size_t k = 0; k < n; ++k) acc[k] += std::norm(x[k]);
  }
  check_leak(spec_edge_u, spec_total, "spectral grid (transform axis)");
  check_leak(spec_edge_v, spec_total, "spectral grid (quadrature axis)");

  double total = 0.0, edge = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += acc[k];
    if (k < eu || k >= n - eu) edge += acc[k];
  }
  check_leak(edge, total, "time grid");

  SampledDensity1D out;
  out.t0 = t0;
  out.dt = dt;
  out.p.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.p[k] = acc[k] / total;
  return out;
}

}  // namespace

Gaussian1D SampledDensity1D::moments() const {
  double m1 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) m1 += p[k] * time(k);
  double m2 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) m2 += p[k] * std::pow(time(k) - m1, 2);
  return {m1, m2};
}

Eigen::Vector2d SampledDensity2D::mean() const {
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n_probe; ++i)
    for (std::size_t j = 0; j < n_ref; ++j) {
      const double w = p[i * n_ref + j];
      m(0) += w * (t0_probe + dt_probe * static_cast<double>(i));
      m(1) += w * (t0_ref + dt_ref * static_cast<double>(j));
    }
  return m;
}

Eigen::Matrix2d SampledDensity2D::cov() const {
  const Eigen::Vector2d m = mean();
  Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < n_probe; ++i)
    for (std::size_t j = 0; j < n_ref; ++j) {
      const double w = p[i * n_ref + j];
      const Eigen::Vector2d d(t0_probe + dt_probe * static_cast<double>(i) - m(0),
                              t0_ref + dt_ref * static_cast<double>(j) - m(1));
      c += w * d * d.transpose();
    }
  return c;
}

Gaussian1D SampledDensity2D::difference() const {
  const Eigen::Vector2d m = mean();
  const Eigen::Matrix2d c = cov();
  return {m(0) - m(1), c(0, 0) + c(1, 1) - 2.0 * c(0, 1)};
}

SampledDensity2D numeric_propagate(const ChronocyclicGaussian2& state,
                                   const FrequencyAxis& probe_axis,
                                   const FrequencyAxis& ref_axis, double gdd_probe,
                                   double gdd_ref) {
  check_axis(probe_axis, "probe axis");
  check_axis(ref_axis, "reference axis");
  const JointAmplitude amp(state, gdd_probe, gdd_ref);
  const std::size_t np = probe_axis.points, nr = ref_axis.points;

  SampledDensity2D out;
  out.n_probe = np;
  out.n_ref = nr;
  out.dt_probe = 2.0 * std::numbers::pi / probe_axis.span;
  out.dt_ref = 2.0 * std::numbers::pi / ref_axis.span;
  out.t0_probe = probe_axis.time_center - out.dt_probe * static_cast<double>(np / 2);
  out.t0_ref = ref_axis.time_center - out.dt_ref * static_cast<double>(nr / 2);
  const double dwp = probe_axis.span / static_cast<double>(np);
  const double dwr = ref_axis.span / static_cast<double>(nr);
  const double wp0 = amp.mean_w()(0) - 0.5 * probe_axis.span;
  const double wr0 = amp.mean_w()(1) - 0.5 * ref_axis.span;

  FftwBuffer buf(np * nr);
  FftwPlan plan(fftw_plan_dft_2d(static_cast<int>(np), static_cast<int>(nr), buf.raw(),
                                 buf.raw(), FFTW_FORWARD, FFTW_ESTIMATE));
  const std::size_t ep = edge_width(np), er = edge_width(nr);
  double spec_total = 0.0, spec_edge = 0.0;
  cplx* x = buf.data();
  for (std::size_t i = 0; i < np; ++i) {
    const double wp = wp0 + dwp * static_cast<double>(i);
    for (std::size_t j = 0; j < nr; ++j) {
      const double wr = wr0 + dwr * static_cast<double>(j);
      const cplx a = amp(wp, wr);
      const double e = std::norm(a);
      spec_total += e;
      if (i < ep || i >= np - ep || j < er || j >= nr - er) spec_edge += e;
      x[i * nr + j] = a * std::polar(1.0, -(wp * out.t0_probe + wr * out.t0_ref));
    }
  }
  check_leak(spec_edge, spec_total, "spectral grid");
  plan.execute();

  out.p.resize(np * nr);
  double total = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < nr; ++j) {
      const double e = std::norm(x[i * nr + j]);
      out.p[i * nr + j] = e;
      total += e;
      if (i < ep || i >= np - ep || j < er || j >= nr - er) edge += e;
    }
  check_leak(edge, total, "time grid");
  for (double& v : out.p) v /= total;
  return out;
}

SampledDensity1D numeric_difference_density(const ChronocyclicGaussian2& state,
                                            const FrequencyAxis& difference_axis,
                                            const FrequencyAxis& sum_axis, double gdd_probe,
                                            double gdd_ref) {
  const JointAmplitude amp(state, gdd_probe, gdd_ref);
  const double mp = amp.mean_w()(0), mr = amp.mean_w()(1);
  // w_p t_p + w_r t_r = wu (t_p - t_r) + wv (t_p + t_r)
  return slice_density(amp, 0.5 * (mp - mr), 0.5 * (mp + mr), difference_axis, sum_axis,
                       [](double wu, double wv) { return std::pair{wu + wv, wv - wu}; });
}

SampledDensity1D numeric_marginal_density(const ChronocyclicGaussian2& state, Photon which,
                                          const FrequencyAxis& photon_axis,
                                          const FrequencyAxis& partner_axis,
                                          double gdd_probe, double gdd_ref) {
  const JointAmplitude amp(state, gdd_probe, gdd_ref);
  const double mp = amp.mean_w()(0), mr = amp.mean_w()(1);
  if (which == Photon::probe)
    return slice_density(amp, mp, mr, photon_axis, partner_axis,
                         [](double wu, double wv) { return std::pair{wu, wv}; });
  return slice_density(amp, mr, mp, photon_axis, partner_axis,
                       [](double wu, double wv) { return std::pair{wv, wu}; });
}

SampledDensity1D numeric_propagate_single(const ChronocyclicGaussian1& wp,
                                          const FrequencyAxis& axis, double gdd) {
  if (!wp.is_pure(1e-6) || std::abs(wp.cov_tw()) > 1e-12 * wp.cov().cwiseAbs().maxCoeff())
    throw std::invalid_argument("numeric propagation requires a pure unchirped wavepacket");
  check_axis(axis, "axis");
  const std::size_t n = axis.points;
  const double dw = axis.span / static_cast<double>(n);
  const double dt = 2.0 * std::numbers::pi / axis.span;
  const double t0 = axis.time_center - dt * static_cast<double>(n / 2);
  const double w0 = wp.mean_w() - 0.5 * axis.span;

  FftwBuffer buf(n);
  FftwPlan plan(
      fftw_plan_dft_1d(static_cast<int>(n), buf.raw(), buf.raw(), FFTW_FORWARD, FFTW_ESTIMATE));
  const std::size_t e = edge_width(n);
  double spec_total = 0.0, spec_edge = 0.0;
  cplx* x = buf.data();
  for (std::size_t k = 0; k < n; ++k) {
    const double w = w0 + dw * static_cast<double>(k);
    const double d = w - wp.mean_w();
    const double mag = std::exp(-0.25 * d * d / wp.var_w());
    const double en = mag * mag;
    spec_total += en;
    if (k < e || k >= n - e) spec_edge += en;
    x[k] = std::polar(mag, w * wp.mean_t() + 0.5 * gdd * w * w - w * t0);
  }
  check_leak(spec_edge, spec_total, "spectral grid");
  plan.execute();

  SampledDensity1D out;
  out.t0 = t0;
  out.dt = dt;
  out.p.resize(n);
  double total = 0.0, edge = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out.p[k] = std::norm(x[k]);
    total += out.p[k];
    if (k < e || k >= n - e) edge += out.p[k];
  }
  check_leak(edge, total, "time grid");
  for (double& v : out.p) v /= total;
  return out;
}

}  // namespace dnctd
