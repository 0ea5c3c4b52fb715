#include "osg/grid_oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include "osg/phase_space.hpp"

namespace osg {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// RAII in-place FFT pair on an aligned internal buffer. FFTW plan creation is
// serialized (the planner is not thread-safe); execution is reentrant.
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(plan_mutex());
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!buf_) throw std::bad_alloc();
    fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw std::runtime_error("FFT plan creation failed");
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void forward(std::vector<complexd>& v) { run(v, fwd_, 1.0); }
  void backward(std::vector<complexd>& v) { run(v, bwd_, 1.0 / n_); }

 private:
  void run(std::vector<complexd>& v, fftw_plan plan, double scale) {
    std::memcpy(buf_, v.data(), sizeof(fftw_complex) * n_);
    fftw_execute(plan);
    for (int i = 0; i < n_; ++i)
      v[static_cast<size_t>(i)] = complexd(buf_[i][0], buf_[i][1]) * scale;
  }

  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

void validate_spec(const GridSpec& s) {
  if (!(s.x_max > s.x_min)) throw std::invalid_argument("grid domain is empty");
  if (!is_pow2(s.n_points) || s.n_points < 256)
    throw std::invalid_argument("grid size must be a power of two >= 256");
  if (!(s.dt > 0.0)) throw std::invalid_argument("grid time step must be positive");
}

bool spec_equal(const GridSpec& a, const GridSpec& b) {
  return a.x_min == b.x_min && a.x_max == b.x_max && a.n_points == b.n_points;
}

double dx_of(const GridSpec& s) { return (s.x_max - s.x_min) / s.n_points; }

// Momentum of spectral bin j for a periodic domain of length L.
double p_of_bin(int j, int n, double L, double hbar) {
  const int jj = j < n / 2 ? j : j - n;
  return 2.0 * kPi * hbar * jj / L;
}

std::vector<double> potential(const PhysicalParams& pp, Region region, int n,
                              int eta, const GridSpec& spec) {
  const double s = std::sqrt(n + 1.0);
  const double dx = dx_of(spec);
  std::vector<double> v(static_cast<size_t>(spec.n_points));
  for (int j = 0; j < spec.n_points; ++j) {
    const double x = spec.x_min + j * dx;
    if (region == Region::nodal)
      v[static_cast<size_t>(j)] = eta * pp.hbar * pp.epsilon * pp.k * s * x;
    else
      v[static_cast<size_t>(j)] =
          eta * pp.hbar * pp.epsilon * s * (1.0 - pp.k * pp.k * x * x / 2.0);
  }
  return v;
}

}  // namespace

double default_dt(const PhysicalParams& pp) { return 1e-3 / pp.epsilon; }

GridWavefunction discretize(const GaussianState& g, const GridSpec& spec,
                            double hbar) {
  validate_spec(spec);
  const double sx = std::sqrt(g.var_x);
  if (g.x0 - 6.0 * sx < spec.x_min || g.x0 + 6.0 * sx > spec.x_max)
    throw std::invalid_argument("grid domain too small for the packet support");
  GridWavefunction out;
  out.spec = spec;
  out.hbar = hbar;
  out.samples.resize(static_cast<size_t>(spec.n_points));
  const double dx = dx_of(spec);
  for (int j = 0; j < spec.n_points; ++j)
    out.samples[static_cast<size_t>(j)] = evaluate(g, spec.x_min + j * dx, hbar);
  return out;
}

GridWavefunction evolve_branch(const GridWavefunction& psi, const PhysicalParams& pp,
                               Region region, int n, int eta, double tau) {
  validate_spec(psi.spec);
  if (n < 0 || n > kFockCap)
    throw std::invalid_argument("branch index n outside supported ladder");
  if (eta != 1 && eta != -1)
    throw std::invalid_argument("branch sign must be +1 or -1");
  if (!(tau >= 0.0)) throw std::invalid_argument("duration must be >= 0");
  GridWavefunction out = psi;
  if (tau == 0.0) return out;

  const int npts = psi.spec.n_points;
  const int steps = std::max(1, static_cast<int>(std::ceil(tau / psi.spec.dt - 1e-9)));
  const double h = tau / steps;
  const double L = psi.spec.x_max - psi.spec.x_min;
  const double dx = dx_of(psi.spec);

  const std::vector<double> v = potential(pp, region, n, eta, psi.spec);
  std::vector<complexd> half_v(static_cast<size_t>(npts)), full_v(static_cast<size_t>(npts)),
      kin(static_cast<size_t>(npts));
  for (int j = 0; j < npts; ++j) {
    const size_t u = static_cast<size_t>(j);
    half_v[u] = std::exp(complexd(0.0, -v[u] * h / (2.0 * psi.hbar)));
    full_v[u] = half_v[u] * half_v[u];
    const double p = p_of_bin(j, npts, L, psi.hbar);
    kin[u] = std::exp(complexd(0.0, -p * p * h / (2.0 * pp.mass * psi.hbar)));
  }

  Fft fft(npts);
  const double norm0 = grid_norm(out);
  for (size_t j = 0; j < out.samples.size(); ++j) out.samples[j] *= half_v[j];
  for (int s = 0; s < steps; ++s) {
    fft.forward(out.samples);
    for (size_t j = 0; j < out.samples.size(); ++j) out.samples[j] *= kin[j];
    fft.backward(out.samples);
    const bool last = s == steps - 1;
    for (size_t j = 0; j < out.samples.size(); ++j)
      out.samples[j] *= last ? half_v[j] : full_v[j];
  }

  if (std::abs(grid_norm(out) - norm0) > 1e-8)
    throw std::runtime_error("grid evolution lost unitarity");
  double edge_mass = 0.0;
  for (int j : {0, 1, npts - 2, npts - 1})
    edge_mass += std::norm(out.samples[static_cast<size_t>(j)]) * dx;
  if (edge_mass > 1e-10)
    throw std::runtime_error("probability mass reached the grid boundary");
  return out;
}

complexd grid_overlap(const GridWavefunction& a, const GridWavefunction& b) {
  if (!spec_equal(a.spec, b.spec))
    throw std::invalid_argument("grid overlap requires identical grids");
  complexd acc(0.0, 0.0);
  for (size_t j = 0; j < a.samples.size(); ++j)
    acc += std::conj(a.samples[j]) * b.samples[j];
  return acc * dx_of(a.spec);
}

double grid_norm(const GridWavefunction& a) {
  double acc = 0.0;
  for (const complexd& c : a.samples) acc += std::norm(c);
  return std::sqrt(acc * dx_of(a.spec));
}

GridMoments grid_moments(const GridWavefunction& a) {
  const int npts = a.spec.n_points;
  const double dx = dx_of(a.spec);
  const double L = a.spec.x_max - a.spec.x_min;
  double w = 0.0, xm = 0.0, x2 = 0.0;
  for (int j = 0; j < npts; ++j) {
    const double x = a.spec.x_min + j * dx;
    const double rho = std::norm(a.samples[static_cast<size_t>(j)]);
    w += rho;
    xm += rho * x;
    x2 += rho * x * x;
  }
  xm /= w;
  x2 /= w;

  std::vector<complexd> phi = a.samples;
  Fft fft(npts);
  fft.forward(phi);
  double wp = 0.0, pm = 0.0, p2 = 0.0;
  for (int j = 0; j < npts; ++j) {
    const double p = p_of_bin(j, npts, L, a.hbar);
    const double rho = std::norm(phi[static_cast<size_t>(j)]);
    wp += rho;
    pm += rho * p;
    p2 += rho * p * p;
  }
  pm /= wp;
  p2 /= wp;

  GridMoments m;
  m.x_mean = xm;
  m.p_mean = pm;
  m.sigma_x = std::sqrt(std::max(0.0, x2 - xm * xm));
  m.sigma_p = std::sqrt(std::max(0.0, p2 - pm * pm));
  return m;
}

GridSpec auto_grid(const PhysicalParams& pp, Region region, int n,
                   const GaussianState& g0, double tau, int n_points, double dt) {
  if (!(tau >= 0.0)) throw std::invalid_argument("duration must be >= 0");
  double lo = g0.x0 - 8.0 * std::sqrt(g0.var_x);
  double hi = g0.x0 + 8.0 * std::sqrt(g0.var_x);
  double p_max = std::abs(g0.p0) + 8.0 * std::sqrt(g0.var_p);
  double sx_min = std::sqrt(g0.var_x);
  // The closed-form moments only steer the domain choice; the boundary-mass
  // check in evolve_branch independently confirms the sizing was sufficient.
  for (int eta : {1, -1}) {
    for (int i = 1; i <= 8; ++i) {
      const GaussianState g = propagate_branch(g0, pp, region, n, eta, tau * i / 8.0);
      const double sx = std::sqrt(g.var_x);
      lo = std::min(lo, g.x0 - 8.0 * sx);
      hi = std::max(hi, g.x0 + 8.0 * sx);
      p_max = std::max(p_max, std::abs(g.p0) + 8.0 * std::sqrt(g.var_p));
      sx_min = std::min(sx_min, sx);
    }
  }
  const double pad = 0.25 * (hi - lo);
  lo -= pad;
  hi += pad;

  GridSpec spec;
  spec.x_min = lo;
  spec.x_max = hi;
  if (n_points > 0) {
    spec.n_points = n_points;
  } else {
    const double need_dx = std::min(sx_min / 8.0, kPi * pp.hbar / (1.25 * p_max));
    int npts = 256;
    while (npts < 1 << 17 && (hi - lo) / npts > need_dx) npts <<= 1;
    if ((hi - lo) / npts > need_dx)
      throw std::runtime_error("grid resolution requirement too large");
    spec.n_points = std::max(npts, 4096);
  }
  if (dt > 0.0) {
    spec.dt = dt;
  } else {
    spec.dt = default_dt(pp);
    if (region == Region::antinodal) {
      const double w = antinodal_frequency(
          pp, n, AntinodalFrequencyConvention::eigenvalue_scaled);
      spec.dt = std::min(spec.dt, 5e-5 / w);
    }
  }
  return spec;
}

void dump_csv(const GridWavefunction& a, std::ostream& os) {
  const double dx = dx_of(a.spec);
  os << "x,re_psi,im_psi\n";
  char buf[96];
  for (int j = 0; j < a.spec.n_points; ++j) {
    const double x = a.spec.x_min + j * dx;
    const complexd c = a.samples[static_cast<size_t>(j)];
    const double cols[3] = {x, c.real(), c.imag()};
    for (int k = 0; k < 3; ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, cols[k],
                                     std::chars_format::general, 17);
      (void)ec;
      os.write(buf, ptr - buf);
      os.put(k == 2 ? '\n' : ',');
    }
  }
}

}  // namespace osg
