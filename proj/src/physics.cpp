#include "smcal/physics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <thread>

namespace smcal {

double langevin(double xi) {
  const double a = std::abs(xi);
  if (a < 0.1) {
    // Series through x^11; the closed form loses digits to cancellation here.
    const double x2 = xi * xi;
    return xi * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 +
                                                                       x2 * (2.0 / 93555.0 + x2 * (-1382.0 / 638512875.0))))));
  }
  if (a > 40.0) return (xi > 0 ? 1.0 : -1.0) - 1.0 / xi;
  return 1.0 / std::tanh(xi) - 1.0 / xi;
}

double langevin_derivative(double xi) {
  const double a = std::abs(xi);
  if (a < 0.1) {
    const double x2 = xi * xi;
    return 1.0 / 3.0 + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 + x2 * (-1.0 / 675.0 +
                                                                  x2 * (2.0 / 10395.0 + x2 * (-15202.0 / 638512875.0)))));
  }
  if (a > 40.0) return 1.0 / (xi * xi);
  const double s = std::sinh(xi);
  return 1.0 / (xi * xi) - 1.0 / (s * s);
}

FieldSample drive_field(const ScanSequence& seq, const Vec3& r, double t) {
  const double T = seq.base_period;
  if (!(T > 0.0)) throw InvalidArgument("base period must be > 0");
  t = std::fmod(t, T);
  if (t < 0.0) t += T;
  FieldSample out;
  for (int a = 0; a < 3; ++a) {
    const double G = seq.gradient[a];
    const double A = seq.amplitude[a];
    if (A > 0.0 && G > 0.0 && std::abs(G * r[a]) > A * (1.0 + 1e-12))
      throw DomainError("position outside the drive-covered field of view");
    double h = G * r[a];
    if (A > 0.0) h -= A * std::cos(2.0 * kPi * seq.frequency(a) * t + seq.phase[a]);
    out.H[a] = h;
  }
  return out;
}

Vec3 mean_moment(const ParticleModel& pm, const FieldSample& h) {
  const double n = std::sqrt(h.H[0] * h.H[0] + h.H[1] * h.H[1] + h.H[2] * h.H[2]);
  if (n == 0.0) return {0.0, 0.0, 0.0};
  const double xi = pm.beta * n;
  // L(xi)/|H| stays finite as |H| -> 0.
  const double scale =
      xi < 1e-4 ? pm.m_sat * pm.beta * (1.0 / 3.0 - xi * xi / 45.0) : pm.m_sat * langevin(xi) / n;
  return {scale * h.H[0], scale * h.H[1], scale * h.H[2]};
}

namespace {

// Drive term A_a cos(2 pi f_a t_j + phi_a) per axis for every time sample;
// the field at r is then G r - drive.
struct DriveTable {
  std::vector<Vec3> drive;
  DriveTable(const ScanSequence& seq, double time_shift) : drive(seq.n_time_samples) {
    const std::size_t n = seq.n_time_samples;
    const double T = seq.base_period;
    Vec3 omega{};
    for (int a = 0; a < 3; ++a) omega[a] = 2.0 * kPi * seq.frequency(a);
    for (std::size_t j = 0; j < n; ++j) {
      const double t = static_cast<double>(j) * T / static_cast<double>(n) - time_shift;
      for (int a = 0; a < 3; ++a)
        drive[j][a] =
            seq.amplitude[a] > 0.0 ? seq.amplitude[a] * std::cos(omega[a] * t + seq.phase[a]) : 0.0;
    }
  }
};

inline Vec3 moment_at(const ParticleModel& pm, const Vec3& gr, const Vec3& drive) {
  FieldSample f;
  for (int a = 0; a < 3; ++a) f.H[a] = gr[a] - drive[a];
  return mean_moment(pm, f);
}

void check_grid_coverage(const ScanSequence& seq, const Grid3& grid) {
  for (int a = 0; a < seq.dims(); ++a) {
    const double reach = 2.0 * seq.amplitude[a] / seq.gradient[a];
    if (grid.fov()[a] > reach * (1.0 + 1e-12))
      throw DomainError("grid field of view exceeds the drive coverage 2A/G on axis " +
                        std::to_string(a));
  }
}

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  std::size_t n = 0;
  explicit FftwPlan(std::size_t n_) : n(n_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
  ~FftwPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

struct FftwBuffers {
  double* in;
  fftw_complex* out;
  explicit FftwBuffers(std::size_t n)
      : in(fftw_alloc_real(n)), out(fftw_alloc_complex(n / 2 + 1)) {}
  ~FftwBuffers() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;
};

}  // namespace

MomentWaveform moment_waveform(const ScanSequence& seq, const ParticleModel& pm, const Vec3& r,
                               double time_shift) {
  drive_field(seq, r, 0.0);  // FOV check
  MomentWaveform w;
  w.period = seq.base_period;
  const DriveTable table(seq, time_shift);
  const Vec3 gr{seq.gradient[0] * r[0], seq.gradient[1] * r[1], seq.gradient[2] * r[2]};
  w.samples.reserve(table.drive.size());
  for (const auto& d : table.drive) w.samples.push_back(moment_at(pm, gr, d));
  return w;
}

SystemMatrix simulate_system_matrix(const ScanSequence& seq, const ParticleModel& pm,
                                    const Grid3& grid, const std::vector<Channel>& channels,
                                    const std::vector<std::uint32_t>& k_range,
                                    const SimulationOptions& opts) {
  seq.validate();
  pm.validate();
  check_grid_coverage(seq, grid);
  const std::size_t n = seq.n_time_samples;
  for (auto k : k_range) {
    if (k > n / 2) throw AliasError("frequency index " + std::to_string(k) +
                                    " exceeds n_time_samples/2 = " + std::to_string(n / 2));
    if (k > seq.k_max)
      throw DomainError("frequency index " + std::to_string(k) + " exceeds k_max");
  }
  if (k_range.empty() || channels.empty()) return SystemMatrix(grid, {}, Provenance::simulated_numeric);

  const std::size_t nv = grid.size();
  const std::size_t nrows = channels.size() * k_range.size();
  std::vector<std::vector<double>> re(nrows, std::vector<double>(nv)),
      im(nrows, std::vector<double>(nv));

  FftwPlan plan(n);
  const double T = seq.base_period;
  const DriveTable table(seq, opts.time_shift);

  auto work = [&](std::size_t v_begin, std::size_t v_end) {
    FftwBuffers buf(n);
    std::vector<Vec3> m(n);
    for (std::size_t v = v_begin; v < v_end; ++v) {
      const Vec3 r = grid.voxel_coordinate(grid.unravel(v));
      const Vec3 gr{seq.gradient[0] * r[0], seq.gradient[1] * r[1], seq.gradient[2] * r[2]};
      for (std::size_t j = 0; j < n; ++j) m[j] = moment_at(pm, gr, table.drive[j]);
      for (std::size_t c = 0; c < channels.size(); ++c) {
        const int l = static_cast<int>(channels[c]);
        for (std::size_t j = 0; j < n; ++j) buf.in[j] = m[j][l];
        fftw_execute_dft_r2c(plan.plan, buf.in, buf.out);
        for (std::size_t q = 0; q < k_range.size(); ++q) {
          const std::uint32_t k = k_range[q];
          const cplx X(buf.out[k][0], buf.out[k][1]);
          // -mu0/T * (2 pi i k / T) * T * X_k / n
          const cplx val = -kMu0 * cplx(0.0, 2.0 * kPi * k / T) * X / static_cast<double>(n);
          re[c * k_range.size() + q][v] = val.real();
          im[c * k_range.size() + q][v] = val.imag();
        }
      }
    }
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, nv));
  if (threads <= 1) {
    work(0, nv);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (nv + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(nv, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<SMRow> rows;
  rows.reserve(nrows);
  for (std::size_t c = 0; c < channels.size(); ++c)
    for (std::size_t q = 0; q < k_range.size(); ++q) {
      const std::size_t i = c * k_range.size() + q;
      rows.emplace_back(channels[c], k_range[q], grid, std::move(re[i]), std::move(im[i]));
    }
  return SystemMatrix(grid, std::move(rows), Provenance::simulated_numeric);
}

SMRow simulate_row_numeric(const ScanSequence& seq, const ParticleModel& pm, const Grid3& grid,
                           Channel channel, std::uint32_t k, const SimulationOptions& opts) {
  auto sm = simulate_system_matrix(seq, pm, grid, {channel}, {k}, opts);
  return sm.row(0);
}

double chebyshev_u(int n, double x) {
  if (n < 0) return 0.0;
  double u0 = 1.0;
  if (n == 0) return u0;
  double u1 = 2.0 * x;
  for (int i = 2; i <= n; ++i) {
    const double u2 = 2.0 * x * u1 - u0;
    u0 = u1;
    u1 = u2;
  }
  return u1;
}

double chebyshev_window(std::uint32_t k, double u, double amplitude) {
  const double x = u / amplitude;
  if (std::abs(x) > 1.0) return 0.0;
  return chebyshev_u(static_cast<int>(k) - 1, x) * std::sqrt(std::max(0.0, 1.0 - x * x));
}

SMRow chebyshev_convolution_row(const ScanSequence& seq, const Grid3& grid, std::uint32_t k,
                                const std::function<double(double)>& magnetization_derivative,
                                std::size_t quadrature_points) {
  if (seq.dims() != 1) throw DomainError("closed form is defined for 1D sequences only");
  if (quadrature_points < 2) throw InvalidArgument("need at least two quadrature points");
  const double A = seq.amplitude[0];
  const double G = seq.gradient[0];
  const double T = seq.base_period;
  if (!(A > 0.0) || !(G > 0.0)) throw InvalidArgument("1D closed form needs A > 0 and G > 0");

  const double du = 2.0 * A / static_cast<double>(quadrature_points);
  std::vector<double> nodes(quadrature_points), window(quadrature_points);
  for (std::size_t j = 0; j < quadrature_points; ++j) {
    // symmetric midpoint nodes: node(j) = -node(N-1-j)
    nodes[j] = (2.0 * static_cast<double>(j) + 1.0 - static_cast<double>(quadrature_points)) *
               (du / 2.0);
    window[j] = chebyshev_window(k, nodes[j], A);
  }

  std::vector<double> re(grid.size(), 0.0), im(grid.size(), 0.0);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Vec3 r = grid.voxel_coordinate(grid.unravel(v));
    const double h = G * r[0];
    double acc = 0.0;
    for (std::size_t j = 0; j < quadrature_points; ++j)
      acc += magnetization_derivative(h - nodes[j]) * window[j];
    acc *= du;
    // -(2i/T) * acc
    im[v] = -2.0 / T * acc;
  }
  return SMRow(Channel::X, k, grid, std::move(re), std::move(im));
}

SMRow simulate_sm_1d_closed_form(const ScanSequence& seq, const ParticleModel& pm,
                                 const Grid3& grid, std::uint32_t k,
                                 std::size_t quadrature_points) {
  pm.validate();
  const double m_sat = pm.m_sat, beta = pm.beta;
  return chebyshev_convolution_row(
      seq, grid, k, [=](double h) { return m_sat * beta * langevin_derivative(beta * h); },
      quadrature_points);
}

SignalVector forward_signal(const SystemMatrix& sm, std::span<const double> c) {
  if (c.size() != sm.grid().size()) throw DomainError("concentration size does not match grid");
  const double dv = sm.grid().voxel_volume();
  std::vector<SignalEntry> out;
  out.reserve(sm.num_rows());
  for (const auto& row : sm.rows()) {
    double sr = 0.0, si = 0.0;
    const auto& re = row.re();
    const auto& im = row.im();
    for (std::size_t v = 0; v < c.size(); ++v) {
      sr += re[v] * c[v];
      si += im[v] * c[v];
    }
    out.push_back({row.channel(), row.freq_index(), cplx(sr * dv, si * dv)});
  }
  return SignalVector(std::move(out));
}

SignalVector forward_signal(const SystemMatrix& sm, const Phantom& phantom) {
  if (sm.grid() != phantom.grid()) throw DomainError("system matrix and phantom grids differ");
  return forward_signal(sm, std::span<const double>(phantom.values()));
}

}  // namespace smcal
