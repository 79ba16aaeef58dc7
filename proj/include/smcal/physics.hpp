#pragma once

// Forward model of an ideal MPI scanner: applied field, Langevin particle
// response, numeric system-matrix rows via spectral time differentiation,
// the 1D Chebyshev closed form, and the discrete forward projection u = S c.

#include <functional>
#include <vector>

#include "smcal/core.hpp"

namespace smcal {

struct FieldSample {
  Vec3 H{0.0, 0.0, 0.0};  // T
};

/// Mean-moment 3-vectors sampled over one base period.
struct MomentWaveform {
  double period = 0.0;
  std::vector<Vec3> samples;
};

/// Langevin function L(xi) = coth(xi) - 1/xi, odd, series for |xi| < 1e-4.
double langevin(double xi);
/// dL/dxi = 1/xi^2 - 1/sinh^2(xi).
double langevin_derivative(double xi);

/// H_a(r,t) = G_a r_a - A_a cos(2 pi f_a t + phi_a). t is reduced modulo the
/// base period; throws DomainError when a driven axis cannot reach r.
FieldSample drive_field(const ScanSequence& seq, const Vec3& r, double t);

/// m_sat * L(beta |H|) * H / |H|, zero at H = 0.
Vec3 mean_moment(const ParticleModel& pm, const FieldSample& h);

MomentWaveform moment_waveform(const ScanSequence& seq, const ParticleModel& pm, const Vec3& r,
                               double time_shift = 0.0);

struct SimulationOptions {
  /// Delays the excitation by this many seconds; coefficient k then picks up
  /// the phase exp(-2 pi i k shift / T).
  double time_shift = 0.0;
  /// Worker threads for the voxel loop; 0 selects hardware concurrency.
  unsigned threads = 0;
};

/// Row (channel, k) of -mu0/T * int d/dt m_l(r,t) e^{-2 pi i k t/T} dt. The
/// receive-chain transfer function is taken as 1.
SMRow simulate_row_numeric(const ScanSequence& seq, const ParticleModel& pm, const Grid3& grid,
                           Channel channel, std::uint32_t k, const SimulationOptions& opts = {});

/// Batch of numeric rows, ordered channel-major in the order given, then by k.
SystemMatrix simulate_system_matrix(const ScanSequence& seq, const ParticleModel& pm,
                                    const Grid3& grid, const std::vector<Channel>& channels,
                                    const std::vector<std::uint32_t>& k_range,
                                    const SimulationOptions& opts = {});

/// Windowed Chebyshev kernel U_{k-1}(u/A) sqrt(1 - (u/A)^2), zero for |u| > A.
double chebyshev_window(std::uint32_t k, double u, double amplitude);

/// Chebyshev polynomial of the second kind by the three-term recurrence.
double chebyshev_u(int n, double x);

/// -(2i/T) (M' * F)(G r_x) with M' supplied by the caller; the convolution
/// integral runs over the kernel support with a midpoint rule.
SMRow chebyshev_convolution_row(const ScanSequence& seq, const Grid3& grid, std::uint32_t k,
                                const std::function<double(double)>& magnetization_derivative,
                                std::size_t quadrature_points = 16384);

/// Closed-form 1D row with the Langevin curve, M'(H) = m_sat beta L'(beta H).
SMRow simulate_sm_1d_closed_form(const ScanSequence& seq, const ParticleModel& pm,
                                 const Grid3& grid, std::uint32_t k,
                                 std::size_t quadrature_points = 16384);

/// u_i = sum_v S_iv c_v dV.
SignalVector forward_signal(const SystemMatrix& sm, const Phantom& phantom);
/// Same as above for an arbitrary real field (no sign constraint).
SignalVector forward_signal(const SystemMatrix& sm, std::span<const double> concentration);

}  // namespace smcal
