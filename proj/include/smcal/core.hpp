#pragma once

// Shared data model: grids, system-matrix rows, phantoms, signals and the
// scan/particle configuration that determines a simulated system matrix.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smcal {

using cplx = std::complex<double>;

inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;
inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors. Every error carries a stable code so the C API can map it 1:1.

enum class ErrorCode : int {
  invalid_argument = 1,
  index_error,
  not_found,
  duplicate_row,
  domain_error,
  alias_error,
  incomplete_domain,
  degenerate_range,
  training_diverged,
  io_error,
  format_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define SMCAL_DEFINE_ERROR(Name, Code)                                        \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

SMCAL_DEFINE_ERROR(InvalidArgument, invalid_argument)
SMCAL_DEFINE_ERROR(IndexError, index_error)
SMCAL_DEFINE_ERROR(NotFound, not_found)
SMCAL_DEFINE_ERROR(DuplicateRow, duplicate_row)
SMCAL_DEFINE_ERROR(DomainError, domain_error)
SMCAL_DEFINE_ERROR(AliasError, alias_error)
SMCAL_DEFINE_ERROR(IncompleteDomain, incomplete_domain)
SMCAL_DEFINE_ERROR(DegenerateRange, degenerate_range)
SMCAL_DEFINE_ERROR(IoError, io_error)
SMCAL_DEFINE_ERROR(FormatError, format_error)

#undef SMCAL_DEFINE_ERROR

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& what)
      : Error(ErrorCode::training_diverged, what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// ---------------------------------------------------------------------------

enum class Channel : std::uint8_t { X = 0, Y = 1, Z = 2 };

const char* to_string(Channel c);
Channel channel_from_string(const std::string& s);

using Index3 = std::array<std::size_t, 3>;
using Vec3 = std::array<double, 3>;

/// Uniform cell-centered grid, symmetric about the origin. Voxel p on an axis
/// with n voxels and extent fov sits at (p + 0.5) / n * fov - fov / 2.
class Grid3 {
 public:
  Grid3() = default;
  Grid3(std::size_t nx, std::size_t ny, std::size_t nz, double fov_x, double fov_y, double fov_z);
  Grid3(Index3 dims, Vec3 fov);

  std::size_t nx() const { return dims_[0]; }
  std::size_t ny() const { return dims_[1]; }
  std::size_t nz() const { return dims_[2]; }
  const Index3& dims() const { return dims_; }
  const Vec3& fov() const { return fov_; }
  std::size_t size() const { return dims_[0] * dims_[1] * dims_[2]; }
  double spacing(int axis) const { return fov_[axis] / static_cast<double>(dims_[axis]); }
  double voxel_volume() const { return spacing(0) * spacing(1) * spacing(2); }

  /// Number of axes with more than one voxel.
  int active_dims() const;

  double coordinate(int axis, std::size_t p) const;
  Vec3 voxel_coordinate(const Index3& p) const;

  /// Row-major z-then-y-then-x: x varies fastest.
  std::size_t linear(std::size_t px, std::size_t py, std::size_t pz) const {
    return (pz * dims_[1] + py) * dims_[0] + px;
  }
  std::size_t linear(const Index3& p) const { return linear(p[0], p[1], p[2]); }
  Index3 unravel(std::size_t i) const;

  bool operator==(const Grid3& o) const { return dims_ == o.dims_ && fov_ == o.fov_; }
  bool operator!=(const Grid3& o) const { return !(*this == o); }

  /// Same voxel counts (extent ignored).
  bool same_shape(const Grid3& o) const { return dims_ == o.dims_; }

 private:
  Index3 dims_{1, 1, 1};
  Vec3 fov_{1.0, 1.0, 1.0};
};

/// One system-matrix row: the spatial map for a (receive channel, frequency
/// index) pair. Real and imaginary parts are held as separate planes.
class SMRow {
 public:
  SMRow() = default;
  SMRow(Channel channel, std::uint32_t freq_index, Grid3 grid, std::vector<double> re,
        std::vector<double> im);
  SMRow(Channel channel, std::uint32_t freq_index, Grid3 grid, std::span<const cplx> values);
  static SMRow zeros(Channel channel, std::uint32_t freq_index, const Grid3& grid);

  Channel channel() const { return channel_; }
  std::uint32_t freq_index() const { return freq_index_; }
  const Grid3& grid() const { return grid_; }
  std::size_t size() const { return re_.size(); }
  const std::vector<double>& re() const { return re_; }
  const std::vector<double>& im() const { return im_; }
  cplx value(std::size_t i) const { return {re_[i], im_[i]}; }
  std::vector<cplx> values() const;

  /// Copy with the same metadata but a different grid/payload.
  SMRow with_values(Grid3 grid, std::vector<double> re, std::vector<double> im) const {
    return SMRow(channel_, freq_index_, std::move(grid), std::move(re), std::move(im));
  }

  double norm() const;
  double norm_squared() const;

 private:
  Channel channel_{Channel::X};
  std::uint32_t freq_index_{0};
  Grid3 grid_;
  std::vector<double> re_;
  std::vector<double> im_;
};

enum class Provenance : std::uint8_t {
  simulated_closed_form = 0,
  simulated_numeric = 1,
  recovered = 2,
  loaded = 3,
};

class SystemMatrix {
 public:
  SystemMatrix() = default;
  SystemMatrix(Grid3 grid, std::vector<SMRow> rows, Provenance provenance);

  const Grid3& grid() const { return grid_; }
  const std::vector<SMRow>& rows() const { return rows_; }
  std::size_t num_rows() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  Provenance provenance() const { return provenance_; }
  const SMRow& row(std::size_t i) const { return rows_.at(i); }

  /// Throws NotFound when the pair is absent.
  const SMRow& lookup(Channel channel, std::uint32_t freq_index) const;
  bool contains(Channel channel, std::uint32_t freq_index) const;

  double frobenius_squared() const;

 private:
  Grid3 grid_;
  std::vector<SMRow> rows_;
  Provenance provenance_{Provenance::loaded};
  std::map<std::pair<Channel, std::uint32_t>, std::size_t> index_;
};

/// Non-negative concentration field on a grid.
class Phantom {
 public:
  Phantom() = default;
  Phantom(Grid3 grid, std::vector<double> concentration);

  const Grid3& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  Grid3 grid_;
  std::vector<double> values_;
};

struct SignalEntry {
  Channel channel;
  std::uint32_t freq_index;
  cplx value;
};

/// Measured Fourier coefficients, aligned with a SystemMatrix's row order.
class SignalVector {
 public:
  SignalVector() = default;
  explicit SignalVector(std::vector<SignalEntry> entries) : entries_(std::move(entries)) {}

  const std::vector<SignalEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  cplx value(std::size_t i) const { return entries_.at(i).value; }

  /// Throws DomainError unless channel/frequency match the matrix row by row.
  void check_aligned(const SystemMatrix& sm) const;

 private:
  std::vector<SignalEntry> entries_;
};

/// Drive/selection-field configuration. Axis a is active when a < dims().
/// Drive on axis a: -amplitude[a] * cos(2 pi f_a t + phase[a]) with
/// f_a = cycles(a) / base_period.
struct ScanSequence {
  Vec3 gradient{1.0, 1.0, 1.0};   // T/m
  Vec3 amplitude{0.012, 0.0, 0.0};  // T
  Vec3 phase{0.0, 0.0, 0.0};      // rad
  double base_period = 1.0 / 25000.0;  // s
  std::vector<unsigned> freq_dividers{1};
  std::size_t n_time_samples = 4096;
  std::uint32_t k_max = 512;

  int dims() const { return static_cast<int>(freq_dividers.size()); }
  /// Drive cycles of axis a within one base period (0 for inactive axes).
  unsigned cycles(int axis) const;
  double frequency(int axis) const { return cycles(axis) / base_period; }

  /// Checks every invariant, throwing DomainError/InvalidArgument.
  void validate() const;

  /// 1D cosine drive along x.
  static ScanSequence one_d(double gradient, double amplitude, double period = 1.0 / 25000.0);
  /// 2D Lissajous drive with divider pair (default 16:17) and sine phase,
  /// the excitation under which the 2D parity relations hold exactly.
  static ScanSequence two_d(double gradient, double amplitude, unsigned div_x = 16,
                            unsigned div_y = 17, double period = 1.0 / 25000.0);
  /// 3D Lissajous drive.
  static ScanSequence three_d(double gradient, double amplitude, unsigned div_x, unsigned div_y,
                              unsigned div_z, double period = 1.0 / 25000.0);
};

/// Ideal superparamagnetic particle: instantaneous relaxation, Langevin
/// magnitude law with argument beta * |H|.
struct ParticleModel {
  double m_sat = 1.0;  // A m^2
  double beta = 500.0; // 1/T

  void validate() const;
};

}  // namespace smcal
