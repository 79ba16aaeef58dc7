#include "smcal/core.hpp"

#include <cmath>
#include <numeric>

namespace smcal {

const char* to_string(Channel c) {
  switch (c) {
    case Channel::X: return "x";
    case Channel::Y: return "y";
    case Channel::Z: return "z";
  }
  return "?";
}

Channel channel_from_string(const std::string& s) {
  if (s == "x" || s == "X") return Channel::X;
  if (s == "y" || s == "Y") return Channel::Y;
  if (s == "z" || s == "Z") return Channel::Z;
  throw InvalidArgument("unknown channel '" + s + "'");
}

// ---------------------------------------------------------------------------
// Grid3

Grid3::Grid3(std::size_t nx, std::size_t ny, std::size_t nz, double fov_x, double fov_y,
             double fov_z)
    : Grid3(Index3{nx, ny, nz}, Vec3{fov_x, fov_y, fov_z}) {}

Grid3::Grid3(Index3 dims, Vec3 fov) : dims_(dims), fov_(fov) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] < 1) throw InvalidArgument("grid voxel counts must be >= 1");
    if (!(fov_[a] > 0.0) || !std::isfinite(fov_[a]))
      throw InvalidArgument("grid extents must be finite and > 0");
  }
}

int Grid3::active_dims() const {
  int n = 0;
  for (auto d : dims_) n += d > 1 ? 1 : 0;
  return n;
}

double Grid3::coordinate(int axis, std::size_t p) const {
  if (axis < 0 || axis > 2) throw IndexError("axis out of range");
  if (p >= dims_[axis]) throw IndexError("voxel index out of range");
  // Computed from the centered integer offset so that coordinate(p) and
  // coordinate(n-1-p) are exact negatives of each other.
  const double n = static_cast<double>(dims_[axis]);
  const double offset = 2.0 * static_cast<double>(p) + 1.0 - n;  // odd/even symmetric
  return offset * fov_[axis] / (2.0 * n);
}

Vec3 Grid3::voxel_coordinate(const Index3& p) const {
  return {coordinate(0, p[0]), coordinate(1, p[1]), coordinate(2, p[2])};
}

Index3 Grid3::unravel(std::size_t i) const {
  if (i >= size()) throw IndexError("linear index out of range");
  Index3 p;
  p[0] = i % dims_[0];
  i /= dims_[0];
  p[1] = i % dims_[1];
  p[2] = i / dims_[1];
  return p;
}

// ---------------------------------------------------------------------------
// SMRow

namespace {
void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + " contains non-finite values");
}
}  // namespace

SMRow::SMRow(Channel channel, std::uint32_t freq_index, Grid3 grid, std::vector<double> re,
             std::vector<double> im)
    : channel_(channel), freq_index_(freq_index), grid_(std::move(grid)), re_(std::move(re)),
      im_(std::move(im)) {
  if (re_.size() != grid_.size() || im_.size() != grid_.size())
    throw InvalidArgument("row length does not match grid size");
  check_finite(re_, "row");
  check_finite(im_, "row");
}

SMRow::SMRow(Channel channel, std::uint32_t freq_index, Grid3 grid, std::span<const cplx> values)
    : channel_(channel), freq_index_(freq_index), grid_(std::move(grid)) {
  if (values.size() != grid_.size()) throw InvalidArgument("row length does not match grid size");
  re_.resize(values.size());
  im_.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    re_[i] = values[i].real();
    im_[i] = values[i].imag();
  }
  check_finite(re_, "row");
  check_finite(im_, "row");
}

SMRow SMRow::zeros(Channel channel, std::uint32_t freq_index, const Grid3& grid) {
  return SMRow(channel, freq_index, grid, std::vector<double>(grid.size(), 0.0),
               std::vector<double>(grid.size(), 0.0));
}

std::vector<cplx> SMRow::values() const {
  std::vector<cplx> out(re_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {re_[i], im_[i]};
  return out;
}

double SMRow::norm_squared() const {
  double s = 0.0;
  for (std::size_t i = 0; i < re_.size(); ++i) s += re_[i] * re_[i] + im_[i] * im_[i];
  return s;
}

double SMRow::norm() const { return std::sqrt(norm_squared()); }

// ---------------------------------------------------------------------------
// SystemMatrix

SystemMatrix::SystemMatrix(Grid3 grid, std::vector<SMRow> rows, Provenance provenance)
    : grid_(std::move(grid)), rows_(std::move(rows)), provenance_(provenance) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (r.grid() != grid_) throw InvalidArgument("row grid differs from system-matrix grid");
    auto [it, inserted] = index_.emplace(std::make_pair(r.channel(), r.freq_index()), i);
    if (!inserted)
      throw DuplicateRow("duplicate row (" + std::string(to_string(r.channel())) + ", " +
                         std::to_string(r.freq_index()) + ")");
  }
}

const SMRow& SystemMatrix::lookup(Channel channel, std::uint32_t freq_index) const {
  auto it = index_.find({channel, freq_index});
  if (it == index_.end())
    throw NotFound("no row (" + std::string(to_string(channel)) + ", " +
                   std::to_string(freq_index) + ")");
  return rows_[it->second];
}

bool SystemMatrix::contains(Channel channel, std::uint32_t freq_index) const {
  return index_.count({channel, freq_index}) != 0;
}

double SystemMatrix::frobenius_squared() const {
  double s = 0.0;
  for (const auto& r : rows_) s += r.norm_squared();
  return s;
}

// ---------------------------------------------------------------------------

Phantom::Phantom(Grid3 grid, std::vector<double> concentration)
    : grid_(std::move(grid)), values_(std::move(concentration)) {
  if (values_.size() != grid_.size()) throw InvalidArgument("phantom size does not match grid");
  for (double v : values_)
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidArgument("phantom concentration must be finite and >= 0");
}

void SignalVector::check_aligned(const SystemMatrix& sm) const {
  if (entries_.size() != sm.num_rows())
    throw DomainError("signal length does not match system-matrix row count");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& r = sm.row(i);
    if (r.channel() != entries_[i].channel || r.freq_index() != entries_[i].freq_index)
      throw DomainError("signal entry " + std::to_string(i) + " is not aligned with its row");
  }
}

// ---------------------------------------------------------------------------
// ScanSequence / ParticleModel

unsigned ScanSequence::cycles(int axis) const {
  if (axis >= dims()) return 0;
  if (dims() == 1) return 1;
  unsigned long l = 1;
  for (unsigned d : freq_dividers) l = std::lcm(l, static_cast<unsigned long>(d));
  return static_cast<unsigned>(l / freq_dividers[static_cast<std::size_t>(axis)]);
}

void ScanSequence::validate() const {
  if (dims() < 1 || dims() > 3) throw DomainError("sequence must drive 1 to 3 axes");
  for (unsigned d : freq_dividers)
    if (d == 0) throw InvalidArgument("frequency dividers must be positive");
  if (dims() == 2 && std::gcd(freq_dividers[0], freq_dividers[1]) != 1)
    throw DomainError("2D frequency dividers must be coprime");
  if (!(base_period > 0.0)) throw InvalidArgument("base period must be > 0");
  if (n_time_samples < 2 || (n_time_samples & (n_time_samples - 1)) != 0)
    throw InvalidArgument("n_time_samples must be a power of two");
  for (int a = 0; a < 3; ++a) {
    if (!(gradient[a] >= 0.0) || !std::isfinite(gradient[a]))
      throw InvalidArgument("gradient must be finite and >= 0");
    if (!(amplitude[a] >= 0.0) || !std::isfinite(amplitude[a]))
      throw InvalidArgument("amplitude must be finite and >= 0");
    if (a < dims() && (!(gradient[a] > 0.0) || !(amplitude[a] > 0.0)))
      throw InvalidArgument("active axes need gradient > 0 and amplitude > 0");
    if (a >= dims() && amplitude[a] != 0.0)
      throw InvalidArgument("inactive axes must have zero drive amplitude");
  }
}

ScanSequence ScanSequence::one_d(double gradient, double amplitude, double period) {
  ScanSequence s;
  s.gradient = {gradient, gradient, gradient};
  s.amplitude = {amplitude, 0.0, 0.0};
  s.phase = {0.0, 0.0, 0.0};
  s.base_period = period;
  s.freq_dividers = {1};
  return s;
}

ScanSequence ScanSequence::two_d(double gradient, double amplitude, unsigned div_x, unsigned div_y,
                                 double period) {
  ScanSequence s;
  s.gradient = {gradient, gradient, gradient};
  s.amplitude = {amplitude, amplitude, 0.0};
  // -A cos(theta - pi/2) = -A sin(theta)
  s.phase = {-kPi / 2.0, -kPi / 2.0, 0.0};
  s.base_period = period;
  s.freq_dividers = {div_x, div_y};
  return s;
}

ScanSequence ScanSequence::three_d(double gradient, double amplitude, unsigned div_x,
                                   unsigned div_y, unsigned div_z, double period) {
  ScanSequence s;
  s.gradient = {gradient, gradient, gradient};
  s.amplitude = {amplitude, amplitude, amplitude};
  s.phase = {-kPi / 2.0, -kPi / 2.0, -kPi / 2.0};
  s.base_period = period;
  s.freq_dividers = {div_x, div_y, div_z};
  return s;
}

void ParticleModel::validate() const {
  // m_sat == 0 is accepted as "no particles" and simulates to an all-zero matrix.
  if (!(m_sat >= 0.0) || !std::isfinite(m_sat)) throw InvalidArgument("m_sat must be >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be > 0");
}

}  // namespace smcal
