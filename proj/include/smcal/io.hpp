#pragma once

// File formats: SMB system matrices, PHB phantoms, SRM model checkpoints,
// pair-set directories, CSV tables and PGM slice images. All writers go
// through a temporary file and an atomic rename.

#include <string>
#include <vector>

#include "smcal/core.hpp"
#include "smcal/recon.hpp"
#include "smcal/sampling.hpp"
#include "smcal/sr.hpp"
#include "smcal/symmetry.hpp"

namespace smcal::io {

inline constexpr std::uint16_t kFormatVersion = 1;

/// Writes `bytes` to `path` via `path.tmp` + rename. Throws IoError.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

/// "SMB1", version u16, dims u32x3, fov f64x3, provenance u8, rows u32, then
/// per row: channel u8, freq_index u32, interleaved (re, im) f64 pairs.
/// Everything little-endian.
std::string encode_sm(const SystemMatrix& sm);
SystemMatrix decode_sm(const std::string& bytes);
void write_sm(const std::string& path, const SystemMatrix& sm);
SystemMatrix read_sm(const std::string& path);

/// "PHB1", version u16, dims u32x3, fov f64x3, then f64 values.
std::string encode_phantom(const Phantom& ph);
Phantom decode_phantom(const std::string& bytes);
void write_phantom(const std::string& path, const Phantom& ph);
Phantom read_phantom(const std::string& path);

/// "SRM1", version u16, mode u8, upsample u8, spatial dims u8, blocks u32,
/// stages u32, features u32, ratio u32, residual scale f64, leaky slope f64,
/// parameter count u64, then f64 parameters.
std::string encode_model(const sr::SRModel& model);
sr::SRModel decode_model(const std::string& bytes);
void write_model(const std::string& path, const sr::SRModel& model);
sr::SRModel read_model(const std::string& path);

/// Pair-set directory: lr.smb, hr.smb and manifest.json (ratio, shapes,
/// split labels in row order).
struct PairManifest {
  std::size_t ratio = 0;
  Index3 lr_dims{1, 1, 1};
  Index3 hr_dims{1, 1, 1};
  Index3 source_dims{1, 1, 1};
  std::size_t pairs = 0;
  std::size_t train = 0;
  std::size_t validation = 0;
  double validation_fraction = 0.0;
  std::uint64_t seed = 0;
};
void write_pairs(const std::string& dir, const PairSet& pairs, const PairManifest& manifest);
PairSet read_pairs(const std::string& dir, PairManifest* manifest = nullptr);
PairManifest read_manifest(const std::string& dir);

std::string symmetry_csv(const SystemMatrix& sm, const ScanSequence& seq);
std::string history_csv(const std::vector<sr::EpochRecord>& history);
std::string residual_csv(const Reconstruction& rec);
std::string row_nrmse_csv(const SystemMatrix& estimate, const SystemMatrix& truth);

/// Binary P5 graymap of the central z slice of a real field, min-max
/// normalized over that slice to 0..255 (a constant slice maps to 0).
std::string render_pgm(const std::vector<double>& field, const Index3& dims);
/// Modulus of one SM row.
std::string render_row_pgm(const SMRow& row);

}  // namespace smcal::io
