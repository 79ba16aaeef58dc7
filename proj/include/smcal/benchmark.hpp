#pragma once

// Simulated calibration benchmark: a 2D (or 3D) Lissajous system matrix,
// energy-based row selection, padding and pairing, test phantoms, and the
// position-encoding / upsampling ablation.

#include <functional>
#include <string>
#include <vector>

#include "smcal/core.hpp"
#include "smcal/metrics.hpp"
#include "smcal/sampling.hpp"
#include "smcal/sr.hpp"

namespace smcal::bench {

struct BenchmarkConfig {
  int dims = 2;
  std::size_t grid = 37;           // voxels per active axis
  double gradient = 2.0;           // T/m
  double amplitude = 0.012;        // T; grid extent = 2 A / G per axis
  std::vector<unsigned> dividers{16, 17};
  std::size_t n_time_samples = 2048;
  double beta = 500.0;             // training particle
  double test_beta = 400.0;        // held-out particle
  std::uint32_t k_min = 20;
  std::uint32_t k_max = 300;
  std::size_t rows = 200;
  std::size_t pad_pre = 1, pad_post = 2;
  double validation_fraction = 0.1;
  std::uint64_t split_seed = 42;

  void validate() const;
};

ScanSequence benchmark_sequence(const BenchmarkConfig& cfg);
Grid3 benchmark_grid(const BenchmarkConfig& cfg);

/// All candidate rows (every receive channel, k_min..k_max) for particle beta.
SystemMatrix simulate_candidates(const BenchmarkConfig& cfg, double beta);

/// The `count` rows of highest energy with freq_index >= k_min, in their
/// original order.
SystemMatrix select_rows(const SystemMatrix& sm, std::size_t count, std::uint32_t k_min);

/// Same (channel, k) rows as `layout`, taken from `sm`.
SystemMatrix select_like(const SystemMatrix& sm, const SystemMatrix& layout);

struct BenchmarkData {
  SystemMatrix truth;       // selected rows on the simulation grid
  SystemMatrix padded;      // zero-padded HR rows
  SystemMatrix test_truth;  // same rows for the held-out particle
  SystemMatrix test_padded;
};

BenchmarkData make_benchmark(const BenchmarkConfig& cfg);

/// Pairs at `ratio` with the configured split.
PairSet benchmark_pairs(const BenchmarkData& data, const BenchmarkConfig& cfg, std::size_t ratio);

/// Point-like dots of height `value` at the given voxel indices.
Phantom dots_phantom(const Grid3& grid, const std::vector<Index3>& voxels, double value = 1.0);
/// Three dots at fixed fractional positions of the grid.
Phantom three_dot_phantom(const Grid3& grid);
/// A filled disc (ball in 3D) plus a bar; a smooth extended test object.
Phantom shape_phantom(const Grid3& grid);
Phantom named_phantom(const std::string& name, const Grid3& grid);

struct Variant {
  std::string name;
  sr::PositionMode mode;
  sr::Upsample upsample;
};

/// M1 (none, nearest), M2 (normalized, nearest), M3 (symmetric, nearest),
/// PPG (symmetric, linear).
std::vector<Variant> ablation_variants();

struct AblationConfig {
  std::vector<std::size_t> ratios{2};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  sr::ModelConfig model;  // mode, upsample and ratio are overridden per run
  sr::TrainConfig train;  // seed is overridden per run
  std::vector<std::string> methods{"M1", "M2", "M3", "PPG"};
};

struct AblationRun {
  MetricReport report;
  sr::TrainResult result;
};

using ProgressCallback = std::function<void(const std::string& method, std::size_t ratio,
                                            std::uint64_t seed, const sr::EpochRecord&)>;

/// Trains every (method, ratio, seed) combination. Reports hold the best
/// validation NRMSE, plus PSNR and SSIM of the row moduli averaged over the
/// validation rows.
std::vector<AblationRun> run_ablation(const std::vector<PairSet>& pairs_by_ratio,
                                      const AblationConfig& cfg,
                                      const ProgressCallback& progress = {});

/// Mean over seeds per (method, ratio), sorted like benchmark_report; the
/// seed field holds the number of runs averaged.
std::vector<MetricReport> summarize(const std::vector<MetricReport>& runs);

/// Row-modulus PSNR/SSIM averaged over rows.
double mean_row_psnr(const SystemMatrix& estimate, const SystemMatrix& truth);
double mean_row_ssim(const SystemMatrix& estimate, const SystemMatrix& truth);

}  // namespace smcal::bench
