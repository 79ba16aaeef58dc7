#pragma once

// Regularized Kaczmarz reconstruction of u = S c.

#include <cstdint>
#include <vector>

#include "smcal/core.hpp"
#include "smcal/metrics.hpp"

namespace smcal {

enum class RowOrder : std::uint8_t { sequential = 0, seeded_shuffle = 1 };

struct KaczmarzConfig {
  double lambda = 0.75;
  std::size_t sweeps = 3;
  bool enforce_real_nonneg = true;
  RowOrder row_order = RowOrder::sequential;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Reconstruction {
  Grid3 grid;
  /// Real part of the final iterate.
  std::vector<double> values;
  /// |S c - u| / |u| after every sweep.
  std::vector<double> residual_history;
  std::size_t skipped_rows = 0;
  /// Lambda after scaling by the mean row energy.
  double lambda_effective = 0.0;

  /// Requires a non-negative result (enforce_real_nonneg or luck).
  Phantom to_phantom() const { return Phantom(grid, values); }
};

/// Row-action solve with an auxiliary residual variable v:
///   alpha = (u_i - <s_i, c> - sqrt(lam) v_i) / (|s_i|^2 + lam)
///   c += alpha conj(s_i),  v_i += alpha sqrt(lam)
/// with lam = lambda |S|_F^2 / N_f. Zero-norm rows are skipped and counted.
Reconstruction kaczmarz_solve(const SystemMatrix& sm, const SignalVector& u,
                              const KaczmarzConfig& cfg = {});

struct PipelineResult {
  Reconstruction reconstruction;
  double nrmse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  bool ssim_available = false;
};

/// u = forward(sm_truth, phantom), reconstruct with sm_recovered, score
/// against the phantom. SSIM is skipped for fields smaller than its window.
PipelineResult reconstruction_pipeline(const SystemMatrix& sm_recovered,
                                       const SystemMatrix& sm_truth, const Phantom& phantom,
                                       const KaczmarzConfig& cfg = {});

}  // namespace smcal
