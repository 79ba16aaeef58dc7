#pragma once

// Image/row quality metrics and benchmark tables.

#include <span>
#include <string>
#include <vector>

#include "smcal/core.hpp"

namespace smcal {

/// |estimate - truth|_F / (max|truth| - min|truth|). Throws DegenerateRange
/// when the modulus of truth is constant.
double nrmse(std::span<const cplx> estimate, std::span<const cplx> truth);
double nrmse(std::span<const double> estimate, std::span<const double> truth);
double nrmse(const SMRow& estimate, const SMRow& truth);
double nrmse(const Phantom& estimate, const Phantom& truth);

inline constexpr double kPsnrExactMatch = 99.0;

/// 10 log10(max(truth)^2 / MSE); exact match reports kPsnrExactMatch.
double psnr(std::span<const double> estimate, std::span<const double> truth);
double psnr(const Phantom& estimate, const Phantom& truth);

struct SsimTerms {
  double ssim = 0.0;
  double luminance = 0.0;  // mean over windows
  double contrast = 0.0;
  double structure = 0.0;
};

struct SsimOptions {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  /// Dynamic range from the pair's joint min/max instead of truth alone,
  /// which makes the index symmetric in its arguments.
  bool shared_range = false;
};

/// Mean local SSIM with a uniform window (window^3 on 3D fields, window^2
/// when nz == 1). Throws DomainError if a used axis is shorter than the window.
SsimTerms ssim_terms(std::span<const double> estimate, std::span<const double> truth,
                     const Index3& dims, const SsimOptions& opts = {});
double ssim(std::span<const double> estimate, std::span<const double> truth, const Index3& dims,
            const SsimOptions& opts = {});
double ssim(const Phantom& estimate, const Phantom& truth, const SsimOptions& opts = {});

struct MetricReport {
  std::string method;
  std::size_t ratio = 0;
  std::uint64_t seed = 0;
  std::vector<double> row_nrmse;
  double mean_nrmse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  /// Identifies the ground truth the metrics were computed against.
  std::string truth_id;
};

/// Per-row NRMSE of two matrices with identical row layout.
std::vector<double> row_nrmse(const SystemMatrix& estimate, const SystemMatrix& truth);
double mean(const std::vector<double>& v);

/// Sorted by (ratio, method, seed). Throws DomainError on mixed truth_ids.
std::vector<MetricReport> benchmark_report(std::vector<MetricReport> results);

/// CSV with header: method,ratio,seed,mean_nrmse,psnr_db,ssim
std::string benchmark_csv(const std::vector<MetricReport>& table);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace smcal
