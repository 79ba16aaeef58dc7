#include "smcal/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <tuple>

namespace smcal {

double nrmse(std::span<const cplx> estimate, std::span<const cplx> truth) {
  if (estimate.size() != truth.size()) throw DomainError("nrmse: shape mismatch");
  if (truth.empty()) throw DegenerateRange("nrmse: empty input");
  double lo = std::abs(truth[0]), hi = lo, acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double m = std::abs(truth[i]);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    acc += std::norm(estimate[i] - truth[i]);
  }
  if (!(hi > lo)) throw DegenerateRange("nrmse: truth has constant modulus");
  return std::sqrt(acc) / (hi - lo);
}

double nrmse(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw DomainError("nrmse: shape mismatch");
  if (truth.empty()) throw DegenerateRange("nrmse: empty input");
  double lo = std::abs(truth[0]), hi = lo, acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double m = std::abs(truth[i]);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    const double d = estimate[i] - truth[i];
    acc += d * d;
  }
  if (!(hi > lo)) throw DegenerateRange("nrmse: truth has constant modulus");
  return std::sqrt(acc) / (hi - lo);
}

double nrmse(const SMRow& estimate, const SMRow& truth) {
  if (!estimate.grid().same_shape(truth.grid())) throw DomainError("nrmse: grid mismatch");
  const auto e = estimate.values();
  const auto t = truth.values();
  return nrmse(std::span<const cplx>(e), std::span<const cplx>(t));
}

double nrmse(const Phantom& estimate, const Phantom& truth) {
  if (!estimate.grid().same_shape(truth.grid())) throw DomainError("nrmse: grid mismatch");
  return nrmse(std::span<const double>(estimate.values()), std::span<const double>(truth.values()));
}

double psnr(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size() || truth.empty()) throw DomainError("psnr: shape mismatch");
  double peak = truth[0], mse = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    peak = std::max(peak, truth[i]);
    const double d = estimate[i] - truth[i];
    mse += d * d;
  }
  mse /= static_cast<double>(truth.size());
  if (mse == 0.0) return kPsnrExactMatch;
  return std::min(kPsnrExactMatch, 10.0 * std::log10(peak * peak / mse));
}

double psnr(const Phantom& estimate, const Phantom& truth) {
  if (!estimate.grid().same_shape(truth.grid())) throw DomainError("psnr: grid mismatch");
  return psnr(std::span<const double>(estimate.values()), std::span<const double>(truth.values()));
}

SsimTerms ssim_terms(std::span<const double> x, std::span<const double> y, const Index3& dims,
                     const SsimOptions& opts) {
  const std::size_t n = dims[0] * dims[1] * dims[2];
  if (x.size() != n || y.size() != n) throw DomainError("ssim: shape mismatch");
  const bool three_d = dims[2] > 1;
  const std::size_t w = opts.window;
  Index3 win{w, w, three_d ? w : 1};
  for (int a = 0; a < 3; ++a)
    if (dims[a] < win[a]) throw DomainError("ssim: field smaller than the window");

  double lo = *std::min_element(y.begin(), y.end());
  double hi = *std::max_element(y.begin(), y.end());
  if (opts.shared_range) {
    lo = std::min(lo, *std::min_element(x.begin(), x.end()));
    hi = std::max(hi, *std::max_element(x.begin(), x.end()));
  }
  const double L = hi - lo;
  const double c1 = (opts.k1 * L) * (opts.k1 * L);
  const double c2 = (opts.k2 * L) * (opts.k2 * L);
  const double c3 = c2 / 2.0;
  const double count = static_cast<double>(win[0] * win[1] * win[2]);

  auto at = [&](std::span<const double> f, std::size_t px, std::size_t py, std::size_t pz) {
    return f[(pz * dims[1] + py) * dims[0] + px];
  };

  SsimTerms acc;
  std::size_t windows = 0;
  for (std::size_t z0 = 0; z0 + win[2] <= dims[2]; ++z0)
    for (std::size_t y0 = 0; y0 + win[1] <= dims[1]; ++y0)
      for (std::size_t x0 = 0; x0 + win[0] <= dims[0]; ++x0) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (std::size_t dz = 0; dz < win[2]; ++dz)
          for (std::size_t dy = 0; dy < win[1]; ++dy)
            for (std::size_t dx = 0; dx < win[0]; ++dx) {
              const double a = at(x, x0 + dx, y0 + dy, z0 + dz);
              const double b = at(y, x0 + dx, y0 + dy, z0 + dz);
              sx += a;
              sy += b;
              sxx += a * a;
              syy += b * b;
              sxy += a * b;
            }
        const double mx = sx / count, my = sy / count;
        const double vx = std::max(0.0, sxx / count - mx * mx);
        const double vy = std::max(0.0, syy / count - my * my);
        const double cov = sxy / count - mx * my;
        const double l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
        const double cs = (2 * cov + c2) / (vx + vy + c2);
        const double sdx = std::sqrt(vx), sdy = std::sqrt(vy);
        acc.luminance += l;
        acc.contrast += (2 * sdx * sdy + c2) / (vx + vy + c2);
        acc.structure += (cov + c3) / (sdx * sdy + c3);
        acc.ssim += l * cs;
        ++windows;
      }
  const double nw = static_cast<double>(windows);
  acc.ssim /= nw;
  acc.luminance /= nw;
  acc.contrast /= nw;
  acc.structure /= nw;
  return acc;
}

double ssim(std::span<const double> estimate, std::span<const double> truth, const Index3& dims,
            const SsimOptions& opts) {
  return ssim_terms(estimate, truth, dims, opts).ssim;
}

double ssim(const Phantom& estimate, const Phantom& truth, const SsimOptions& opts) {
  if (!estimate.grid().same_shape(truth.grid())) throw DomainError("ssim: grid mismatch");
  return ssim(estimate.values(), truth.values(), truth.grid().dims(), opts);
}

std::vector<double> row_nrmse(const SystemMatrix& estimate, const SystemMatrix& truth) {
  if (estimate.num_rows() != truth.num_rows()) throw DomainError("row count mismatch");
  std::vector<double> out;
  out.reserve(truth.num_rows());
  for (std::size_t i = 0; i < truth.num_rows(); ++i) {
    const auto& e = estimate.row(i);
    const auto& t = truth.row(i);
    if (e.channel() != t.channel() || e.freq_index() != t.freq_index())
      throw DomainError("row layouts differ at row " + std::to_string(i));
    out.push_back(nrmse(e, t));
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<MetricReport> benchmark_report(std::vector<MetricReport> results) {
  for (const auto& r : results)
    if (r.truth_id != results.front().truth_id)
      throw DomainError("benchmark entries were evaluated on different ground truths");
  std::stable_sort(results.begin(), results.end(), [](const MetricReport& a, const MetricReport& b) {
    return std::tie(a.ratio, a.method, a.seed) < std::tie(b.ratio, b.method, b.seed);
  });
  return results;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string benchmark_csv(const std::vector<MetricReport>& table) {
  std::ostringstream os;
  os << "method,ratio,seed,mean_nrmse,psnr_db,ssim\n";
  for (const auto& r : table)
    os << r.method << ',' << r.ratio << ',' << r.seed << ',' << format_double(r.mean_nrmse) << ','
       << format_double(r.psnr_db) << ',' << format_double(r.ssim) << '\n';
  return os.str();
}

}  // namespace smcal
