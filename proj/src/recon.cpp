#include "smcal/recon.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "smcal/physics.hpp"

namespace smcal {

void KaczmarzConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
}

namespace {

double residual_norm(const SystemMatrix& sm, const std::vector<cplx>& c, const SignalVector& u) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sm.num_rows(); ++i) {
    const auto& row = sm.row(i);
    cplx dot{0.0, 0.0};
    for (std::size_t v = 0; v < c.size(); ++v) dot += row.value(v) * c[v];
    num += std::norm(dot - u.value(i));
    den += std::norm(u.value(i));
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

Reconstruction kaczmarz_solve(const SystemMatrix& sm, const SignalVector& u,
                              const KaczmarzConfig& cfg) {
  cfg.validate();
  if (sm.empty()) throw DomainError("system matrix has no rows");
  u.check_aligned(sm);
  const double energy = sm.frobenius_squared();
  if (energy == 0.0) throw DomainError("system matrix is identically zero");

  const std::size_t nf = sm.num_rows();
  const std::size_t nv = sm.grid().size();
  const double lam = cfg.lambda * energy / static_cast<double>(nf);
  const double sqrt_lam = std::sqrt(lam);

  std::vector<double> row_energy(nf);
  for (std::size_t i = 0; i < nf; ++i) row_energy[i] = sm.row(i).norm_squared();

  Reconstruction out;
  out.grid = sm.grid();
  out.lambda_effective = lam;
  for (double e : row_energy) out.skipped_rows += e == 0.0 ? 1 : 0;

  std::vector<cplx> c(nv, cplx{0.0, 0.0});
  std::vector<cplx> v(nf, cplx{0.0, 0.0});
  std::vector<std::size_t> order(nf);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  for (std::size_t sweep = 0; sweep < cfg.sweeps; ++sweep) {
    if (cfg.row_order == RowOrder::seeded_shuffle)
      for (std::size_t i = nf - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    for (std::size_t i : order) {
      if (row_energy[i] == 0.0) continue;
      const auto& re = sm.row(i).re();
      const auto& im = sm.row(i).im();
      // <s_i, c> without conjugation
      double dr = 0.0, di = 0.0;
      for (std::size_t k = 0; k < nv; ++k) {
        dr += re[k] * c[k].real() - im[k] * c[k].imag();
        di += re[k] * c[k].imag() + im[k] * c[k].real();
      }
      const cplx alpha = (u.value(i) - cplx(dr, di) - sqrt_lam * v[i]) / (row_energy[i] + lam);
      const double ar = alpha.real(), ai = alpha.imag();
      // c += alpha * conj(s_i)
      for (std::size_t k = 0; k < nv; ++k)
        c[k] += cplx(ar * re[k] + ai * im[k], ai * re[k] - ar * im[k]);
      v[i] += alpha * sqrt_lam;
    }
    if (cfg.enforce_real_nonneg)
      for (auto& x : c) x = cplx(std::max(0.0, x.real()), 0.0);
    out.residual_history.push_back(residual_norm(sm, c, u));
  }

  out.values.resize(nv);
  for (std::size_t k = 0; k < nv; ++k) out.values[k] = c[k].real();
  return out;
}

PipelineResult reconstruction_pipeline(const SystemMatrix& sm_recovered,
                                       const SystemMatrix& sm_truth, const Phantom& phantom,
                                       const KaczmarzConfig& cfg) {
  if (!sm_recovered.grid().same_shape(sm_truth.grid()) ||
      !sm_truth.grid().same_shape(phantom.grid()))
    throw DomainError("recovered matrix, truth matrix and phantom grids must match");
  const SignalVector measured = forward_signal(sm_truth, phantom);
  // Relabel entries onto the recovered matrix (same row layout required).
  std::vector<SignalEntry> entries;
  if (sm_recovered.num_rows() != sm_truth.num_rows())
    throw DomainError("recovered and truth matrices have different row counts");
  for (std::size_t i = 0; i < sm_truth.num_rows(); ++i) {
    const auto& a = sm_recovered.row(i);
    const auto& b = sm_truth.row(i);
    if (a.channel() != b.channel() || a.freq_index() != b.freq_index())
      throw DomainError("recovered and truth matrices have different row layouts");
    entries.push_back(measured.entries()[i]);
  }
  // forward_signal integrates over voxel volume; the solver works on u = S c.
  const double dv = sm_truth.grid().voxel_volume();
  for (auto& e : entries) e.value /= dv;

  PipelineResult res;
  res.reconstruction = kaczmarz_solve(sm_recovered, SignalVector(std::move(entries)), cfg);
  const auto& est = res.reconstruction.values;
  const auto& truth = phantom.values();
  res.nrmse = nrmse(std::span<const double>(est), std::span<const double>(truth));
  res.psnr_db = psnr(std::span<const double>(est), std::span<const double>(truth));
  const auto& d = phantom.grid().dims();
  const std::size_t w = SsimOptions{}.window;
  if (d[0] >= w && d[1] >= w && (d[2] == 1 || d[2] >= w)) {
    res.ssim = ssim(std::span<const double>(est), std::span<const double>(truth), d);
    res.ssim_available = true;
  }
  return res;
}

}  // namespace smcal
