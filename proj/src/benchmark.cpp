#include "smcal/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "smcal/physics.hpp"

namespace smcal::bench {

void BenchmarkConfig::validate() const {
  if (dims < 1 || dims > 3) throw InvalidArgument("benchmark dims must be 1, 2 or 3");
  if (dividers.size() != static_cast<std::size_t>(dims))
    throw InvalidArgument("need one frequency divider per dimension");
  if (grid < 2) throw InvalidArgument("benchmark grid must have at least 2 voxels per axis");
  if (rows == 0) throw InvalidArgument("benchmark needs at least one row");
  if (k_min > k_max) throw InvalidArgument("k_min must not exceed k_max");
}

ScanSequence benchmark_sequence(const BenchmarkConfig& cfg) {
  cfg.validate();
  ScanSequence seq;
  switch (cfg.dims) {
    case 1: seq = ScanSequence::one_d(cfg.gradient, cfg.amplitude); break;
    case 2: seq = ScanSequence::two_d(cfg.gradient, cfg.amplitude, cfg.dividers[0], cfg.dividers[1]); break;
    default:
      seq = ScanSequence::three_d(cfg.gradient, cfg.amplitude, cfg.dividers[0], cfg.dividers[1],
                                  cfg.dividers[2]);
  }
  seq.n_time_samples = cfg.n_time_samples;
  seq.k_max = std::max<std::uint32_t>(cfg.k_max, static_cast<std::uint32_t>(cfg.n_time_samples / 2));
  seq.validate();
  return seq;
}

Grid3 benchmark_grid(const BenchmarkConfig& cfg) {
  cfg.validate();
  Index3 d{1, 1, 1};
  Vec3 f{1.0, 1.0, 1.0};
  const double fov = 2.0 * cfg.amplitude / cfg.gradient;
  for (int a = 0; a < cfg.dims; ++a) {
    d[a] = cfg.grid;
    f[a] = fov;
  }
  return Grid3(d, f);
}

SystemMatrix simulate_candidates(const BenchmarkConfig& cfg, double beta) {
  const ScanSequence seq = benchmark_sequence(cfg);
  ParticleModel pm;
  pm.beta = beta;
  std::vector<Channel> channels;
  for (int a = 0; a < cfg.dims; ++a) channels.push_back(static_cast<Channel>(a));
  std::vector<std::uint32_t> ks;
  for (std::uint32_t k = cfg.k_min; k <= cfg.k_max; ++k) ks.push_back(k);
  SimulationOptions opts;
  opts.threads = 1;
  return simulate_system_matrix(seq, pm, benchmark_grid(cfg), channels, ks, opts);
}

SystemMatrix select_rows(const SystemMatrix& sm, std::size_t count, std::uint32_t k_min) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < sm.num_rows(); ++i)
    if (sm.row(i).freq_index() >= k_min) idx.push_back(i);
  std::vector<double> energy(sm.num_rows());
  for (std::size_t i : idx) energy[i] = sm.row(i).norm_squared();
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });
  if (idx.size() > count) idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<SMRow> rows;
  rows.reserve(idx.size());
  for (std::size_t i : idx) rows.push_back(sm.row(i));
  return SystemMatrix(sm.grid(), std::move(rows), sm.provenance());
}

SystemMatrix select_like(const SystemMatrix& sm, const SystemMatrix& layout) {
  std::vector<SMRow> rows;
  rows.reserve(layout.num_rows());
  for (const auto& r : layout.rows()) rows.push_back(sm.lookup(r.channel(), r.freq_index()));
  return SystemMatrix(sm.grid(), std::move(rows), sm.provenance());
}

BenchmarkData make_benchmark(const BenchmarkConfig& cfg) {
  BenchmarkData d;
  d.truth = select_rows(simulate_candidates(cfg, cfg.beta), cfg.rows, cfg.k_min);
  d.padded = zero_pad(d.truth, cfg.pad_pre, cfg.pad_post);
  d.test_truth = select_like(simulate_candidates(cfg, cfg.test_beta), d.truth);
  d.test_padded = zero_pad(d.test_truth, cfg.pad_pre, cfg.pad_post);
  return d;
}

PairSet benchmark_pairs(const BenchmarkData& data, const BenchmarkConfig& cfg, std::size_t ratio) {
  return split_pairs(make_pairs(data.padded, ratio), cfg.validation_fraction, cfg.split_seed);
}

// ---------------------------------------------------------------------------
// Phantoms

Phantom dots_phantom(const Grid3& grid, const std::vector<Index3>& voxels, double value) {
  std::vector<double> v(grid.size(), 0.0);
  for (const auto& p : voxels) {
    for (int a = 0; a < 3; ++a)
      if (p[a] >= grid.dims()[a]) throw IndexError("dot lies outside the grid");
    v[grid.linear(p)] = value;
  }
  return Phantom(grid, std::move(v));
}

Phantom three_dot_phantom(const Grid3& grid) {
  const auto& d = grid.dims();
  auto at = [&](double fx, double fy, double fz) {
    Index3 p;
    const double f[3] = {fx, fy, fz};
    for (int a = 0; a < 3; ++a)
      p[a] = d[a] == 1 ? 0 : static_cast<std::size_t>(std::floor(f[a] * static_cast<double>(d[a] - 1) + 0.5));
    return p;
  };
  return dots_phantom(grid, {at(0.25, 0.3, 0.5), at(0.7, 0.25, 0.4), at(0.45, 0.75, 0.65)});
}

Phantom shape_phantom(const Grid3& grid) {
  std::vector<double> v(grid.size(), 0.0);
  const auto& d = grid.dims();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Index3 p = grid.unravel(i);
    double u[3];
    for (int a = 0; a < 3; ++a)
      u[a] = d[a] == 1 ? 0.0 : static_cast<double>(p[a]) / static_cast<double>(d[a] - 1) * 2.0 - 1.0;
    // disc/ball centred left of the origin
    const double r2 = (u[0] + 0.3) * (u[0] + 0.3) + (u[1] - 0.1) * (u[1] - 0.1) + u[2] * u[2];
    if (r2 < 0.3 * 0.3) v[i] = 1.0;
    // vertical bar on the right
    if (std::abs(u[0] - 0.45) < 0.1 && std::abs(u[1]) < 0.6 && std::abs(u[2]) < 0.6) v[i] = 0.6;
  }
  return Phantom(grid, std::move(v));
}

Phantom named_phantom(const std::string& name, const Grid3& grid) {
  if (name == "dots") return three_dot_phantom(grid);
  if (name == "shape") return shape_phantom(grid);
  throw InvalidArgument("unknown phantom '" + name + "' (expected dots or shape)");
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<Variant> ablation_variants() {
  using sr::PositionMode;
  using sr::Upsample;
  return {{"M1", PositionMode::none, Upsample::nearest},
          {"M2", PositionMode::normalized, Upsample::nearest},
          {"M3", PositionMode::symmetric, Upsample::nearest},
          {"PPG", PositionMode::symmetric, Upsample::linear}};
}

namespace {

std::vector<double> modulus(const SMRow& r) {
  std::vector<double> m(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) m[i] = std::abs(r.value(i));
  return m;
}

bool ssim_fits(const Index3& d) {
  const std::size_t w = SsimOptions{}.window;
  return d[0] >= w && d[1] >= w && (d[2] == 1 || d[2] >= w);
}

}  // namespace

double mean_row_psnr(const SystemMatrix& estimate, const SystemMatrix& truth) {
  if (estimate.num_rows() != truth.num_rows()) throw DomainError("row count mismatch");
  if (truth.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.num_rows(); ++i) {
    const auto e = modulus(estimate.row(i)), t = modulus(truth.row(i));
    acc += psnr(std::span<const double>(e), std::span<const double>(t));
  }
  return acc / static_cast<double>(truth.num_rows());
}

double mean_row_ssim(const SystemMatrix& estimate, const SystemMatrix& truth) {
  if (estimate.num_rows() != truth.num_rows()) throw DomainError("row count mismatch");
  if (truth.empty() || !ssim_fits(truth.grid().dims())) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.num_rows(); ++i) {
    const auto e = modulus(estimate.row(i)), t = modulus(truth.row(i));
    acc += ssim(std::span<const double>(e), std::span<const double>(t), truth.grid().dims());
  }
  return acc / static_cast<double>(truth.num_rows());
}

std::vector<AblationRun> run_ablation(const std::vector<PairSet>& pairs_by_ratio,
                                      const AblationConfig& cfg, const ProgressCallback& progress) {
  if (pairs_by_ratio.size() != cfg.ratios.size())
    throw InvalidArgument("need one pair set per ratio");
  const auto variants = ablation_variants();
  std::vector<AblationRun> out;
  for (std::size_t ri = 0; ri < cfg.ratios.size(); ++ri) {
    const std::size_t ratio = cfg.ratios[ri];
    const PairSet& pairs = pairs_by_ratio[ri];
    if (pairs.ratio() != ratio) throw DomainError("pair set ratio does not match the ablation ratio");
    const auto val = pairs.select(Split::validation);
    std::vector<SMRow> val_hr;
    for (const Pair* p : val) val_hr.push_back(p->hr);
    const SystemMatrix truth(val_hr.front().grid(), val_hr, Provenance::loaded);
    for (const auto& name : cfg.methods) {
      const auto it = std::find_if(variants.begin(), variants.end(),
                                   [&](const Variant& v) { return v.name == name; });
      if (it == variants.end()) throw InvalidArgument("unknown ablation method '" + name + "'");
      for (std::uint64_t seed : cfg.seeds) {
        sr::ModelConfig mc = cfg.model;
        mc.mode = it->mode;
        mc.upsample = it->upsample;
        mc.ratio = ratio;
        sr::TrainConfig tc = cfg.train;
        tc.seed = seed;
        sr::EpochCallback cb;
        if (progress) cb = [&](const sr::EpochRecord& r) { progress(name, ratio, seed, r); };
        AblationRun run;
        run.result = sr::train(sr::SRModel::initialize(mc, seed), pairs, tc, cb);
        std::vector<SMRow> rec;
        for (const Pair* p : val) rec.push_back(sr::recover_row(run.result.model, p->lr));
        const SystemMatrix est(truth.grid(), std::move(rec), Provenance::recovered);
        MetricReport& r = run.report;
        r.method = name;
        r.ratio = ratio;
        r.seed = seed;
        r.row_nrmse = row_nrmse(est, truth);
        r.mean_nrmse = mean(r.row_nrmse);
        r.psnr_db = mean_row_psnr(est, truth);
        r.ssim = mean_row_ssim(est, truth);
        r.truth_id = "validation";
        out.push_back(std::move(run));
      }
    }
  }
  return out;
}

std::vector<MetricReport> summarize(const std::vector<MetricReport>& runs) {
  std::map<std::pair<std::size_t, std::string>, std::vector<const MetricReport*>> groups;
  for (const auto& r : runs) groups[{r.ratio, r.method}].push_back(&r);
  std::vector<MetricReport> out;
  for (const auto& [key, rs] : groups) {
    MetricReport m;
    m.method = key.second;
    m.ratio = key.first;
    m.seed = rs.size();
    m.truth_id = rs.front()->truth_id;
    for (const auto* r : rs) {
      m.mean_nrmse += r->mean_nrmse;
      m.psnr_db += r->psnr_db;
      m.ssim += r->ssim;
    }
    const double n = static_cast<double>(rs.size());
    m.mean_nrmse /= n;
    m.psnr_db /= n;
    m.ssim /= n;
    out.push_back(std::move(m));
  }
  return benchmark_report(std::move(out));
}

}  // namespace smcal::bench
