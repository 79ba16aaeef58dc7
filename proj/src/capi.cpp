#include "smcal/smcal.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "smcal/benchmark.hpp"
#include "smcal/io.hpp"
#include "smcal/metrics.hpp"
#include "smcal/physics.hpp"
#include "smcal/recon.hpp"
#include "smcal/sampling.hpp"
#include "smcal/sr.hpp"
#include "smcal/symmetry.hpp"

struct smcal_sm {
  smcal::SystemMatrix sm;
};
struct smcal_phantom {
  smcal::Phantom ph;
};
struct smcal_model {
  smcal::sr::SRModel model;
};
struct smcal_pairs {
  smcal::PairSet pairs;
  smcal::io::PairManifest manifest;
};

using namespace smcal;

namespace {

thread_local std::string g_last_error;

smcal_status status_of(ErrorCode c) { return static_cast<smcal_status>(static_cast<int>(c)); }

template <typename F>
smcal_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SMCAL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SMCAL_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SMCAL_E_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw InvalidArgument(std::string(name) + " must not be NULL");
}

char* dup_bytes(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

smcal_sm* wrap(SystemMatrix sm) { return new smcal_sm{std::move(sm)}; }

ScanSequence to_sequence(const smcal_sequence& s) {
  ScanSequence seq;
  switch (s.dims) {
    case 1: seq = ScanSequence::one_d(s.gradient[0], s.amplitude[0], s.base_period); break;
    case 2:
      seq = ScanSequence::two_d(s.gradient[0], s.amplitude[0], s.dividers[0], s.dividers[1], s.base_period);
      break;
    case 3:
      seq = ScanSequence::three_d(s.gradient[0], s.amplitude[0], s.dividers[0], s.dividers[1],
                                  s.dividers[2], s.base_period);
      break;
    default: throw InvalidArgument("sequence dims must be 1, 2 or 3");
  }
  for (int a = 0; a < 3; ++a) {
    seq.gradient[a] = s.gradient[a];
    seq.amplitude[a] = a < s.dims ? s.amplitude[a] : 0.0;
  }
  seq.n_time_samples = s.n_time_samples;
  seq.k_max = s.k_max;
  seq.validate();
  return seq;
}

sr::ModelConfig to_model_config(const smcal_model_params& p) {
  sr::ModelConfig c;
  if (p.mode < SMCAL_POS_NONE || p.mode > SMCAL_POS_SYMMETRIC) throw InvalidArgument("bad position mode");
  if (p.upsample != SMCAL_UP_NEAREST && p.upsample != SMCAL_UP_LINEAR) throw InvalidArgument("bad upsample mode");
  c.mode = static_cast<sr::PositionMode>(p.mode);
  c.upsample = static_cast<sr::Upsample>(p.upsample);
  c.blocks = p.blocks;
  c.stages = p.stages;
  c.features = p.features;
  c.ratio = p.ratio;
  c.spatial_dims = p.spatial_dims;
  c.residual_scale = p.residual_scale;
  c.leaky_slope = p.leaky_slope;
  c.validate();
  return c;
}

void from_model_config(const sr::ModelConfig& c, smcal_model_params* p) {
  p->mode = static_cast<smcal_position_mode>(c.mode);
  p->upsample = static_cast<smcal_upsample>(c.upsample);
  p->blocks = c.blocks;
  p->stages = c.stages;
  p->features = c.features;
  p->ratio = c.ratio;
  p->spatial_dims = c.spatial_dims;
  p->residual_scale = c.residual_scale;
  p->leaky_slope = c.leaky_slope;
}

sr::TrainConfig to_train_config(const smcal_train_params& p) {
  sr::TrainConfig t;
  t.learning_rate = p.learning_rate;
  t.batch_size = p.batch_size;
  t.max_epochs = p.max_epochs;
  t.patience = p.patience;
  t.seed = p.seed;
  t.augment = p.augment != 0;
  t.threads = p.threads;
  t.validate();
  return t;
}

std::string csv_row(const std::string& method, std::size_t ratio, std::uint64_t seed,
                    const smcal_eval_result& r) {
  std::ostringstream os;
  os << method << ',' << ratio << ',' << seed << ',' << format_double(r.mean_nrmse) << ','
     << format_double(r.psnr_db) << ',' << format_double(r.ssim) << '\n';
  return os.str();
}

}  // namespace

extern "C" {

const char* smcal_last_error(void) { return g_last_error.c_str(); }

const char* smcal_status_name(smcal_status s) {
  switch (s) {
    case SMCAL_OK: return "ok";
    case SMCAL_E_INVALID_ARGUMENT: return "invalid argument";
    case SMCAL_E_INDEX: return "index error";
    case SMCAL_E_NOT_FOUND: return "not found";
    case SMCAL_E_DUPLICATE_ROW: return "duplicate row";
    case SMCAL_E_DOMAIN: return "domain error";
    case SMCAL_E_ALIAS: return "alias error";
    case SMCAL_E_INCOMPLETE_DOMAIN: return "incomplete domain";
    case SMCAL_E_DEGENERATE_RANGE: return "degenerate range";
    case SMCAL_E_TRAINING_DIVERGED: return "training diverged";
    case SMCAL_E_IO: return "i/o error";
    case SMCAL_E_FORMAT: return "format error";
    case SMCAL_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* smcal_version(void) { return "1.0.0"; }

void smcal_buffer_free(char* p) { std::free(p); }

// ---------------------------------------------------------------------------

void smcal_sequence_defaults(smcal_sequence* seq, int dims) {
  if (!seq) return;
  *seq = smcal_sequence{};
  seq->dims = dims;
  for (int a = 0; a < 3; ++a) {
    seq->gradient[a] = 2.0;
    seq->amplitude[a] = a < dims ? 0.012 : 0.0;
  }
  if (dims == 2) {
    seq->dividers[0] = 16;
    seq->dividers[1] = 17;
  } else if (dims == 3) {
    seq->dividers[0] = 8;
    seq->dividers[1] = 9;
    seq->dividers[2] = 10;
  } else {
    seq->dividers[0] = 1;
  }
  seq->base_period = 1.0 / 25000.0;
  seq->n_time_samples = 2048;
  seq->k_max = 1024;
}

void smcal_sim_defaults(smcal_sim_params* p, int dims) {
  if (!p) return;
  *p = smcal_sim_params{};
  smcal_sequence_defaults(&p->sequence, dims);
  for (int a = 0; a < 3; ++a) {
    p->grid[a] = a < dims ? 37 : 1;
    p->fov[a] = 0.0;
  }
  p->m_sat = 1.0;
  p->beta = 500.0;
  p->k_min = 2;
  p->k_max = 300;
  p->method = SMCAL_SIM_NUMERIC;
  p->threads = 1;
}

smcal_status smcal_simulate(const smcal_sim_params* p, smcal_sm** out) {
  return guard([&] {
    require(p, "params");
    require(out, "out");
    const ScanSequence seq = to_sequence(p->sequence);
    ParticleModel pm;
    pm.m_sat = p->m_sat;
    pm.beta = p->beta;
    pm.validate();
    Index3 dims{p->grid[0], p->grid[1], p->grid[2]};
    Vec3 fov{1.0, 1.0, 1.0};
    for (int a = 0; a < 3; ++a) {
      if (a >= seq.dims() && dims[a] != 1) throw DomainError("inactive axes must have one voxel");
      fov[a] = p->fov[a] > 0.0 ? p->fov[a]
               : a < seq.dims() ? 2.0 * seq.amplitude[a] / seq.gradient[a]
                                : 1.0;
    }
    const Grid3 grid(dims, fov);
    if (p->k_min > p->k_max) throw InvalidArgument("k_min must not exceed k_max");
    std::vector<std::uint32_t> ks;
    for (std::uint32_t k = p->k_min; k <= p->k_max; ++k) ks.push_back(k);
    std::vector<Channel> channels;
    for (int a = 0; a < seq.dims(); ++a)
      if (p->channel_mask == 0 || (p->channel_mask >> a) & 1u) channels.push_back(static_cast<Channel>(a));
    SystemMatrix sm;
    if (p->method == SMCAL_SIM_CLOSED_FORM) {
      if (seq.dims() != 1) throw DomainError("the closed form exists for 1D sequences only");
      std::vector<SMRow> rows;
      for (auto k : ks) rows.push_back(simulate_sm_1d_closed_form(seq, pm, grid, k));
      sm = SystemMatrix(grid, std::move(rows), Provenance::simulated_closed_form);
    } else {
      SimulationOptions opts;
      opts.time_shift = p->time_shift;
      opts.threads = p->threads;
      sm = simulate_system_matrix(seq, pm, grid, channels, ks, opts);
    }
    if (p->top_rows > 0) sm = bench::select_rows(sm, p->top_rows, p->k_min);
    *out = wrap(std::move(sm));
  });
}

// ---------------------------------------------------------------------------

smcal_status smcal_sm_read(const char* path, smcal_sm** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(io::read_sm(path));
  });
}

smcal_status smcal_sm_write(const smcal_sm* sm, const char* path) {
  return guard([&] {
    require(sm, "sm");
    require(path, "path");
    io::write_sm(path, sm->sm);
  });
}

void smcal_sm_free(smcal_sm* sm) { delete sm; }
size_t smcal_sm_num_rows(const smcal_sm* sm) { return sm ? sm->sm.num_rows() : 0; }

void smcal_sm_dims(const smcal_sm* sm, size_t dims[3]) {
  if (!sm || !dims) return;
  for (int a = 0; a < 3; ++a) dims[a] = sm->sm.grid().dims()[a];
}

void smcal_sm_fov(const smcal_sm* sm, double fov[3]) {
  if (!sm || !fov) return;
  for (int a = 0; a < 3; ++a) fov[a] = sm->sm.grid().fov()[a];
}

smcal_status smcal_sm_row_info(const smcal_sm* sm, size_t i, int* channel, uint32_t* k) {
  return guard([&] {
    require(sm, "sm");
    if (i >= sm->sm.num_rows()) throw IndexError("row index out of range");
    if (channel) *channel = static_cast<int>(sm->sm.row(i).channel());
    if (k) *k = sm->sm.row(i).freq_index();
  });
}

smcal_status smcal_sm_row_values(const smcal_sm* sm, size_t i, double* re, double* im) {
  return guard([&] {
    require(sm, "sm");
    if (i >= sm->sm.num_rows()) throw IndexError("row index out of range");
    const auto& r = sm->sm.row(i);
    if (re) std::copy(r.re().begin(), r.re().end(), re);
    if (im) std::copy(r.im().begin(), r.im().end(), im);
  });
}

smcal_status smcal_sm_pad(const smcal_sm* sm, size_t pre, size_t post, smcal_sm** out) {
  return guard([&] {
    require(sm, "sm");
    require(out, "out");
    *out = wrap(zero_pad(sm->sm, pre, post));
  });
}

smcal_status smcal_sm_crop(const smcal_sm* sm, size_t pre, size_t post, smcal_sm** out) {
  return guard([&] {
    require(sm, "sm");
    require(out, "out");
    *out = wrap(crop(sm->sm, pre, post));
  });
}

smcal_status smcal_sm_downsample(const smcal_sm* sm, size_t ratio, smcal_sm** out) {
  return guard([&] {
    require(sm, "sm");
    require(out, "out");
    *out = wrap(downsample_equidistant(sm->sm, ratio));
  });
}

// ---------------------------------------------------------------------------

smcal_status smcal_symmetry_csv(const smcal_sm* sm, const smcal_sequence* seq, char** csv) {
  return guard([&] {
    require(sm, "sm");
    require(seq, "sequence");
    require(csv, "csv");
    *csv = dup_bytes(io::symmetry_csv(sm->sm, to_sequence(*seq)));
  });
}

smcal_status smcal_mirror_complete(const smcal_sm* sm, const smcal_sequence* seq, smcal_sm** out,
                                   smcal_mirror_stats* stats) {
  return guard([&] {
    require(sm, "sm");
    require(seq, "sequence");
    require(out, "out");
    const ScanSequence s = to_sequence(*seq);
    const Grid3& grid = sm->sm.grid();
    smcal_mirror_stats st{};
    st.rows = sm->sm.num_rows();
    st.total_voxels = grid.size();
    std::vector<SMRow> rows;
    for (const auto& row : sm->sm.rows()) {
      const auto desc = expected_parity(row.channel(), row.freq_index(), s);
      if (!desc.has_rules())
        throw DomainError(std::string("row (") + to_string(row.channel()) + ", " +
                          std::to_string(row.freq_index()) + ") has no derivable parity rule");
      const auto mask = fundamental_domain_mask(grid, desc);
      MirrorStats ms;
      rows.push_back(mirror_complete(apply_mask(row, mask), mask, desc, ms));
      st.known_voxels = fundamental_domain_size(grid, desc);
      st.filled += ms.filled;
      st.multi_path += ms.multi_path;
      st.max_disagreement = std::max(st.max_disagreement, ms.max_disagreement);
    }
    *out = wrap(SystemMatrix(grid, std::move(rows), Provenance::recovered));
    if (stats) *stats = st;
  });
}

// ---------------------------------------------------------------------------

smcal_status smcal_pairs_make(const smcal_sm* hr, size_t pad_pre, size_t pad_post, size_t ratio,
                              double validation_fraction, uint64_t seed, smcal_pairs** out) {
  return guard([&] {
    require(hr, "hr");
    require(out, "out");
    const SystemMatrix padded = zero_pad(hr->sm, pad_pre, pad_post);
    PairSet ps = split_pairs(make_pairs(padded, ratio), validation_fraction, seed);
    io::PairManifest m;
    m.ratio = ratio;
    m.source_dims = hr->sm.grid().dims();
    m.hr_dims = padded.grid().dims();
    m.lr_dims = ps.pairs().empty() ? Index3{0, 0, 0} : ps.pairs().front().lr.grid().dims();
    m.pairs = ps.size();
    m.train = ps.count(Split::train);
    m.validation = ps.count(Split::validation);
    m.validation_fraction = validation_fraction;
    m.seed = seed;
    *out = new smcal_pairs{std::move(ps), m};
  });
}

smcal_status smcal_pairs_write(const smcal_pairs* pairs, const char* dir) {
  return guard([&] {
    require(pairs, "pairs");
    require(dir, "dir");
    io::write_pairs(dir, pairs->pairs, pairs->manifest);
  });
}

smcal_status smcal_pairs_read(const char* dir, smcal_pairs** out) {
  return guard([&] {
    require(dir, "dir");
    require(out, "out");
    io::PairManifest m;
    PairSet ps = io::read_pairs(dir, &m);
    *out = new smcal_pairs{std::move(ps), m};
  });
}

void smcal_pairs_free(smcal_pairs* pairs) { delete pairs; }

void smcal_pairs_get_info(const smcal_pairs* pairs, smcal_pairs_info* info) {
  if (!pairs || !info) return;
  const auto& m = pairs->manifest;
  info->ratio = pairs->pairs.ratio();
  info->pairs = pairs->pairs.size();
  info->train = pairs->pairs.count(Split::train);
  info->validation = pairs->pairs.count(Split::validation);
  for (int a = 0; a < 3; ++a) {
    info->source_dims[a] = m.source_dims[a];
    info->hr_dims[a] = m.hr_dims[a];
    info->lr_dims[a] = m.lr_dims[a];
  }
}

// ---------------------------------------------------------------------------

void smcal_model_defaults(smcal_model_params* p) {
  if (!p) return;
  from_model_config(sr::ModelConfig{}, p);
}

void smcal_train_defaults(smcal_train_params* p) {
  if (!p) return;
  const sr::TrainConfig t;
  p->learning_rate = t.learning_rate;
  p->batch_size = t.batch_size;
  p->max_epochs = t.max_epochs;
  p->patience = t.patience;
  p->seed = t.seed;
  p->augment = t.augment ? 1 : 0;
  p->threads = t.threads;
}

smcal_status smcal_model_init(const smcal_model_params* p, uint64_t seed, smcal_model** out) {
  return guard([&] {
    require(p, "params");
    require(out, "out");
    *out = new smcal_model{sr::SRModel::initialize(to_model_config(*p), seed)};
  });
}

size_t smcal_model_parameter_count(const smcal_model* m) { return m ? m->model.parameter_count() : 0; }

void smcal_model_get_params(const smcal_model* m, smcal_model_params* p) {
  if (!m || !p) return;
  from_model_config(m->model.config(), p);
}

smcal_status smcal_model_read(const char* path, smcal_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new smcal_model{io::read_model(path)};
  });
}

smcal_status smcal_model_write(const smcal_model* m, const char* path) {
  return guard([&] {
    require(m, "model");
    require(path, "path");
    io::write_model(path, m->model);
  });
}

void smcal_model_free(smcal_model* m) { delete m; }

smcal_status smcal_train(const smcal_model* initial, const smcal_pairs* pairs,
                         const smcal_train_params* p, smcal_epoch_callback cb, void* user,
                         smcal_model** out, char** history_csv) {
  return guard([&] {
    require(initial, "initial");
    require(pairs, "pairs");
    require(p, "params");
    require(out, "out");
    sr::EpochCallback on_epoch;
    if (cb) on_epoch = [&](const sr::EpochRecord& r) { cb(r.epoch, r.train_loss, r.val_nrmse, user); };
    auto res = sr::train(initial->model, pairs->pairs, to_train_config(*p), on_epoch);
    if (history_csv) *history_csv = dup_bytes(io::history_csv(res.history));
    *out = new smcal_model{std::move(res.model)};
  });
}

// ---------------------------------------------------------------------------

smcal_status smcal_recover(const smcal_model* m, const smcal_sm* lr, size_t ratio, smcal_sm** out) {
  return guard([&] {
    require(m, "model");
    require(lr, "lr");
    require(out, "out");
    *out = wrap(sr::recover(m->model, lr->sm, ratio));
  });
}

smcal_status smcal_interpolate(const smcal_sm* lr, size_t ratio, smcal_interp method, smcal_sm** out) {
  return guard([&] {
    require(lr, "lr");
    require(out, "out");
    if (method < SMCAL_INTERP_NEAREST || method > SMCAL_INTERP_TRICUBIC)
      throw DomainError("unknown interpolation method");
    *out = wrap(sr::baseline_interpolate(lr->sm, ratio, static_cast<sr::Interpolation>(method)));
  });
}

smcal_status smcal_zero_fill(const smcal_sm* lr, size_t ratio, smcal_sm** out) {
  return guard([&] {
    require(lr, "lr");
    require(out, "out");
    *out = wrap(sr::zero_fill(lr->sm, ratio));
  });
}

// ---------------------------------------------------------------------------

smcal_status smcal_phantom_named(const char* name, const size_t dims[3], const double fov[3],
                                 smcal_phantom** out) {
  return guard([&] {
    require(name, "name");
    require(dims, "dims");
    require(fov, "fov");
    require(out, "out");
    const Grid3 g(Index3{dims[0], dims[1], dims[2]}, Vec3{fov[0], fov[1], fov[2]});
    *out = new smcal_phantom{bench::named_phantom(name, g)};
  });
}

smcal_status smcal_phantom_read(const char* path, smcal_phantom** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new smcal_phantom{io::read_phantom(path)};
  });
}

smcal_status smcal_phantom_write(const smcal_phantom* ph, const char* path) {
  return guard([&] {
    require(ph, "phantom");
    require(path, "path");
    io::write_phantom(path, ph->ph);
  });
}

void smcal_phantom_free(smcal_phantom* ph) { delete ph; }

void smcal_phantom_dims(const smcal_phantom* ph, size_t dims[3]) {
  if (!ph || !dims) return;
  for (int a = 0; a < 3; ++a) dims[a] = ph->ph.grid().dims()[a];
}

void smcal_phantom_values(const smcal_phantom* ph, double* values) {
  if (!ph || !values) return;
  std::copy(ph->ph.values().begin(), ph->ph.values().end(), values);
}

void smcal_kaczmarz_defaults(smcal_kaczmarz_params* p) {
  if (!p) return;
  const KaczmarzConfig k;
  p->lambda = k.lambda;
  p->sweeps = k.sweeps;
  p->enforce_real_nonneg = k.enforce_real_nonneg ? 1 : 0;
  p->shuffle_rows = 0;
  p->seed = k.seed;
}

smcal_status smcal_reconstruct(const smcal_sm* recovered, const smcal_sm* truth,
                               const smcal_phantom* phantom, const smcal_kaczmarz_params* p,
                               smcal_phantom** out, smcal_recon_metrics* metrics, char** residual_csv) {
  return guard([&] {
    require(recovered, "recovered");
    require(truth, "truth");
    require(phantom, "phantom");
    require(p, "params");
    KaczmarzConfig k;
    k.lambda = p->lambda;
    k.sweeps = p->sweeps;
    k.enforce_real_nonneg = p->enforce_real_nonneg != 0;
    k.row_order = p->shuffle_rows ? RowOrder::seeded_shuffle : RowOrder::sequential;
    k.seed = p->seed;
    const auto res = reconstruction_pipeline(recovered->sm, truth->sm, phantom->ph, k);
    if (metrics) {
      metrics->nrmse = res.nrmse;
      metrics->psnr_db = res.psnr_db;
      metrics->ssim = res.ssim;
      metrics->ssim_available = res.ssim_available ? 1 : 0;
      metrics->lambda_effective = res.reconstruction.lambda_effective;
      metrics->skipped_rows = res.reconstruction.skipped_rows;
    }
    if (residual_csv) *residual_csv = dup_bytes(io::residual_csv(res.reconstruction));
    if (out) {
      // Real part may dip below zero when the clamp is disabled.
      std::vector<double> v = res.reconstruction.values;
      if (!k.enforce_real_nonneg)
        for (auto& x : v) x = std::max(0.0, x);
      *out = new smcal_phantom{Phantom(res.reconstruction.grid, std::move(v))};
    }
  });
}

// ---------------------------------------------------------------------------

smcal_status smcal_evaluate(const smcal_sm* estimate, const smcal_sm* truth,
                            smcal_eval_result* result, char** rows_csv) {
  return guard([&] {
    require(estimate, "estimate");
    require(truth, "truth");
    require(result, "result");
    if (!estimate->sm.grid().same_shape(truth->sm.grid()))
      throw DomainError("estimate and truth grids differ");
    result->mean_nrmse = mean(row_nrmse(estimate->sm, truth->sm));
    result->psnr_db = bench::mean_row_psnr(estimate->sm, truth->sm);
    result->ssim = bench::mean_row_ssim(estimate->sm, truth->sm);
    if (rows_csv) *rows_csv = dup_bytes(io::row_nrmse_csv(estimate->sm, truth->sm));
  });
}

smcal_status smcal_report_csv(const char* method, size_t ratio, uint64_t seed,
                              const smcal_eval_result* r, char** csv) {
  return guard([&] {
    require(method, "method");
    require(r, "result");
    require(csv, "csv");
    *csv = dup_bytes("method,ratio,seed,mean_nrmse,psnr_db,ssim\n" + csv_row(method, ratio, seed, *r));
  });
}

// ---------------------------------------------------------------------------

void smcal_ablation_defaults(smcal_ablation_params* p) {
  if (!p) return;
  *p = smcal_ablation_params{};
  const bench::BenchmarkConfig b;
  p->grid = b.grid;
  p->rows = b.rows;
  p->gradient = b.gradient;
  p->amplitude = b.amplitude;
  p->beta = b.beta;
  p->k_min = b.k_min;
  p->k_max = b.k_max;
  p->n_time_samples = b.n_time_samples;
  p->validation_fraction = b.validation_fraction;
  p->split_seed = b.split_seed;
  p->ratios[0] = 2;
  p->ratios[1] = 4;
  p->n_ratios = 2;
  for (std::size_t i = 0; i < 5; ++i) p->seeds[i] = i;
  p->n_seeds = 5;
  smcal_model_defaults(&p->model);
  p->model.features = 8;
  smcal_train_defaults(&p->train);
  p->train.max_epochs = 150;
}

smcal_status smcal_ablate(const smcal_ablation_params* p, smcal_epoch_callback cb, void* user,
                          char** runs_csv, char** summary_csv) {
  return guard([&] {
    require(p, "params");
    if (p->n_ratios == 0 || p->n_ratios > 4) throw InvalidArgument("need 1 to 4 ratios");
    if (p->n_seeds == 0 || p->n_seeds > 16) throw InvalidArgument("need 1 to 16 seeds");
    bench::BenchmarkConfig b;
    b.grid = p->grid;
    b.rows = p->rows;
    b.gradient = p->gradient;
    b.amplitude = p->amplitude;
    b.beta = p->beta;
    b.k_min = p->k_min;
    b.k_max = p->k_max;
    b.n_time_samples = p->n_time_samples;
    b.validation_fraction = p->validation_fraction;
    b.split_seed = p->split_seed;
    b.validate();
    SystemMatrix truth = bench::select_rows(bench::simulate_candidates(b, b.beta), b.rows, b.k_min);
    const SystemMatrix padded = zero_pad(truth, b.pad_pre, b.pad_post);
    bench::AblationConfig ac;
    ac.ratios.assign(p->ratios, p->ratios + p->n_ratios);
    ac.seeds.assign(p->seeds, p->seeds + p->n_seeds);
    ac.model = to_model_config(p->model);
    ac.train = to_train_config(p->train);
    std::vector<PairSet> sets;
    for (auto r : ac.ratios) sets.push_back(split_pairs(make_pairs(padded, r), b.validation_fraction, b.split_seed));
    bench::ProgressCallback progress;
    if (cb)
      progress = [&](const std::string&, std::size_t, std::uint64_t, const sr::EpochRecord& r) {
        cb(r.epoch, r.train_loss, r.val_nrmse, user);
      };
    const auto runs = bench::run_ablation(sets, ac, progress);
    std::vector<MetricReport> reports;
    for (const auto& r : runs) reports.push_back(r.report);
    if (runs_csv) *runs_csv = dup_bytes(benchmark_csv(benchmark_report(reports)));
    if (summary_csv) {
      std::ostringstream os;
      os << "method,ratio,runs,mean_nrmse,psnr_db,ssim\n";
      for (const auto& m : bench::summarize(reports))
        os << m.method << ',' << m.ratio << ',' << m.seed << ',' << format_double(m.mean_nrmse) << ','
           << format_double(m.psnr_db) << ',' << format_double(m.ssim) << '\n';
      *summary_csv = dup_bytes(os.str());
    }
  });
}

// ---------------------------------------------------------------------------

smcal_status smcal_render_sm_row(const smcal_sm* sm, size_t i, char** pgm, size_t* size) {
  return guard([&] {
    require(sm, "sm");
    require(pgm, "pgm");
    if (i >= sm->sm.num_rows()) throw IndexError("row index out of range");
    const std::string bytes = io::render_row_pgm(sm->sm.row(i));
    *pgm = dup_bytes(bytes);
    if (size) *size = bytes.size();
  });
}

smcal_status smcal_render_phantom(const smcal_phantom* ph, char** pgm, size_t* size) {
  return guard([&] {
    require(ph, "phantom");
    require(pgm, "pgm");
    const std::string bytes = io::render_pgm(ph->ph.values(), ph->ph.grid().dims());
    *pgm = dup_bytes(bytes);
    if (size) *size = bytes.size();
  });
}

smcal_status smcal_write_bytes(const char* path, const char* data, size_t size) {
  return guard([&] {
    require(path, "path");
    if (size > 0) require(data, "data");
    io::write_file_atomic(path, std::string(data ? data : "", size));
  });
}

}  // extern "C"
