// smcal: command-line front end over the C API.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smcal/smcal.h"

namespace {

/// Bad configuration or arguments; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Library or file failure; exit code 1.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(smcal_status s) {
  if (s != SMCAL_OK)
    throw RuntimeFailure(std::string(smcal_status_name(s)) + ": " + smcal_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using SmPtr = std::unique_ptr<smcal_sm, Deleter<smcal_sm, smcal_sm_free>>;
using PhantomPtr = std::unique_ptr<smcal_phantom, Deleter<smcal_phantom, smcal_phantom_free>>;
using ModelPtr = std::unique_ptr<smcal_model, Deleter<smcal_model, smcal_model_free>>;
using PairsPtr = std::unique_ptr<smcal_pairs, Deleter<smcal_pairs, smcal_pairs_free>>;

/// Takes ownership of a library-allocated string.
std::string take(char* p, std::size_t size) {
  std::string s(p, size);
  smcal_buffer_free(p);
  return s;
}
std::string take(char* p) { return take(p, std::char_traits<char>::length(p)); }

void write_text(const std::string& path, const std::string& text) {
  check(smcal_write_bytes(path.c_str(), text.data(), text.size()));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

struct Key {
  std::string name;
  std::string help;
  std::optional<std::string> fallback;  // empty: required unless optional
  bool optional = false;
};

class Config {
 public:
  Config(std::string command, std::vector<Key> keys) : command_(std::move(command)), keys_(std::move(keys)) {}

  const std::vector<Key>& keys() const { return keys_; }

  void set(const std::string& key, const std::string& value, const std::string& origin) {
    if (!find(key)) throw UsageError(origin + ": unknown key '" + key + "' for '" + command_ + "'");
    values_[key] = value;
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      const std::string where = path + ":" + std::to_string(n);
      if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw UsageError(where + ": empty key");
      set(key, trim(line.substr(eq + 1)), where);
    }
  }

  void check_required() const {
    for (const auto& k : keys_)
      if (!k.fallback && !k.optional && !values_.count(k.name))
        throw UsageError("'" + command_ + "' requires key '" + k.name + "'");
  }

  bool has(const std::string& key) const {
    const Key* k = find(key);
    return values_.count(key) || (k && k->fallback);
  }

  std::string str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const Key* k = find(key);
    if (!k) throw std::logic_error("undeclared key " + key);
    if (!k->fallback) throw UsageError("missing key '" + key + "'");
    return *k->fallback;
  }

  template <typename T>
  T number(const std::string& key) const {
    return parse<T>(key, str(key));
  }

  template <typename T>
  std::vector<T> numbers(const std::string& key) const {
    std::vector<T> out;
    for (const auto& item : split_list(str(key))) out.push_back(parse<T>(key, item));
    return out;
  }

  bool flag(const std::string& key) const {
    const std::string v = str(key);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError("key '" + key + "' expects a boolean, got '" + v + "'");
  }

 private:
  const Key* find(const std::string& key) const {
    for (const auto& k : keys_)
      if (k.name == key) return &k;
    return nullptr;
  }

  template <typename T>
  static T parse(const std::string& key, const std::string& text) {
    T v{};
    const char* b = text.data();
    const char* e = b + text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || text.empty())
      throw UsageError("key '" + key + "': cannot parse '" + text + "'");
    if constexpr (std::is_floating_point_v<T>)
      if (!std::isfinite(v)) throw UsageError("key '" + key + "' must be finite");
    return v;
  }

  std::string command_;
  std::vector<Key> keys_;
  std::map<std::string, std::string> values_;
};

std::vector<Key> sequence_keys() {
  return {
      {"dims", "scan dimensionality 1, 2 or 3 (default: from the input)", std::nullopt, true},
      {"gradient", "selection-field gradient in T/m", "2"},
      {"amplitude", "drive amplitude in T", "0.012"},
      {"dividers", "frequency dividers, comma separated (default per dims)", std::nullopt, true},
      {"base_period", "base period in s", "4e-05"},
      {"time_samples", "time samples per period", "2048"},
  };
}

std::vector<Key> model_keys() {
  return {
      {"mode", "position encoding: none, normalized, symmetric", "symmetric"},
      {"upsample", "network upsampling: nearest, linear", "linear"},
      {"blocks", "residual dense blocks", "2"},
      {"stages", "conv stages per block", "3"},
      {"features", "feature channels", "16"},
      {"spatial_dims", "2 or 3 (convolution kernel rank)", "2"},
      {"residual_scale", "block residual scale", "0.2"},
      {"leaky_slope", "leaky ReLU slope", "0.2"},
  };
}

std::vector<Key> train_keys() {
  return {
      {"learning_rate", "Adam step size", "0.001"},
      {"batch_size", "mini-batch size", "8"},
      {"epochs", "maximum epochs", "50"},
      {"patience", "early-stopping patience, 0 disables", "0"},
      {"seed", "initialisation and shuffling seed", "0"},
      {"augment", "random flips/rotations", "true"},
      {"threads", "worker threads", "1"},
  };
}

std::vector<Key> concat(std::vector<Key> a, const std::vector<Key>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

int active_dims(const size_t dims[3]) {
  int n = 0;
  for (int a = 0; a < 3; ++a) n += dims[a] > 1;
  return std::max(n, 1);
}

smcal_sequence make_sequence(const Config& cfg, int inferred_dims) {
  const int dims = cfg.has("dims") ? cfg.number<int>("dims") : inferred_dims;
  if (dims < 1 || dims > 3) throw UsageError("dims must be 1, 2 or 3");
  smcal_sequence seq;
  smcal_sequence_defaults(&seq, dims);
  const double g = cfg.number<double>("gradient");
  const double a = cfg.number<double>("amplitude");
  for (int i = 0; i < 3; ++i) {
    seq.gradient[i] = g;
    seq.amplitude[i] = i < dims ? a : 0.0;
  }
  if (cfg.has("dividers")) {
    const auto d = cfg.numbers<unsigned>("dividers");
    if (static_cast<int>(d.size()) != dims) throw UsageError("dividers needs one value per axis");
    for (int i = 0; i < dims; ++i) seq.dividers[i] = d[i];
  }
  seq.base_period = cfg.number<double>("base_period");
  seq.n_time_samples = cfg.number<size_t>("time_samples");
  seq.k_max = static_cast<uint32_t>(seq.n_time_samples / 2);
  return seq;
}

smcal_model_params make_model_params(const Config& cfg) {
  smcal_model_params p;
  smcal_model_defaults(&p);
  const std::string mode = cfg.str("mode");
  if (mode == "none") p.mode = SMCAL_POS_NONE;
  else if (mode == "normalized") p.mode = SMCAL_POS_NORMALIZED;
  else if (mode == "symmetric") p.mode = SMCAL_POS_SYMMETRIC;
  else throw UsageError("mode must be none, normalized or symmetric");
  const std::string up = cfg.str("upsample");
  if (up == "nearest") p.upsample = SMCAL_UP_NEAREST;
  else if (up == "linear") p.upsample = SMCAL_UP_LINEAR;
  else throw UsageError("upsample must be nearest or linear");
  p.blocks = cfg.number<size_t>("blocks");
  p.stages = cfg.number<size_t>("stages");
  p.features = cfg.number<size_t>("features");
  p.spatial_dims = cfg.number<int>("spatial_dims");
  p.residual_scale = cfg.number<double>("residual_scale");
  p.leaky_slope = cfg.number<double>("leaky_slope");
  return p;
}

smcal_train_params make_train_params(const Config& cfg) {
  smcal_train_params t;
  smcal_train_defaults(&t);
  t.learning_rate = cfg.number<double>("learning_rate");
  t.batch_size = cfg.number<size_t>("batch_size");
  t.max_epochs = cfg.number<size_t>("epochs");
  t.patience = cfg.number<size_t>("patience");
  t.seed = cfg.number<uint64_t>("seed");
  t.augment = cfg.flag("augment") ? 1 : 0;
  t.threads = cfg.number<unsigned>("threads");
  return t;
}

SmPtr load_sm(const std::string& path) {
  smcal_sm* p = nullptr;
  check(smcal_sm_read(path.c_str(), &p));
  return SmPtr(p);
}

void save_sm(const smcal_sm* sm, const std::string& path) { check(smcal_sm_write(sm, path.c_str())); }

void print_epoch(size_t epoch, double loss, double val, void*) {
  std::fprintf(stderr, "epoch %zu  loss %.6g  val_nrmse %.6g\n", epoch, loss, val);
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_simulate(const Config& cfg) {
  const int dims = cfg.has("dims") ? cfg.number<int>("dims") : 2;
  smcal_sim_params p;
  smcal_sim_defaults(&p, dims);
  p.sequence = make_sequence(cfg, dims);
  const auto grid = cfg.numbers<size_t>("grid");
  if (grid.size() == 1) {
    for (int a = 0; a < 3; ++a) p.grid[a] = a < dims ? grid[0] : 1;
  } else if (static_cast<int>(grid.size()) == dims) {
    for (int a = 0; a < 3; ++a) p.grid[a] = a < dims ? grid[a] : 1;
  } else {
    throw UsageError("grid needs one value or one per axis");
  }
  if (cfg.has("fov")) {
    const auto fov = cfg.numbers<double>("fov");
    if (fov.size() != 1 && static_cast<int>(fov.size()) != dims)
      throw UsageError("fov needs one value or one per axis");
    for (int a = 0; a < dims; ++a) p.fov[a] = fov.size() == 1 ? fov[0] : fov[a];
  }
  p.m_sat = cfg.number<double>("m_sat");
  p.beta = cfg.number<double>("beta");
  p.k_min = cfg.number<uint32_t>("k_min");
  p.k_max = cfg.number<uint32_t>("k_max");
  p.top_rows = cfg.number<size_t>("top_rows");
  p.time_shift = cfg.number<double>("time_shift");
  p.threads = cfg.number<unsigned>("threads");
  const std::string channels = cfg.str("channels");
  if (channels != "all") {
    p.channel_mask = 0;
    for (const auto& c : split_list(channels)) {
      if (c == "x") p.channel_mask |= 1u;
      else if (c == "y") p.channel_mask |= 2u;
      else if (c == "z") p.channel_mask |= 4u;
      else throw UsageError("channels must be 'all' or a list of x, y, z");
    }
  }
  const std::string method = cfg.str("method");
  if (method == "numeric") p.method = SMCAL_SIM_NUMERIC;
  else if (method == "closed_form") p.method = SMCAL_SIM_CLOSED_FORM;
  else throw UsageError("method must be numeric or closed_form");

  smcal_sm* sm = nullptr;
  check(smcal_simulate(&p, &sm));
  SmPtr owned(sm);
  save_sm(sm, cfg.str("out"));
  std::printf("wrote %zu rows to %s\n", smcal_sm_num_rows(sm), cfg.str("out").c_str());
}

void cmd_pairs(const Config& cfg) {
  const SmPtr hr = load_sm(cfg.str("in"));
  smcal_pairs* raw = nullptr;
  check(smcal_pairs_make(hr.get(), cfg.number<size_t>("pad_pre"), cfg.number<size_t>("pad_post"),
                         cfg.number<size_t>("ratio"), cfg.number<double>("validation_fraction"),
                         cfg.number<uint64_t>("seed"), &raw));
  PairsPtr pairs(raw);
  check(smcal_pairs_write(raw, cfg.str("out").c_str()));
  smcal_pairs_info info;
  smcal_pairs_get_info(raw, &info);
  std::printf("%zu pairs (%zu train, %zu validation)  source %zux%zux%zu  hr %zux%zux%zu  lr %zux%zux%zu\n",
              info.pairs, info.train, info.validation, info.source_dims[0], info.source_dims[1],
              info.source_dims[2], info.hr_dims[0], info.hr_dims[1], info.hr_dims[2], info.lr_dims[0],
              info.lr_dims[1], info.lr_dims[2]);
}

void cmd_symcheck(const Config& cfg) {
  const SmPtr sm = load_sm(cfg.str("in"));
  size_t dims[3];
  smcal_sm_dims(sm.get(), dims);
  const smcal_sequence seq = make_sequence(cfg, active_dims(dims));
  char* csv = nullptr;
  check(smcal_symmetry_csv(sm.get(), &seq, &csv));
  write_text(cfg.str("out"), take(csv));
}

void cmd_mirror(const Config& cfg) {
  const SmPtr sm = load_sm(cfg.str("in"));
  size_t dims[3];
  smcal_sm_dims(sm.get(), dims);
  const smcal_sequence seq = make_sequence(cfg, active_dims(dims));
  smcal_sm* out = nullptr;
  smcal_mirror_stats st;
  check(smcal_mirror_complete(sm.get(), &seq, &out, &st));
  SmPtr owned(out);
  save_sm(out, cfg.str("out"));
  std::printf("rows %zu  known %zu/%zu voxels per row  filled %zu  multi-path %zu  max disagreement %.3g\n",
              st.rows, st.known_voxels, st.total_voxels, st.filled, st.multi_path, st.max_disagreement);
}

void cmd_train(const Config& cfg) {
  smcal_pairs* rawp = nullptr;
  check(smcal_pairs_read(cfg.str("pairs").c_str(), &rawp));
  PairsPtr pairs(rawp);
  smcal_pairs_info info;
  smcal_pairs_get_info(rawp, &info);
  const smcal_train_params tp = make_train_params(cfg);

  smcal_model* init = nullptr;
  if (cfg.has("init")) {
    check(smcal_model_read(cfg.str("init").c_str(), &init));
  } else {
    smcal_model_params mp = make_model_params(cfg);
    mp.ratio = info.ratio;
    check(smcal_model_init(&mp, tp.seed, &init));
  }
  ModelPtr initial(init);
  smcal_model* trained = nullptr;
  char* history = nullptr;
  check(smcal_train(init, rawp, &tp, cfg.flag("quiet") ? nullptr : print_epoch, nullptr, &trained, &history));
  ModelPtr model(trained);
  const std::string hist = take(history);
  check(smcal_model_write(trained, cfg.str("out").c_str()));
  if (cfg.has("history")) write_text(cfg.str("history"), hist);
  std::printf("trained %zu parameters, wrote %s\n", smcal_model_parameter_count(trained), cfg.str("out").c_str());
}

void cmd_recover(const Config& cfg) {
  const SmPtr lr = load_sm(cfg.str("in"));
  const size_t ratio = cfg.number<size_t>("ratio");
  const std::string method = cfg.str("method");
  smcal_sm* out = nullptr;
  if (method == "model") {
    if (!cfg.has("model")) throw UsageError("method = model requires key 'model'");
    smcal_model* m = nullptr;
    check(smcal_model_read(cfg.str("model").c_str(), &m));
    ModelPtr model(m);
    check(smcal_recover(m, lr.get(), ratio, &out));
  } else if (method == "zero_fill") {
    check(smcal_zero_fill(lr.get(), ratio, &out));
  } else {
    smcal_interp interp;
    if (method == "nearest") interp = SMCAL_INTERP_NEAREST;
    else if (method == "trilinear") interp = SMCAL_INTERP_TRILINEAR;
    else if (method == "tricubic") interp = SMCAL_INTERP_TRICUBIC;
    else throw UsageError("method must be model, nearest, trilinear, tricubic or zero_fill");
    check(smcal_interpolate(lr.get(), ratio, interp, &out));
  }
  SmPtr owned(out);
  if (cfg.has("crop")) {
    const auto c = cfg.numbers<size_t>("crop");
    if (c.size() != 2) throw UsageError("crop expects 'pre,post'");
    smcal_sm* cropped = nullptr;
    check(smcal_sm_crop(out, c[0], c[1], &cropped));
    owned.reset(cropped);
  }
  save_sm(owned.get(), cfg.str("out"));
}

PhantomPtr phantom_for(const Config& cfg, const smcal_sm* grid_source) {
  const std::string spec = cfg.str("phantom");
  smcal_phantom* ph = nullptr;
  if (spec == "dots" || spec == "shape") {
    size_t dims[3];
    double fov[3];
    smcal_sm_dims(grid_source, dims);
    smcal_sm_fov(grid_source, fov);
    check(smcal_phantom_named(spec.c_str(), dims, fov, &ph));
  } else {
    check(smcal_phantom_read(spec.c_str(), &ph));
  }
  return PhantomPtr(ph);
}

void cmd_reconstruct(const Config& cfg) {
  const SmPtr sm = load_sm(cfg.str("sm"));
  const SmPtr truth = load_sm(cfg.str("truth"));
  const PhantomPtr phantom = phantom_for(cfg, truth.get());
  smcal_kaczmarz_params kp;
  smcal_kaczmarz_defaults(&kp);
  kp.lambda = cfg.number<double>("lambda");
  kp.sweeps = cfg.number<size_t>("sweeps");
  kp.enforce_real_nonneg = cfg.flag("nonneg") ? 1 : 0;
  kp.shuffle_rows = cfg.flag("shuffle") ? 1 : 0;
  kp.seed = cfg.number<uint64_t>("seed");
  smcal_phantom* rec = nullptr;
  smcal_recon_metrics m;
  char* residuals = nullptr;
  check(smcal_reconstruct(sm.get(), truth.get(), phantom.get(), &kp, &rec, &m, &residuals));
  PhantomPtr owned(rec);
  const std::string res = take(residuals);
  check(smcal_phantom_write(rec, cfg.str("out").c_str()));
  if (cfg.has("residuals")) write_text(cfg.str("residuals"), res);
  if (cfg.has("phantom_out")) check(smcal_phantom_write(phantom.get(), cfg.str("phantom_out").c_str()));
  std::ostringstream os;
  os.precision(17);
  os << "nrmse,psnr_db,ssim,lambda_effective,skipped_rows\n"
     << m.nrmse << ',' << m.psnr_db << ',';
  if (m.ssim_available) os << m.ssim;
  os << ',' << m.lambda_effective << ',' << m.skipped_rows << '\n';
  if (cfg.has("metrics")) write_text(cfg.str("metrics"), os.str());
  std::printf("nrmse %.6g  psnr %.4g dB  ssim %s\n", m.nrmse, m.psnr_db,
              m.ssim_available ? std::to_string(m.ssim).c_str() : "n/a");
}

void cmd_eval(const Config& cfg) {
  const SmPtr est = load_sm(cfg.str("estimate"));
  const SmPtr truth = load_sm(cfg.str("truth"));
  smcal_eval_result r;
  char* rows = nullptr;
  check(smcal_evaluate(est.get(), truth.get(), &r, cfg.has("rows") ? &rows : nullptr));
  if (rows) write_text(cfg.str("rows"), take(rows));
  char* csv = nullptr;
  check(smcal_report_csv(cfg.str("method").c_str(), cfg.number<size_t>("ratio"), cfg.number<uint64_t>("seed"),
                         &r, &csv));
  write_text(cfg.str("out"), take(csv));
  std::printf("mean nrmse %.6g  psnr %.4g dB  ssim %.4g\n", r.mean_nrmse, r.psnr_db, r.ssim);
}

void cmd_ablate(const Config& cfg) {
  smcal_ablation_params p;
  smcal_ablation_defaults(&p);
  p.grid = cfg.number<size_t>("grid");
  p.rows = cfg.number<size_t>("rows");
  p.gradient = cfg.number<double>("gradient");
  p.amplitude = cfg.number<double>("amplitude");
  p.beta = cfg.number<double>("beta");
  p.k_min = cfg.number<uint32_t>("k_min");
  p.k_max = cfg.number<uint32_t>("k_max");
  p.n_time_samples = cfg.number<size_t>("time_samples");
  p.validation_fraction = cfg.number<double>("validation_fraction");
  p.split_seed = cfg.number<uint64_t>("split_seed");
  const auto ratios = cfg.numbers<size_t>("ratios");
  if (ratios.empty() || ratios.size() > 4) throw UsageError("ratios takes 1 to 4 values");
  std::copy(ratios.begin(), ratios.end(), p.ratios);
  p.n_ratios = ratios.size();
  const auto seeds = cfg.numbers<uint64_t>("seeds");
  if (seeds.empty() || seeds.size() > 16) throw UsageError("seeds takes 1 to 16 values");
  std::copy(seeds.begin(), seeds.end(), p.seeds);
  p.n_seeds = seeds.size();
  p.model = make_model_params(cfg);
  p.train = make_train_params(cfg);
  char* runs = nullptr;
  char* summary = nullptr;
  check(smcal_ablate(&p, cfg.flag("quiet") ? nullptr : print_epoch, nullptr, &runs, &summary));
  const std::string runs_csv = take(runs);
  const std::string summary_csv = take(summary);
  write_text(cfg.str("out"), runs_csv);
  if (cfg.has("summary")) write_text(cfg.str("summary"), summary_csv);
  std::fputs(summary_csv.c_str(), stdout);
}

void cmd_render(const Config& cfg) {
  char* pgm = nullptr;
  size_t size = 0;
  if (cfg.has("sm") == cfg.has("phantom")) throw UsageError("render needs exactly one of 'sm' or 'phantom'");
  if (cfg.has("sm")) {
    const SmPtr sm = load_sm(cfg.str("sm"));
    check(smcal_render_sm_row(sm.get(), cfg.number<size_t>("row"), &pgm, &size));
  } else {
    smcal_phantom* ph = nullptr;
    check(smcal_phantom_read(cfg.str("phantom").c_str(), &ph));
    PhantomPtr owned(ph);
    check(smcal_render_phantom(ph, &pgm, &size));
  }
  write_text(cfg.str("out"), take(pgm, size));
}

struct Command {
  std::string name;
  std::string help;
  std::vector<Key> keys;
  void (*run)(const Config&);
};

std::vector<Command> commands() {
  const Key quiet{"quiet", "suppress per-epoch progress", "false"};
  return {
      {"simulate", "simulate a ground-truth system matrix (SMB)",
       concat(sequence_keys(),
              {{"grid", "voxels per active axis, one value or one per axis", "37"},
               {"fov", "field of view in m (default 2 A / G)", std::nullopt, true},
               {"m_sat", "particle saturation moment", "1"},
               {"beta", "Langevin steepness in 1/T", "500"},
               {"k_min", "lowest frequency index", "2"},
               {"k_max", "highest frequency index", "300"},
               {"channels", "receive channels: all or a list of x, y, z", "all"},
               {"top_rows", "keep this many highest-energy rows (0 keeps all)", "0"},
               {"time_shift", "excitation delay in s", "0"},
               {"method", "numeric or closed_form (1D only)", "numeric"},
               {"threads", "worker threads (0 = all cores)", "1"},
               {"out", "output SMB file", std::nullopt}}),
       cmd_simulate},
      {"pairs", "pad, decimate and split into LR/HR pairs",
       {{"in", "HR system matrix (SMB)", std::nullopt},
        {"ratio", "downsampling ratio per axis", std::nullopt},
        {"pad_pre", "zeros before each axis", "1"},
        {"pad_post", "zeros after each axis", "2"},
        {"validation_fraction", "share of validation pairs", "0.1"},
        {"seed", "split seed", "42"},
        {"out", "output directory", std::nullopt}},
       cmd_pairs},
      {"symcheck", "parity residuals per row (CSV)",
       concat(sequence_keys(), {{"in", "system matrix (SMB)", std::nullopt}, {"out", "output CSV", std::nullopt}}),
       cmd_symcheck},
      {"mirror", "rebuild full rows from their fundamental domain",
       concat(sequence_keys(),
              {{"in", "system matrix (SMB)", std::nullopt}, {"out", "output SMB", std::nullopt}}),
       cmd_mirror},
      {"train", "train a super-resolution model",
       concat(concat(model_keys(), train_keys()),
              {{"pairs", "pairs directory", std::nullopt},
               {"init", "start from this checkpoint instead of a fresh model", std::nullopt, true},
               {"history", "per-epoch CSV", std::nullopt, true},
               quiet,
               {"out", "output checkpoint (SRM)", std::nullopt}}),
       cmd_train},
      {"recover", "upsample an LR system matrix",
       {{"in", "LR system matrix (SMB)", std::nullopt},
        {"ratio", "upsampling ratio", std::nullopt},
        {"method", "model, nearest, trilinear, tricubic or zero_fill", std::nullopt},
        {"model", "checkpoint for method = model", std::nullopt, true},
        {"crop", "crop 'pre,post' voxels after upsampling", std::nullopt, true},
        {"out", "output SMB", std::nullopt}},
       cmd_recover},
      {"reconstruct", "Kaczmarz reconstruction of a simulated phantom",
       {{"sm", "system matrix used for solving (SMB)", std::nullopt},
        {"truth", "system matrix used to simulate the signal (SMB)", std::nullopt},
        {"phantom", "PHB file, or dots / shape", std::nullopt},
        {"lambda", "regularisation", "0.75"},
        {"sweeps", "Kaczmarz sweeps", "3"},
        {"nonneg", "project onto real non-negative values", "true"},
        {"shuffle", "seeded row order", "false"},
        {"seed", "row-order seed", "0"},
        {"metrics", "metrics CSV", std::nullopt, true},
        {"residuals", "residual-per-sweep CSV", std::nullopt, true},
        {"phantom_out", "write the phantom used (PHB)", std::nullopt, true},
        {"out", "reconstructed phantom (PHB)", std::nullopt}},
       cmd_reconstruct},
      {"eval", "compare a system matrix against the truth",
       {{"estimate", "estimated system matrix (SMB)", std::nullopt},
        {"truth", "reference system matrix (SMB)", std::nullopt},
        {"method", "label for the report", "estimate"},
        {"ratio", "ratio for the report", "1"},
        {"seed", "seed for the report", "0"},
        {"rows", "per-row NRMSE CSV", std::nullopt, true},
        {"out", "report CSV", std::nullopt}},
       cmd_eval},
      {"ablate", "position-encoding / upsampling ablation",
       concat(concat(model_keys(), train_keys()),
              {{"grid", "simulation grid per axis", "37"},
               {"rows", "retained rows", "200"},
               {"gradient", "T/m", "2"},
               {"amplitude", "T", "0.012"},
               {"beta", "Langevin steepness in 1/T", "500"},
               {"k_min", "lowest retained frequency index", "20"},
               {"k_max", "highest simulated frequency index", "300"},
               {"time_samples", "time samples per period", "2048"},
               {"validation_fraction", "share of validation pairs", "0.1"},
               {"split_seed", "split seed", "42"},
               {"ratios", "comma-separated ratios", "2,4"},
               {"seeds", "comma-separated seeds", "0,1,2,3,4"},
               {"summary", "per-method mean CSV", std::nullopt, true},
               quiet,
               {"out", "per-run CSV", std::nullopt}}),
       cmd_ablate},
      {"render", "central slice as binary PGM",
       {{"sm", "system matrix (SMB)", std::nullopt, true},
        {"row", "row index", "0"},
        {"phantom", "phantom (PHB)", std::nullopt, true},
        {"out", "output PGM", std::nullopt}},
       cmd_render},
  };
}

/// Ablation defaults differ from a single training run.
void ablation_overrides(std::vector<Key>& keys) {
  for (auto& k : keys) {
    if (k.name == "features") k.fallback = "8";
    if (k.name == "epochs") k.fallback = "150";
  }
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"System-matrix calibration toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(smcal_version()));

  std::vector<Command> cmds = commands();
  for (auto& c : cmds)
    if (c.name == "ablate") ablation_overrides(c.keys);

  struct Bound {
    Command* cmd;
    CLI::App* sub;
    std::string config_path;
    std::map<std::string, std::string> flags;
  };
  std::vector<Bound> bound;
  bound.reserve(cmds.size());
  for (auto& c : cmds) {
    Bound b{&c, app.add_subcommand(c.name, c.help), {}, {}};
    bound.push_back(std::move(b));
  }
  for (auto& b : bound) {
    b.sub->add_option("-c,--config", b.config_path, "key = value file; flags override it");
    for (const auto& k : b.cmd->keys) {
      std::string help = k.help;
      if (k.fallback) help += " [" + *k.fallback + "]";
      b.sub->add_option(flag_name(k.name), b.flags[k.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto& b : bound) {
    if (!b.sub->parsed()) continue;
    try {
      Config cfg(b.cmd->name, b.cmd->keys);
      if (!b.config_path.empty()) cfg.load_file(b.config_path);
      for (const auto& k : b.cmd->keys)
        if (b.sub->count(flag_name(k.name)) > 0) cfg.set(k.name, b.flags[k.name], "command line");
      cfg.check_required();
      b.cmd->run(cfg);
      return 0;
    } catch (const UsageError& e) {
      std::fprintf(stderr, "error: %s\n\n%s", e.what(), b.sub->help().c_str());
      return 2;
    } catch (const RuntimeFailure& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  return 2;
}
