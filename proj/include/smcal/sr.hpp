#pragma once

// Position-prior-guided super-resolution of system-matrix rows: coordinate
// channels, a residual-dense convolutional trunk, interpolation upsampling
// and a convolutional readout, trained with exact reverse-mode gradients.
// Also hosts the non-learned interpolation baselines.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "smcal/core.hpp"
#include "smcal/sampling.hpp"

namespace smcal::sr {

/// Channel-major dense tensor [c][d][h][w]; w is the x axis.
struct Tensor {
  std::size_t c = 0, d = 1, h = 1, w = 1;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t c_, std::size_t d_, std::size_t h_, std::size_t w_, double fill = 0.0)
      : c(c_), d(d_), h(h_), w(w_), data(c_ * d_ * h_ * w_, fill) {}

  std::size_t spatial() const { return d * h * w; }
  Index3 dims() const { return {w, h, d}; }
  double* channel(std::size_t i) { return data.data() + i * spatial(); }
  const double* channel(std::size_t i) const { return data.data() + i * spatial(); }
  double& at(std::size_t ch, std::size_t z, std::size_t y, std::size_t x) {
    return data[((ch * d + z) * h + y) * w + x];
  }
  double at(std::size_t ch, std::size_t z, std::size_t y, std::size_t x) const {
    return data[((ch * d + z) * h + y) * w + x];
  }
};

enum class PositionMode : std::uint8_t { none = 0, normalized = 1, symmetric = 2 };
enum class Upsample : std::uint8_t { nearest = 0, linear = 1 };
enum class Interpolation : std::uint8_t { nearest = 0, trilinear = 1, tricubic = 2 };

const char* to_string(PositionMode m);
const char* to_string(Upsample u);
const char* to_string(Interpolation i);
PositionMode position_mode_from_string(const std::string& s);
Upsample upsample_from_string(const std::string& s);
Interpolation interpolation_from_string(const std::string& s);

/// [re, im] planes of a row divided by `scale`.
Tensor row_to_tensor(const SMRow& row, double scale = 1.0);
/// Inverse of row_to_tensor (multiplies by `scale`).
SMRow tensor_to_row(const Tensor& t, Channel channel, std::uint32_t k, const Grid3& grid,
                    double scale = 1.0);

/// Appends coordinate planes i, j, k (x, y, z ramps): symmetric mode maps
/// voxel p to 2p/(n-1) - 1, normalized to p/(n-1), singleton axes to 0.
/// mode == none returns the input unchanged.
Tensor pos_embedding(const Tensor& lr, PositionMode mode);

struct ModelConfig {
  PositionMode mode = PositionMode::symmetric;
  Upsample upsample = Upsample::linear;
  std::size_t blocks = 2;        // residual-dense blocks
  std::size_t stages = 3;        // dense conv stages per block
  std::size_t features = 16;     // C'
  std::size_t ratio = 2;
  int spatial_dims = 2;          // 2: 3x3 kernels on (h, w); 3: 3x3x3
  double residual_scale = 0.2;
  double leaky_slope = 0.2;

  std::size_t input_channels() const { return mode == PositionMode::none ? 2 : 5; }
  void validate() const;
};

struct ConvSpec {
  std::size_t in = 0, out = 0;
  std::size_t weight_offset = 0, bias_offset = 0;
  std::size_t weight_count() const;
  int kd = 1, kh = 3, kw = 3;
};

class SRModel {
 public:
  SRModel() = default;
  explicit SRModel(const ModelConfig& cfg);

  /// Uniform fan-in initialization; the readout is scaled by 0.1.
  static SRModel initialize(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<ConvSpec>& convs() const { return convs_; }
  const ConvSpec& head() const { return convs_.front(); }
  const ConvSpec& readout() const { return convs_.back(); }
  const ConvSpec& stage(std::size_t block, std::size_t s) const {
    return convs_[1 + block * cfg_.stages + s];
  }

  /// x: embedded LR tensor; returns the 2-channel HR tensor.
  Tensor forward(const Tensor& x) const;

 private:
  ModelConfig cfg_;
  std::vector<ConvSpec> convs_;
  std::vector<double> params_;
};

struct Sample {
  Tensor input;   // embedded LR
  Tensor target;  // 2-channel HR
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean squared error over every HR voxel, both channels and the batch,
/// with exact gradients for every parameter.
LossAndGradient loss_and_gradients(const SRModel& model, const std::vector<Sample>& batch,
                                   unsigned threads = 1);
double loss_only(const SRModel& model, const std::vector<Sample>& batch);

/// Branch taken by every leaky rectifier for input x (true: positive side).
/// The network is smooth in the parameters wherever this stays fixed.
std::vector<bool> rectifier_pattern(const SRModel& model, const Tensor& x);

/// Feature upsampling by `ratio` on every non-singleton axis. Nearest: HR
/// voxel q copies LR voxel floor(q / ratio). Linear: half-pixel centres,
/// LR coordinate (q + 0.5) / ratio - 0.5 clamped to the LR span, which
/// commutes with index reversal.
Tensor upsample(const Tensor& in, std::size_t ratio, Upsample mode);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 50;
  std::size_t patience = 0;  // 0 disables early stopping
  std::uint64_t seed = 0;
  bool augment = true;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  unsigned threads = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_nrmse = 0.0;
};

struct TrainResult {
  SRModel model;  // parameters at the best validation NRMSE
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_nrmse = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam on shuffled mini-batches; keeps the parameters with the lowest mean
/// validation NRMSE. Throws TrainingDiverged on a non-finite loss.
TrainResult train(const SRModel& initial, const PairSet& pairs, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Per-row scale used to normalize network inputs: max modulus of the LR row.
double row_scale(const SMRow& lr);

/// Recovers one HR row.
SMRow recover_row(const SRModel& model, const SMRow& lr);

/// Applies the model to every row; provenance = recovered.
SystemMatrix recover(const SRModel& model, const SystemMatrix& lr_sm, std::size_t ratio);

/// Mean NRMSE of recovered rows against the HR rows of the given pairs.
double evaluate_pairs(const SRModel& model, const std::vector<const Pair*>& pairs);

/// Channel-wise interpolation of real and imaginary planes. HR voxel q reads
/// LR coordinate q / ratio (aligned with stride decimation); samples past the
/// last LR voxel are clamped to it.
SMRow interpolate_row(const SMRow& lr, std::size_t ratio, Interpolation method);
SystemMatrix baseline_interpolate(const SystemMatrix& lr_sm, std::size_t ratio,
                                  Interpolation method);

/// LR samples placed at their decimation positions on the HR grid, zeros elsewhere.
SystemMatrix zero_fill(const SystemMatrix& lr_sm, std::size_t ratio);

/// HR grid for an LR grid: counts times ratio on non-singleton axes, same extent.
Grid3 upsampled_grid(const Grid3& lr, std::size_t ratio);

}  // namespace smcal::sr
