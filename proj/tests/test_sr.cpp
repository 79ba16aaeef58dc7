#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "smcal/metrics.hpp"
#include "smcal/sampling.hpp"
#include "smcal/sr.hpp"
#include "gradient_check.hpp"
#include "test_util.hpp"

using namespace smcal;
using namespace smcal::sr;

namespace {

Tensor random_tensor(std::size_t c, std::size_t d, std::size_t h, std::size_t w, std::uint64_t seed) {
  Tensor t(c, d, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (auto& v : t.data) v = U(rng);
  return t;
}

/// Smooth 2D rows so that small networks can fit them.
SystemMatrix smooth_rows(std::size_t n, std::size_t rows, std::uint64_t seed) {
  const Grid3 g(n, n, 1, 1, 1, 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  std::vector<SMRow> out;
  for (std::size_t r = 0; r < rows; ++r) {
    const double a = U(rng), b = U(rng), c = U(rng);
    std::vector<double> re(g.size()), im(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Index3 p = g.unravel(i);
      const double x = static_cast<double>(p[0]) / n, y = static_cast<double>(p[1]) / n;
      re[i] = std::sin(a * 3 * x + b * y);
      im[i] = std::cos(c * 2 * y - a * x);
    }
    out.push_back(SMRow(Channel::X, static_cast<std::uint32_t>(r + 1), g, re, im));
  }
  return SystemMatrix(g, std::move(out), Provenance::loaded);
}

ModelConfig small_config(PositionMode mode, Upsample up, std::size_t F = 4, std::size_t B = 1) {
  ModelConfig c;
  c.mode = mode;
  c.upsample = up;
  c.features = F;
  c.blocks = B;
  c.stages = 2;
  c.ratio = 2;
  return c;
}

/// Mirror every kernel along x.
SRModel flip_kernels_x(const SRModel& m) {
  SRModel out = m;
  for (const auto& c : m.convs()) {
    const std::size_t K = static_cast<std::size_t>(c.kd * c.kh * c.kw);
    for (std::size_t oi = 0; oi < c.out * c.in; ++oi)
      for (int z = 0; z < c.kd; ++z)
        for (int y = 0; y < c.kh; ++y)
          for (int x = 0; x < c.kw; ++x) {
            const std::size_t src = c.weight_offset + oi * K + static_cast<std::size_t>((z * c.kh + y) * c.kw + x);
            const std::size_t dst =
                c.weight_offset + oi * K + static_cast<std::size_t>((z * c.kh + y) * c.kw + (c.kw - 1 - x));
            out.parameters()[dst] = m.parameters()[src];
          }
  }
  return out;
}

Tensor flip_x(const Tensor& t) {
  Tensor o = t;
  for (std::size_t c = 0; c < t.c; ++c)
    for (std::size_t z = 0; z < t.d; ++z)
      for (std::size_t y = 0; y < t.h; ++y)
        for (std::size_t x = 0; x < t.w; ++x) o.at(c, z, y, x) = t.at(c, z, y, t.w - 1 - x);
  return o;
}

}  // namespace

TEST(PosEmbedding, CoordinateRamps) {
  const Tensor x(2, 1, 1, 3, 0.0);
  const Tensor s = pos_embedding(x, PositionMode::symmetric);
  ASSERT_EQ(s.c, 5u);
  EXPECT_EQ(s.at(2, 0, 0, 0), -1.0);
  EXPECT_EQ(s.at(2, 0, 0, 1), 0.0);
  EXPECT_EQ(s.at(2, 0, 0, 2), 1.0);
  EXPECT_EQ(s.at(3, 0, 0, 1), 0.0);
  EXPECT_EQ(s.at(4, 0, 0, 2), 0.0);
  const Tensor n = pos_embedding(x, PositionMode::normalized);
  EXPECT_EQ(n.at(2, 0, 0, 0), 0.0);
  EXPECT_EQ(n.at(2, 0, 0, 1), 0.5);
  EXPECT_EQ(n.at(2, 0, 0, 2), 1.0);
  const Tensor r = random_tensor(2, 1, 3, 3, 1);
  const Tensor none = pos_embedding(r, PositionMode::none);
  EXPECT_EQ(none.c, 2u);
  EXPECT_EQ(none.data, r.data);
}

TEST(RowTensor, RoundTripWithScale) {
  const Grid3 g(4, 3, 1, 1, 1, 1);
  const auto r = testutil::random_row(g, 5, 2, Channel::Y);
  const Tensor t = row_to_tensor(r, 2.0);
  EXPECT_EQ(t.at(0, 0, 1, 2), r.re()[g.linear(2, 1, 0)] / 2.0);
  EXPECT_EQ(t.at(1, 0, 1, 2), r.im()[g.linear(2, 1, 0)] / 2.0);
  const SMRow back = tensor_to_row(t, Channel::Y, 5, g, 2.0);
  EXPECT_LT(testutil::max_abs_diff(back, r), 1e-15);
}

TEST(Upsample, NearestCopiesFloorSourceAndLinearIsHalfPixel) {
  Tensor t(1, 1, 1, 3);
  t.data = {0.0, 1.0, 4.0};
  const Tensor n = upsample(t, 2, Upsample::nearest);
  EXPECT_EQ(n.data, (std::vector<double>{0, 0, 1, 1, 4, 4}));
  const Tensor l = upsample(t, 2, Upsample::linear);
  // LR coordinates -0.25 (clamped), 0.25, 0.75, 1.25, 1.75, 2.25 (clamped).
  const std::vector<double> expected{0.0, 0.25, 0.75, 1.75, 3.25, 4.0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(l.data[i], expected[i], 1e-15);
  const Tensor r = random_tensor(3, 1, 4, 5, 4);
  const Tensor fu = flip_x(upsample(r, 2, Upsample::linear));
  const Tensor uf = upsample(flip_x(r), 2, Upsample::linear);
  ASSERT_EQ(fu.data.size(), uf.data.size());
  for (std::size_t i = 0; i < fu.data.size(); ++i) EXPECT_NEAR(fu.data[i], uf.data[i], 1e-15);
}

TEST(Forward, ZeroWeightsGiveZeroOutput) {
  SRModel m = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear), 1);
  std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
  const Tensor y = m.forward(pos_embedding(random_tensor(2, 1, 5, 5, 2), PositionMode::symmetric));
  EXPECT_EQ(y.c, 2u);
  EXPECT_EQ(y.h, 10u);
  for (double v : y.data) EXPECT_EQ(v, 0.0);
}

TEST(Forward, DegenerateNetworkIsNearestUpsampling) {
  auto cfg = small_config(PositionMode::none, Upsample::nearest, 3, 0);
  SRModel m(cfg);
  std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
  const auto set_identity = [&](const ConvSpec& c, std::size_t channels) {
    const std::size_t K = static_cast<std::size_t>(c.kd * c.kh * c.kw);
    for (std::size_t i = 0; i < channels; ++i) m.parameters()[c.weight_offset + (i * c.in + i) * K + K / 2] = 1.0;
  };
  set_identity(m.head(), 2);
  set_identity(m.readout(), 2);
  const Tensor x = random_tensor(2, 1, 4, 5, 3);
  const Tensor y = m.forward(x);
  const Tensor ref = upsample(x, 2, Upsample::nearest);
  ASSERT_EQ(y.data.size(), ref.data.size());
  for (std::size_t i = 0; i < y.data.size(); ++i) EXPECT_DOUBLE_EQ(y.data[i], ref.data[i]);
}

TEST(Forward, DeterministicAcrossRuns) {
  const auto cfg = small_config(PositionMode::symmetric, Upsample::linear);
  const Tensor x = pos_embedding(random_tensor(2, 1, 6, 6, 5), PositionMode::symmetric);
  const Tensor a = SRModel::initialize(cfg, 7).forward(x);
  const Tensor b = SRModel::initialize(cfg, 7).forward(x);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(a.data, SRModel::initialize(cfg, 8).forward(x).data);
}

TEST(Forward, MirroredKernelsCommuteWithFlips) {
  for (auto up : {Upsample::nearest, Upsample::linear}) {
    const SRModel m = SRModel::initialize(small_config(PositionMode::none, up, 4, 2), 3);
    const SRModel mf = flip_kernels_x(m);
    const Tensor x = random_tensor(2, 1, 5, 6, 9);
    const Tensor a = flip_x(m.forward(x));
    const Tensor b = mf.forward(flip_x(x));
    for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-13);
  }
}

TEST(Forward, ThreeDimensionalKernels) {
  auto cfg = small_config(PositionMode::symmetric, Upsample::linear, 3, 1);
  cfg.spatial_dims = 3;
  const SRModel m = SRModel::initialize(cfg, 1);
  const Tensor y = m.forward(pos_embedding(random_tensor(2, 3, 3, 3, 1), PositionMode::symmetric));
  EXPECT_EQ(y.d, 6u);
  EXPECT_EQ(y.w, 6u);
  EXPECT_THROW(m.forward(random_tensor(2, 3, 3, 3, 1)), DomainError);
}

TEST(Gradients, ExactTargetGivesZeroLossAndGradient) {
  const SRModel m = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear), 2);
  const Tensor x = pos_embedding(random_tensor(2, 1, 4, 4, 1), PositionMode::symmetric);
  const auto lg = loss_and_gradients(m, {{x, m.forward(x)}});
  EXPECT_EQ(lg.loss, 0.0);
  for (double g : lg.gradient) EXPECT_EQ(g, 0.0);
}

TEST(Gradients, ReadoutBiasMatchesClosedForm) {
  // d/db_o of mean((y - t)^2) is 2 * (sum of channel-o residuals) / (total element count).
  const SRModel m = SRModel::initialize(small_config(PositionMode::normalized, Upsample::linear), 4);
  const Tensor x = pos_embedding(random_tensor(2, 1, 4, 4, 2), PositionMode::normalized);
  const Tensor t = random_tensor(2, 1, 8, 8, 3);
  const Tensor y = m.forward(x);
  const auto lg = loss_and_gradients(m, {{x, t}});
  const std::size_t S = y.spatial();
  for (std::size_t o = 0; o < 2; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < S; ++i) acc += y.channel(o)[i] - t.channel(o)[i];
    EXPECT_NEAR(lg.gradient[m.readout().bias_offset + o], 2.0 * acc / static_cast<double>(2 * S), 1e-14);
  }
}

TEST(Gradients, CentralDifferencesOverEveryParameter) {
  ModelConfig cfg = small_config(PositionMode::symmetric, Upsample::linear, 6, 2);
  cfg.stages = 3;
  SRModel m = SRModel::initialize(cfg, 11);
  ASSERT_LE(m.parameter_count(), 5000u);
  std::vector<Sample> batch;
  for (std::uint64_t s = 0; s < 2; ++s)
    batch.push_back({pos_embedding(random_tensor(2, 1, 6, 6, 20 + s), PositionMode::symmetric),
                     random_tensor(2, 1, 12, 12, 30 + s)});
  const auto gc = testutil::check_gradients(m, batch);
  EXPECT_EQ(gc.unresolved, 0u);
  EXPECT_GT(gc.central, m.parameter_count() / 2);
  EXPECT_LT(gc.worst, 1e-4) << "parameter " << gc.worst_param;
}

TEST(Gradients, ThreadedEqualsSequential) {
  const SRModel m = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear), 5);
  std::vector<Sample> batch;
  for (std::uint64_t s = 0; s < 5; ++s)
    batch.push_back({pos_embedding(random_tensor(2, 1, 4, 4, s), PositionMode::symmetric), random_tensor(2, 1, 8, 8, 9 + s)});
  const auto a = loss_and_gradients(m, batch, 1);
  const auto b = loss_and_gradients(m, batch, 3);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.gradient, b.gradient);
}

TEST(Train, ZeroEpochsReturnsTheInitialModel) {
  const auto pairs = split_pairs(make_pairs(smooth_rows(8, 12, 1), 2), 0.25, 1);
  const SRModel init = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear), 1);
  TrainConfig tc;
  tc.max_epochs = 0;
  const auto r = train(init, pairs, tc);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.model.parameters(), init.parameters());
}

TEST(Train, DeterministicForAFixedSeed) {
  const auto pairs = split_pairs(make_pairs(smooth_rows(8, 12, 2), 2), 0.25, 1);
  const SRModel init = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear), 1);
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.batch_size = 4;
  const auto a = train(init, pairs, tc);
  tc.threads = 2;
  const auto b = train(init, pairs, tc);
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  ASSERT_EQ(a.history.size(), 3u);
  EXPECT_EQ(a.history[2].val_nrmse, b.history[2].val_nrmse);
}

TEST(Train, MemorisesFourPairs) {
  const PairSet all = make_pairs(smooth_rows(8, 5, 3), 2);
  const PairSet pairs = all.with_splits({Split::train, Split::train, Split::train, Split::train, Split::validation});
  const SRModel init = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear, 8, 1), 2);
  TrainConfig tc;
  tc.max_epochs = 2000;
  tc.batch_size = 4;
  tc.learning_rate = 3e-3;
  tc.augment = false;
  const auto r = train(init, pairs, tc);
  ASSERT_EQ(r.history.size(), 2000u);
  EXPECT_LT(r.history.back().train_loss, 1e-4 * r.history.front().train_loss);
}

TEST(Train, RejectsMismatchedSetups) {
  const auto pairs = split_pairs(make_pairs(smooth_rows(8, 12, 2), 2), 0.25, 1);
  auto cfg = small_config(PositionMode::none, Upsample::nearest);
  cfg.ratio = 4;
  EXPECT_THROW(train(SRModel::initialize(cfg, 1), pairs, TrainConfig{}), DomainError);
  const PairSet no_val = make_pairs(smooth_rows(8, 12, 2), 2);
  EXPECT_THROW(train(SRModel::initialize(small_config(PositionMode::none, Upsample::nearest), 1), no_val, TrainConfig{}),
               DomainError);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Recover, ShapesOrderAndRatioCheck) {
  const SRModel m = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear), 1);
  const auto lr = smooth_rows(5, 3, 4);
  const auto hr = recover(m, lr, 2);
  EXPECT_EQ(hr.grid().dims(), (Index3{10, 10, 1}));
  EXPECT_EQ(hr.provenance(), Provenance::recovered);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(hr.row(i).freq_index(), lr.row(i).freq_index());
  EXPECT_EQ(recover(m, SystemMatrix(lr.grid(), {}, Provenance::loaded), 2).num_rows(), 0u);
  EXPECT_THROW(recover(m, lr, 4), DomainError);
}

TEST(Recover, ScaleEquivariance) {
  const SRModel m = SRModel::initialize(small_config(PositionMode::symmetric, Upsample::linear), 1);
  const auto lr = smooth_rows(5, 1, 4).row(0);
  std::vector<double> re = lr.re(), im = lr.im();
  for (auto& v : re) v *= 1e-9;
  for (auto& v : im) v *= 1e-9;
  const auto a = recover_row(m, lr);
  const auto b = recover_row(m, lr.with_values(lr.grid(), re, im));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b.re()[i], 1e-9 * a.re()[i], 1e-22);
}

TEST(Baselines, ConstantsRampsAndNearest) {
  const Grid3 g(5, 4, 1, 1, 1, 1);
  const auto c = testutil::field_row(g, [](double, double, double) { return 3.0; });
  for (auto method : {Interpolation::nearest, Interpolation::trilinear, Interpolation::tricubic}) {
    const auto up = interpolate_row(c, 2, method);
    for (double v : up.re()) EXPECT_NEAR(v, 3.0, 1e-14);
  }
  const auto ramp = testutil::field_row(g, [](double x, double y, double) { return 2 * x - y; });
  const auto lin = interpolate_row(ramp, 2, Interpolation::trilinear);
  const Grid3& hg = lin.grid();
  // Inside the LR span, HR voxel q samples LR coordinate q / 2.
  for (std::size_t y = 0; y < 7; ++y)
    for (std::size_t x = 0; x < 9; ++x) EXPECT_NEAR(lin.re()[hg.linear(x, y, 0)], 2 * (x / 2.0) - y / 2.0, 1e-14);
  const auto r = testutil::random_row(g, 1, 6);
  const auto near = interpolate_row(r, 2, Interpolation::nearest);
  for (std::size_t i = 0; i < near.size(); ++i) {
    const Index3 q = hg.unravel(i);
    EXPECT_EQ(near.value(i), r.value(g.linear(q[0] / 2, q[1] / 2, 0)));
  }
}

TEST(Baselines, ZeroFillPlacesSamplesAtDecimationPositions) {
  const Grid3 g(3, 3, 1, 1, 1, 1);
  const SystemMatrix lr(g, {testutil::random_row(g, 2, 1)}, Provenance::loaded);
  const auto z = zero_fill(lr, 2);
  EXPECT_EQ(z.grid().dims(), (Index3{6, 6, 1}));
  EXPECT_EQ(downsample_equidistant(z.row(0), 2).re(), lr.row(0).re());
  EXPECT_EQ(z.row(0).value(z.grid().linear(1, 0, 0)), cplx(0, 0));
}

TEST(Names, StringRoundTrips) {
  for (auto m : {PositionMode::none, PositionMode::normalized, PositionMode::symmetric})
    EXPECT_EQ(position_mode_from_string(to_string(m)), m);
  for (auto u : {Upsample::nearest, Upsample::linear}) EXPECT_EQ(upsample_from_string(to_string(u)), u);
  for (auto i : {Interpolation::nearest, Interpolation::trilinear, Interpolation::tricubic})
    EXPECT_EQ(interpolation_from_string(to_string(i)), i);
  EXPECT_THROW(position_mode_from_string("polar"), InvalidArgument);
}
