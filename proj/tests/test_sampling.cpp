#include <gtest/gtest.h>

#include <set>

#include "smcal/metrics.hpp"
#include "smcal/sampling.hpp"
#include "smcal/sr.hpp"
#include "test_util.hpp"

using namespace smcal;

namespace {

double abs_sum(const SMRow& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += std::abs(r.value(i));
  return s;
}

PairSet numbered_pairs(std::size_t n) {
  const Grid3 g(4, 4, 1, 1, 1, 1);
  return make_pairs(testutil::random_sm(g, n, 9), 2);
}

}  // namespace

TEST(ZeroPad, ProtocolShapes) {
  const Grid3 g(37, 37, 37, 0.012, 0.012, 0.006);
  const auto r = testutil::random_row(g, 2, 1);
  const auto p = zero_pad(r, 1, 2);
  EXPECT_EQ(p.grid().dims(), (Index3{40, 40, 40}));
  EXPECT_DOUBLE_EQ(p.grid().spacing(0), g.spacing(0));
  EXPECT_DOUBLE_EQ(p.grid().spacing(2), g.spacing(2));
  EXPECT_NEAR(abs_sum(p), abs_sum(r), 1e-9);
  EXPECT_EQ(p.value(p.grid().linear(1, 1, 1)), r.value(0));
  EXPECT_EQ(downsample_equidistant(p, 2).grid().dims(), (Index3{20, 20, 20}));
  EXPECT_EQ(downsample_equidistant(p, 4).grid().dims(), (Index3{10, 10, 10}));
}

TEST(ZeroPad, IdentityAndCropInverse) {
  const Grid3 g(5, 6, 1, 1, 1, 1);
  const auto r = testutil::random_row(g, 2, 1);
  const auto same = zero_pad(r, 0, 0);
  EXPECT_EQ(same.re(), r.re());
  EXPECT_EQ(same.grid(), r.grid());
  const auto back = crop(zero_pad(r, 1, 2), 1, 2);
  EXPECT_EQ(back.re(), r.re());
  EXPECT_EQ(back.im(), r.im());
  EXPECT_EQ(zero_pad(r, 1, 2).grid().dims(), (Index3{8, 9, 1}));
}

TEST(Downsample, StrideAtOffsetZero) {
  const Grid3 g(6, 6, 1, 1, 1, 1);
  const auto r = testutil::field_row(g, [](double x, double y, double) { return 10 * y + x; });
  const auto lr = downsample_equidistant(r, 2);
  EXPECT_EQ(lr.grid().dims(), (Index3{3, 3, 1}));
  EXPECT_DOUBLE_EQ(lr.grid().fov()[0], g.fov()[0]);
  EXPECT_EQ(lr.re()[lr.grid().linear(2, 1, 0)], 24.0);
  EXPECT_EQ(downsample_equidistant(r, 1).re(), r.re());
  EXPECT_THROW(downsample_equidistant(r, 4), DomainError);
}

TEST(SnrFilter, Predicate) {
  const Grid3 g(3, 1, 1, 1, 1, 1);
  const auto sm = testutil::random_sm(g, 3, 1);
  EXPECT_EQ(snr_filter(sm, {0, 0, 0}, 0).num_rows(), 0u);
  EXPECT_EQ(snr_filter(sm, {2, 4, 5}, 1).num_rows(), 2u);
  EXPECT_EQ(snr_filter(sm, {2, 4, 5}, 3).num_rows(), 1u);
}

TEST(SnrFilter, EstimatedFromKnownEnergies) {
  const Grid3 g(10, 1, 1, 1, 1, 1);
  std::vector<SMRow> rows;
  for (std::uint32_t k = 1; k <= 4; ++k)
    rows.push_back(SMRow(Channel::X, k, g, std::vector<double>(10, 0.5 * k), std::vector<double>(10, 0.0)));
  const SystemMatrix sm(g, rows, Provenance::loaded);
  const double sigma = 0.5;
  std::vector<double> snr;
  for (const auto& r : sm.rows()) snr.push_back(estimate_snr(r, sigma));
  EXPECT_DOUBLE_EQ(snr[0], 1.0);
  EXPECT_DOUBLE_EQ(snr[3], 16.0);
  const auto kept = snr_filter(sm, snr, 1);
  ASSERT_EQ(kept.num_rows(), 3u);
  EXPECT_EQ(kept.row(0).freq_index(), 2u);
  EXPECT_EQ(snr_filter(sm, snr, 4).num_rows(), 1u);
}

TEST(SplitPairs, NinetyTenAndDeterministic) {
  const auto pairs = numbered_pairs(100);
  const auto a = split_pairs(pairs, 0.1, 42);
  EXPECT_EQ(a.count(Split::train), 90u);
  EXPECT_EQ(a.count(Split::validation), 10u);
  const auto b = split_pairs(pairs, 0.1, 42);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(a.pairs()[i].split, b.pairs()[i].split);
  const auto c = split_pairs(pairs, 0.1, 43);
  bool differs = false;
  for (std::size_t i = 0; i < 100; ++i) differs |= a.pairs()[i].split != c.pairs()[i].split;
  EXPECT_TRUE(differs);
  EXPECT_EQ(split_pairs(pairs, 0.0, 1).count(Split::train), 100u);
  EXPECT_THROW(split_pairs(numbered_pairs(5), 0.1, 1), DomainError);
  EXPECT_THROW(split_pairs(pairs, 1.5, 1), InvalidArgument);
}

TEST(MakePairs, LowResolutionIsDecimatedHighResolution) {
  const auto ps = numbered_pairs(3);
  EXPECT_EQ(ps.ratio(), 2u);
  for (const auto& p : ps.pairs()) {
    EXPECT_EQ(p.lr.re(), downsample_equidistant(p.hr, 2).re());
    EXPECT_EQ(p.lr.freq_index(), p.hr.freq_index());
  }
}

TEST(GroupElement, CompositionAndInvolution) {
  GroupElement fx;
  fx.flip = {true, false, false};
  EXPECT_TRUE(fx.after(fx).is_identity());
  const Index3 dims{4, 3, 1};
  const Grid3 g(4, 3, 1, 1, 1, 1);
  const auto field = testutil::random_row(g, 1, 2).re();
  GroupElement swap;
  swap.perm = {1, 0, 2};
  swap.flip = {false, true, false};
  const Index3 sdims = transformed_dims(swap, dims);
  EXPECT_EQ(sdims, (Index3{3, 4, 1}));
  const auto once = apply_group(swap, dims, field);
  const auto twice = apply_group(fx, sdims, once);
  EXPECT_EQ(twice, apply_group(fx.after(swap), dims, field));
}

TEST(GroupElement, ShapePreservingGroupSizes) {
  EXPECT_EQ(shape_preserving_group({8, 8, 1}).size(), 8u);
  EXPECT_EQ(shape_preserving_group({8, 6, 1}).size(), 4u);
  EXPECT_EQ(shape_preserving_group({4, 4, 4}).size(), 48u);
  EXPECT_EQ(shape_preserving_group({5, 1, 1}).size(), 2u);
  std::set<std::pair<std::array<int, 3>, std::array<bool, 3>>> seen;
  for (const auto& g : shape_preserving_group({4, 4, 4})) seen.insert({g.perm, g.flip});
  EXPECT_EQ(seen.size(), 48u);
}

TEST(Augment, IdentityAndJointFlipPreservesError) {
  const Grid3 hr(8, 8, 1, 1, 1, 1);
  const auto h = testutil::random_row(hr, 3, 5);
  const Pair p{downsample_equidistant(h, 2), h, Split::train};
  const auto same = augment_with(p, GroupElement{});
  EXPECT_EQ(same.lr.re(), p.lr.re());
  EXPECT_EQ(same.hr.im(), p.hr.im());

  // Half-pixel linear interpolation commutes with index reversal.
  auto up = [](const SMRow& lr) {
    sr::Tensor t = sr::row_to_tensor(lr);
    return sr::tensor_to_row(sr::upsample(t, 2, sr::Upsample::linear), lr.channel(), lr.freq_index(),
                             sr::upsampled_grid(lr.grid(), 2));
  };
  for (const auto& g : shape_preserving_group(hr.dims())) {
    const auto q = augment_with(p, g);
    EXPECT_NEAR(nrmse(up(q.lr), q.hr), nrmse(up(p.lr), p.hr), 1e-12);
  }
  GroupElement chosen;
  const auto a = augment(p, 7, &chosen);
  const auto b = augment_with(p, chosen);
  EXPECT_EQ(a.hr.re(), b.hr.re());
}
