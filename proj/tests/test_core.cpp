#include <gtest/gtest.h>

#include "smcal/core.hpp"
#include "test_util.hpp"

using namespace smcal;

TEST(Grid, VoxelCoordinatesAreCellCentred) {
  EXPECT_DOUBLE_EQ(Grid3(2, 1, 1, 0.02, 1, 1).coordinate(0, 0), -0.005);
  EXPECT_DOUBLE_EQ(Grid3(2, 1, 1, 0.02, 1, 1).coordinate(0, 1), 0.005);
  EXPECT_EQ(Grid3(5, 1, 1, 0.01, 1, 1).coordinate(0, 2), 0.0);
}

TEST(Grid, MirroredVoxelsHaveExactlyOppositeCoordinates) {
  const Grid3 g(37, 1, 1, 0.012, 1, 1);
  for (std::size_t p = 0; p < 37; ++p) EXPECT_EQ(g.coordinate(0, p), -g.coordinate(0, 36 - p));
}

TEST(Grid, LinearIndexRoundTrip) {
  const Grid3 g(4, 3, 2, 1, 1, 1);
  EXPECT_EQ(g.linear(1, 0, 0), 1u);
  EXPECT_EQ(g.linear(0, 1, 0), 4u);
  EXPECT_EQ(g.linear(0, 0, 1), 12u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.linear(g.unravel(i)), i);
  EXPECT_EQ(g.active_dims(), 3);
  EXPECT_EQ(Grid3(7, 7, 1, 1, 1, 1).active_dims(), 2);
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(Grid3(0, 1, 1, 1, 1, 1), InvalidArgument);
  EXPECT_THROW(Grid3(3, 1, 1, 0.0, 1, 1), InvalidArgument);
  EXPECT_THROW(Grid3(3, 1, 1, 1, 1, 1).coordinate(0, 3), IndexError);
}

TEST(SystemMatrix, LookupByChannelAndFrequency) {
  const Grid3 g(3, 1, 1, 1, 1, 1);
  const auto r2 = testutil::random_row(g, 2, 1);
  const auto r3 = testutil::random_row(g, 3, 2);
  const SystemMatrix sm(g, {r2, r3}, Provenance::loaded);
  EXPECT_EQ(sm.lookup(Channel::X, 3).re(), r3.re());
  EXPECT_TRUE(sm.contains(Channel::X, 2));
  EXPECT_THROW(sm.lookup(Channel::Y, 3), NotFound);
  EXPECT_THROW(SystemMatrix(g, {r2, r2}, Provenance::loaded), DuplicateRow);
}

TEST(SystemMatrix, RowsMustShareTheGrid) {
  const auto a = testutil::random_row(Grid3(3, 1, 1, 1, 1, 1), 2, 1);
  EXPECT_THROW(SystemMatrix(Grid3(4, 1, 1, 1, 1, 1), {a}, Provenance::loaded), InvalidArgument);
}

TEST(SMRow, RejectsMismatchedPayload) {
  const Grid3 g(3, 1, 1, 1, 1, 1);
  EXPECT_THROW(SMRow(Channel::X, 1, g, std::vector<double>(2), std::vector<double>(3)), InvalidArgument);
}

TEST(Phantom, RejectsNegativeConcentration) {
  const Grid3 g(2, 1, 1, 1, 1, 1);
  EXPECT_THROW(Phantom(g, {1.0, -0.5}), InvalidArgument);
  EXPECT_NO_THROW(Phantom(g, {1.0, 0.0}));
}

TEST(ScanSequence, CyclesFollowDividers) {
  const auto s = ScanSequence::two_d(2.0, 0.012, 16, 17);
  EXPECT_EQ(s.cycles(0), 17u);
  EXPECT_EQ(s.cycles(1), 16u);
  EXPECT_EQ(s.cycles(2), 0u);
  EXPECT_EQ(ScanSequence::one_d(1.0, 0.01).cycles(0), 1u);
  const auto t = ScanSequence::three_d(2.0, 0.012, 8, 9, 10);
  EXPECT_EQ(t.cycles(0), 45u);
  EXPECT_EQ(t.cycles(1), 40u);
  EXPECT_EQ(t.cycles(2), 36u);
}

TEST(ScanSequence, ValidateCatchesInconsistentSettings) {
  auto s = ScanSequence::two_d(2.0, 0.012, 16, 17);
  EXPECT_NO_THROW(s.validate());
  s.n_time_samples = 1000;
  EXPECT_THROW(s.validate(), InvalidArgument);
  EXPECT_THROW(ScanSequence::two_d(2.0, 0.012, 16, 18).validate(), DomainError);
  auto u = ScanSequence::one_d(1.0, 0.01);
  u.amplitude[1] = 0.01;
  EXPECT_THROW(u.validate(), InvalidArgument);
}

TEST(ParticleModel, Validation) {
  ParticleModel pm;
  pm.m_sat = 0.0;
  EXPECT_NO_THROW(pm.validate());
  pm.beta = 0.0;
  EXPECT_THROW(pm.validate(), InvalidArgument);
}

TEST(SignalVector, AlignmentCheck) {
  const Grid3 g(3, 1, 1, 1, 1, 1);
  const SystemMatrix sm(g, {testutil::random_row(g, 2, 1)}, Provenance::loaded);
  EXPECT_NO_THROW(SignalVector(std::vector<SignalEntry>{{Channel::X, 2, {}}}).check_aligned(sm));
  EXPECT_THROW(SignalVector(std::vector<SignalEntry>{{Channel::X, 3, {}}}).check_aligned(sm), DomainError);
  EXPECT_THROW(SignalVector().check_aligned(sm), DomainError);
}

TEST(Channel, StringRoundTrip) {
  for (auto c : {Channel::X, Channel::Y, Channel::Z}) EXPECT_EQ(channel_from_string(to_string(c)), c);
  EXPECT_THROW(channel_from_string("w"), InvalidArgument);
}
