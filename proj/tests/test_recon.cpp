#include <gtest/gtest.h>

#include <random>

#include "smcal/physics.hpp"
#include "smcal/recon.hpp"
#include "random_systems.hpp"
#include "test_util.hpp"

using namespace smcal;

namespace {

SystemMatrix real_matrix(const std::vector<std::vector<double>>& rows) {
  const Grid3 g(rows.front().size(), 1, 1, 1.0, 1.0, 1.0);
  std::vector<SMRow> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.push_back(SMRow(Channel::X, static_cast<std::uint32_t>(i + 1), g, rows[i],
                        std::vector<double>(rows[i].size(), 0.0)));
  return SystemMatrix(g, std::move(out), Provenance::loaded);
}

SignalVector signal(const SystemMatrix& sm, const std::vector<cplx>& u) {
  std::vector<SignalEntry> e;
  for (std::size_t i = 0; i < u.size(); ++i) e.push_back({sm.row(i).channel(), sm.row(i).freq_index(), u[i]});
  return SignalVector(std::move(e));
}

}  // namespace

TEST(Kaczmarz, TwoByTwoConsistentSystem) {
  const auto sm = real_matrix({{2, 0}, {0, 1}});
  KaczmarzConfig cfg;
  cfg.lambda = 0.0;
  cfg.sweeps = 50;
  cfg.enforce_real_nonneg = false;
  const auto r = kaczmarz_solve(sm, signal(sm, {2.0, 3.0}), cfg);
  EXPECT_NEAR(r.values[0], 1.0, 1e-9);
  EXPECT_NEAR(r.values[1], 3.0, 1e-9);
  EXPECT_EQ(r.residual_history.size(), 50u);
}

TEST(Kaczmarz, IdentityRowsGiveClampedRealPart) {
  const auto sm = real_matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  KaczmarzConfig cfg;
  cfg.lambda = 0.0;
  cfg.sweeps = 1;
  const auto r = kaczmarz_solve(sm, signal(sm, {{0.5, 0.2}, {-1.0, 0.0}, {2.0, -1.0}}), cfg);
  EXPECT_DOUBLE_EQ(r.values[0], 0.5);
  EXPECT_DOUBLE_EQ(r.values[1], 0.0);
  EXPECT_DOUBLE_EQ(r.values[2], 2.0);
}

TEST(Kaczmarz, WellConditionedRandomSystemsConverge) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sm = testutil::well_conditioned_sm(16, 100 + seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> c(16);
    for (auto& v : c) v = U(rng);
    std::vector<cplx> u(16);
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t v = 0; v < 16; ++v) u[i] += sm.row(i).value(v) * c[v];
    KaczmarzConfig cfg;
    cfg.lambda = 0.0;
    cfg.sweeps = 200;
    cfg.enforce_real_nonneg = false;
    const auto r = kaczmarz_solve(sm, signal(sm, u), cfg);
    const auto& h = r.residual_history;
    ASSERT_EQ(h.size(), 200u);
    EXPECT_LT(h.back(), 1e-6) << "seed " << seed;
    // Monotone until the residual reaches round-off.
    for (std::size_t s = 1; s < h.size() && h[s - 1] > 1e-13; ++s) EXPECT_LE(h[s], h[s - 1]) << "sweep " << s;
  }
}

TEST(Kaczmarz, ZeroRowsAreSkippedAndCounted) {
  const auto sm = real_matrix({{1, 0}, {0, 0}, {0, 1}});
  KaczmarzConfig cfg;
  cfg.lambda = 0.0;
  cfg.sweeps = 2;
  const auto r = kaczmarz_solve(sm, signal(sm, {1.0, 5.0, 2.0}), cfg);
  EXPECT_EQ(r.skipped_rows, 1u);
  EXPECT_NEAR(r.values[1], 2.0, 1e-12);
}

TEST(Kaczmarz, RegularisationScalesWithMeanRowEnergy) {
  const auto sm = real_matrix({{2, 0}, {0, 1}});
  KaczmarzConfig cfg;
  cfg.lambda = 0.5;
  const auto r = kaczmarz_solve(sm, signal(sm, {2.0, 3.0}), cfg);
  EXPECT_DOUBLE_EQ(r.lambda_effective, 0.5 * 5.0 / 2.0);
}

TEST(Kaczmarz, ShuffledOrderIsSeeded) {
  const Grid3 g(8, 1, 1, 1, 1, 1);
  const auto sm = testutil::random_sm(g, 8, 3);
  std::vector<cplx> u(8, {1.0, 0.0});
  KaczmarzConfig cfg;
  cfg.row_order = RowOrder::seeded_shuffle;
  cfg.seed = 9;
  const auto a = kaczmarz_solve(sm, signal(sm, u), cfg);
  const auto b = kaczmarz_solve(sm, signal(sm, u), cfg);
  EXPECT_EQ(a.values, b.values);
}

TEST(Kaczmarz, ConfigValidationAndAlignment) {
  const auto sm = real_matrix({{2, 0}, {0, 1}});
  KaczmarzConfig bad;
  bad.lambda = -1.0;
  EXPECT_THROW(kaczmarz_solve(sm, signal(sm, {1.0, 1.0}), bad), InvalidArgument);
  EXPECT_THROW(kaczmarz_solve(sm, signal(sm, {1.0}), KaczmarzConfig{}), DomainError);
}

TEST(Pipeline, SelfConsistentDeltaIsFoundAtItsVoxel) {
  auto s = ScanSequence::two_d(2.0, 0.012, 16, 17);
  s.n_time_samples = 1024;
  const Grid3 g(17, 17, 1, 0.012, 0.012, 1.0);
  std::vector<std::uint32_t> ks;
  for (std::uint32_t k = 2; k <= 200; ++k) ks.push_back(k);
  const auto sm = simulate_system_matrix(s, ParticleModel{}, g, {Channel::X, Channel::Y}, ks);
  std::vector<double> c(g.size(), 0.0);
  const std::size_t v = g.linear(5, 11, 0);
  c[v] = 1.0;
  const Phantom ph(g, c);
  const auto res = reconstruction_pipeline(sm, sm, ph);
  const auto& x = res.reconstruction.values;
  EXPECT_EQ(static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin()), v);
  EXPECT_TRUE(res.ssim_available);
}

TEST(Pipeline, AllZeroMatrixIsRejected) {
  const Grid3 g(3, 1, 1, 1, 1, 1);
  const auto truth = testutil::random_sm(g, 2, 1);
  std::vector<SMRow> zeros;
  for (const auto& r : truth.rows()) zeros.push_back(SMRow::zeros(r.channel(), r.freq_index(), g));
  const SystemMatrix z(g, zeros, Provenance::recovered);
  EXPECT_THROW(reconstruction_pipeline(z, truth, Phantom(g, {1, 0, 0})), DomainError);
}
