#include <gtest/gtest.h>

#include <filesystem>

#include "smcal/io.hpp"
#include "test_util.hpp"

using namespace smcal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smcal_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void expect_same(const SystemMatrix& a, const SystemMatrix& b) {
  EXPECT_EQ(a.grid(), b.grid());
  EXPECT_EQ(a.provenance(), b.provenance());
  ASSERT_EQ(a.num_rows(), b.num_rows());
  for (std::size_t i = 0; i < a.num_rows(); ++i) {
    EXPECT_EQ(a.row(i).channel(), b.row(i).channel());
    EXPECT_EQ(a.row(i).freq_index(), b.row(i).freq_index());
    EXPECT_EQ(a.row(i).re(), b.row(i).re());
    EXPECT_EQ(a.row(i).im(), b.row(i).im());
  }
}

}  // namespace

TEST(Smb, RoundTripIsBitExact) {
  const Grid3 g(4, 3, 2, 0.012, 0.01, 0.003);
  std::vector<SMRow> rows{testutil::random_row(g, 2, 1, Channel::X), testutil::random_row(g, 7, 2, Channel::Z)};
  const SystemMatrix sm(g, rows, Provenance::simulated_numeric);
  expect_same(io::decode_sm(io::encode_sm(sm)), sm);
  const auto dir = scratch("smb");
  io::write_sm((dir / "a.smb").string(), sm);
  expect_same(io::read_sm((dir / "a.smb").string()), sm);
  EXPECT_FALSE(fs::exists(dir / "a.smb.tmp"));
  fs::remove_all(dir);
}

TEST(Smb, CorruptInputIsAFormatError) {
  const Grid3 g(2, 1, 1, 1, 1, 1);
  std::string bytes = io::encode_sm(SystemMatrix(g, {testutil::random_row(g, 1, 1)}, Provenance::loaded));
  EXPECT_THROW(io::decode_sm(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(io::decode_sm(bytes + "x"), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(io::decode_sm(bad), FormatError);
  std::string version = bytes;
  version[4] = 9;
  EXPECT_THROW(io::decode_sm(version), FormatError);
  EXPECT_THROW(io::read_sm("/nonexistent/dir/x.smb"), IoError);
}

TEST(Phb, RoundTripIsBitExact) {
  const Grid3 g(3, 2, 1, 0.5, 0.25, 1.0);
  const Phantom ph(g, {0.0, 1.0 / 3.0, 2.0, 1e-300, 5.5, 0.0});
  const Phantom back = io::decode_phantom(io::encode_phantom(ph));
  EXPECT_EQ(back.grid(), ph.grid());
  EXPECT_EQ(back.values(), ph.values());
  EXPECT_THROW(io::decode_phantom("PHB1"), FormatError);
}

TEST(Srm, RoundTripKeepsConfigAndParameters) {
  sr::ModelConfig c;
  c.mode = sr::PositionMode::normalized;
  c.upsample = sr::Upsample::nearest;
  c.features = 5;
  c.blocks = 1;
  c.stages = 2;
  c.ratio = 4;
  c.spatial_dims = 3;
  c.residual_scale = 0.3;
  const auto m = sr::SRModel::initialize(c, 9);
  const auto back = io::decode_model(io::encode_model(m));
  EXPECT_EQ(back.parameters(), m.parameters());
  EXPECT_EQ(back.config().mode, c.mode);
  EXPECT_EQ(back.config().upsample, c.upsample);
  EXPECT_EQ(back.config().features, 5u);
  EXPECT_EQ(back.config().ratio, 4u);
  EXPECT_EQ(back.config().spatial_dims, 3);
  EXPECT_EQ(back.config().residual_scale, 0.3);
  std::string bytes = io::encode_model(m);
  EXPECT_THROW(io::decode_model(bytes.substr(0, 40)), FormatError);
}

TEST(PairsDirectory, RoundTripWithManifest) {
  const Grid3 g(37, 37, 1, 0.012, 0.012, 1.0);
  const auto padded = zero_pad(testutil::random_sm(g, 20, 4), 1, 2);
  const auto ps = split_pairs(make_pairs(padded, 2), 0.1, 42);
  io::PairManifest m;
  m.ratio = 2;
  m.source_dims = g.dims();
  m.hr_dims = padded.grid().dims();
  m.lr_dims = ps.pairs().front().lr.grid().dims();
  m.pairs = 20;
  m.train = 18;
  m.validation = 2;
  m.validation_fraction = 0.1;
  m.seed = 42;
  const auto dir = scratch("pairs");
  io::write_pairs(dir.string(), ps, m);
  io::PairManifest got;
  const auto back = io::read_pairs(dir.string(), &got);
  EXPECT_EQ(got.lr_dims, (Index3{20, 20, 1}));
  EXPECT_EQ(got.hr_dims, (Index3{40, 40, 1}));
  EXPECT_EQ(got.train, 18u);
  ASSERT_EQ(back.size(), ps.size());
  EXPECT_EQ(back.ratio(), 2u);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(back.pairs()[i].split, ps.pairs()[i].split);
    EXPECT_EQ(back.pairs()[i].hr.re(), ps.pairs()[i].hr.re());
    EXPECT_EQ(back.pairs()[i].lr.im(), ps.pairs()[i].lr.im());
  }
  fs::remove_all(dir);
}

TEST(Csv, Layouts) {
  std::vector<sr::EpochRecord> h{{1, 0.5, 0.25}};
  EXPECT_EQ(io::history_csv(h), "epoch,train_loss,val_nrmse\n1,0.5,0.25\n");
  Reconstruction r;
  r.residual_history = {0.5, 0.125};
  EXPECT_EQ(io::residual_csv(r), "sweep,relative_residual\n1,0.5\n2,0.125\n");
  const Grid3 g(3, 1, 1, 1, 1, 1);
  const auto sm = testutil::random_sm(g, 2, 1);
  EXPECT_EQ(io::row_nrmse_csv(sm, sm), "channel,k,nrmse\nx,1,0\nx,2,0\n");
}

TEST(Pgm, CentralSliceMinMax) {
  const Index3 d{2, 2, 3};
  std::vector<double> f(12, 7.0);
  f[4] = 1.0;
  f[5] = 2.0;
  f[6] = 3.0;
  f[7] = 5.0;
  const std::string p = io::render_pgm(f, d);
  const std::string header = "P5\n2 2\n255\n";
  ASSERT_EQ(p.size(), header.size() + 4);
  EXPECT_EQ(p.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(p[header.size()]), 0);
  EXPECT_EQ(static_cast<unsigned char>(p[header.size() + 1]), 64);
  EXPECT_EQ(static_cast<unsigned char>(p[header.size() + 3]), 255);
  const std::string flat = io::render_pgm(std::vector<double>(4, 2.0), {2, 2, 1});
  EXPECT_EQ(flat.back(), '\0');
}
