#include "smcal/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "smcal/metrics.hpp"

namespace smcal::io {

namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + target.parent_path().string() + ": " + ec.message());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Little-endian byte streams

namespace {

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u8(std::uint8_t v) { uint(v); }
  void u16(std::uint16_t v) { uint(v); }
  void u32(std::uint64_t v) {
    if (v > 0xFFFFFFFFull) throw DomainError("value does not fit in 32 bits");
    uint(static_cast<std::uint32_t>(v));
  }
  void u64(std::uint64_t v) { uint(v); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, const char* what) : data_(data), what_(what) {}
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError(std::string(what_) + ": truncated file");
  }
  template <typename T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::uint8_t u8() { return uint<std::uint8_t>(); }
  std::uint16_t u16() { return uint<std::uint16_t>(); }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  void magic(const char* m) {
    need(4);
    if (data_.compare(pos_, 4, m) != 0) throw FormatError(std::string(what_) + ": bad magic, expected " + m);
    pos_ += 4;
  }
  void version() {
    const auto v = u16();
    if (v != kFormatVersion)
      throw FormatError(std::string(what_) + ": unsupported version " + std::to_string(v));
  }
  void finish() const {
    if (pos_ != data_.size()) throw FormatError(std::string(what_) + ": trailing bytes");
  }

 private:
  const std::string& data_;
  const char* what_;
  std::size_t pos_ = 0;
};

void put_grid(Writer& w, const Grid3& g) {
  for (auto n : g.dims()) w.u32(n);
  for (auto f : g.fov()) w.f64(f);
}

Grid3 get_grid(Reader& r) {
  Index3 d;
  Vec3 f;
  for (auto& n : d) n = r.u32();
  for (auto& x : f) x = r.f64();
  try {
    return Grid3(d, f);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid grid in file: ") + e.what());
  }
}

}  // namespace

std::string encode_sm(const SystemMatrix& sm) {
  Writer w;
  w.bytes("SMB1", 4);
  w.u16(kFormatVersion);
  put_grid(w, sm.grid());
  w.u8(static_cast<std::uint8_t>(sm.provenance()));
  w.u32(sm.num_rows());
  for (const auto& row : sm.rows()) {
    w.u8(static_cast<std::uint8_t>(row.channel()));
    w.u32(row.freq_index());
    for (std::size_t i = 0; i < row.size(); ++i) {
      w.f64(row.re()[i]);
      w.f64(row.im()[i]);
    }
  }
  return w.take();
}

SystemMatrix decode_sm(const std::string& bytes) {
  Reader r(bytes, "SMB");
  r.magic("SMB1");
  r.version();
  const Grid3 grid = get_grid(r);
  const auto prov = r.u8();
  if (prov > static_cast<std::uint8_t>(Provenance::loaded)) throw FormatError("SMB: bad provenance");
  const std::uint32_t n = r.u32();
  r.need(static_cast<std::size_t>(n) * (5 + 16 * grid.size()));
  std::vector<SMRow> rows;
  rows.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto ch = r.u8();
    if (ch > 2) throw FormatError("SMB: bad channel code");
    const auto k = r.u32();
    std::vector<double> re(grid.size()), im(grid.size());
    for (std::size_t v = 0; v < grid.size(); ++v) {
      re[v] = r.f64();
      im[v] = r.f64();
    }
    try {
      rows.emplace_back(static_cast<Channel>(ch), k, grid, std::move(re), std::move(im));
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("SMB: ") + e.what());
    }
  }
  r.finish();
  return SystemMatrix(grid, std::move(rows), static_cast<Provenance>(prov));
}

void write_sm(const std::string& path, const SystemMatrix& sm) { write_file_atomic(path, encode_sm(sm)); }
SystemMatrix read_sm(const std::string& path) { return decode_sm(read_file(path)); }

std::string encode_phantom(const Phantom& ph) {
  Writer w;
  w.bytes("PHB1", 4);
  w.u16(kFormatVersion);
  put_grid(w, ph.grid());
  for (double v : ph.values()) w.f64(v);
  return w.take();
}

Phantom decode_phantom(const std::string& bytes) {
  Reader r(bytes, "PHB");
  r.magic("PHB1");
  r.version();
  const Grid3 grid = get_grid(r);
  r.need(8 * grid.size());
  std::vector<double> v(grid.size());
  for (auto& x : v) x = r.f64();
  r.finish();
  try {
    return Phantom(grid, std::move(v));
  } catch (const Error& e) {
    throw FormatError(std::string("PHB: ") + e.what());
  }
}

void write_phantom(const std::string& path, const Phantom& ph) {
  write_file_atomic(path, encode_phantom(ph));
}
Phantom read_phantom(const std::string& path) { return decode_phantom(read_file(path)); }

std::string encode_model(const sr::SRModel& model) {
  const auto& c = model.config();
  Writer w;
  w.bytes("SRM1", 4);
  w.u16(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(c.mode));
  w.u8(static_cast<std::uint8_t>(c.upsample));
  w.u8(static_cast<std::uint8_t>(c.spatial_dims));
  w.u32(c.blocks);
  w.u32(c.stages);
  w.u32(c.features);
  w.u32(c.ratio);
  w.f64(c.residual_scale);
  w.f64(c.leaky_slope);
  w.u64(model.parameter_count());
  for (double p : model.parameters()) w.f64(p);
  return w.take();
}

sr::SRModel decode_model(const std::string& bytes) {
  Reader r(bytes, "SRM");
  r.magic("SRM1");
  r.version();
  sr::ModelConfig c;
  const auto mode = r.u8();
  const auto up = r.u8();
  if (mode > 2 || up > 1) throw FormatError("SRM: bad mode code");
  c.mode = static_cast<sr::PositionMode>(mode);
  c.upsample = static_cast<sr::Upsample>(up);
  c.spatial_dims = r.u8();
  c.blocks = r.u32();
  c.stages = r.u32();
  c.features = r.u32();
  c.ratio = r.u32();
  c.residual_scale = r.f64();
  c.leaky_slope = r.f64();
  sr::SRModel m;
  try {
    m = sr::SRModel(c);
  } catch (const Error& e) {
    throw FormatError(std::string("SRM: ") + e.what());
  }
  const auto n = r.u64();
  if (n != m.parameter_count())
    throw FormatError("SRM: parameter count " + std::to_string(n) + " does not match architecture (" +
                      std::to_string(m.parameter_count()) + ")");
  r.need(8 * n);
  for (auto& p : m.parameters()) p = r.f64();
  r.finish();
  return m;
}

void write_model(const std::string& path, const sr::SRModel& model) {
  write_file_atomic(path, encode_model(model));
}
sr::SRModel read_model(const std::string& path) { return decode_model(read_file(path)); }

// ---------------------------------------------------------------------------
// Pair sets

namespace {

nlohmann::ordered_json dims_json(const Index3& d) { return nlohmann::ordered_json::array({d[0], d[1], d[2]}); }

Index3 dims_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("manifest: dims must be a 3-element array");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

}  // namespace

void write_pairs(const std::string& dir, const PairSet& pairs, const PairManifest& m) {
  std::vector<SMRow> lr, hr;
  std::vector<std::string> splits;
  for (const auto& p : pairs.pairs()) {
    lr.push_back(p.lr);
    hr.push_back(p.hr);
    splits.emplace_back(p.split == Split::train ? "train" : "validation");
  }
  if (pairs.size() == 0) throw DomainError("pair set is empty");
  const Grid3 lr_grid = lr.front().grid();
  const Grid3 hr_grid = hr.front().grid();
  const SystemMatrix lr_sm(lr_grid, std::move(lr), Provenance::loaded);
  const SystemMatrix hr_sm(hr_grid, std::move(hr), Provenance::loaded);
  write_sm((fs::path(dir) / "lr.smb").string(), lr_sm);
  write_sm((fs::path(dir) / "hr.smb").string(), hr_sm);

  nlohmann::ordered_json j;
  j["ratio"] = m.ratio;
  j["source_dims"] = dims_json(m.source_dims);
  j["hr_dims"] = dims_json(m.hr_dims);
  j["lr_dims"] = dims_json(m.lr_dims);
  j["pairs"] = m.pairs;
  j["train"] = m.train;
  j["validation"] = m.validation;
  j["validation_fraction"] = m.validation_fraction;
  j["seed"] = m.seed;
  j["split"] = splits;
  write_file_atomic((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

PairManifest read_manifest(const std::string& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    PairManifest m;
    m.ratio = j.at("ratio").get<std::size_t>();
    m.source_dims = dims_from_json(j.at("source_dims"));
    m.hr_dims = dims_from_json(j.at("hr_dims"));
    m.lr_dims = dims_from_json(j.at("lr_dims"));
    m.pairs = j.at("pairs").get<std::size_t>();
    m.train = j.at("train").get<std::size_t>();
    m.validation = j.at("validation").get<std::size_t>();
    m.validation_fraction = j.at("validation_fraction").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

PairSet read_pairs(const std::string& dir, PairManifest* manifest) {
  const PairManifest m = read_manifest(dir);
  const SystemMatrix lr = read_sm((fs::path(dir) / "lr.smb").string());
  const SystemMatrix hr = read_sm((fs::path(dir) / "hr.smb").string());
  std::vector<std::string> splits;
  try {
    splits = nlohmann::json::parse(read_file((fs::path(dir) / "manifest.json").string()))
                 .at("split")
                 .get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  if (lr.num_rows() != hr.num_rows() || splits.size() != lr.num_rows())
    throw FormatError("pair directory: row counts disagree");
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < lr.num_rows(); ++i) {
    Split s;
    if (splits[i] == "train") s = Split::train;
    else if (splits[i] == "validation") s = Split::validation;
    else throw FormatError("manifest: bad split label '" + splits[i] + "'");
    pairs.push_back({lr.row(i), hr.row(i), s});
  }
  if (manifest) *manifest = m;
  return PairSet(std::move(pairs), m.ratio);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string symmetry_csv(const SystemMatrix& sm, const ScanSequence& seq) {
  std::ostringstream os;
  os << "channel,k,derivation,rule_x,rule_y,rule_z,residual_x,residual_y,residual_z\n";
  for (const auto& row : sm.rows()) {
    const auto desc = expected_parity(row.channel(), row.freq_index(), seq);
    os << to_string(row.channel()) << ',' << row.freq_index() << ',' << to_string(desc.derivation);
    for (auto r : desc.axis_rules) os << ',' << to_string(r);
    if (desc.has_rules()) {
      const auto res = symmetry_residual(row, desc);
      for (const auto& v : res) os << ',' << opt(v);
    } else {
      os << ",,,";
    }
    os << '\n';
  }
  return os.str();
}

std::string history_csv(const std::vector<sr::EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_nrmse\n";
  for (const auto& h : history)
    os << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.val_nrmse) << '\n';
  return os.str();
}

std::string residual_csv(const Reconstruction& rec) {
  std::ostringstream os;
  os << "sweep,relative_residual\n";
  for (std::size_t i = 0; i < rec.residual_history.size(); ++i)
    os << i + 1 << ',' << format_double(rec.residual_history[i]) << '\n';
  return os.str();
}

std::string row_nrmse_csv(const SystemMatrix& estimate, const SystemMatrix& truth) {
  const auto v = row_nrmse(estimate, truth);
  std::ostringstream os;
  os << "channel,k,nrmse\n";
  for (std::size_t i = 0; i < v.size(); ++i)
    os << to_string(truth.row(i).channel()) << ',' << truth.row(i).freq_index() << ','
       << format_double(v[i]) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// PGM

std::string render_pgm(const std::vector<double>& field, const Index3& dims) {
  const std::size_t nx = dims[0], ny = dims[1], nz = dims[2];
  if (field.size() != nx * ny * nz) throw DomainError("render: field does not match dims");
  const std::size_t z = nz / 2;
  const double* slice = field.data() + z * nx * ny;
  const auto [lo_it, hi_it] = std::minmax_element(slice, slice + nx * ny);
  const double lo = *lo_it, hi = *hi_it;
  std::string out = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
  for (std::size_t i = 0; i < nx * ny; ++i) {
    const double u = hi > lo ? (slice[i] - lo) / (hi - lo) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0))));
  }
  return out;
}

std::string render_row_pgm(const SMRow& row) {
  std::vector<double> mag(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) mag[i] = std::abs(row.value(i));
  return render_pgm(mag, row.grid().dims());
}

}  // namespace smcal::io
