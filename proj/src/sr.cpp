#include "smcal/sr.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "smcal/metrics.hpp"

namespace smcal::sr {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

const char* to_string(PositionMode m) {
  switch (m) {
    case PositionMode::none: return "none";
    case PositionMode::normalized: return "normalized";
    case PositionMode::symmetric: return "symmetric";
  }
  return "?";
}

const char* to_string(Upsample u) { return u == Upsample::nearest ? "nearest" : "linear"; }

const char* to_string(Interpolation i) {
  switch (i) {
    case Interpolation::nearest: return "nearest";
    case Interpolation::trilinear: return "trilinear";
    case Interpolation::tricubic: return "tricubic";
  }
  return "?";
}

PositionMode position_mode_from_string(const std::string& s) {
  if (s == "none") return PositionMode::none;
  if (s == "normalized") return PositionMode::normalized;
  if (s == "symmetric") return PositionMode::symmetric;
  throw InvalidArgument("unknown position mode '" + s + "'");
}

Upsample upsample_from_string(const std::string& s) {
  if (s == "nearest") return Upsample::nearest;
  if (s == "linear") return Upsample::linear;
  throw InvalidArgument("unknown upsample mode '" + s + "'");
}

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "nearest") return Interpolation::nearest;
  if (s == "trilinear" || s == "linear" || s == "bilinear") return Interpolation::trilinear;
  if (s == "tricubic" || s == "cubic" || s == "bicubic") return Interpolation::tricubic;
  throw DomainError("unknown interpolation method '" + s + "'");
}

// ---------------------------------------------------------------------------
// Row <-> tensor

Tensor row_to_tensor(const SMRow& row, double scale) {
  const auto& g = row.grid();
  Tensor t(2, g.nz(), g.ny(), g.nx());
  const double inv = 1.0 / scale;
  for (std::size_t i = 0; i < row.size(); ++i) {
    t.data[i] = row.re()[i] * inv;
    t.data[row.size() + i] = row.im()[i] * inv;
  }
  return t;
}

SMRow tensor_to_row(const Tensor& t, Channel channel, std::uint32_t k, const Grid3& grid,
                    double scale) {
  if (t.c != 2 || t.w != grid.nx() || t.h != grid.ny() || t.d != grid.nz())
    throw DomainError("tensor does not match the target grid");
  const std::size_t n = t.spatial();
  std::vector<double> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = t.data[i] * scale;
    im[i] = t.data[n + i] * scale;
  }
  return SMRow(channel, k, grid, std::move(re), std::move(im));
}

Tensor pos_embedding(const Tensor& lr, PositionMode mode) {
  if (mode == PositionMode::none) return lr;
  Tensor out(lr.c + 3, lr.d, lr.h, lr.w);
  std::copy(lr.data.begin(), lr.data.end(), out.data.begin());
  auto ramp = [mode](std::size_t p, std::size_t n) {
    if (n <= 1) return 0.0;
    const double u = static_cast<double>(p) / static_cast<double>(n - 1);
    return mode == PositionMode::symmetric ? 2.0 * u - 1.0 : u;
  };
  for (std::size_t z = 0; z < lr.d; ++z)
    for (std::size_t y = 0; y < lr.h; ++y)
      for (std::size_t x = 0; x < lr.w; ++x) {
        out.at(lr.c + 0, z, y, x) = ramp(x, lr.w);
        out.at(lr.c + 1, z, y, x) = ramp(y, lr.h);
        out.at(lr.c + 2, z, y, x) = ramp(z, lr.d);
      }
  return out;
}

// ---------------------------------------------------------------------------
// Separable resampling

namespace {

// Reshapes in place, reusing capacity, and zero-fills.
void reset(Tensor& t, std::size_t c, std::size_t d, std::size_t h, std::size_t w) {
  t.c = c;
  t.d = d;
  t.h = h;
  t.w = w;
  t.data.assign(c * d * h * w, 0.0);
}

struct Taps {
  std::size_t n_in = 0, n_out = 0, per = 1;
  std::vector<std::size_t> idx;  // n_out * per
  std::vector<double> wt;
};

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
  if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

// Linear taps for HR voxel q at LR coordinate s, clamped to the LR span.
void linear_tap(double s, std::size_t n_in, std::size_t* ix, double* w) {
  s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(s));
  const double f = s - static_cast<double>(i0);
  ix[0] = i0;
  ix[1] = std::min<std::size_t>(i0 + 1, n_in - 1);
  w[0] = 1.0 - f;
  w[1] = f;
}

// Network upsampling: half-pixel centres, s = (q + 0.5) / r - 0.5, so the
// operator commutes with index reversal.
Taps make_half_pixel_taps(std::size_t n_in, std::size_t ratio) {
  Taps t;
  t.n_in = n_in;
  t.n_out = n_in * ratio;
  t.per = 2;
  t.idx.resize(t.n_out * 2);
  t.wt.resize(t.n_out * 2);
  for (std::size_t q = 0; q < t.n_out; ++q)
    linear_tap((static_cast<double>(q) + 0.5) / static_cast<double>(ratio) - 0.5, n_in, &t.idx[q * 2],
               &t.wt[q * 2]);
  return t;
}

enum class Kernel { nearest, linear, cubic, half_pixel_linear };

Kernel kernel_for(Interpolation i) {
  switch (i) {
    case Interpolation::nearest: return Kernel::nearest;
    case Interpolation::trilinear: return Kernel::linear;
    case Interpolation::tricubic: return Kernel::cubic;
  }
  return Kernel::nearest;
}

Taps make_taps(std::size_t n_in, std::size_t ratio, Interpolation mode);

Taps make_taps(std::size_t n_in, std::size_t ratio, Kernel k) {
  return k == Kernel::half_pixel_linear ? make_half_pixel_taps(n_in, ratio)
         : k == Kernel::nearest         ? make_taps(n_in, ratio, Interpolation::nearest)
         : k == Kernel::linear          ? make_taps(n_in, ratio, Interpolation::trilinear)
                                        : make_taps(n_in, ratio, Interpolation::tricubic);
}

Taps make_taps(std::size_t n_in, std::size_t ratio, Interpolation mode) {
  Taps t;
  t.n_in = n_in;
  t.n_out = n_in * ratio;
  t.per = mode == Interpolation::nearest ? 1 : (mode == Interpolation::trilinear ? 2 : 4);
  t.idx.resize(t.n_out * t.per);
  t.wt.resize(t.n_out * t.per);
  const auto last = static_cast<std::ptrdiff_t>(n_in) - 1;
  for (std::size_t q = 0; q < t.n_out; ++q) {
    const std::size_t i0 = q / ratio;
    const double f = static_cast<double>(q % ratio) / static_cast<double>(ratio);
    std::size_t* ix = &t.idx[q * t.per];
    double* w = &t.wt[q * t.per];
    switch (mode) {
      case Interpolation::nearest:
        ix[0] = i0;
        w[0] = 1.0;
        break;
      case Interpolation::trilinear:
        ix[0] = i0;
        ix[1] = std::min<std::size_t>(i0 + 1, n_in - 1);
        w[0] = 1.0 - f;
        w[1] = f;
        break;
      case Interpolation::tricubic:
        for (int k = 0; k < 4; ++k) {
          const auto j = static_cast<std::ptrdiff_t>(i0) - 1 + k;
          ix[k] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last));
          w[k] = keys_cubic(f - static_cast<double>(k - 1));
        }
        break;
    }
  }
  return t;
}

// Strides of the axis inside one channel plane ([d][h][w]).
struct AxisLayout {
  std::size_t outer, n, inner;
};

AxisLayout layout(const Tensor& t, int axis) {
  switch (axis) {
    case 0: return {t.d * t.h, t.w, 1};
    case 1: return {t.d, t.h, t.w};
    default: return {1, t.d, t.h * t.w};
  }
}

std::size_t axis_size(const Tensor& t, int axis) { return axis == 0 ? t.w : (axis == 1 ? t.h : t.d); }

void reset_like(Tensor& out, const Tensor& in, int axis, std::size_t n) {
  reset(out, in.c, axis == 2 ? n : in.d, axis == 1 ? n : in.h, axis == 0 ? n : in.w);
}

// adjoint == false: out(q) = sum w in(p); adjoint == true: out(p) += w in(q).
void resample_axis(const Tensor& in, int axis, const Taps& taps, bool adjoint, Tensor& out) {
  reset_like(out, in, axis, adjoint ? taps.n_in : taps.n_out);
  const AxisLayout li = layout(in, axis), lo = layout(out, axis);
  for (std::size_t c = 0; c < in.c; ++c) {
    const double* src = in.channel(c);
    double* dst = out.channel(c);
    for (std::size_t o = 0; o < li.outer; ++o)
      for (std::size_t q = 0; q < taps.n_out; ++q)
        for (std::size_t k = 0; k < taps.per; ++k) {
          const double w = taps.wt[q * taps.per + k];
          if (w == 0.0) continue;
          const std::size_t p = taps.idx[q * taps.per + k];
          const double* s = src + (o * li.n + (adjoint ? q : p)) * li.inner;
          double* d = dst + (o * lo.n + (adjoint ? p : q)) * lo.inner;
          for (std::size_t i = 0; i < li.inner; ++i) d[i] += w * s[i];
        }
  }
}

// Upsamples `in` into `out` (tmp is scratch). Axes with one sample are kept.
void resample(const Tensor& in, std::size_t ratio, Kernel mode, Tensor& out, Tensor& tmp) {
  std::vector<int> axes;
  for (int a = 0; a < 3; ++a)
    if (axis_size(in, a) > 1 && ratio > 1) axes.push_back(a);
  if (axes.empty()) {
    out = in;
    return;
  }
  const Tensor* cur = &in;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    Tensor& dst = (axes.size() - 1 - i) % 2 == 0 ? out : tmp;
    resample_axis(*cur, axes[i], make_taps(axis_size(*cur, axes[i]), ratio, mode), false, dst);
    cur = &dst;
  }
}

// Transpose of resample for an input of shape `in_shape`.
void resample_adjoint(const Tensor& gout, const Tensor& in_shape, std::size_t ratio,
                      Kernel mode, Tensor& gin, Tensor& tmp) {
  std::vector<int> axes;
  for (int a = 2; a >= 0; --a)
    if (axis_size(in_shape, a) > 1 && ratio > 1) axes.push_back(a);
  if (axes.empty()) {
    gin = gout;
    return;
  }
  const Tensor* cur = &gout;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    Tensor& dst = (axes.size() - 1 - i) % 2 == 0 ? gin : tmp;
    resample_axis(*cur, axes[i], make_taps(axis_size(in_shape, axes[i]), ratio, mode), true, dst);
    cur = &dst;
  }
}

Tensor resample(const Tensor& in, std::size_t ratio, Kernel mode) {
  Tensor out, tmp;
  resample(in, ratio, mode, out, tmp);
  return out;
}

Kernel as_interp(Upsample u) {
  return u == Upsample::nearest ? Kernel::nearest : Kernel::half_pixel_linear;
}

}  // namespace

Tensor upsample(const Tensor& in, std::size_t ratio, Upsample mode) {
  return resample(in, ratio, as_interp(mode));
}

// ---------------------------------------------------------------------------
// Convolution via im2col

std::size_t ConvSpec::weight_count() const {
  return out * in * static_cast<std::size_t>(kd * kh * kw);
}

namespace {

std::size_t kvol(const ConvSpec& c) { return static_cast<std::size_t>(c.kd * c.kh * c.kw); }

// col[(ci * K + k) * P + p] = in[ci](p + offset_k), zero outside. Only the
// first cs.in channels of `in` are read.
void im2col(const Tensor& in, const ConvSpec& cs, std::vector<double>& col) {
  const std::size_t P = in.spatial();
  const std::size_t K = kvol(cs);
  col.assign(cs.in * K * P, 0.0);
  const int pd = cs.kd / 2, ph = cs.kh / 2, pw = cs.kw / 2;
  const auto D = static_cast<std::ptrdiff_t>(in.d), H = static_cast<std::ptrdiff_t>(in.h),
             W = static_cast<std::ptrdiff_t>(in.w);
  for (std::size_t ci = 0; ci < cs.in; ++ci) {
    const double* src = in.channel(ci);
    std::size_t k = 0;
    for (int dz = -pd; dz <= pd; ++dz)
      for (int dy = -ph; dy <= ph; ++dy)
        for (int dx = -pw; dx <= pw; ++dx, ++k) {
          double* dst = col.data() + (ci * K + k) * P;
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(W, W - dx);
          for (std::ptrdiff_t z = 0; z < D; ++z) {
            const std::ptrdiff_t sz = z + dz;
            if (sz < 0 || sz >= D) continue;
            for (std::ptrdiff_t y = 0; y < H; ++y) {
              const std::ptrdiff_t sy = y + dy;
              if (sy < 0 || sy >= H) continue;
              const double* s = src + (sz * H + sy) * W + dx;
              double* d = dst + (z * H + y) * W;
              for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) d[x] = s[x];
            }
          }
        }
  }
}

// Adds the scattered columns into the first cs.in channels of gin.
void col2im_add(const std::vector<double>& col, const ConvSpec& cs, Tensor& gin) {
  const std::size_t P = gin.spatial();
  const std::size_t K = kvol(cs);
  const int pd = cs.kd / 2, ph = cs.kh / 2, pw = cs.kw / 2;
  const auto D = static_cast<std::ptrdiff_t>(gin.d), H = static_cast<std::ptrdiff_t>(gin.h),
             W = static_cast<std::ptrdiff_t>(gin.w);
  for (std::size_t ci = 0; ci < cs.in; ++ci) {
    double* dst = gin.channel(ci);
    std::size_t k = 0;
    for (int dz = -pd; dz <= pd; ++dz)
      for (int dy = -ph; dy <= ph; ++dy)
        for (int dx = -pw; dx <= pw; ++dx, ++k) {
          const double* src = col.data() + (ci * K + k) * P;
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(W, W - dx);
          for (std::ptrdiff_t z = 0; z < D; ++z) {
            const std::ptrdiff_t sz = z + dz;
            if (sz < 0 || sz >= D) continue;
            for (std::ptrdiff_t y = 0; y < H; ++y) {
              const std::ptrdiff_t sy = y + dy;
              if (sy < 0 || sy >= H) continue;
              double* d = dst + (sz * H + sy) * W + dx;
              const double* s = src + (z * H + y) * W;
              for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) d[x] += s[x];
            }
          }
        }
  }
}

// out = W * col + b, written into the out-channel slice starting at `offset`.
void conv_forward(const Tensor& in, const ConvSpec& cs, const double* params,
                  std::vector<double>& col, double* out) {
  im2col(in, cs, col);
  const auto P = static_cast<Eigen::Index>(in.spatial());
  const auto CK = static_cast<Eigen::Index>(cs.in * kvol(cs));
  CMapMat Wm(params + cs.weight_offset, static_cast<Eigen::Index>(cs.out), CK);
  CMapMat C(col.data(), CK, P);
  MapMat O(out, static_cast<Eigen::Index>(cs.out), P);
  O.noalias() = Wm * C;
  for (std::size_t o = 0; o < cs.out; ++o)
    O.row(static_cast<Eigen::Index>(o)).array() += params[cs.bias_offset + o];
}

// Accumulates dW, db into grad and, when gin is given, adds d(input) into its
// first cs.in channels.
void conv_backward(const double* gout, const Tensor& shape, const ConvSpec& cs,
                   const double* params, const std::vector<double>& col, double* grad,
                   std::vector<double>& dcol, Tensor* gin) {
  const auto P = static_cast<Eigen::Index>(shape.spatial());
  const auto CK = static_cast<Eigen::Index>(cs.in * kvol(cs));
  CMapMat G(gout, static_cast<Eigen::Index>(cs.out), P);
  CMapMat C(col.data(), CK, P);
  MapMat dW(grad + cs.weight_offset, static_cast<Eigen::Index>(cs.out), CK);
  dW.noalias() += G * C.transpose();
  // Plain loop: Eigen's vectorized sum depends on pointer alignment.
  for (std::size_t o = 0; o < cs.out; ++o) {
    const double* g = gout + o * static_cast<std::size_t>(P);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < P; ++i) acc += g[i];
    grad[cs.bias_offset + o] += acc;
  }
  if (gin) {
    CMapMat Wm(params + cs.weight_offset, static_cast<Eigen::Index>(cs.out), CK);
    dcol.resize(static_cast<std::size_t>(CK * P));
    MapMat DC(dcol.data(), CK, P);
    DC.noalias() = Wm.transpose() * G;
    col2im_add(dcol, cs, *gin);
  }
}

// Forward activations kept for the backward pass, plus reusable scratch.
struct Workspace {
  std::vector<double> head_col;
  Tensor h0;
  std::vector<Tensor> dense;  // per block: [X, y_1 .. y_D] stacked along channels
  std::vector<std::vector<std::vector<double>>> cols;  // per block, per stage
  Tensor blk, z, up, tmp, out;
  std::vector<double> readout_col;
  // backward scratch
  std::vector<double> dcol;
  Tensor gout, gup, gz, gdense, gcur;
};

void leaky_inplace(double* y, std::size_t n, double slope) {
  for (std::size_t i = 0; i < n; ++i)
    if (y[i] < 0.0) y[i] *= slope;
}

void forward_impl(const SRModel& m, const Tensor& x, Workspace& ws) {
  const auto& cfg = m.config();
  const double* P = m.parameters().data();
  if (x.c != cfg.input_channels())
    throw DomainError("input has " + std::to_string(x.c) + " channels, model expects " +
                      std::to_string(cfg.input_channels()));
  if (cfg.spatial_dims == 2 && x.d != 1) throw DomainError("2D model needs depth-1 input");
  const std::size_t F = cfg.features, D = cfg.stages, S = x.spatial();

  reset(ws.h0, F, x.d, x.h, x.w);
  conv_forward(x, m.head(), P, ws.head_col, ws.h0.data.data());
  ws.dense.resize(cfg.blocks);
  ws.cols.resize(cfg.blocks);
  const double* xin = ws.h0.data.data();
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    Tensor& dn = ws.dense[b];
    reset(dn, F * (D + 1), x.d, x.h, x.w);
    std::copy(xin, xin + F * S, dn.data.begin());
    ws.cols[b].resize(D);
    for (std::size_t s = 0; s < D; ++s) {
      double* y = dn.data.data() + F * (s + 1) * S;
      conv_forward(dn, m.stage(b, s), P, ws.cols[b][s], y);
      if (s + 1 < D) leaky_inplace(y, F * S, cfg.leaky_slope);
    }
    reset(ws.blk, F, x.d, x.h, x.w);
    const double* yD = dn.data.data() + F * D * S;
    for (std::size_t i = 0; i < F * S; ++i) ws.blk.data[i] = dn.data[i] + cfg.residual_scale * yD[i];
    xin = ws.blk.data.data();
  }
  ws.z = ws.h0;
  if (cfg.blocks > 0)
    for (std::size_t i = 0; i < F * S; ++i) ws.z.data[i] += ws.blk.data[i];
  resample(ws.z, cfg.ratio, as_interp(cfg.upsample), ws.up, ws.tmp);
  reset(ws.out, 2, ws.up.d, ws.up.h, ws.up.w);
  conv_forward(ws.up, m.readout(), P, ws.readout_col, ws.out.data.data());
}

// Backward from ws.gout; accumulates into grad.
void backward_impl(const SRModel& m, const Tensor& x, Workspace& ws, double* grad) {
  const auto& cfg = m.config();
  const double* P = m.parameters().data();
  const std::size_t F = cfg.features, D = cfg.stages, S = x.spatial();

  reset(ws.gup, F, ws.up.d, ws.up.h, ws.up.w);
  conv_backward(ws.gout.data.data(), ws.up, m.readout(), P, ws.readout_col, grad, ws.dcol, &ws.gup);
  resample_adjoint(ws.gup, ws.z, cfg.ratio, as_interp(cfg.upsample), ws.gz, ws.tmp);

  // ws.gz: gradient of z = h0 + trunk; ws.gcur: gradient of the current block output.
  if (cfg.blocks > 0) {
    ws.gcur = ws.gz;
    for (std::size_t b = cfg.blocks; b-- > 0;) {
      const Tensor& dn = ws.dense[b];
      reset(ws.gdense, F * (D + 1), x.d, x.h, x.w);
      double* gd = ws.gdense.data.data();
      for (std::size_t i = 0; i < F * S; ++i) {
        gd[i] = ws.gcur.data[i];
        gd[F * D * S + i] = cfg.residual_scale * ws.gcur.data[i];
      }
      for (std::size_t s = D; s-- > 0;) {
        double* gy = gd + F * (s + 1) * S;
        if (s + 1 < D) {
          const double* y = dn.data.data() + F * (s + 1) * S;
          for (std::size_t i = 0; i < F * S; ++i)
            if (!(y[i] > 0.0)) gy[i] *= cfg.leaky_slope;
        }
        conv_backward(gy, dn, m.stage(b, s), P, ws.cols[b][s], grad, ws.dcol, &ws.gdense);
      }
      std::copy(gd, gd + F * S, ws.gcur.data.begin());
    }
    for (std::size_t i = 0; i < F * S; ++i) ws.gz.data[i] += ws.gcur.data[i];
  }
  conv_backward(ws.gz.data.data(), x, m.head(), P, ws.head_col, grad, ws.dcol, nullptr);
}

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

void ModelConfig::validate() const {
  if (ratio < 1) throw DomainError("ratio must be >= 1");
  if (features < 1) throw InvalidArgument("features must be >= 1");
  if (blocks > 0 && stages < 1) throw InvalidArgument("stages must be >= 1");
  if (spatial_dims != 2 && spatial_dims != 3) throw InvalidArgument("spatial_dims must be 2 or 3");
  if (!(leaky_slope > 0.0)) throw InvalidArgument("leaky slope must be > 0");
}

SRModel::SRModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::size_t off = 0;
  auto add = [&](std::size_t in, std::size_t out) {
    ConvSpec c;
    c.in = in;
    c.out = out;
    c.kd = cfg_.spatial_dims == 3 ? 3 : 1;
    c.weight_offset = off;
    off += c.weight_count();
    c.bias_offset = off;
    off += out;
    convs_.push_back(c);
  };
  add(cfg_.input_channels(), cfg_.features);
  for (std::size_t b = 0; b < cfg_.blocks; ++b)
    for (std::size_t s = 0; s < cfg_.stages; ++s) add(cfg_.features * (s + 1), cfg_.features);
  add(cfg_.features, 2);
  params_.assign(off, 0.0);
}

SRModel SRModel::initialize(const ModelConfig& cfg, std::uint64_t seed) {
  SRModel m(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t i = 0; i < m.convs_.size(); ++i) {
    const auto& c = m.convs_[i];
    const double fan_in = static_cast<double>(c.in * kvol(c));
    double bound = 1.0 / std::sqrt(fan_in);
    if (i + 1 == m.convs_.size()) bound *= 0.1;
    for (std::size_t j = 0; j < c.weight_count(); ++j) m.params_[c.weight_offset + j] = bound * unit(rng);
    for (std::size_t j = 0; j < c.out; ++j) m.params_[c.bias_offset + j] = bound * unit(rng);
  }
  return m;
}

Tensor SRModel::forward(const Tensor& x) const {
  Workspace& ws = workspace();
  forward_impl(*this, x, ws);
  return ws.out;
}

std::vector<bool> rectifier_pattern(const SRModel& model, const Tensor& x) {
  Workspace& ws = workspace();
  forward_impl(model, x, ws);
  const auto& cfg = model.config();
  const std::size_t F = cfg.features, D = cfg.stages, S = x.spatial();
  std::vector<bool> out;
  out.reserve(cfg.blocks * (D > 0 ? D - 1 : 0) * F * S);
  for (std::size_t b = 0; b < cfg.blocks; ++b)
    for (std::size_t s = 0; s + 1 < D; ++s) {
      const double* y = ws.dense[b].data.data() + F * (s + 1) * S;
      for (std::size_t i = 0; i < F * S; ++i) out.push_back(y[i] > 0.0);
    }
  return out;
}

namespace {

double sample_loss_grad(const SRModel& model, const Sample& s, double norm, double* grad) {
  Workspace& ws = workspace();
  forward_impl(model, s.input, ws);
  if (ws.out.data.size() != s.target.data.size())
    throw DomainError("target shape does not match model output");
  ws.gout = ws.out;
  double loss = 0.0;
  for (std::size_t i = 0; i < ws.out.data.size(); ++i) {
    const double r = ws.out.data[i] - s.target.data[i];
    loss += r * r;
    ws.gout.data[i] = 2.0 * r / norm;
  }
  if (grad) backward_impl(model, s.input, ws, grad);
  return loss / norm;
}

}  // namespace

LossAndGradient loss_and_gradients(const SRModel& model, const std::vector<Sample>& batch,
                                   unsigned threads) {
  LossAndGradient out;
  out.gradient.assign(model.parameter_count(), 0.0);
  if (batch.empty()) return out;
  double norm = 0.0;
  for (const auto& s : batch) norm += static_cast<double>(s.target.data.size());

  // Per-sample gradients, reduced in sample order whatever the thread count.
  if (threads <= 1 || batch.size() == 1) {
    std::vector<double> g(model.parameter_count());
    for (const auto& s : batch) {
      std::fill(g.begin(), g.end(), 0.0);
      out.loss += sample_loss_grad(model, s, norm, g.data());
      for (std::size_t j = 0; j < g.size(); ++j) out.gradient[j] += g[j];
    }
    return out;
  }
  std::vector<std::vector<double>> grads(batch.size(),
                                         std::vector<double>(model.parameter_count(), 0.0));
  std::vector<double> losses(batch.size(), 0.0);
  std::vector<std::thread> pool;
  const unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(batch.size()));
  for (unsigned t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < batch.size(); i += nt)
        losses[i] = sample_loss_grad(model, batch[i], norm, grads[i].data());
    });
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += losses[i];
    for (std::size_t j = 0; j < out.gradient.size(); ++j) out.gradient[j] += grads[i][j];
  }
  return out;
}

double loss_only(const SRModel& model, const std::vector<Sample>& batch) {
  double norm = 0.0;
  for (const auto& s : batch) norm += static_cast<double>(s.target.data.size());
  double loss = 0.0;
  for (const auto& s : batch) loss += sample_loss_grad(model, s, norm, nullptr);
  return loss;
}

// ---------------------------------------------------------------------------
// Inference

double row_scale(const SMRow& lr) {
  double m = 0.0;
  for (std::size_t i = 0; i < lr.size(); ++i) m = std::max(m, std::abs(lr.value(i)));
  return m > 0.0 ? m : 1.0;
}

Grid3 upsampled_grid(const Grid3& lr, std::size_t ratio) {
  Index3 d = lr.dims();
  for (auto& n : d)
    if (n > 1) n *= ratio;
  return Grid3(d, lr.fov());
}

SMRow recover_row(const SRModel& model, const SMRow& lr) {
  const double scale = row_scale(lr);
  const Tensor x = pos_embedding(row_to_tensor(lr, scale), model.config().mode);
  const Tensor y = model.forward(x);
  return tensor_to_row(y, lr.channel(), lr.freq_index(), upsampled_grid(lr.grid(), model.config().ratio),
                       scale);
}

SystemMatrix recover(const SRModel& model, const SystemMatrix& lr_sm, std::size_t ratio) {
  if (ratio != model.config().ratio)
    throw DomainError("model was trained for ratio " + std::to_string(model.config().ratio) +
                      ", got " + std::to_string(ratio));
  const Grid3 hr = upsampled_grid(lr_sm.grid(), ratio);
  std::vector<SMRow> rows;
  rows.reserve(lr_sm.num_rows());
  for (const auto& r : lr_sm.rows()) rows.push_back(recover_row(model, r));
  return SystemMatrix(hr, std::move(rows), Provenance::recovered);
}

double evaluate_pairs(const SRModel& model, const std::vector<const Pair*>& pairs) {
  if (pairs.empty()) return 0.0;
  double acc = 0.0;
  for (const Pair* p : pairs) acc += nrmse(recover_row(model, p->lr), p->hr);
  return acc / static_cast<double>(pairs.size());
}

SMRow interpolate_row(const SMRow& lr, std::size_t ratio, Interpolation method) {
  if (ratio < 1) throw DomainError("ratio must be >= 1");
  const Tensor t = resample(row_to_tensor(lr), ratio, kernel_for(method));
  return tensor_to_row(t, lr.channel(), lr.freq_index(), upsampled_grid(lr.grid(), ratio));
}

SystemMatrix baseline_interpolate(const SystemMatrix& lr_sm, std::size_t ratio,
                                  Interpolation method) {
  const Grid3 hr = upsampled_grid(lr_sm.grid(), ratio);
  std::vector<SMRow> rows;
  rows.reserve(lr_sm.num_rows());
  for (const auto& r : lr_sm.rows()) rows.push_back(interpolate_row(r, ratio, method));
  return SystemMatrix(hr, std::move(rows), Provenance::recovered);
}

SystemMatrix zero_fill(const SystemMatrix& lr_sm, std::size_t ratio) {
  const Grid3 hr = upsampled_grid(lr_sm.grid(), ratio);
  const Grid3& lg = lr_sm.grid();
  Index3 stride{1, 1, 1};
  for (int a = 0; a < 3; ++a)
    if (lg.dims()[a] > 1) stride[a] = ratio;
  std::vector<SMRow> rows;
  for (const auto& r : lr_sm.rows()) {
    std::vector<double> re(hr.size(), 0.0), im(hr.size(), 0.0);
    for (std::size_t i = 0; i < lg.size(); ++i) {
      const Index3 p = lg.unravel(i);
      const std::size_t j = hr.linear(p[0] * stride[0], p[1] * stride[1], p[2] * stride[2]);
      re[j] = r.re()[i];
      im[j] = r.im()[i];
    }
    rows.push_back(r.with_values(hr, std::move(re), std::move(im)));
  }
  return SystemMatrix(hr, std::move(rows), Provenance::recovered);
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
}

namespace {

struct Adam {
  std::vector<double> m, v;
  std::size_t t = 0;
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void step(std::vector<double>& p, const std::vector<double>& g, const TrainConfig& cfg) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
};

Sample make_sample(const Pair& p, PositionMode mode) {
  const double scale = row_scale(p.lr);
  return {pos_embedding(row_to_tensor(p.lr, scale), mode), row_to_tensor(p.hr, scale)};
}

Tensor transform(const Tensor& t, const GroupElement& g) {
  Tensor out = t;
  out.data = apply_group(g, t.dims(), t.data, t.c);
  const Index3 od = transformed_dims(g, t.dims());
  out.w = od[0];
  out.h = od[1];
  out.d = od[2];
  return out;
}

}  // namespace

TrainResult train(const SRModel& initial, const PairSet& pairs, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const auto train_pairs = pairs.select(Split::train);
  const auto val_pairs = pairs.select(Split::validation);
  if (train_pairs.empty() || val_pairs.empty())
    throw DomainError("training needs non-empty train and validation splits");
  if (pairs.ratio() != initial.config().ratio)
    throw DomainError("pair ratio does not match the model ratio");

  TrainResult res;
  res.model = initial;
  if (cfg.max_epochs == 0) return res;

  const PositionMode mode = initial.config().mode;
  std::vector<Sample> samples;
  samples.reserve(train_pairs.size());
  for (const Pair* p : train_pairs) samples.push_back(make_sample(*p, mode));
  const auto group = [&] {
    auto g = shape_preserving_group(samples.front().target.dims());
    const auto lg = shape_preserving_group(samples.front().input.dims());
    std::erase_if(g, [&](const GroupElement& e) { return std::find(lg.begin(), lg.end(), e) == lg.end(); });
    return g;
  }();

  SRModel model = initial;
  Adam opt(model.parameter_count());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  res.best_val_nrmse = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Sample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = samples[order[i]];
        if (cfg.augment) {
          const GroupElement& g = group[static_cast<std::size_t>(rng() % group.size())];
          batch.push_back({transform(s.input, g), transform(s.target, g)});
        } else {
          batch.push_back(s);
        }
      }
      auto lg = loss_and_gradients(model, batch, cfg.threads);
      if (!std::isfinite(lg.loss))
        throw TrainingDiverged(epoch, "training loss became non-finite at epoch " + std::to_string(epoch));
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      seen += batch.size();
      opt.step(model.parameters(), lg.gradient, cfg);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(seen);
    rec.val_nrmse = evaluate_pairs(model, val_pairs);
    if (!std::isfinite(rec.val_nrmse))
      throw TrainingDiverged(epoch, "validation NRMSE became non-finite at epoch " + std::to_string(epoch));
    res.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_nrmse < res.best_val_nrmse) {
      res.best_val_nrmse = rec.val_nrmse;
      res.best_epoch = epoch;
      res.model = model;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return res;
}

}  // namespace smcal::sr
