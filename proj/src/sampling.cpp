#include "smcal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smcal {

namespace {

Grid3 regrid(const Grid3& g, const Index3& dims) {
  Vec3 fov{};
  for (int a = 0; a < 3; ++a)
    fov[a] = g.spacing(a) * static_cast<double>(dims[a]);
  return Grid3(dims, fov);
}

template <class F>
void for_each_voxel(const Index3& dims, F&& f) {
  for (std::size_t z = 0; z < dims[2]; ++z)
    for (std::size_t y = 0; y < dims[1]; ++y)
      for (std::size_t x = 0; x < dims[0]; ++x) f(Index3{x, y, z});
}

inline std::size_t lin(const Index3& d, const Index3& p) { return (p[2] * d[1] + p[1]) * d[0] + p[0]; }

template <class Op>
SystemMatrix map_rows(const SystemMatrix& sm, const Grid3& out_grid, Op&& op) {
  std::vector<SMRow> rows;
  rows.reserve(sm.num_rows());
  for (const auto& r : sm.rows()) rows.push_back(op(r));
  return SystemMatrix(out_grid, std::move(rows), sm.provenance());
}

}  // namespace

SMRow zero_pad(const SMRow& row, std::size_t pre, std::size_t post) {
  const Grid3& g = row.grid();
  Index3 nd = g.dims();
  Index3 off{0, 0, 0};
  for (int a = 0; a < 3; ++a)
    if (nd[a] > 1) {
      nd[a] += pre + post;
      off[a] = pre;
    }
  Grid3 ng = regrid(g, nd);
  std::vector<double> re(ng.size(), 0.0), im(ng.size(), 0.0);
  for_each_voxel(g.dims(), [&](const Index3& p) {
    const Index3 q{p[0] + off[0], p[1] + off[1], p[2] + off[2]};
    re[lin(nd, q)] = row.re()[g.linear(p)];
    im[lin(nd, q)] = row.im()[g.linear(p)];
  });
  return row.with_values(ng, std::move(re), std::move(im));
}

SystemMatrix zero_pad(const SystemMatrix& sm, std::size_t pre, std::size_t post) {
  const SMRow probe = zero_pad(SMRow::zeros(Channel::X, 0, sm.grid()), pre, post);
  return map_rows(sm, probe.grid(), [&](const SMRow& r) { return zero_pad(r, pre, post); });
}

SMRow crop(const SMRow& row, std::size_t pre, std::size_t post) {
  const Grid3& g = row.grid();
  Index3 nd = g.dims();
  Index3 off{0, 0, 0};
  for (int a = 0; a < 3; ++a)
    if (nd[a] > 1) {
      if (nd[a] <= pre + post) throw DomainError("crop larger than the grid");
      nd[a] -= pre + post;
      off[a] = pre;
    }
  Grid3 ng = regrid(g, nd);
  std::vector<double> re(ng.size()), im(ng.size());
  for_each_voxel(nd, [&](const Index3& q) {
    const Index3 p{q[0] + off[0], q[1] + off[1], q[2] + off[2]};
    re[lin(nd, q)] = row.re()[g.linear(p)];
    im[lin(nd, q)] = row.im()[g.linear(p)];
  });
  return row.with_values(ng, std::move(re), std::move(im));
}

SystemMatrix crop(const SystemMatrix& sm, std::size_t pre, std::size_t post) {
  const SMRow probe = crop(SMRow::zeros(Channel::X, 0, sm.grid()), pre, post);
  return map_rows(sm, probe.grid(), [&](const SMRow& r) { return crop(r, pre, post); });
}

SMRow downsample_equidistant(const SMRow& row, std::size_t ratio) {
  if (ratio == 0) throw DomainError("ratio must be >= 1");
  const Grid3& g = row.grid();
  Index3 nd = g.dims();
  Index3 stride{1, 1, 1};
  for (int a = 0; a < 3; ++a)
    if (nd[a] > 1) {
      if (nd[a] % ratio != 0)
        throw DomainError("axis " + std::to_string(a) + " of size " + std::to_string(nd[a]) +
                          " is not divisible by " + std::to_string(ratio));
      nd[a] /= ratio;
      stride[a] = ratio;
    }
  Grid3 ng(nd, g.fov());
  std::vector<double> re(ng.size()), im(ng.size());
  for_each_voxel(nd, [&](const Index3& q) {
    const Index3 p{q[0] * stride[0], q[1] * stride[1], q[2] * stride[2]};
    re[lin(nd, q)] = row.re()[g.linear(p)];
    im[lin(nd, q)] = row.im()[g.linear(p)];
  });
  return row.with_values(ng, std::move(re), std::move(im));
}

SystemMatrix downsample_equidistant(const SystemMatrix& sm, std::size_t ratio) {
  const SMRow probe = downsample_equidistant(SMRow::zeros(Channel::X, 0, sm.grid()), ratio);
  return map_rows(sm, probe.grid(),
                  [&](const SMRow& r) { return downsample_equidistant(r, ratio); });
}

double estimate_snr(const SMRow& row, double noise_sigma) {
  if (!(noise_sigma > 0.0)) throw InvalidArgument("noise sigma must be > 0");
  return row.norm_squared() / (noise_sigma * noise_sigma * static_cast<double>(row.size()));
}

SystemMatrix snr_filter(const SystemMatrix& sm, const std::vector<double>& row_snr,
                        std::uint32_t f_min_index, double threshold) {
  if (row_snr.size() != sm.num_rows())
    throw DomainError("snr vector is not aligned with the system-matrix rows");
  std::vector<SMRow> kept;
  for (std::size_t i = 0; i < sm.num_rows(); ++i)
    if (row_snr[i] > threshold && sm.row(i).freq_index() >= f_min_index) kept.push_back(sm.row(i));
  return SystemMatrix(sm.grid(), std::move(kept), sm.provenance());
}

// ---------------------------------------------------------------------------
// PairSet

PairSet::PairSet(std::vector<Pair> pairs, std::size_t ratio) : pairs_(std::move(pairs)), ratio_(ratio) {
  if (ratio_ == 0) throw InvalidArgument("ratio must be >= 1");
  for (const auto& p : pairs_) {
    for (int a = 0; a < 3; ++a) {
      const std::size_t h = p.hr.grid().dims()[a], l = p.lr.grid().dims()[a];
      const bool ok = h == 1 ? l == 1 : l * ratio_ == h;
      if (!ok) throw InvalidArgument("LR dims must equal HR dims / ratio on every axis");
    }
  }
}

std::size_t PairSet::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(pairs_.begin(), pairs_.end(), [s](const Pair& p) { return p.split == s; }));
}

std::vector<const Pair*> PairSet::select(Split s) const {
  std::vector<const Pair*> out;
  for (const auto& p : pairs_)
    if (p.split == s) out.push_back(&p);
  return out;
}

PairSet PairSet::with_splits(const std::vector<Split>& splits) const {
  if (splits.size() != pairs_.size()) throw InvalidArgument("split vector size mismatch");
  auto copy = pairs_;
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i].split = splits[i];
  return PairSet(std::move(copy), ratio_);
}

PairSet make_pairs(const SystemMatrix& hr, std::size_t ratio) {
  std::vector<Pair> pairs;
  pairs.reserve(hr.num_rows());
  for (const auto& r : hr.rows()) pairs.push_back({downsample_equidistant(r, ratio), r, Split::train});
  return PairSet(std::move(pairs), ratio);
}

PairSet split_pairs(const PairSet& pairs, double validation_fraction, std::uint64_t seed) {
  if (pairs.size() < 10) throw DomainError("need at least 10 pairs to split");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("validation fraction must be in [0, 1)");
  const std::size_t n = pairs.size();
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the split is reproducible across
  // standard-library implementations.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<Split> splits(n, Split::train);
  for (std::size_t i = 0; i < n_val; ++i) splits[order[i]] = Split::validation;
  return pairs.with_splits(splits);
}

// ---------------------------------------------------------------------------
// Rotation/flip group

bool GroupElement::is_identity() const {
  return perm == std::array<int, 3>{0, 1, 2} && flip == std::array<bool, 3>{false, false, false};
}

// out[p] = in[q] with q[perm[a]] = flip[a] ? n_in[perm[a]]-1-p[a] : p[a].
// Composition: h = g.after(f) means h(x) = g(f(x)).
GroupElement GroupElement::after(const GroupElement& f) const {
  GroupElement h;
  for (int a = 0; a < 3; ++a) {
    h.perm[a] = f.perm[perm[a]];
    h.flip[a] = flip[a] != f.flip[perm[a]];
  }
  return h;
}

Index3 transformed_dims(const GroupElement& g, const Index3& dims) {
  return {dims[g.perm[0]], dims[g.perm[1]], dims[g.perm[2]]};
}

std::vector<GroupElement> shape_preserving_group(const Index3& dims) {
  std::vector<GroupElement> out;
  std::array<int, 3> perm{0, 1, 2};
  do {
    bool ok = true;
    for (int a = 0; a < 3; ++a)
      if (dims[perm[a]] != dims[a] || (dims[a] == 1 && perm[a] != a)) ok = false;
    if (!ok) continue;
    for (int mask = 0; mask < 8; ++mask) {
      GroupElement g;
      g.perm = perm;
      bool valid = true;
      for (int a = 0; a < 3; ++a) {
        g.flip[a] = (mask >> a) & 1;
        if (g.flip[a] && dims[a] == 1) valid = false;
      }
      if (valid) out.push_back(g);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<double> apply_group(const GroupElement& g, const Index3& dims,
                                const std::vector<double>& field, std::size_t channels) {
  const std::size_t n = dims[0] * dims[1] * dims[2];
  if (field.size() != n * channels) throw InvalidArgument("field size mismatch");
  const Index3 od = transformed_dims(g, dims);
  std::vector<double> out(field.size());
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = field.data() + c * n;
    double* dst = out.data() + c * n;
    for_each_voxel(od, [&](const Index3& p) {
      Index3 q{};
      for (int a = 0; a < 3; ++a) {
        const int ia = g.perm[a];
        q[ia] = g.flip[a] ? dims[ia] - 1 - p[a] : p[a];
      }
      dst[lin(od, p)] = src[lin(dims, q)];
    });
  }
  return out;
}

SMRow apply_group(const GroupElement& g, const SMRow& row) {
  const Grid3& gr = row.grid();
  const Index3 od = transformed_dims(g, gr.dims());
  Vec3 fov{gr.fov()[g.perm[0]], gr.fov()[g.perm[1]], gr.fov()[g.perm[2]]};
  return row.with_values(Grid3(od, fov), apply_group(g, gr.dims(), row.re()),
                         apply_group(g, gr.dims(), row.im()));
}

GroupElement random_group_element(const Index3& lr_dims, const Index3& hr_dims,
                                  std::mt19937_64& rng) {
  auto group = shape_preserving_group(hr_dims);
  const auto lr_group = shape_preserving_group(lr_dims);
  std::erase_if(group, [&](const GroupElement& g) {
    return std::find(lr_group.begin(), lr_group.end(), g) == lr_group.end();
  });
  return group[static_cast<std::size_t>(rng() % group.size())];
}

Pair augment_with(const Pair& pair, const GroupElement& g) {
  return {apply_group(g, pair.lr), apply_group(g, pair.hr), pair.split};
}

Pair augment(const Pair& pair, std::uint64_t seed, GroupElement* chosen) {
  std::mt19937_64 rng(seed);
  const GroupElement g = random_group_element(pair.lr.grid().dims(), pair.hr.grid().dims(), rng);
  if (chosen) *chosen = g;
  return augment_with(pair, g);
}

}  // namespace smcal
