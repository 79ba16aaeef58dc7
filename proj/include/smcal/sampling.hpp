#pragma once

// LR/HR pair generation: zero padding, stride decimation, SNR filtering,
// train/validation splitting and rotation/flip augmentation.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "smcal/core.hpp"

namespace smcal {

/// Pads every non-singleton axis with `pre` zeros before and `post` after.
/// Voxel spacing is preserved, so the extent grows accordingly.
SMRow zero_pad(const SMRow& row, std::size_t pre, std::size_t post);
SystemMatrix zero_pad(const SystemMatrix& sm, std::size_t pre = 1, std::size_t post = 2);

/// Inverse of zero_pad.
SMRow crop(const SMRow& row, std::size_t pre, std::size_t post);
SystemMatrix crop(const SystemMatrix& sm, std::size_t pre = 1, std::size_t post = 2);

/// Keeps voxels 0, r, 2r, ... on every non-singleton axis. Extent unchanged.
SMRow downsample_equidistant(const SMRow& row, std::size_t ratio);
SystemMatrix downsample_equidistant(const SystemMatrix& sm, std::size_t ratio);

/// |row|^2 / (sigma^2 N) for rows carrying additive noise of std sigma.
double estimate_snr(const SMRow& row, double noise_sigma);

/// Keeps rows with snr > threshold and freq_index >= f_min_index.
SystemMatrix snr_filter(const SystemMatrix& sm, const std::vector<double>& row_snr,
                        std::uint32_t f_min_index, double threshold = 3.0);

enum class Split : std::uint8_t { train = 0, validation = 1 };

struct Pair {
  SMRow lr;
  SMRow hr;
  Split split{Split::train};
};

class PairSet {
 public:
  PairSet() = default;
  PairSet(std::vector<Pair> pairs, std::size_t ratio);

  const std::vector<Pair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  std::size_t ratio() const { return ratio_; }
  std::size_t count(Split s) const;
  std::vector<const Pair*> select(Split s) const;
  PairSet with_splits(const std::vector<Split>& splits) const;

 private:
  std::vector<Pair> pairs_;
  std::size_t ratio_{1};
};

/// HR rows are taken as given (already padded); LR = decimated HR.
PairSet make_pairs(const SystemMatrix& hr, std::size_t ratio);

/// Deterministic seeded shuffle; floor-free rounding: round(n * fraction)
/// validation pairs. Throws DomainError for fewer than 10 pairs.
PairSet split_pairs(const PairSet& pairs, double validation_fraction, std::uint64_t seed);

/// Element of the axis-aligned rotation/flip group acting on (x, y, z):
/// output axis a reads input axis perm[a], reversed when flip[a].
struct GroupElement {
  std::array<int, 3> perm{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};

  bool is_identity() const;
  /// (*this) after `first`: apply(then(first)) == apply(*this, apply(first, .)).
  GroupElement after(const GroupElement& first) const;
  bool operator==(const GroupElement&) const = default;
};

/// All shape-preserving group elements for the given dimensions; axes of
/// size one are never moved.
std::vector<GroupElement> shape_preserving_group(const Index3& dims);

/// Transforms a real field laid out on `dims` (channels stacked).
std::vector<double> apply_group(const GroupElement& g, const Index3& dims,
                                const std::vector<double>& field, std::size_t channels = 1);
Index3 transformed_dims(const GroupElement& g, const Index3& dims);
SMRow apply_group(const GroupElement& g, const SMRow& row);

/// Random group element valid for both LR and HR shapes.
GroupElement random_group_element(const Index3& lr_dims, const Index3& hr_dims,
                                  std::mt19937_64& rng);

/// Applies one random shape-preserving element jointly to LR and HR.
Pair augment(const Pair& pair, std::uint64_t seed, GroupElement* chosen = nullptr);
Pair augment_with(const Pair& pair, const GroupElement& g);

}  // namespace smcal
