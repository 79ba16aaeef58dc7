#pragma once

#include <random>
#include <vector>

#include "smcal/core.hpp"

namespace smcal::testutil {

/// Row with independent N(0,1) real and imaginary parts.
inline SMRow random_row(const Grid3& g, std::uint32_t k, std::uint64_t seed,
                        Channel ch = Channel::X) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> re(g.size()), im(g.size());
  for (auto& v : re) v = n(rng);
  for (auto& v : im) v = n(rng);
  return SMRow(ch, k, g, std::move(re), std::move(im));
}

/// Row whose real part is f(x, y, z) evaluated on voxel indices, imaginary zero.
template <typename F>
SMRow field_row(const Grid3& g, F f, std::uint32_t k = 1) {
  std::vector<double> re(g.size()), im(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index3 p = g.unravel(i);
    re[i] = f(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2]));
  }
  return SMRow(Channel::X, k, g, std::move(re), std::move(im));
}

inline SystemMatrix random_sm(const Grid3& g, std::size_t rows, std::uint64_t seed) {
  std::vector<SMRow> out;
  for (std::size_t i = 0; i < rows; ++i) out.push_back(random_row(g, static_cast<std::uint32_t>(i + 1), seed + i));
  return SystemMatrix(g, std::move(out), Provenance::loaded);
}

inline double max_abs_diff(const SMRow& a, const SMRow& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.value(i) - b.value(i)));
  return m;
}

}  // namespace smcal::testutil
