#include "smcal/symmetry.hpp"

#include <cmath>

namespace smcal {

const char* to_string(ParityRule r) {
  switch (r) {
    case ParityRule::none: return "none";
    case ParityRule::even: return "even";
    case ParityRule::odd: return "odd";
    case ParityRule::conj_even: return "conj-even";
    case ParityRule::conj_odd: return "conj-odd";
  }
  return "?";
}

const char* to_string(ParityDerivation d) {
  switch (d) {
    case ParityDerivation::rule_1d: return "1D-rule";
    case ParityDerivation::rule_2d: return "2D-rule";
    case ParityDerivation::unknown_3d: return "unknown-3D";
    case ParityDerivation::unknown: return "unknown";
  }
  return "?";
}

bool ParityDescriptor::has_rules() const {
  for (auto r : axis_rules)
    if (r != ParityRule::none) return true;
  return false;
}

namespace {

// sign = +1 -> even, -1 -> odd
ParityRule make_rule(int sign, bool conj) {
  if (conj) return sign > 0 ? ParityRule::conj_even : ParityRule::conj_odd;
  return sign > 0 ? ParityRule::even : ParityRule::odd;
}

int rule_sign(ParityRule r) { return (r == ParityRule::odd || r == ParityRule::conj_odd) ? -1 : 1; }
bool rule_conj(ParityRule r) { return r == ParityRule::conj_even || r == ParityRule::conj_odd; }

// Applies sign and optional conjugation.
inline cplx apply(cplx v, int sign, bool conj) {
  if (conj) v = std::conj(v);
  return sign > 0 ? v : -v;
}

}  // namespace

ParityDescriptor expected_parity(Channel channel, std::uint32_t k, int dimensionality) {
  ParityDescriptor d;
  const bool k_odd = (k % 2) == 1;
  switch (dimensionality) {
    case 1:
      // m(-x) = (-1)^{k+1} m(x)
      d.derivation = ParityDerivation::rule_1d;
      d.axis_rules[0] = make_rule(k_odd ? +1 : -1, false);
      return d;
    case 2: {
      d.derivation = ParityDerivation::rule_2d;
      int sign = 0;
      if (channel == Channel::X) sign = k_odd ? +1 : -1;       // (-1)^{k+1}
      else if (channel == Channel::Y) sign = k_odd ? -1 : +1;  // (-1)^k
      else {
        d.derivation = ParityDerivation::unknown;
        return d;
      }
      d.axis_rules[0] = make_rule(sign, false);
      d.axis_rules[1] = make_rule(sign, true);
      return d;
    }
    case 3:
      d.derivation = ParityDerivation::unknown_3d;
      return d;
    default:
      throw DomainError("unsupported dimensionality " + std::to_string(dimensionality));
  }
}

ParityDescriptor expected_parity(Channel channel, std::uint32_t k, const ScanSequence& seq) {
  const int dims = seq.dims();
  if (dims == 2) {
    const bool premise = (seq.cycles(0) % 2 == 1) && (seq.cycles(1) % 2 == 0);
    if (!premise) return ParityDescriptor{};
  }
  return expected_parity(channel, k, dims);
}

SMRow reflect_row(const SMRow& row, int axis) {
  if (axis < 0 || axis > 2) throw IndexError("axis out of range");
  const Grid3& g = row.grid();
  std::vector<double> re(row.size()), im(row.size());
  const std::size_t n = g.dims()[axis];
  for (std::size_t z = 0; z < g.nz(); ++z)
    for (std::size_t y = 0; y < g.ny(); ++y)
      for (std::size_t x = 0; x < g.nx(); ++x) {
        Index3 p{x, y, z};
        Index3 q = p;
        q[axis] = n - 1 - p[axis];
        const std::size_t dst = g.linear(p), src = g.linear(q);
        re[dst] = row.re()[src];
        im[dst] = row.im()[src];
      }
  return row.with_values(g, std::move(re), std::move(im));
}

std::array<std::optional<double>, 3> symmetry_residual(const SMRow& row,
                                                       const ParityDescriptor& desc) {
  if (!desc.has_rules()) throw DomainError("parity descriptor carries no axis rule");
  constexpr double eps = 1e-30;
  const double denom = std::max(row.norm(), eps);
  std::array<std::optional<double>, 3> out;
  for (int a = 0; a < 3; ++a) {
    const ParityRule rule = desc.axis_rules[a];
    if (rule == ParityRule::none) continue;
    const SMRow refl = reflect_row(row, a);
    const int s = rule_sign(rule);
    const bool c = rule_conj(rule);
    double acc = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const cplx d = row.value(i) - apply(refl.value(i), s, c);
      acc += std::norm(d);
    }
    out[a] = std::sqrt(acc) / denom;
  }
  return out;
}

std::vector<bool> fundamental_domain_mask(const Grid3& grid, const ParityDescriptor& desc) {
  std::vector<bool> mask(grid.size(), true);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Index3 p = grid.unravel(i);
    for (int a = 0; a < 3; ++a) {
      if (desc.axis_rules[a] == ParityRule::none) continue;
      const std::size_t n = grid.dims()[a];
      // keep p with 2p >= n-1, i.e. the centre plane and above
      if (2 * p[a] + 1 < n) mask[i] = false;
    }
  }
  return mask;
}

std::size_t fundamental_domain_size(const Grid3& grid, const ParityDescriptor& desc) {
  std::size_t count = 1;
  for (int a = 0; a < 3; ++a) {
    const std::size_t n = grid.dims()[a];
    count *= desc.axis_rules[a] == ParityRule::none ? n : (n + 1) / 2;
  }
  return count;
}

SMRow apply_mask(const SMRow& row, const std::vector<bool>& known) {
  if (known.size() != row.size()) throw InvalidArgument("mask size does not match row");
  std::vector<double> re = row.re(), im = row.im();
  for (std::size_t i = 0; i < known.size(); ++i)
    if (!known[i]) re[i] = im[i] = 0.0;
  return row.with_values(row.grid(), std::move(re), std::move(im));
}

SMRow mirror_complete(const SMRow& partial, const std::vector<bool>& known,
                      const ParityDescriptor& desc) {
  MirrorStats stats;
  return mirror_complete(partial, known, desc, stats);
}

SMRow mirror_complete(const SMRow& partial, const std::vector<bool>& known,
                      const ParityDescriptor& desc, MirrorStats& stats) {
  if (known.size() != partial.size()) throw InvalidArgument("mask size does not match row");
  if (!desc.has_rules()) throw DomainError("parity descriptor carries no axis rule");
  const Grid3& g = partial.grid();
  std::vector<int> axes;
  for (int a = 0; a < 3; ++a)
    if (desc.axis_rules[a] != ParityRule::none) axes.push_back(a);

  std::vector<double> re = partial.re(), im = partial.im();
  stats = MirrorStats{};
  double peak = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (known[i]) peak = std::max(peak, std::abs(partial.value(i)));
  const unsigned subsets = 1u << axes.size();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (known[i]) continue;
    const Index3 p = g.unravel(i);
    cplx sum{0.0, 0.0};
    std::size_t count = 0;
    cplx first{};
    double disagreement = 0.0;
    for (unsigned s = 1; s < subsets; ++s) {
      Index3 q = p;
      int sign = 1;
      bool conj = false;
      for (std::size_t b = 0; b < axes.size(); ++b) {
        if (!(s & (1u << b))) continue;
        const int a = axes[b];
        q[a] = g.dims()[a] - 1 - q[a];
        sign *= rule_sign(desc.axis_rules[a]);
        conj ^= rule_conj(desc.axis_rules[a]);
      }
      const std::size_t j = g.linear(q);
      if (j == i || !known[j]) continue;
      const cplx cand = apply(partial.value(j), sign, conj);
      if (count == 0) first = cand;
      else disagreement = std::max(disagreement, std::abs(cand - first));
      sum += cand;
      ++count;
    }
    if (count == 0)
      throw IncompleteDomain("known voxels do not cover a fundamental domain (voxel " +
                             std::to_string(i) + " has no known mirror partner)");
    const cplx v = sum / static_cast<double>(count);
    re[i] = v.real();
    im[i] = v.imag();
    ++stats.filled;
    if (count > 1) {
      ++stats.multi_path;
      stats.max_disagreement =
          std::max(stats.max_disagreement, disagreement / std::max(peak, 1e-300));
    }
  }
  return partial.with_values(g, std::move(re), std::move(im));
}

}  // namespace smcal
