#pragma once

// Parity of system-matrix rows under spatial reflection: expected rules,
// reflection, residual scores and mirror completion from a fundamental domain.

#include <array>
#include <optional>
#include <vector>

#include "smcal/core.hpp"

namespace smcal {

/// How a row relates to its reflection along one axis:
/// even: m(-r) = m(r); odd: m(-r) = -m(r); conj_*: same with conjugation.
enum class ParityRule : std::uint8_t { none = 0, even, odd, conj_even, conj_odd };

enum class ParityDerivation : std::uint8_t { rule_1d = 0, rule_2d, unknown_3d, unknown };

const char* to_string(ParityRule r);
const char* to_string(ParityDerivation d);

struct ParityDescriptor {
  std::array<ParityRule, 3> axis_rules{ParityRule::none, ParityRule::none, ParityRule::none};
  ParityDerivation derivation{ParityDerivation::unknown};

  bool has_rules() const;
  bool operator==(const ParityDescriptor&) const = default;
};

/// Expected parity of row (channel, k) for an ideal scanner of the given
/// dimensionality. 2D rules assume x-drive cycles odd and y-drive cycles even
/// per base period (dividers 16:17); 3D yields unknown_3d with no rules.
ParityDescriptor expected_parity(Channel channel, std::uint32_t k, int dimensionality);

/// Same, but checks the premise against the sequence. 2D sequences whose
/// cycle parities differ from (odd, even) report derivation = unknown.
ParityDescriptor expected_parity(Channel channel, std::uint32_t k, const ScanSequence& seq);

/// Index-reverses the row along `axis` (r_axis -> -r_axis).
SMRow reflect_row(const SMRow& row, int axis);

/// Per-axis |row - rule(reflect(row))| / max(|row|, 1e-30); axes without a
/// rule are empty. Throws DomainError when the descriptor has no rules.
std::array<std::optional<double>, 3> symmetry_residual(const SMRow& row,
                                                       const ParityDescriptor& desc);

/// Fundamental domain of the descriptor's reflection group: on every rule
/// axis the upper half including the centre plane. mask[v] = true if known.
std::vector<bool> fundamental_domain_mask(const Grid3& grid, const ParityDescriptor& desc);

/// Number of voxels in the fundamental domain, e.g. ((n+1)/2)^2 for a 2D
/// quadrant on an odd n x n grid.
std::size_t fundamental_domain_size(const Grid3& grid, const ParityDescriptor& desc);

/// Fills unknown voxels from known mirror partners using the descriptor's
/// rules. Voxels reachable from several known partners get the mean of the
/// candidates. Throws IncompleteDomain when some orbit has no known voxel.
SMRow mirror_complete(const SMRow& partial, const std::vector<bool>& known,
                      const ParityDescriptor& desc);

/// Completion statistics for diagnostics: number of filled voxels and the
/// largest disagreement between candidate values, relative to the peak
/// modulus of the known voxels.
struct MirrorStats {
  std::size_t filled = 0;
  std::size_t multi_path = 0;
  double max_disagreement = 0.0;
};
SMRow mirror_complete(const SMRow& partial, const std::vector<bool>& known,
                      const ParityDescriptor& desc, MirrorStats& stats);

/// Keeps only the known voxels (others zeroed).
SMRow apply_mask(const SMRow& row, const std::vector<bool>& known);

}  // namespace smcal
