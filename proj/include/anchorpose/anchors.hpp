#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anchorpose/so3.hpp"

namespace anchorpose {

enum class AnchorGroupKind { Tetra12, Octa24, Icosa60 };

std::string_view to_string(AnchorGroupKind kind);
/// Accepts "tetra12", "octa24", "icosa60".
std::optional<AnchorGroupKind> parse_anchor_group(std::string_view name);
std::size_t group_order(AnchorGroupKind kind);

/// One of the finite rotation groups used as anchors. Index 0 is the
/// identity; the remaining members are sorted by (w, x, y, z) ascending.
struct AnchorSet {
  AnchorGroupKind kind;
  std::vector<UnitQuaternion> quats;
  double min_pairwise_angle = 0.0; // radians
  double covering_radius = 0.0;    // radians, Monte-Carlo estimate

  std::size_t size() const { return quats.size(); }
};

/// Number of Monte-Carlo samples and seed behind AnchorSet::covering_radius.
inline constexpr std::size_t kCoveringSamples = 200'000;
inline constexpr std::uint64_t kCoveringSeed = 0x5eed;

AnchorSet generate_anchors(AnchorGroupKind kind);

/// argmax_i |q . anchor_i|; ties go to the lowest index.
std::size_t nearest_anchor(const UnitQuaternion &q, const AnchorSet &set);

double min_pairwise_angle(const AnchorSet &set);

/// Largest sampled distance to the nearest anchor. samples >= 1e5.
double covering_radius(const AnchorSet &set, std::size_t samples, Rng &rng);

} // namespace anchorpose
