#include "anchorpose/anchors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "anchorpose/error.hpp"

namespace anchorpose {

std::string_view to_string(AnchorGroupKind kind) {
  switch (kind) {
  case AnchorGroupKind::Tetra12:
    return "tetra12";
  case AnchorGroupKind::Octa24:
    return "octa24";
  case AnchorGroupKind::Icosa60:
    return "icosa60";
  }
  return "unknown";
}

std::optional<AnchorGroupKind> parse_anchor_group(std::string_view name) {
  for (auto k : {AnchorGroupKind::Tetra12, AnchorGroupKind::Octa24,
                 AnchorGroupKind::Icosa60})
    if (to_string(k) == name)
      return k;
  return std::nullopt;
}

std::size_t group_order(AnchorGroupKind kind) {
  switch (kind) {
  case AnchorGroupKind::Tetra12:
    return 12;
  case AnchorGroupKind::Octa24:
    return 24;
  case AnchorGroupKind::Icosa60:
    return 60;
  }
  return 0;
}

namespace {

using Raw = std::array<double, 4>;

// Identity, the three 180-degree axis turns, and the eight 120-degree turns
// about the cube body diagonals, (1/2)(1, +-1, +-1, +-1).
std::vector<Raw> tetrahedral() {
  std::vector<Raw> out{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  for (double sx : {-0.5, 0.5})
    for (double sy : {-0.5, 0.5})
      for (double sz : {-0.5, 0.5})
        out.push_back({0.5, sx, sy, sz});
  return out;
}

// Tetrahedral plus the 90/270-degree axis turns and the 180-degree edge turns.
std::vector<Raw> octahedral() {
  auto out = tetrahedral();
  const double h = std::numbers::sqrt2 / 2.0;
  for (int axis = 1; axis <= 3; ++axis)
    for (double s : {-h, h}) {
      Raw q{h, 0, 0, 0};
      q[axis] = s;
      out.push_back(q);
    }
  for (int a = 1; a <= 3; ++a)
    for (int b = a + 1; b <= 3; ++b)
      for (double s : {-h, h}) {
        Raw q{0, 0, 0, 0};
        q[a] = h;
        q[b] = s;
        out.push_back(q);
      }
  return out;
}

// Binary icosahedral group modulo sign: the tetrahedral units plus the even
// permutations of (1/2)(0, +-1/phi, +-1, +-phi).
std::vector<Raw> icosahedral() {
  auto out = tetrahedral();
  const double phi = std::numbers::phi;
  const Raw base{0.0, 0.5 / phi, 0.5, 0.5 * phi};
  static constexpr std::array<std::array<int, 4>, 12> even_perms{{
      {0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}, {1, 0, 3, 2},
      {1, 2, 0, 3}, {1, 3, 2, 0}, {2, 0, 1, 3}, {2, 1, 3, 0},
      {2, 3, 0, 1}, {3, 0, 2, 1}, {3, 1, 0, 2}, {3, 2, 1, 0},
  }};
  for (const auto &perm : even_perms)
    for (int signs = 0; signs < 8; ++signs) {
      const Raw v{base[0], signs & 1 ? -base[1] : base[1],
                  signs & 2 ? -base[2] : base[2], signs & 4 ? -base[3] : base[3]};
      out.push_back({v[perm[0]], v[perm[1]], v[perm[2]], v[perm[3]]});
    }
  return out;
}

bool lex_less(const UnitQuaternion &a, const UnitQuaternion &b) {
  return a.wxyz() < b.wxyz();
}

} // namespace

AnchorSet generate_anchors(AnchorGroupKind kind) {
  std::vector<Raw> raw;
  switch (kind) {
  case AnchorGroupKind::Tetra12:
    raw = tetrahedral();
    break;
  case AnchorGroupKind::Octa24:
    raw = octahedral();
    break;
  case AnchorGroupKind::Icosa60:
    raw = icosahedral();
    break;
  }

  std::vector<UnitQuaternion> quats;
  for (const Raw &r : raw) {
    const UnitQuaternion q(r[0], r[1], r[2], r[3]);
    const bool seen = std::any_of(quats.begin(), quats.end(), [&](const auto &o) {
      return std::abs(std::abs(o.dot(q)) - 1.0) < 1e-12;
    });
    if (!seen)
      quats.push_back(q);
  }
  if (quats.size() != group_order(kind))
    throw Error("anchor construction produced " + std::to_string(quats.size()) +
                " members for " + std::string(to_string(kind)));

  std::sort(quats.begin(), quats.end(), lex_less);
  // identity is the lexicographic maximum; move it to the front
  std::rotate(quats.rbegin(), quats.rbegin() + 1, quats.rend());

  AnchorSet set{kind, std::move(quats)};
  set.min_pairwise_angle = min_pairwise_angle(set);
  Rng rng(kCoveringSeed);
  set.covering_radius = covering_radius(set, kCoveringSamples, rng);
  return set;
}

std::size_t nearest_anchor(const UnitQuaternion &q, const AnchorSet &set) {
  std::size_t best = 0;
  double best_dot = -1.0;
  for (std::size_t i = 0; i < set.quats.size(); ++i) {
    const double d = std::abs(q.dot(set.quats[i]));
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

double min_pairwise_angle(const AnchorSet &set) {
  double best = std::numbers::pi;
  for (std::size_t i = 0; i < set.quats.size(); ++i)
    for (std::size_t j = i + 1; j < set.quats.size(); ++j)
      best = std::min(best, geodesic_angle(set.quats[i], set.quats[j]));
  return best;
}

double covering_radius(const AnchorSet &set, std::size_t samples, Rng &rng) {
  if (samples < 100'000)
    throw PreconditionError("covering_radius needs at least 1e5 samples");
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const UnitQuaternion q = random_rotation(rng);
    double best_dot = 0.0;
    for (const auto &a : set.quats)
      best_dot = std::max(best_dot, std::abs(q.dot(a)));
    worst = std::max(worst, 2.0 * std::acos(std::min(1.0, best_dot)));
  }
  return worst;
}

} // namespace anchorpose
