#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "anchorpose/so3.hpp"

namespace anchorpose {

/// Points with unit directions toward an object center.
struct VectorField {
  std::vector<Vec3> points;
  std::vector<Vec3> dirs;

  std::size_t size() const { return points.size(); }
};

struct Hypothesis {
  Vec3 point = Vec3::Zero();
  std::size_t inlier_count = 0;
  std::size_t source_index = 0;
};

struct RansacConfig {
  double inlier_cos_threshold = 0.99;
  std::size_t batch_size = 128;
  std::size_t max_rounds = 20;
  double success_prob = 0.99;
  double parallel_tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct VoteResult {
  Vec3 center = Vec3::Zero();
  std::vector<std::size_t> inlier_indices;
  std::size_t hypotheses_evaluated = 0;
  std::size_t rounds = 0;
  /// False when the best hypothesis had too few (or degenerate) inliers and
  /// `center` is the raw hypothesis point.
  bool refined = false;
  Hypothesis best;
};

struct InlierSet {
  std::size_t count = 0;
  std::vector<std::size_t> indices;
};

/// dirs[k] = normalize(center - points[k]). Throws DegenerateError naming the
/// first point closer than 1e-9 to the center.
VectorField make_field(std::span<const Vec3> points, const Vec3 &center);

/// Throws PreconditionError unless lengths match and every dir is unit norm
/// within 1e-9.
void validate_field(const VectorField &field);

/// Midpoint of the shortest segment between two lines, or nullopt when
/// |v1.v2| > 1 - parallel_tolerance.
std::optional<Vec3> pair_hypothesis(const Vec3 &p1, const Vec3 &v1, const Vec3 &p2,
                                    const Vec3 &v2, double parallel_tolerance = 1e-6);

/// Points whose direction cone contains h: (h - p).v / |h - p| >= theta. A
/// point within 1e-9 of h always counts.
InlierSet count_inliers(const Vec3 &h, const VectorField &field, double theta);

/// Batched RANSAC over point pairs with adaptive early stop, followed by a
/// least-squares refinement over the best hypothesis' inliers. Every
/// hypothesis draws from its own sub-stream keyed by (seed, source_index), so
/// the result is bit-identical for any `threads`.
VoteResult ransac_vote(const VectorField &field, const RansacConfig &config,
                       unsigned threads = 1);

/// Point minimizing the summed squared distance to the lines (p_k, v_k).
/// Throws DegenerateError when the normal matrix is singular or its
/// condition number exceeds 1e12.
Vec3 refine_least_squares(std::span<const Vec3> points, std::span<const Vec3> dirs);

} // namespace anchorpose
