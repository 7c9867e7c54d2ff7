#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "anchorpose/anchors.hpp"
#include "anchorpose/model_io.hpp"
#include "anchorpose/so3.hpp"

namespace anchorpose {

struct Pose {
  UnitQuaternion rotation;
  Vec3 translation = Vec3::Zero();
};

/// Lower clamp on uncertainty scores; ln(sigma) diverges at zero.
inline constexpr double kSigmaMin = 1e-6;

/// Per-anchor deviations and uncertainty scores, one entry per anchor.
struct AnchorPrediction {
  std::vector<UnitQuaternion> deviations;
  std::vector<double> sigmas;
};

struct AnchorEvaluation {
  std::size_t index = 0;
  double loss = 0.0;       // meters
  double normalized = 0.0; // loss / diameter
};

struct LossWeights {
  double regularization = 2.0;
  double translation = 5.0;
};

/// Mean distance between model points under `r` and under `gt`. Symmetric
/// models match each point to its closest ground-truth point (exact O(M^2));
/// asymmetric models use the point-wise correspondence.
double shape_match_loss(const UnitQuaternion &r, const UnitQuaternion &gt,
                        const ObjectModel &model);

/// Ground-truth-rotated partner of every model point under the current
/// estimate `r`: the closest gt-rotated point when the model is symmetric,
/// the same point otherwise. With these frozen the loss is smooth in r.
std::vector<Vec3> match_targets(const UnitQuaternion &r, const UnitQuaternion &gt,
                                const ObjectModel &model);

/// deviation * anchors[i]. Throws PreconditionError when i is out of range.
UnitQuaternion total_rotation(std::size_t i, const UnitQuaternion &deviation,
                              const AnchorSet &anchors);

struct ProbabilisticLoss {
  double value = 0.0;
  std::vector<AnchorEvaluation> per_anchor;
};

/// sum_i ln(sigma_i) + d_i / sigma_i with d_i the normalized shape-match loss
/// of anchor i's total rotation. Per-anchor terms are computed on up to
/// `threads` workers and reduced in index order.
ProbabilisticLoss probabilistic_loss(const AnchorPrediction &pred,
                                     const UnitQuaternion &gt,
                                     const AnchorSet &anchors,
                                     const ObjectModel &model, unsigned threads = 1);

/// Hinge keeping every total rotation closest to its own anchor. Quaternion
/// inner products are taken in absolute value (q and -q are one rotation).
double regularization_loss(const AnchorPrediction &pred, const AnchorSet &anchors);

/// Mean over points and components of the Huber function with transition 1.
double smooth_l1_vectors(std::span<const Vec3> pred_dirs, std::span<const Vec3> gt_dirs);

double total_loss(double rotation_loss, double regularization, double translation_loss,
                  const LossWeights &w = {});

struct BestAnchor {
  std::size_t index = 0;
  UnitQuaternion rotation;
};

/// Anchor with the smallest sigma (lowest index on ties) and its total rotation.
BestAnchor select_best(const AnchorPrediction &pred, const AnchorSet &anchors);

using ScalarObjective = std::function<double(std::span<const double>)>;

/// Central-difference gradient. Throws DegenerateError if the objective is
/// not finite at a probe point.
std::vector<double> grad_fd(const ScalarObjective &f, std::span<const double> x,
                            double eps);

} // namespace anchorpose
