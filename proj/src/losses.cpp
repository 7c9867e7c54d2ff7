#include "anchorpose/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "anchorpose/error.hpp"
#include "anchorpose/parallel.hpp"

namespace anchorpose {

namespace {

std::vector<Vec3> rotated(const UnitQuaternion &q, const ObjectModel &model) {
  std::vector<Vec3> out;
  out.reserve(model.size());
  for (const auto &p : model.points())
    out.push_back(rotate(q, p));
  return out;
}

std::size_t closest(const Vec3 &a, const std::vector<Vec3> &candidates) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const double d = (a - candidates[j]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

void check_prediction(const AnchorPrediction &pred, const AnchorSet &anchors) {
  if (pred.deviations.size() != anchors.size() || pred.sigmas.size() != anchors.size())
    throw PreconditionError("prediction has " + std::to_string(pred.deviations.size()) +
                            " deviations and " + std::to_string(pred.sigmas.size()) +
                            " sigmas for " + std::to_string(anchors.size()) + " anchors");
}

} // namespace

double shape_match_loss(const UnitQuaternion &r, const UnitQuaternion &gt,
                        const ObjectModel &model) {
  const auto est = rotated(r, model);
  const auto ref = rotated(gt, model);
  double sum = 0.0;
  if (model.symmetric()) {
    for (const auto &a : est)
      sum += (a - ref[closest(a, ref)]).norm();
  } else {
    for (std::size_t k = 0; k < est.size(); ++k)
      sum += (est[k] - ref[k]).norm();
  }
  return sum / static_cast<double>(est.size());
}

std::vector<Vec3> match_targets(const UnitQuaternion &r, const UnitQuaternion &gt,
                                const ObjectModel &model) {
  auto ref = rotated(gt, model);
  if (!model.symmetric())
    return ref;
  std::vector<Vec3> out;
  out.reserve(ref.size());
  for (const auto &p : model.points())
    out.push_back(ref[closest(rotate(r, p), ref)]);
  return out;
}

UnitQuaternion total_rotation(std::size_t i, const UnitQuaternion &deviation,
                              const AnchorSet &anchors) {
  if (i >= anchors.size())
    throw PreconditionError("anchor index " + std::to_string(i) + " out of range");
  return compose(deviation, anchors.quats[i]);
}

ProbabilisticLoss probabilistic_loss(const AnchorPrediction &pred,
                                     const UnitQuaternion &gt,
                                     const AnchorSet &anchors,
                                     const ObjectModel &model, unsigned threads) {
  check_prediction(pred, anchors);
  for (std::size_t i = 0; i < pred.sigmas.size(); ++i) {
    const double s = pred.sigmas[i];
    if (!(s >= kSigmaMin && s <= 1.0))
      throw PreconditionError("sigma[" + std::to_string(i) + "] = " + std::to_string(s) +
                              " outside [1e-6, 1]");
  }
  ProbabilisticLoss out;
  out.per_anchor.resize(anchors.size());
  parallel_for(anchors.size(), threads, [&](std::size_t i) {
    const double loss =
        shape_match_loss(total_rotation(i, pred.deviations[i], anchors), gt, model);
    out.per_anchor[i] = {i, loss, loss / model.diameter()};
  });
  for (std::size_t i = 0; i < anchors.size(); ++i)
    out.value += std::log(pred.sigmas[i]) + out.per_anchor[i].normalized / pred.sigmas[i];
  return out;
}

double regularization_loss(const AnchorPrediction &pred, const AnchorSet &anchors) {
  check_prediction(pred, anchors);
  double sum = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const UnitQuaternion q = total_rotation(i, pred.deviations[i], anchors);
    const double own = std::abs(q.dot(anchors.quats[i]));
    double other = -1.0;
    for (std::size_t j = 0; j < anchors.size(); ++j)
      if (j != i)
        other = std::max(other, std::abs(q.dot(anchors.quats[j])));
    sum += std::max(0.0, other - own);
  }
  return sum;
}

double smooth_l1_vectors(std::span<const Vec3> pred_dirs, std::span<const Vec3> gt_dirs) {
  if (pred_dirs.size() != gt_dirs.size())
    throw PreconditionError("smooth_l1_vectors: length mismatch");
  if (pred_dirs.empty())
    return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < pred_dirs.size(); ++k)
    for (int c = 0; c < 3; ++c) {
      const double e = std::abs(pred_dirs[k][c] - gt_dirs[k][c]);
      sum += e < 1.0 ? 0.5 * e * e : e - 0.5;
    }
  return sum / (3.0 * static_cast<double>(pred_dirs.size()));
}

double total_loss(double rotation_loss, double regularization, double translation_loss,
                  const LossWeights &w) {
  return rotation_loss + w.regularization * regularization +
         w.translation * translation_loss;
}

BestAnchor select_best(const AnchorPrediction &pred, const AnchorSet &anchors) {
  check_prediction(pred, anchors);
  const auto it = std::min_element(pred.sigmas.begin(), pred.sigmas.end());
  const auto i = static_cast<std::size_t>(it - pred.sigmas.begin());
  return {i, total_rotation(i, pred.deviations[i], anchors)};
}

std::vector<double> grad_fd(const ScalarObjective &f, std::span<const double> x,
                            double eps) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw DegenerateError("grad_fd: objective not finite near coordinate " +
                            std::to_string(i));
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

} // namespace anchorpose
