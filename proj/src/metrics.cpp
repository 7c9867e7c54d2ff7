#include "anchorpose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anchorpose/error.hpp"

namespace anchorpose {

namespace {

Vec3 apply(const Pose &pose, const Vec3 &x) {
  return rotate(pose.rotation, x) + pose.translation;
}

void require_nonempty(std::span<const double> errors) {
  if (errors.empty())
    throw PreconditionError("error list is empty");
}

} // namespace

double add_error(const Pose &pred, const Pose &gt, const ObjectModel &model) {
  double sum = 0.0;
  for (const auto &x : model.points())
    sum += (apply(pred, x) - apply(gt, x)).norm();
  return sum / static_cast<double>(model.size());
}

double adds_error(const Pose &pred, const Pose &gt, const ObjectModel &model) {
  std::vector<Vec3> ref;
  ref.reserve(model.size());
  for (const auto &x : model.points())
    ref.push_back(apply(gt, x));
  double sum = 0.0;
  for (const auto &x : model.points()) {
    const Vec3 p = apply(pred, x);
    double best = std::numeric_limits<double>::infinity();
    for (const auto &r : ref)
      best = std::min(best, (p - r).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(model.size());
}

double add_auto(const Pose &pred, const Pose &gt, const ObjectModel &model) {
  return model.symmetric() ? adds_error(pred, gt, model) : add_error(pred, gt, model);
}

PoseError decoupled_errors(const Pose &pred, const Pose &gt, const ObjectModel &model) {
  PoseError e;
  e.add = add_error(pred, gt, model);
  e.adds = adds_error(pred, gt, model);
  e.rot_angle = geodesic_angle(pred.rotation, gt.rotation);
  e.trans_err = (pred.translation - gt.translation).norm();
  return e;
}

double accuracy_at_threshold(std::span<const double> errors, double threshold) {
  require_nonempty(errors);
  const auto hits = std::count_if(errors.begin(), errors.end(),
                                  [&](double e) { return e < threshold; });
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double auc(std::span<const double> errors, double max_threshold) {
  require_nonempty(errors);
  if (!(max_threshold > 0.0))
    throw PreconditionError("auc: max_threshold must be positive");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // accuracy is k/n on [e_k, e_{k+1}), clipped to [0, max_threshold]
  double area = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double lo = std::max(0.0, sorted[k]);
    if (lo >= max_threshold)
      break;
    const double hi =
        k + 1 < sorted.size() ? std::min(max_threshold, sorted[k + 1]) : max_threshold;
    area += (hi - lo) * static_cast<double>(k + 1) / n;
  }
  return area / max_threshold;
}

std::vector<CurvePoint> accuracy_curve(std::span<const double> errors,
                                       std::span<const double> thresholds) {
  require_nonempty(errors);
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw PreconditionError("accuracy_curve: thresholds must be ascending");
  std::vector<CurvePoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds)
    out.push_back({t, accuracy_at_threshold(errors, t)});
  return out;
}

std::vector<double> uniform_thresholds(double max_threshold, std::size_t count) {
  std::vector<double> out;
  if (count == 1)
    return {max_threshold};
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(max_threshold * static_cast<double>(i) / static_cast<double>(count - 1));
  return out;
}

EvalReport build_report(std::span<const EvalSample> samples, const EvalOptions &opts) {
  EvalReport report;
  std::map<std::string, std::vector<const EvalSample *>> groups;
  std::vector<double> all;
  for (const auto &s : samples) {
    groups[s.object_id].push_back(&s);
    all.push_back(s.error);
  }
  for (const auto &[id, group] : groups) {
    std::vector<double> errs;
    std::size_t hits = 0;
    for (const auto *s : group) {
      errs.push_back(s->error);
      hits += s->error < opts.add_frac * s->diameter;
    }
    report.per_object[id] = {static_cast<double>(hits) / static_cast<double>(group.size()),
                             auc(errs, opts.auc_max), group.size()};
  }
  if (!all.empty())
    report.curve = accuracy_curve(all, uniform_thresholds(opts.auc_max, opts.curve_points));
  return report;
}

} // namespace anchorpose
