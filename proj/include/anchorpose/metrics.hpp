#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "anchorpose/losses.hpp"
#include "anchorpose/model_io.hpp"

namespace anchorpose {

struct PoseError {
  double add = 0.0;       // meters
  double adds = 0.0;      // meters
  double rot_angle = 0.0; // radians
  double trans_err = 0.0; // meters
};

/// Mean distance between corresponding model points under the two poses.
double add_error(const Pose &pred, const Pose &gt, const ObjectModel &model);

/// Mean distance from each predicted point to the closest ground-truth point
/// (exact search).
double adds_error(const Pose &pred, const Pose &gt, const ObjectModel &model);

/// ADD-S for symmetric models, ADD otherwise.
double add_auto(const Pose &pred, const Pose &gt, const ObjectModel &model);

PoseError decoupled_errors(const Pose &pred, const Pose &gt, const ObjectModel &model);

/// Fraction of errors strictly below `threshold`. Throws on an empty list.
double accuracy_at_threshold(std::span<const double> errors, double threshold);

/// Area under the accuracy-threshold step function on [0, max_threshold],
/// divided by max_threshold. Exact; no threshold sampling.
double auc(std::span<const double> errors, double max_threshold = 0.1);

struct CurvePoint {
  double threshold = 0.0; // meters
  double accuracy = 0.0;
};

/// Pointwise accuracy. Throws PreconditionError unless thresholds ascend.
std::vector<CurvePoint> accuracy_curve(std::span<const double> errors,
                                       std::span<const double> thresholds);

/// `count` evenly spaced thresholds covering [0, max_threshold].
std::vector<double> uniform_thresholds(double max_threshold, std::size_t count);

enum class ErrorMetric { AddAuto, Add, Adds };

struct ObjectSummary {
  double accuracy = 0.0; // at add_frac * diameter
  double auc = 0.0;
  std::size_t n = 0;
};

struct EvalReport {
  std::map<std::string, ObjectSummary> per_object;
  std::vector<CurvePoint> curve;
};

/// One evaluated instance: the chosen pose error and its object's diameter.
struct EvalSample {
  std::string object_id;
  double error = 0.0;
  double diameter = 0.0;
};

struct EvalOptions {
  double add_frac = 0.1;
  double auc_max = 0.1;
  std::size_t curve_points = 101;
};

/// Per-object accuracy/AUC plus one curve pooled over all samples.
EvalReport build_report(std::span<const EvalSample> samples, const EvalOptions &opts = {});

} // namespace anchorpose
