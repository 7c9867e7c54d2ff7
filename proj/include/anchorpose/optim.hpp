#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "anchorpose/anchors.hpp"
#include "anchorpose/losses.hpp"
#include "anchorpose/model_io.hpp"

namespace anchorpose {

struct FitConfig {
  std::size_t max_iters = 200;
  double step_size = 0.05;     // radians per unit gradient
  double fd_eps = 1e-5;        // radians
  double converge_tol = 1e-8;  // on the change of the normalized loss
};

struct FitResult {
  UnitQuaternion rotation;
  double normalized_loss = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  /// Normalized loss at the start and after every accepted step.
  std::vector<double> history;
};

/// Descent on SO(3) for the shape-match loss from `init`. Each iteration
/// freezes correspondences (closest points for symmetric models), takes a
/// central-difference tangent gradient and backtracks (x0.5) until the true
/// loss decreases; the step size is reset every 20 iterations.
FitResult fit_direct(const ObjectModel &model, const UnitQuaternion &gt,
                     const UnitQuaternion &init, const FitConfig &cfg = {});

struct AnchoredFit {
  FitResult selected;
  std::size_t selected_index = 0;
  std::vector<FitResult> per_anchor;
  /// Uncertainty surrogate per anchor: final loss clamped to [1e-6, 1].
  AnchorPrediction prediction;
};

/// One descent per anchor, started at the anchor and confined to its Voronoi
/// cell (steps leaving the cell are rejected like non-decreasing ones). The
/// anchor with the smallest uncertainty surrogate is selected.
AnchoredFit fit_anchored(const ObjectModel &model, const UnitQuaternion &gt,
                         const AnchorSet &anchors, const FitConfig &cfg = {},
                         unsigned threads = 1);

inline constexpr double kFitSuccessTolerance = 1e-3;

struct TrialOutcome {
  UnitQuaternion gt;
  UnitQuaternion init;
  double direct_loss = 0.0;
  std::vector<double> anchored_loss; // one per group, same order as the input
  std::vector<std::size_t> anchored_index;
};

struct ComparisonSummary {
  std::size_t trials = 0;
  double tolerance = kFitSuccessTolerance;
  std::size_t direct_successes = 0;
  std::vector<AnchorGroupKind> groups;
  std::vector<std::size_t> anchored_successes; // one per group
  std::vector<TrialOutcome> outcomes;

  double direct_rate() const;
  double anchored_rate(std::size_t group) const;
};

/// Random ground truths (and random direct-fit inits) from `rng`; every trial
/// runs fit_direct and fit_anchored for each group. Trials may run on several
/// threads; all random draws happen up front.
ComparisonSummary anchor_success_comparison(const ObjectModel &model, std::size_t trials,
                                            std::span<const AnchorSet> groups,
                                            const FitConfig &cfg, Rng &rng,
                                            unsigned threads = 1);

} // namespace anchorpose
