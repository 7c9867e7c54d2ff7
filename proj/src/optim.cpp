#include "anchorpose/optim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "anchorpose/error.hpp"
#include "anchorpose/parallel.hpp"

namespace anchorpose {

namespace {

constexpr std::size_t kStepResetPeriod = 20;
constexpr double kMinStep = 1e-12; // radians

using Constraint = std::function<bool(const UnitQuaternion &)>;

double normalized_loss(const UnitQuaternion &r, const UnitQuaternion &gt,
                       const ObjectModel &model) {
  return shape_match_loss(r, gt, model) / model.diameter();
}

Vec3 tangent_gradient(const UnitQuaternion &r, const std::vector<Vec3> &targets,
                      const ObjectModel &model, double eps) {
  const auto &pts = model.points();
  std::vector<Vec3> current;
  current.reserve(pts.size());
  for (const auto &p : pts)
    current.push_back(rotate(r, p));
  const double scale = 1.0 / (static_cast<double>(pts.size()) * model.diameter());
  const ScalarObjective surrogate = [&](std::span<const double> w) {
    const UnitQuaternion dq = exp_map({Vec3(w[0], w[1], w[2])});
    double sum = 0.0;
    for (std::size_t k = 0; k < current.size(); ++k)
      sum += (rotate(dq, current[k]) - targets[k]).norm();
    return sum * scale;
  };
  const std::array<double, 3> origin{0.0, 0.0, 0.0};
  const auto g = grad_fd(surrogate, origin, eps);
  return {g[0], g[1], g[2]};
}

FitResult descend(const ObjectModel &model, const UnitQuaternion &gt,
                  const UnitQuaternion &init, const FitConfig &cfg,
                  const Constraint &inside) {
  if (cfg.max_iters == 0 || !(cfg.step_size > 0) || !(cfg.fd_eps > 0) ||
      !(cfg.converge_tol > 0))
    throw PreconditionError("invalid fit configuration");
  FitResult res;
  res.rotation = init;
  res.normalized_loss = normalized_loss(init, gt, model);
  res.history.push_back(res.normalized_loss);
  if (res.normalized_loss == 0.0) {
    res.converged = true;
    return res;
  }

  double step = cfg.step_size;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    if (it > 0 && it % kStepResetPeriod == 0)
      step = cfg.step_size;
    res.iters = it + 1;

    const auto targets = match_targets(res.rotation, gt, model);
    const Vec3 g = tangent_gradient(res.rotation, targets, model, cfg.fd_eps);
    const double gnorm = g.norm();
    if (gnorm == 0.0) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    UnitQuaternion trial;
    double trial_loss = 0.0;
    const Vec3 dir = g / gnorm;
    while (step > kMinStep) {
      trial = compose(exp_map({-step * dir}), res.rotation);
      if (!inside || inside(trial)) {
        trial_loss = normalized_loss(trial, gt, model);
        if (trial_loss < res.normalized_loss) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    const double decrease = res.normalized_loss - trial_loss;
    res.rotation = trial;
    res.normalized_loss = trial_loss;
    res.history.push_back(trial_loss);
    if (decrease < cfg.converge_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

} // namespace

FitResult fit_direct(const ObjectModel &model, const UnitQuaternion &gt,
                     const UnitQuaternion &init, const FitConfig &cfg) {
  return descend(model, gt, init, cfg, {});
}

AnchoredFit fit_anchored(const ObjectModel &model, const UnitQuaternion &gt,
                         const AnchorSet &anchors, const FitConfig &cfg,
                         unsigned threads) {
  AnchoredFit out;
  out.per_anchor.resize(anchors.size());
  parallel_for(anchors.size(), threads, [&](std::size_t i) {
    out.per_anchor[i] =
        descend(model, gt, anchors.quats[i], cfg, [&](const UnitQuaternion &r) {
          return nearest_anchor(r, anchors) == i;
        });
  });
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto &r = out.per_anchor[i];
    out.prediction.deviations.push_back(compose(r.rotation, anchors.quats[i].inverse()));
    out.prediction.sigmas.push_back(std::clamp(r.normalized_loss, kSigmaMin, 1.0));
  }
  out.selected_index = select_best(out.prediction, anchors).index;
  out.selected = out.per_anchor[out.selected_index];
  return out;
}

double ComparisonSummary::direct_rate() const {
  return trials ? static_cast<double>(direct_successes) / static_cast<double>(trials) : 0.0;
}

double ComparisonSummary::anchored_rate(std::size_t group) const {
  return trials ? static_cast<double>(anchored_successes.at(group)) /
                      static_cast<double>(trials)
                : 0.0;
}

ComparisonSummary anchor_success_comparison(const ObjectModel &model, std::size_t trials,
                                            std::span<const AnchorSet> groups,
                                            const FitConfig &cfg, Rng &rng,
                                            unsigned threads) {
  if (trials < 1)
    throw PreconditionError("anchor_success_comparison needs at least one trial");
  ComparisonSummary s;
  s.trials = trials;
  for (const auto &g : groups)
    s.groups.push_back(g.kind);
  s.anchored_successes.assign(groups.size(), 0);
  s.outcomes.resize(trials);
  for (auto &o : s.outcomes) {
    o.gt = random_rotation(rng);
    o.init = random_rotation(rng);
  }
  parallel_for(trials, threads, [&](std::size_t t) {
    auto &o = s.outcomes[t];
    o.direct_loss = fit_direct(model, o.gt, o.init, cfg).normalized_loss;
    for (const auto &g : groups) {
      const auto fit = fit_anchored(model, o.gt, g, cfg);
      o.anchored_loss.push_back(fit.selected.normalized_loss);
      o.anchored_index.push_back(fit.selected_index);
    }
  });
  for (const auto &o : s.outcomes) {
    s.direct_successes += o.direct_loss < s.tolerance;
    for (std::size_t g = 0; g < groups.size(); ++g)
      s.anchored_successes[g] += o.anchored_loss[g] < s.tolerance;
  }
  return s;
}

} // namespace anchorpose
