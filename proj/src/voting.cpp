#include "anchorpose/voting.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "anchorpose/error.hpp"
#include "anchorpose/parallel.hpp"

namespace anchorpose {

VectorField make_field(std::span<const Vec3> points, const Vec3 &center) {
  VectorField field;
  field.points.assign(points.begin(), points.end());
  field.dirs.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vec3 d = center - points[k];
    const double n = d.norm();
    if (n < 1e-9)
      throw DegenerateError("make_field: point " + std::to_string(k) +
                            " coincides with the center");
    field.dirs.push_back(d / n);
  }
  return field;
}

void validate_field(const VectorField &field) {
  if (field.points.size() != field.dirs.size())
    throw PreconditionError("vector field: points and dirs differ in length");
  for (std::size_t k = 0; k < field.size(); ++k) {
    if (!field.points[k].allFinite() || !field.dirs[k].allFinite())
      throw PreconditionError("vector field: non-finite entry " + std::to_string(k));
    if (std::abs(field.dirs[k].norm() - 1.0) > 1e-9)
      throw PreconditionError("vector field: dir " + std::to_string(k) + " is not unit norm");
  }
}

std::optional<Vec3> pair_hypothesis(const Vec3 &p1, const Vec3 &v1, const Vec3 &p2,
                                    const Vec3 &v2, double parallel_tolerance) {
  const double b = v1.dot(v2);
  if (std::abs(b) > 1.0 - parallel_tolerance)
    return std::nullopt;
  const Vec3 w0 = p1 - p2;
  const double a = v1.dot(v1), c = v2.dot(v2);
  const double d = v1.dot(w0), e = v2.dot(w0);
  const double denom = a * c - b * b;
  const double s = (b * e - c * d) / denom;
  const double t = (a * e - b * d) / denom;
  return 0.5 * ((p1 + s * v1) + (p2 + t * v2));
}

namespace {

bool is_inlier(const Vec3 &h, const Vec3 &p, const Vec3 &v, double theta) {
  const Vec3 d = h - p;
  const double n = d.norm();
  return n < 1e-9 || d.dot(v) / n >= theta;
}

std::size_t inlier_count(const Vec3 &h, const VectorField &field, double theta) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < field.size(); ++k)
    count += is_inlier(h, field.points[k], field.dirs[k], theta);
  return count;
}

} // namespace

InlierSet count_inliers(const Vec3 &h, const VectorField &field, double theta) {
  InlierSet out;
  for (std::size_t k = 0; k < field.size(); ++k)
    if (is_inlier(h, field.points[k], field.dirs[k], theta))
      out.indices.push_back(k);
  out.count = out.indices.size();
  return out;
}

VoteResult ransac_vote(const VectorField &field, const RansacConfig &config,
                       unsigned threads) {
  const std::size_t K = field.size();
  if (K < 2)
    throw PreconditionError("ransac_vote needs at least two points");
  if (field.dirs.size() != K)
    throw PreconditionError("vector field: points and dirs differ in length");
  if (!(config.inlier_cos_threshold > -1.0 && config.inlier_cos_threshold < 1.0) ||
      config.batch_size < 1 || config.max_rounds < 1 ||
      !(config.success_prob > 0.0 && config.success_prob < 1.0))
    throw PreconditionError("invalid RANSAC configuration");

  struct Slot {
    bool valid = false;
    Hypothesis hyp;
  };
  std::vector<Slot> slots(config.batch_size);

  VoteResult result;
  bool have_best = false;
  for (std::size_t round = 0; round < config.max_rounds; ++round) {
    parallel_for(config.batch_size, threads, [&](std::size_t b) {
      const std::size_t source = round * config.batch_size + b;
      Rng rng(substream_seed(config.seed, "ransac", source));
      std::uniform_int_distribution<std::size_t> pick(0, K - 1);
      const std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      while (j == i)
        j = pick(rng);
      Slot &slot = slots[b];
      const auto h = pair_hypothesis(field.points[i], field.dirs[i], field.points[j],
                                     field.dirs[j], config.parallel_tolerance);
      slot.valid = h.has_value();
      if (slot.valid)
        slot.hyp = {*h, inlier_count(*h, field, config.inlier_cos_threshold), source};
    });

    for (const Slot &slot : slots) {
      if (!slot.valid)
        continue;
      ++result.hypotheses_evaluated;
      if (!have_best || slot.hyp.inlier_count > result.best.inlier_count) {
        result.best = slot.hyp;
        have_best = true;
      }
    }
    result.rounds = round + 1;

    if (have_best) {
      const double w = static_cast<double>(result.best.inlier_count) / static_cast<double>(K);
      const double fail =
          std::pow(1.0 - w * w, static_cast<double>(result.hypotheses_evaluated));
      if (1.0 - fail >= config.success_prob)
        break;
    }
  }
  if (!have_best)
    throw DegenerateError("degenerate field: every sampled pair was near-parallel");

  auto inliers = count_inliers(result.best.point, field, config.inlier_cos_threshold);
  result.inlier_indices = std::move(inliers.indices);
  result.center = result.best.point;
  if (result.inlier_indices.size() >= 2) {
    std::vector<Vec3> pts, dirs;
    for (auto k : result.inlier_indices) {
      pts.push_back(field.points[k]);
      dirs.push_back(field.dirs[k]);
    }
    try {
      result.center = refine_least_squares(pts, dirs);
      result.refined = true;
    } catch (const DegenerateError &) {
      result.refined = false;
    }
  }
  return result;
}

Vec3 refine_least_squares(std::span<const Vec3> points, std::span<const Vec3> dirs) {
  if (points.size() != dirs.size())
    throw PreconditionError("refine_least_squares: length mismatch");
  if (points.size() < 2)
    throw DegenerateError("refine_least_squares needs at least two lines");
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vec3 &v = dirs[k];
    const Mat3 P = Mat3::Identity() - v * v.transpose() / v.squaredNorm();
    A += P;
    b += P * points[k];
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(A, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(2);
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw DegenerateError("refine_least_squares: lines are (near) parallel");
  return A.ldlt().solve(b);
}

} // namespace anchorpose
