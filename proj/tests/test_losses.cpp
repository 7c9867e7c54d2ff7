#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "anchorpose/error.hpp"
#include "anchorpose/losses.hpp"
#include "oracles.hpp"

using namespace anchorpose;

namespace {

Mat3 as_matrix(const UnitQuaternion &q) { return oracle::matrix_from_wxyz(q.wxyz()); }

const ObjectModel &blob() {
  static const ObjectModel m = [] {
    Rng rng(10);
    return generate_shape({BlobSpec{120}, Sampling::Random, "blob"}, rng);
  }();
  return m;
}

const ObjectModel &square_box() {
  static const ObjectModel m = [] {
    Rng rng(11);
    return generate_shape({BoxSpec{0.1, 0.1, 0.05, 128}, Sampling::Symmetric, "box"}, rng);
  }();
  return m;
}

const AnchorSet &tetra() {
  static const AnchorSet s = generate_anchors(AnchorGroupKind::Tetra12);
  return s;
}

AnchorPrediction random_prediction(const AnchorSet &anchors, Rng &rng, double spread) {
  AnchorPrediction p;
  std::uniform_real_distribution<double> sig(0.01, 1.0);
  std::normal_distribution<double> g(0.0, spread);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    p.deviations.push_back(exp_map({Vec3(g(rng), g(rng), g(rng))}));
    p.sigmas.push_back(sig(rng));
  }
  return p;
}

} // namespace

TEST(ShapeMatch, ZeroAtGroundTruth) {
  Rng rng(1);
  const auto gt = random_rotation(rng);
  EXPECT_EQ(shape_match_loss(gt, gt, blob()), 0.0);
  EXPECT_EQ(shape_match_loss(gt, gt, square_box()), 0.0);
}

TEST(ShapeMatch, AsymmetricMatchesMatrixAddOracle) {
  Rng rng(2);
  const Vec3 zero = Vec3::Zero();
  for (int t = 0; t < 20; ++t) {
    const auto r = random_rotation(rng), gt = random_rotation(rng);
    const double expected = oracle::add(as_matrix(r), zero, as_matrix(gt), zero, blob().points());
    EXPECT_NEAR(shape_match_loss(r, gt, blob()), expected, 1e-14);
  }
}

TEST(ShapeMatch, SymmetricMatchesMinMatchingOracle) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto r = random_rotation(rng), gt = random_rotation(rng);
    const double expected = oracle::min_matching(as_matrix(r), as_matrix(gt), square_box().points());
    EXPECT_NEAR(shape_match_loss(r, gt, square_box()), expected, 1e-14);
  }
}

TEST(ShapeMatch, SymmetricLossVanishesOnEveryDeclaredSymmetry) {
  Rng rng(4);
  const auto gt = random_rotation(rng);
  for (const auto &s : square_box().symmetry().rotations)
    EXPECT_LT(shape_match_loss(compose(gt, s), gt, square_box()), 1e-15);
}

TEST(ShapeMatch, SymmetricNeverExceedsPointwise) {
  Rng rng(5);
  const ObjectModel as_asym("b", square_box().points(), false);
  for (int t = 0; t < 20; ++t) {
    const auto r = random_rotation(rng), gt = random_rotation(rng);
    EXPECT_LE(shape_match_loss(r, gt, square_box()), shape_match_loss(r, gt, as_asym) + 1e-15);
  }
}

TEST(ShapeMatch, MatchTargetsReproduceLoss) {
  Rng rng(6);
  for (const auto *m : {&blob(), &square_box()}) {
    const auto r = random_rotation(rng), gt = random_rotation(rng);
    const auto targets = match_targets(r, gt, *m);
    double sum = 0.0;
    for (std::size_t k = 0; k < m->size(); ++k)
      sum += (as_matrix(r) * m->points()[k] - targets[k]).norm();
    EXPECT_NEAR(sum / static_cast<double>(m->size()), shape_match_loss(r, gt, *m), 1e-14);
  }
}

TEST(TotalRotation, ComposesAndChecksRange) {
  const auto dev = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), 0.1);
  const auto q = total_rotation(3, dev, tetra());
  const Mat3 expected = as_matrix(dev) * as_matrix(tetra().quats[3]);
  EXPECT_LT((as_matrix(q) - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(total_rotation(12, dev, tetra()), PreconditionError);
}

TEST(ProbabilisticLoss, MatchesOracleFormula) {
  Rng rng(7);
  const auto gt = random_rotation(rng);
  const auto pred = random_prediction(tetra(), rng, 0.3);
  const auto got = probabilistic_loss(pred, gt, tetra(), square_box());
  double expected = 0.0;
  const double d = compute_diameter(square_box().points());
  for (std::size_t i = 0; i < tetra().size(); ++i) {
    const auto full = oracle::qmul(pred.deviations[i].wxyz(), tetra().quats[i].wxyz());
    const double di =
        oracle::min_matching(oracle::matrix_from_wxyz(full), as_matrix(gt), square_box().points()) / d;
    EXPECT_NEAR(got.per_anchor[i].normalized, di, 1e-13);
    EXPECT_EQ(got.per_anchor[i].index, i);
    expected += std::log(pred.sigmas[i]) + di / pred.sigmas[i];
  }
  EXPECT_NEAR(got.value, expected, 1e-11);
}

TEST(ProbabilisticLoss, OneExactAnchorWithTinySigma) {
  // identity deviations with gt equal to anchor 0: that anchor's d is 0
  AnchorPrediction pred;
  pred.deviations.assign(tetra().size(), UnitQuaternion::identity());
  pred.sigmas.assign(tetra().size(), 1.0);
  pred.sigmas[0] = kSigmaMin;
  const auto got = probabilistic_loss(pred, tetra().quats[0], tetra(), blob());
  EXPECT_EQ(got.per_anchor[0].loss, 0.0);
  double rest = std::log(kSigmaMin);
  for (std::size_t i = 1; i < tetra().size(); ++i)
    rest += got.per_anchor[i].normalized;
  EXPECT_NEAR(got.value, rest, 1e-12);
}

TEST(ProbabilisticLoss, RejectsBadInputs) {
  Rng rng(8);
  auto pred = random_prediction(tetra(), rng, 0.1);
  pred.sigmas[2] = 0.0;
  EXPECT_THROW(probabilistic_loss(pred, {}, tetra(), blob()), PreconditionError);
  pred.sigmas[2] = 1.5;
  EXPECT_THROW(probabilistic_loss(pred, {}, tetra(), blob()), PreconditionError);
  pred.sigmas[2] = 0.5;
  pred.deviations.pop_back();
  EXPECT_THROW(probabilistic_loss(pred, {}, tetra(), blob()), PreconditionError);
}

TEST(ProbabilisticLoss, ThreadCountDoesNotChangeBits) {
  Rng rng(9);
  const auto icosa = generate_anchors(AnchorGroupKind::Icosa60);
  const auto gt = random_rotation(rng);
  const auto pred = random_prediction(icosa, rng, 0.5);
  const auto one = probabilistic_loss(pred, gt, icosa, square_box(), 1);
  for (unsigned threads : {4u, 16u}) {
    const auto many = probabilistic_loss(pred, gt, icosa, square_box(), threads);
    EXPECT_EQ(many.value, one.value);
    for (std::size_t i = 0; i < icosa.size(); ++i)
      EXPECT_EQ(many.per_anchor[i].loss, one.per_anchor[i].loss);
  }
}

TEST(ProbabilisticLoss, SigmaGradientMatchesAnalyticForm) {
  Rng rng(12);
  const auto gt = random_rotation(rng);
  auto pred = random_prediction(tetra(), rng, 0.3);
  const auto base = probabilistic_loss(pred, gt, tetra(), blob());
  std::vector<double> sig(pred.sigmas.begin(), pred.sigmas.end());
  const ScalarObjective f = [&](std::span<const double> s) {
    auto p = pred;
    p.sigmas.assign(s.begin(), s.end());
    return probabilistic_loss(p, gt, tetra(), blob()).value;
  };
  const auto g = grad_fd(f, sig, 1e-6);
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const double d = base.per_anchor[i].normalized;
    const double analytic = 1.0 / sig[i] - d / (sig[i] * sig[i]);
    EXPECT_NEAR(g[i], analytic, 1e-5 * std::max(1.0, std::abs(analytic)));
  }
}

TEST(Regularization, ZeroForUnperturbedAnchors) {
  AnchorPrediction pred;
  pred.deviations.assign(tetra().size(), UnitQuaternion::identity());
  pred.sigmas.assign(tetra().size(), 0.5);
  EXPECT_EQ(regularization_loss(pred, tetra()), 0.0);
}

TEST(Regularization, MatchesRawArrayTransliteration) {
  Rng rng(13);
  for (double spread : {0.1, 0.8, 2.0}) {
    const auto pred = random_prediction(tetra(), rng, spread);
    double expected = 0.0;
    for (std::size_t i = 0; i < tetra().size(); ++i) {
      const auto q = oracle::qmul(pred.deviations[i].wxyz(), tetra().quats[i].wxyz());
      double other = -1.0;
      for (std::size_t j = 0; j < tetra().size(); ++j)
        if (j != i) other = std::max(other, std::abs(oracle::qdot(q, tetra().quats[j].wxyz())));
      expected += std::max(0.0, other - std::abs(oracle::qdot(q, tetra().quats[i].wxyz())));
    }
    EXPECT_NEAR(regularization_loss(pred, tetra()), expected, 1e-14) << spread;
  }
}

TEST(Regularization, PositiveOnlyOutsideOwnCell) {
  AnchorPrediction pred;
  pred.deviations.assign(tetra().size(), UnitQuaternion::identity());
  pred.sigmas.assign(tetra().size(), 0.5);
  // About (1,1,1) the cell boundary toward the 120 degree anchor sits at 60 degrees.
  pred.deviations[0] = UnitQuaternion::from_axis_angle(Vec3(1, 1, 1), 0.8);
  EXPECT_EQ(regularization_loss(pred, tetra()), 0.0);
  pred.deviations[0] = UnitQuaternion::from_axis_angle(Vec3(1, 1, 1), 1.9 * std::numbers::pi / 3);
  EXPECT_GT(regularization_loss(pred, tetra()), 0.0);
}

TEST(SmoothL1, HandValues) {
  const std::vector<Vec3> zero(2, Vec3::Zero());
  const std::vector<Vec3> pred{Vec3(0.5, 0, 0), Vec3(0, -2, 0)};
  // (0.125 + 1.5) / 6
  EXPECT_DOUBLE_EQ(smooth_l1_vectors(pred, zero), 1.625 / 6.0);
  EXPECT_EQ(smooth_l1_vectors(zero, zero), 0.0);
  EXPECT_EQ(smooth_l1_vectors(std::span<const Vec3>{}, std::span<const Vec3>{}), 0.0);
  EXPECT_THROW(smooth_l1_vectors(pred, std::span<const Vec3>(zero.data(), 1)), PreconditionError);
}

TEST(SmoothL1, ContinuousAtTransition) {
  const std::vector<Vec3> zero{Vec3::Zero()};
  const std::vector<Vec3> below{Vec3(1 - 1e-9, 0, 0)}, above{Vec3(1 + 1e-9, 0, 0)};
  EXPECT_NEAR(smooth_l1_vectors(below, zero), smooth_l1_vectors(above, zero), 1e-8);
}

TEST(TotalLoss, DefaultWeights) {
  EXPECT_DOUBLE_EQ(total_loss(1.0, 2.0, 3.0), 20.0);
  EXPECT_DOUBLE_EQ(total_loss(1.0, 2.0, 3.0, {0.0, 1.0}), 4.0);
}

TEST(SelectBest, SmallestSigmaLowestIndexOnTies) {
  AnchorPrediction pred;
  pred.deviations.assign(tetra().size(), UnitQuaternion::identity());
  pred.sigmas.assign(tetra().size(), 0.5);
  pred.sigmas[7] = 0.1;
  pred.sigmas[4] = 0.1;
  pred.deviations[4] = UnitQuaternion::from_axis_angle(Vec3::UnitX(), 0.2);
  const auto best = select_best(pred, tetra());
  EXPECT_EQ(best.index, 4u);
  EXPECT_EQ(best.rotation, compose(pred.deviations[4], tetra().quats[4]));
}

TEST(GradFd, QuadraticAndNonFinite) {
  const ScalarObjective f = [](std::span<const double> x) {
    return 3 * x[0] * x[0] + x[0] * x[1] - 2 * x[1];
  };
  const std::vector<double> x{0.7, -1.3};
  const auto g = grad_fd(f, x, 1e-5);
  EXPECT_NEAR(g[0], 6 * 0.7 - 1.3, 1e-8);
  EXPECT_NEAR(g[1], 0.7 - 2, 1e-8);
  const ScalarObjective lg = [](std::span<const double> v) { return std::log(v[0]); };
  EXPECT_THROW(grad_fd(lg, std::vector<double>{1e-9}, 1e-6), DegenerateError);
}
