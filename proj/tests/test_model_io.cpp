#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "anchorpose/error.hpp"
#include "anchorpose/model_io.hpp"

using namespace anchorpose;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("anchorpose_io_" + std::string(::testing::UnitTest::GetInstance()
                                               ->current_test_info()
                                               ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path write(const std::string &name, const std::string &text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  int parse_error_line(const fs::path &p) {
    try {
      load_ply(p);
    } catch (const ParseError &e) {
      return e.line();
    }
    return -1;
  }
  fs::path dir_;
};

double brute_diameter(const std::vector<Vec3> &pts) {
  double best = 0.0;
  for (const auto &a : pts)
    for (const auto &b : pts)
      best = std::max(best, std::sqrt((a - b).squaredNorm()));
  return best;
}

// Largest distance from any transformed point to its nearest original point.
double invariance_gap(const std::vector<Vec3> &pts, const Mat3 &g) {
  double worst = 0.0;
  for (const auto &p : pts) {
    double best = 1e300;
    for (const auto &q : pts)
      best = std::min(best, (g * p - q).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

} // namespace

TEST(Diameter, UnitCubeCorners) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i)
    pts.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  EXPECT_DOUBLE_EQ(compute_diameter(pts), std::sqrt(3.0));
  EXPECT_THROW(compute_diameter(std::span<const Vec3>(pts.data(), 1)), PreconditionError);
}

TEST(Diameter, MatchesBruteForceOnRandomClouds) {
  Rng rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    std::vector<Vec3> pts(50);
    for (auto &p : pts)
      p = Vec3(g(rng), g(rng), g(rng));
    EXPECT_DOUBLE_EQ(compute_diameter(pts), brute_diameter(pts));
  }
}

TEST(ObjectModelTest, RejectsBadClouds) {
  EXPECT_THROW(ObjectModel("e", {}, false), PreconditionError);
  EXPECT_THROW(ObjectModel("z", {Vec3(1, 1, 1), Vec3(1, 1, 1)}, false), PreconditionError);
  EXPECT_THROW(ObjectModel("n", {Vec3(0, 0, 0), Vec3(NAN, 0, 0)}, false), PreconditionError);
  const ObjectModel ok("ok", {Vec3(0, 0, 0), Vec3(0, 3, 4)}, true);
  EXPECT_DOUBLE_EQ(ok.diameter(), 5.0);
  EXPECT_TRUE(ok.symmetric());
  EXPECT_EQ(ok.symmetry().rotations.size(), 1u);
}

TEST_F(TempDir, PlyRoundTripIsBitExact) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i)
    pts.emplace_back(u(rng), u(rng) * 1e-7, u(rng) * 1e5);
  pts.emplace_back(0.1, 1.0 / 3.0, -0.0);
  pts.emplace_back(5e-324, 1.7976931348623157e308, 2.0);
  const auto path = dir_ / "cloud.ply";
  write_ply(path, pts);
  const auto model = load_ply(path);
  ASSERT_EQ(model.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int c = 0; c < 3; ++c)
      EXPECT_EQ(model.points()[i][c], pts[i][c]) << i << "," << c;
  EXPECT_EQ(model.id(), "cloud");
  EXPECT_FALSE(model.symmetric());
}

TEST_F(TempDir, SymmetricFlagFromSidecarOrArgument) {
  const auto path = dir_ / "mug.ply";
  write_ply(path, std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0)});
  EXPECT_FALSE(load_ply(path).symmetric());
  write_meta(path, true);
  EXPECT_EQ(meta_path_for(path), dir_ / "mug.meta.json");
  EXPECT_TRUE(load_ply(path).symmetric());
  EXPECT_FALSE(load_ply(path, false).symmetric());
  write("mug.meta.json", "{not json");
  EXPECT_THROW(load_ply(path), ParseError);
}

TEST_F(TempDir, ReadsHeaderVariantsAndSkipsOtherElements) {
  const auto path = write("mesh.ply",
                          "ply\n"
                          "format ascii 1.0\n"
                          "comment exported by hand\n"
                          "element camera 1\n"
                          "property float fov\n"
                          "element vertex 3\n"
                          "property float nx\n"
                          "property double x\n"
                          "property double y\n"
                          "property list uchar int tags\n"
                          "property float z\n"
                          "element face 1\n"
                          "property list uchar int vertex_indices\n"
                          "end_header\n"
                          "60\n"
                          "9 1 2 2 7 7 3\n"
                          "9 4 5 0 6\n"
                          "9 7 8 1 1 9\n"
                          "3 0 1 2\n");
  const auto m = load_ply(path);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.points()[0], Vec3(1, 2, 3));
  EXPECT_EQ(m.points()[1], Vec3(4, 5, 6));
  EXPECT_EQ(m.points()[2], Vec3(7, 8, 9));
}

TEST_F(TempDir, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line(write("a.ply", "plx\nformat ascii 1.0\n")), 1);
  EXPECT_EQ(parse_error_line(write("b.ply", "ply\nformat binary_little_endian 1.0\n")), 2);
  EXPECT_EQ(parse_error_line(write("c.ply", "ply\nformat ascii 1.0\nelement vertex 2\n"
                                            "property float x\nproperty float y\n"
                                            "property float z\nend_header\n"
                                            "1 2 3\n1 2 oops\n")),
            9);
  EXPECT_EQ(parse_error_line(write("d.ply", "ply\nformat ascii 1.0\nelement vertex 1\n"
                                            "property float x\nproperty float y\n"
                                            "end_header\n1 2\n")),
            6);
  EXPECT_EQ(parse_error_line(write("e.ply", "ply\nformat ascii 1.0\nelement vertex 1\n"
                                            "property float x\nproperty float y\n"
                                            "property float z\nend_header\n1 2\n")),
            8);
  EXPECT_EQ(parse_error_line(write("f.ply", "ply\nformat ascii 1.0\nelement vertex 1\n"
                                            "property int x\nproperty float y\n"
                                            "property float z\nend_header\n1 2 3\n")),
            7);
  EXPECT_GT(parse_error_line(write("g.ply", "ply\nformat ascii 1.0\nelement vertex 3\n"
                                            "property float x\nproperty float y\n"
                                            "property float z\nend_header\n1 2 3\n")),
            0);
  EXPECT_THROW(load_ply(dir_ / "missing.ply"), ParseError);
}

TEST(Shapes, CylinderSurfaceAndFlags) {
  Rng rng(1);
  const auto m = generate_shape({CylinderSpec{}, Sampling::Random, "cyl"}, rng);
  EXPECT_EQ(m.size(), 2000u);
  EXPECT_TRUE(m.symmetric());
  ASSERT_TRUE(m.symmetry().continuous_axis.has_value());
  EXPECT_EQ(*m.symmetry().continuous_axis, Vec3::UnitZ());
  for (const auto &p : m.points()) {
    const double r = std::hypot(p.x(), p.y());
    const bool lateral = std::abs(r - 0.05) < 1e-12 && std::abs(p.z()) <= 0.1 + 1e-12;
    const bool cap = std::abs(std::abs(p.z()) - 0.1) < 1e-12 && r <= 0.05 + 1e-12;
    EXPECT_TRUE(lateral || cap) << p.transpose();
  }
  EXPECT_LE(m.diameter(), std::hypot(0.1, 0.2) + 1e-12);
  EXPECT_GT(m.diameter(), 0.2);
}

TEST(Shapes, SymmetricCylinderIsInvariantUnderRingStepsAndFlip) {
  Rng rng(1);
  CylinderSpec spec;
  spec.n = 600;
  spec.angular_steps = 24;
  const auto m = generate_shape({spec, Sampling::Symmetric, "cyl"}, rng);
  const double step = 2 * std::numbers::pi / 24;
  for (int k : {1, 5, 12})
    EXPECT_LT(invariance_gap(m.points(), quat_to_matrix(UnitQuaternion::from_axis_angle(
                                             Vec3::UnitZ(), k * step))),
              1e-12);
  for (const auto &q : m.symmetry().rotations)
    EXPECT_LT(invariance_gap(m.points(), quat_to_matrix(q)), 1e-12);
}

TEST(Shapes, SymmetricBoxIsInvariantUnderItsGroup) {
  Rng rng(2);
  const auto square = generate_shape({BoxSpec{0.1, 0.1, 0.05, 128}, Sampling::Symmetric}, rng);
  EXPECT_EQ(square.symmetry().rotations.size(), 8u);
  EXPECT_EQ(square.size(), 128u);
  const auto slab = generate_shape({BoxSpec{0.1, 0.2, 0.3, 100}, Sampling::Symmetric}, rng);
  EXPECT_EQ(slab.symmetry().rotations.size(), 4u);
  for (const auto *m : {&square, &slab})
    for (const auto &q : m->symmetry().rotations)
      EXPECT_LT(invariance_gap(m->points(), quat_to_matrix(q)), 1e-15);
  // the 90 degree z turn is only a symmetry of the square box
  const Mat3 quarter = quat_to_matrix(UnitQuaternion::from_axis_angle(Vec3::UnitZ(),
                                                                      std::numbers::pi / 2));
  EXPECT_LT(invariance_gap(square.points(), quarter), 1e-15);
  EXPECT_GT(invariance_gap(slab.points(), quarter), 1e-3);
}

TEST(Shapes, BlobIsCenteredAsymmetricAndDeterministic) {
  Rng a(4), b(4);
  const auto m = generate_shape({BlobSpec{300}, Sampling::Random, "blob"}, a);
  const auto n = generate_shape({BlobSpec{300}, Sampling::Random, "blob"}, b);
  EXPECT_EQ(m.points(), n.points());
  EXPECT_FALSE(m.symmetric());
  Vec3 c = Vec3::Zero();
  for (const auto &p : m.points())
    c += p;
  EXPECT_LT((c / 300.0).norm(), 1e-15);
  EXPECT_GT(invariance_gap(m.points(), quat_to_matrix(UnitQuaternion(0, 0, 0, 1))), 1e-3);
}

TEST(Shapes, RejectsBadDimensions) {
  Rng rng(1);
  EXPECT_THROW(generate_shape({BoxSpec{0, 1, 1, 100}}, rng), PreconditionError);
  EXPECT_THROW(generate_shape({CylinderSpec{0.1, -1, 100, 0}}, rng), PreconditionError);
  EXPECT_THROW(generate_shape({BlobSpec{3}}, rng), PreconditionError);
}
