#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "anchorpose/so3.hpp"

namespace anchorpose {

/// Declared symmetries of a shape, used by test oracles. `rotations` always
/// contains the identity.
struct Symmetry {
  std::vector<UnitQuaternion> rotations{UnitQuaternion::identity()};
  std::optional<Vec3> continuous_axis;
};

/// Exact maximum pairwise distance, O(M^2). Throws PreconditionError for
/// fewer than two points.
double compute_diameter(std::span<const Vec3> points);

/// Object point cloud in its own frame. Immutable once built.
class ObjectModel {
public:
  /// Throws PreconditionError on an empty cloud, non-finite coordinates or
  /// zero diameter.
  ObjectModel(std::string id, std::vector<Vec3> points, bool symmetric,
              Symmetry symmetry = {});

  const std::string &id() const { return id_; }
  const std::vector<Vec3> &points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double diameter() const { return diameter_; }
  bool symmetric() const { return symmetric_; }
  const Symmetry &symmetry() const { return symmetry_; }

private:
  std::string id_;
  std::vector<Vec3> points_;
  double diameter_;
  bool symmetric_;
  Symmetry symmetry_;
};

/// Reads an ASCII PLY file (vertex element with float/double x, y, z).
/// The symmetric flag comes from `symmetric` when given, otherwise from a
/// sidecar `<stem>.meta.json` holding {"symmetric": bool}, otherwise false.
/// The model id is the file stem. Throws ParseError with a line number.
ObjectModel load_ply(const std::filesystem::path &path,
                     std::optional<bool> symmetric = std::nullopt);

/// Writes vertices as ASCII PLY with shortest round-trip decimal output, so
/// reading the file back reproduces every coordinate bit for bit.
void write_ply(const std::filesystem::path &path, std::span<const Vec3> points);

std::filesystem::path meta_path_for(const std::filesystem::path &ply_path);
void write_meta(const std::filesystem::path &ply_path, bool symmetric);

struct CylinderSpec {
  double radius = 0.05;
  double height = 0.2;
  std::size_t n = 2000;
  /// Ring resolution for symmetric sampling; 0 picks one from n.
  std::size_t angular_steps = 0;
};

struct BoxSpec {
  double dx = 0.1, dy = 0.1, dz = 0.3;
  std::size_t n = 1000;
};

struct BlobSpec {
  std::size_t n = 500;
};

enum class Sampling {
  /// i.i.d. area-uniform surface samples
  Random,
  /// point set exactly invariant under the shape's discrete symmetries
  /// (point count is then rounded to fit the structure)
  Symmetric,
};

struct SyntheticShapeSpec {
  std::variant<CylinderSpec, BoxSpec, BlobSpec> shape;
  Sampling sampling = Sampling::Random;
  std::string id = "synthetic";
};

/// Surface samples of a cylinder (axis z), a box (faces), or an irregular
/// blob, centered at the origin. Cylinders and boxes are flagged symmetric
/// with their declared symmetries; blobs are asymmetric. Deterministic in
/// the state of `rng`.
ObjectModel generate_shape(const SyntheticShapeSpec &spec, Rng &rng);

} // namespace anchorpose
