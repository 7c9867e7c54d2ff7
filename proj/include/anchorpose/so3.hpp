#pragma once

#include <array>
#include <Eigen/Core>
#include <Eigen/Geometry>

#include "anchorpose/parallel.hpp"

namespace anchorpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-angle vector in the tangent space of SO(3); its norm is the angle in
/// radians.
struct TangentVec {
  Vec3 omega = Vec3::Zero();
};

/// Unit quaternion (w, x, y, z) kept in canonical form: w >= 0, and when
/// w == 0 the first nonzero of (x, y, z) is positive. q and -q describe the
/// same rotation, so canonical form makes equality and dot products well
/// defined. Every constructor normalizes and canonicalizes.
class UnitQuaternion {
public:
  UnitQuaternion() = default;

  /// Throws PreconditionError on a zero or non-finite input.
  UnitQuaternion(double w, double x, double y, double z);

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3 &axis, double angle);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  Vec3 vec() const { return {x_, y_, z_}; }
  std::array<double, 4> wxyz() const { return {w_, x_, y_, z_}; }

  double dot(const UnitQuaternion &o) const {
    return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_;
  }

  UnitQuaternion inverse() const;

  friend bool operator==(const UnitQuaternion &, const UnitQuaternion &) = default;

private:
  double w_ = 1.0, x_ = 0.0, y_ = 0.0, z_ = 0.0;
};

/// Rotation `a` applied after `b` (Hamilton product a*b).
UnitQuaternion compose(const UnitQuaternion &a, const UnitQuaternion &b);

Vec3 rotate(const UnitQuaternion &q, const Vec3 &p);

/// Intrinsic distance on SO(3), in [0, pi]. Mathematically
/// 2*acos(min(1, |a.b|)); evaluated through atan2 of the relative rotation so
/// that tiny angles are not swamped by the flat top of acos.
double geodesic_angle(const UnitQuaternion &a, const UnitQuaternion &b);

UnitQuaternion exp_map(const TangentVec &v);

/// Inverse of exp_map with ||omega|| <= pi. At exactly pi the axis is not
/// unique; the canonical quaternion's vector part fixes it.
TangentVec log_map(const UnitQuaternion &q);

Mat3 quat_to_matrix(const UnitQuaternion &q);

/// Throws PreconditionError unless m is orthonormal with det +1 within 1e-6.
UnitQuaternion matrix_to_quat(const Mat3 &m);

/// Uniform over SO(3): a normalized 4D standard Gaussian.
UnitQuaternion random_rotation(Rng &rng);

/// Uniformly random unit vector.
Vec3 random_unit_vector(Rng &rng);

} // namespace anchorpose
