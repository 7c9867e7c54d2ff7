#include "anchorpose/so3.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include "anchorpose/error.hpp"

namespace anchorpose {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0)
    throw PreconditionError("quaternion must be finite and nonzero");
  w /= n, x /= n, y /= n, z /= n;
  bool flip = w < 0.0;
  if (w == 0.0) {
    if (x != 0.0)
      flip = x < 0.0;
    else if (y != 0.0)
      flip = y < 0.0;
    else
      flip = z < 0.0;
  }
  if (flip)
    w = -w, x = -x, y = -y, z = -z;
  // -0.0 would break bitwise equality with +0.0 in serialized output
  w_ = w + 0.0;
  x_ = x + 0.0;
  y_ = y + 0.0;
  z_ = z + 0.0;
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3 &axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0))
    throw PreconditionError("rotation axis must be nonzero");
  return exp_map({axis * (angle / n)});
}

UnitQuaternion UnitQuaternion::inverse() const {
  return UnitQuaternion(w_, -x_, -y_, -z_);
}

UnitQuaternion compose(const UnitQuaternion &a, const UnitQuaternion &b) {
  return UnitQuaternion(
      a.w() * b.w() - a.x() * b.x() - a.y() * b.y() - a.z() * b.z(),
      a.w() * b.x() + a.x() * b.w() + a.y() * b.z() - a.z() * b.y(),
      a.w() * b.y() - a.x() * b.z() + a.y() * b.w() + a.z() * b.x(),
      a.w() * b.z() + a.x() * b.y() - a.y() * b.x() + a.z() * b.w());
}

Vec3 rotate(const UnitQuaternion &q, const Vec3 &p) {
  const Vec3 u = q.vec();
  const Vec3 t = 2.0 * u.cross(p);
  return p + q.w() * t + u.cross(t);
}

double geodesic_angle(const UnitQuaternion &a, const UnitQuaternion &b) {
  // relative rotation conj(a)*b; its scalar part equals a.b
  const double rw = a.dot(b);
  const Vec3 rv = a.w() * b.vec() - b.w() * a.vec() - a.vec().cross(b.vec());
  return 2.0 * std::atan2(rv.norm(), std::abs(rw));
}

UnitQuaternion exp_map(const TangentVec &v) {
  const double theta = v.omega.norm();
  if (!std::isfinite(theta))
    throw PreconditionError("exp_map: tangent vector must be finite");
  const double half = 0.5 * theta;
  // sin(theta/2)/theta, series near zero
  const double k = theta < 1e-8 ? 0.5 - theta * theta / 48.0
                                 : std::sin(half) / theta;
  return UnitQuaternion(std::cos(half), k * v.omega.x(), k * v.omega.y(),
                        k * v.omega.z());
}

TangentVec log_map(const UnitQuaternion &q) {
  const Vec3 u = q.vec();
  const double s = u.norm();
  if (s == 0.0)
    return {};
  const double theta = 2.0 * std::atan2(s, q.w());
  return {u * (theta / s)};
}

Mat3 quat_to_matrix(const UnitQuaternion &q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

UnitQuaternion matrix_to_quat(const Mat3 &m) {
  if (!m.allFinite())
    throw PreconditionError("matrix_to_quat: non-finite matrix");
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (ortho > 1e-6 || std::abs(det - 1.0) > 1e-6)
    throw PreconditionError("matrix_to_quat: not a rotation (orthonormality error " +
                            std::to_string(ortho) + ", det " + std::to_string(det) + ")");
  // Shepperd: branch on the largest of the four squared components
  const double tr = m.trace();
  const double d0 = m(0, 0), d1 = m(1, 1), d2 = m(2, 2);
  if (tr >= d0 && tr >= d1 && tr >= d2) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    return {0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s,
            (m(1, 0) - m(0, 1)) / s};
  }
  if (d0 >= d1 && d0 >= d2) {
    const double s = 2.0 * std::sqrt(1.0 + d0 - d1 - d2);
    return {(m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s,
            (m(0, 2) + m(2, 0)) / s};
  }
  if (d1 >= d2) {
    const double s = 2.0 * std::sqrt(1.0 + d1 - d0 - d2);
    return {(m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s,
            (m(1, 2) + m(2, 1)) / s};
  }
  const double s = 2.0 * std::sqrt(1.0 + d2 - d0 - d1);
  return {(m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s,
          (m(1, 2) + m(2, 1)) / s, 0.25 * s};
}

UnitQuaternion random_rotation(Rng &rng) {
  std::normal_distribution<double> g;
  for (;;) {
    const double w = g(rng), x = g(rng), y = g(rng), z = g(rng);
    if (w * w + x * x + y * y + z * z > 1e-12)
      return {w, x, y, z};
  }
}

Vec3 random_unit_vector(Rng &rng) {
  std::normal_distribution<double> g;
  for (;;) {
    const Vec3 v(g(rng), g(rng), g(rng));
    const double n = v.norm();
    if (n > 1e-12)
      return v / n;
  }
}

} // namespace anchorpose
