#pragma once

// Test-only reference computations. Each one takes a different route from
// the library code it checks (matrices instead of quaternions, plain loops
// over raw arrays, numeric quadrature), so agreement is meaningful.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rodrigues' formula.
inline Mat3 rotation_matrix(Vec3 axis, double angle) {
  axis.normalize();
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return Mat3::Identity() + std::sin(angle) * k + (1 - std::cos(angle)) * k * k;
}

/// Rotation matrix from raw (w, x, y, z), written out independently.
inline Mat3 matrix_from_wxyz(const std::array<double, 4> &q) {
  const auto [w, x, y, z] = q;
  Mat3 m;
  m << w * w + x * x - y * y - z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y,
      2 * x * y + 2 * w * z, w * w - x * x + y * y - z * z, 2 * y * z - 2 * w * x,
      2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, w * w - x * x - y * y + z * z;
  return m;
}

/// Rotation angle between two matrices: acos((tr(A^T B) - 1) / 2).
inline double matrix_angle(const Mat3 &a, const Mat3 &b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

/// Hamilton product on raw arrays.
inline std::array<double, 4> qmul(const std::array<double, 4> &a,
                                  const std::array<double, 4> &b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

inline double qdot(const std::array<double, 4> &a, const std::array<double, 4> &b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

/// Mean matched-point distance with both poses applied as matrices.
inline double add(const Mat3 &r1, const Vec3 &t1, const Mat3 &r2, const Vec3 &t2,
                  const std::vector<Vec3> &pts) {
  double sum = 0.0;
  for (const auto &x : pts) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      double a = t1[c], b = t2[c];
      for (int k = 0; k < 3; ++k) {
        a += r1(c, k) * x[k];
        b += r2(c, k) * x[k];
      }
      s += (a - b) * (a - b);
    }
    sum += std::sqrt(s);
  }
  return sum / static_cast<double>(pts.size());
}

/// Mean closest-point distance with both rotations applied as matrices.
inline double min_matching(const Mat3 &r1, const Mat3 &r2, const std::vector<Vec3> &pts) {
  double sum = 0.0;
  for (const auto &x1 : pts) {
    const Vec3 a = r1 * x1;
    double best = std::numeric_limits<double>::infinity();
    for (const auto &x2 : pts)
      best = std::min(best, (a - r2 * x2).norm());
    sum += best;
  }
  return sum / static_cast<double>(pts.size());
}

/// Midpoint quadrature of the accuracy step function over [0, T], / T.
inline double auc_quadrature(const std::vector<double> &errors, double T, int n) {
  double area = 0.0;
  const double h = T / n;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * h;
    const auto hits = std::count_if(errors.begin(), errors.end(),
                                    [&](double e) { return e < t; });
    area += h * static_cast<double>(hits) / static_cast<double>(errors.size());
  }
  return area / T;
}

} // namespace oracle
