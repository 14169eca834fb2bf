// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace msgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Rotation matrix of a (w, x, y, z) quaternion. The quaternion is normalized
/// first, so any non-zero 4-vector is accepted. Templated for autodiff scalars.
template <class T>
Eigen::Matrix<T, 3, 3> quaternion_matrix(const Eigen::Matrix<T, 4, 1>& q_raw) {
  using std::sqrt;
  const T n = sqrt(q_raw.squaredNorm());
  const T w = q_raw[0] / n, x = q_raw[1] / n, y = q_raw[2] / n, z = q_raw[3] / n;
  Eigen::Matrix<T, 3, 3> r;
  r << T(1) - T(2) * (y * y + z * z), T(2) * (x * y - w * z), T(2) * (x * z + w * y),
       T(2) * (x * y + w * z), T(1) - T(2) * (x * x + z * z), T(2) * (y * z - w * x),
       T(2) * (x * z - w * y), T(2) * (y * z + w * x), T(1) - T(2) * (x * x + y * y);
  return r;
}

}  // namespace msgs
