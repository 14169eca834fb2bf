// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "msgs/common/geometry.hpp"
#include "msgs/scene_io/camera.hpp"

namespace msgs {

inline constexpr int kEmbeddingDim = 32;
using Embedding = Eigen::Matrix<double, kEmbeddingDim, 1>;

/// One anisotropic 3D Gaussian. Scale and opacity are stored unconstrained:
/// s = exp(log_scale), o = sigmoid(opacity_logit).
struct Splat {
  Vec3 mu = Vec3::Zero();
  Vec4 rot = Vec4(1.0, 0.0, 0.0, 0.0);  // (w, x, y, z), renormalized after every update
  Vec3 log_scale = Vec3::Zero();
  double opacity_logit = 0.0;
  Vec3 base_color = Vec3::Zero();
  Embedding embedding = Embedding::Zero();

  Vec3 scale() const { return log_scale.array().exp(); }
  double opacity() const;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double Splat::opacity() const { return sigmoid(opacity_logit); }

/// Sigma = R S S^T R^T with R from the (internally normalized) quaternion.
Mat3 build_covariance(const Vec3& log_scale, const Vec4& rot);

struct ProjectionSettings {
  double near_plane = 0.01;
  double frustum_dilation = 1.3;  // cull beyond this multiple of the image diagonal
  double low_pass = 0.3;          // px^2 added to the 2D covariance diagonal
};

struct Projected2D {
  Vec2 mu2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  Vec3 conic = Vec3::Zero();  // inverse covariance (a, b, c) for [[a b][b c]]
  double view_z = 0.0;
  Vec3 plane_normal = Vec3::UnitZ();  // camera space, faces the camera
  double plane_distance = 0.0;        // dot(plane_normal, camera-space mean), <= 0
};

/// EWA projection of one splat. Returns nullopt when the splat is culled.
std::optional<Projected2D> project_gaussian(const Splat& splat, const CameraPose& pose,
                                            const CameraIntrinsics& k,
                                            const ProjectionSettings& settings = {});

namespace detail {

inline double scalar_value(double v) { return v; }
template <class J>
double scalar_value(const J& jet) { return jet.a; }

/// Differentiable part of the projection, shared by the forward pass and the
/// autodiff Jacobian used in the backward pass.
template <class T>
struct ProjectionT {
  Eigen::Matrix<T, 3, 1> cam;
  Eigen::Matrix<T, 2, 1> mu2d;
  Eigen::Matrix<T, 3, 1> cov;    // xx, xy, yy (low-pass included)
  Eigen::Matrix<T, 3, 1> conic;  // a, b, c
  Eigen::Matrix<T, 3, 1> normal;
  T distance;
};

template <class T>
ProjectionT<T> project_core(const Eigen::Matrix<T, 3, 1>& mu, const Eigen::Matrix<T, 4, 1>& rot,
                            const Eigen::Matrix<T, 3, 1>& log_scale, const Mat3& w, const Vec3& t,
                            const CameraIntrinsics& k, double low_pass) {
  using std::exp;
  ProjectionT<T> out;
  const Eigen::Matrix<T, 3, 3> wt = w.cast<T>();
  out.cam = wt * mu + t.cast<T>();
  const T x = out.cam[0], y = out.cam[1], z = out.cam[2];
  out.mu2d << T(k.fx) * x / z + T(k.cx), T(k.fy) * y / z + T(k.cy);

  const Eigen::Matrix<T, 3, 3> r = quaternion_matrix<T>(rot);
  Eigen::Matrix<T, 3, 3> m = r;  // R S
  for (int i = 0; i < 3; ++i) m.col(i) *= exp(log_scale[i]);
  const Eigen::Matrix<T, 3, 3> sigma = m * m.transpose();

  Eigen::Matrix<T, 2, 3> jac;
  jac << T(k.fx) / z, T(0), -T(k.fx) * x / (z * z), T(0), T(k.fy) / z, -T(k.fy) * y / (z * z);
  const Eigen::Matrix<T, 2, 3> jw = jac * wt;
  const Eigen::Matrix<T, 2, 2> cov2 = jw * sigma * jw.transpose();
  out.cov << cov2(0, 0) + T(low_pass), cov2(0, 1), cov2(1, 1) + T(low_pass);
  const T det = out.cov[0] * out.cov[2] - out.cov[1] * out.cov[1];
  out.conic << out.cov[2] / det, -out.cov[1] / det, out.cov[0] / det;

  // Plane normal: axis of the smallest scale (lowest index on ties).
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (scalar_value(log_scale[i]) < scalar_value(log_scale[axis])) axis = i;
  }
  out.normal = wt * r.col(axis);
  if (scalar_value(out.normal.dot(out.cam)) > 0.0) out.normal = -out.normal;
  out.distance = out.normal.dot(out.cam);
  return out;
}

}  // namespace detail
}  // namespace msgs
