// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/splat/splat.hpp"

namespace msgs {

Mat3 build_covariance(const Vec3& log_scale, const Vec4& rot) {
  Mat3 m = quaternion_matrix<double>(rot);
  for (int i = 0; i < 3; ++i) m.col(i) *= std::exp(log_scale[i]);
  return m * m.transpose();
}

std::optional<Projected2D> project_gaussian(const Splat& splat, const CameraPose& pose,
                                            const CameraIntrinsics& k, const ProjectionSettings& settings) {
  const Mat3 w = pose.rotation_matrix();
  const Vec3 cam = w * splat.mu + pose.translation;
  if (!(cam.z() > settings.near_plane)) return std::nullopt;

  const auto p = detail::project_core<double>(splat.mu, splat.rot, splat.log_scale, w, pose.translation, k,
                                              settings.low_pass);
  const Vec2 center(0.5 * (k.width - 1), 0.5 * (k.height - 1));
  const double diagonal = std::hypot(static_cast<double>(k.width), static_cast<double>(k.height));
  if ((p.mu2d - center).norm() > settings.frustum_dilation * diagonal) return std::nullopt;
  if (!p.mu2d.allFinite() || !p.conic.allFinite()) return std::nullopt;

  Projected2D out;
  out.mu2d = p.mu2d;
  out.cov2d << p.cov[0], p.cov[1], p.cov[1], p.cov[2];
  out.conic = p.conic;
  out.view_z = cam.z();
  out.plane_normal = p.normal;
  out.plane_distance = p.distance;
  return out;
}

}  // namespace msgs
