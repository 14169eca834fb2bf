// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <Eigen/Geometry>

#include "msgs/common/geometry.hpp"

namespace msgs {

/// Pinhole intrinsics in pixels. Pixel centers sit at integer coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies inside the image.
  void validate() const;

  Mat3 matrix() const;
  /// K^-1 (x, y, 1): the camera-space ray through pixel (x, y) with unit z.
  Vec3 ray(double x, double y) const { return {(x - cx) / fx, (y - cy) / fy, 1.0}; }
  Vec2 project(const Vec3& cam) const {
    return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// World-to-camera rigid transform (COLMAP convention: x_cam = R x_world + t).
struct CameraPose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();
  int sequence_id = 0;
  int camera_id = 1;
  int image_id = 0;
  std::string image_path;

  Mat3 rotation_matrix() const { return rotation.normalized().toRotationMatrix(); }
  Vec3 to_camera(const Vec3& world) const { return rotation_matrix() * world + translation; }
  Vec3 center() const { return -(rotation_matrix().transpose() * translation); }

  /// Pose looking from `eye` toward `target`; camera y axis points along -up in the image.
  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());
};

}  // namespace msgs
