// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msgs/scene_io/camera.hpp"

namespace msgs {

struct ColmapPoint {
  std::int64_t id = 0;
  Vec3 position = Vec3::Zero();
  std::array<std::uint8_t, 3> rgb{0, 0, 0};
  double error = 0.0;
};

/// Parsed COLMAP text export. Cameras and poses keep file order.
struct ColmapReconstruction {
  std::vector<std::pair<int, CameraIntrinsics>> cameras;
  std::vector<CameraPose> poses;
  std::vector<ColmapPoint> points;

  const CameraIntrinsics& camera(int camera_id) const;
};

/// Parses cameras.txt, images.txt and points3D.txt contents. Accepts the
/// PINHOLE and SIMPLE_PINHOLE camera models; everything else is rejected with
/// the model name. Errors carry "<file>:<line>:" prefixes.
ColmapReconstruction parse_colmap(std::string_view cameras_text, std::string_view images_text,
                                  std::string_view points_text);

ColmapReconstruction read_colmap_dir(const std::filesystem::path& dir);

// Writers emit shortest round-trip decimal text, so parse(format(x)) == x bitwise.
std::string format_colmap_cameras(const std::vector<std::pair<int, CameraIntrinsics>>& cameras);
std::string format_colmap_images(const std::vector<CameraPose>& poses);
std::string format_colmap_points(const std::vector<ColmapPoint>& points);
void write_colmap_dir(const std::filesystem::path& dir, const ColmapReconstruction& recon);

}  // namespace msgs
