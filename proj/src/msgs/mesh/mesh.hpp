// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "msgs/common/grid.hpp"
#include "msgs/scene_io/camera.hpp"

namespace msgs {

/// Truncated signed distance volume. Sample (i, j, k) sits at
/// origin + voxel_size * (i, j, k).
struct TsdfVolume {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  std::array<int, 3> dims{0, 0, 0};
  double truncation = 4.0;
  std::vector<double> tsdf;    // normalized to [-1, 1], 1 where unobserved
  std::vector<double> weight;  // 0 = unobserved

  /// truncation <= 0 selects 4 * voxel_size.
  static TsdfVolume create(const Vec3& origin, double voxel_size, std::array<int, 3> dims,
                           double truncation = 0.0);

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  Vec3 position(int i, int j, int k) const { return origin + voxel_size * Vec3(i, j, k); }
};

struct Bounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct DepthView {
  const Image* depth = nullptr;  // 1 channel, camera z
  const Mask* valid = nullptr;
  CameraPose pose;
  CameraIntrinsics intrinsics;
};

/// Per-axis 1st..99th percentile box of all valid unprojected depth samples,
/// padded by 5% of its extent on every side.
Bounds fit_bounds(std::span<const DepthView> views);

/// Volume covering `bounds` with `resolution` samples along its longest axis.
TsdfVolume volume_for_bounds(const Bounds& bounds, int resolution = 128, double truncation = 0.0);

/// Fuses one depth map. Depth is sampled bilinearly and only where all four
/// neighbors are valid; voxels outside the frustum or more than one truncation
/// behind the surface are left untouched.
void tsdf_integrate(TsdfVolume& volume, const Image& depth, const Mask& valid, const CameraPose& pose,
                    const CameraIntrinsics& k);

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> normals;  // per face, unit; outward (toward positive tsdf) for extracted meshes

  void compute_normals();
  Vec3 centroid(std::size_t face) const;
};

/// Marching cubes on the zero level set. Cubes touching an unobserved sample
/// produce no faces. Vertices on shared edges are shared between cubes.
Mesh extract_mesh(const TsdfVolume& volume);

/// Marching cubes on an arbitrary scalar grid (negative = inside).
Mesh marching_cubes(const std::vector<double>& values, std::array<int, 3> dims, const Vec3& origin,
                    double spacing, const std::vector<double>* weights = nullptr);

/// V - E + F with E counted over unique undirected edges.
long long euler_characteristic(const Mesh& mesh);

/// Indices of faces that are in view, front-facing and unoccluded in every pose.
/// A face counts as unoccluded when its id appears in the depth buffer within one
/// pixel of its centroid's projection, or its centroid is no deeper than the buffer.
std::vector<int> visible_faces(const Mesh& mesh, std::span<const CameraPose> poses, const CameraIntrinsics& k);

/// Face-id buffer of a z-buffer rasterization (-1 = empty) and its depth.
struct FaceBuffer {
  Grid<int> face;
  Image depth;
};
FaceBuffer rasterize_faces(const Mesh& mesh, const CameraPose& pose, const CameraIntrinsics& k);

/// ASCII OBJ with v and f records only (1-based indices).
void write_obj(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_obj(const std::filesystem::path& path);

}  // namespace msgs
