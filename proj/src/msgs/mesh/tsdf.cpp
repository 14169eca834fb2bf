// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "msgs/common/error.hpp"
#include "msgs/common/parallel.hpp"
#include "msgs/mesh/mesh.hpp"

namespace msgs {

TsdfVolume TsdfVolume::create(const Vec3& origin, double voxel_size, std::array<int, 3> dims, double truncation) {
  if (!(voxel_size > 0.0)) fail(ErrorCode::InvalidArgument, "voxel size must be positive");
  for (int d : dims) {
    if (d < 2) fail(ErrorCode::InvalidArgument, "TSDF volume needs at least 2 samples per axis");
  }
  TsdfVolume v;
  v.origin = origin;
  v.voxel_size = voxel_size;
  v.dims = dims;
  v.truncation = truncation > 0.0 ? truncation : 4.0 * voxel_size;
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  v.tsdf.assign(n, 1.0);
  v.weight.assign(n, 0.0);
  return v;
}

Bounds fit_bounds(std::span<const DepthView> views) {
  std::array<std::vector<double>, 3> samples;
  for (const DepthView& v : views) {
    if (!v.depth || !v.valid) fail(ErrorCode::InvalidArgument, "fit_bounds: view without depth");
    const Mat3 rt = v.pose.rotation_matrix().transpose();
    for (int y = 0; y < v.depth->height; ++y) {
      for (int x = 0; x < v.depth->width; ++x) {
        if (!(*v.valid)(x, y)) continue;
        const Vec3 cam = (*v.depth)(x, y) * v.intrinsics.ray(x, y);
        const Vec3 world = rt * (cam - v.pose.translation);
        for (int a = 0; a < 3; ++a) samples[a].push_back(world[a]);
      }
    }
  }
  if (samples[0].empty()) fail(ErrorCode::InvalidArgument, "fit_bounds: no valid depth samples");
  Bounds b;
  for (int a = 0; a < 3; ++a) {
    auto& s = samples[a];
    std::sort(s.begin(), s.end());
    const auto at = [&](double q) {
      const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(s.size() - 1) + 0.5));
      return s[std::min(i, s.size() - 1)];
    };
    const double lo = at(0.01), hi = at(0.99);
    const double pad = 0.05 * (hi - lo);
    b.min[a] = lo - pad;
    b.max[a] = hi + pad;
  }
  return b;
}

TsdfVolume volume_for_bounds(const Bounds& bounds, int resolution, double truncation) {
  if (resolution < 2) fail(ErrorCode::InvalidArgument, "volume resolution must be at least 2");
  const Vec3 extent = bounds.max - bounds.min;
  const double longest = extent.maxCoeff();
  if (!(longest > 0.0)) fail(ErrorCode::InvalidArgument, "volume bounds are empty");
  const double voxel = longest / (resolution - 1);
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) dims[a] = std::max(2, static_cast<int>(std::ceil(extent[a] / voxel - 1e-9)) + 1);
  return TsdfVolume::create(bounds.min, voxel, dims, truncation);
}

void tsdf_integrate(TsdfVolume& vol, const Image& depth, const Mask& valid, const CameraPose& pose,
                    const CameraIntrinsics& k) {
  if (!depth.same_size(valid) || depth.width != k.width || depth.height != k.height) {
    fail(ErrorCode::InvalidArgument, "tsdf_integrate: depth, mask and intrinsics differ in size");
  }
  const Mat3 r = pose.rotation_matrix();
  const Vec3 t = pose.translation;
  const double trunc = vol.truncation;
  // Slices along z are independent.
  parallel_for(static_cast<std::size_t>(vol.dims[2]), [&](std::size_t kz) {
    for (int j = 0; j < vol.dims[1]; ++j) {
      for (int i = 0; i < vol.dims[0]; ++i) {
        const Vec3 cam = r * vol.position(i, j, static_cast<int>(kz)) + t;
        if (cam.z() <= 0.0) continue;
        const double px = k.fx * cam.x() / cam.z() + k.cx;
        const double py = k.fy * cam.y() / cam.z() + k.cy;
        if (!(px >= 0.0 && py >= 0.0 && px <= k.width - 1 && py <= k.height - 1)) continue;
        const int x0 = std::min(static_cast<int>(px), k.width - 2);
        const int y0 = std::min(static_cast<int>(py), k.height - 2);
        if (x0 < 0 || y0 < 0) continue;
        if (!valid(x0, y0) || !valid(x0 + 1, y0) || !valid(x0, y0 + 1) || !valid(x0 + 1, y0 + 1)) continue;
        const double fx = px - x0, fy = py - y0;
        const double d = (1 - fx) * (1 - fy) * depth(x0, y0) + fx * (1 - fy) * depth(x0 + 1, y0) +
                         (1 - fx) * fy * depth(x0, y0 + 1) + fx * fy * depth(x0 + 1, y0 + 1);
        const double sdf = d - cam.z();
        if (sdf < -trunc) continue;
        const double value = std::min(1.0, sdf / trunc);
        const std::size_t idx = vol.index(i, j, static_cast<int>(kz));
        const double w = vol.weight[idx];
        vol.tsdf[idx] = (vol.tsdf[idx] * w + value) / (w + 1.0);
        vol.weight[idx] = w + 1.0;
      }
    }
  });
}

}  // namespace msgs
