// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/common/error.hpp"
#include "msgs/raster/rasterizer.hpp"

namespace msgs {

RenderOutput render_reference(std::span<const Splat> splats, std::span<const Vec3> toned,
                              const CameraPose& pose, const CameraIntrinsics& k, const RenderSettings& s) {
  if (toned.size() != splats.size()) fail(ErrorCode::InvalidArgument, "render: one toned color per splat required");
  RenderOutput out = detail::allocate_output(k);

  std::vector<std::optional<Projected2D>> projected(splats.size());
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < splats.size(); ++i) {
    projected[i] = project_gaussian(splats[i], pose, k, s.projection);
    if (projected[i]) order.push_back(i);
  }
  // Insertion sort by (depth, index): slow, obviously correct.
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      const auto a = order[j - 1], b = order[j];
      const double za = projected[a]->view_z, zb = projected[b]->view_z;
      if (za < zb || (za == zb && a < b)) break;
      std::swap(order[j - 1], order[j]);
    }
  }

  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      detail::PixelSums sums;
      for (std::size_t id : order) {
        const double a = detail::splat_alpha(*projected[id], splats[id].opacity(), x, y, s);
        if (a == 0.0) continue;
        const double w = a * sums.transmittance;
        sums.color += w * toned[id];
        sums.distance += w * projected[id]->plane_distance;
        sums.normal += w * projected[id]->plane_normal;
        sums.transmittance *= 1.0 - a;
      }
      detail::finish_pixel(out, x, y, sums, k, s);
    }
  }
  return out;
}

}  // namespace msgs
