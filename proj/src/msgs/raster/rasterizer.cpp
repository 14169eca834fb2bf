// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/raster/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "msgs/common/error.hpp"
#include "msgs/common/parallel.hpp"

namespace msgs {
namespace detail {

std::shared_ptr<RasterState> prepare(std::span<const Splat> splats, const CameraPose& pose,
                                     const CameraIntrinsics& k, const RenderSettings& s) {
  auto state = std::make_shared<RasterState>();
  const int ts = s.tile_size;
  state->tiles_x = (k.width + ts - 1) / ts;
  state->tiles_y = (k.height + ts - 1) / ts;
  state->projected.resize(splats.size());
  state->opacity.resize(splats.size());
  parallel_for(splats.size(), [&](std::size_t i) {
    state->projected[i] = project_gaussian(splats[i], pose, k, s.projection);
    state->opacity[i] = splats[i].opacity();
  });
  for (std::uint32_t i = 0; i < splats.size(); ++i) {
    if (state->projected[i]) state->order.push_back(i);
  }
  std::sort(state->order.begin(), state->order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const double za = state->projected[a]->view_z, zb = state->projected[b]->view_z;
    return za < zb || (za == zb && a < b);
  });

  state->tile_lists.assign(static_cast<std::size_t>(state->tiles_x) * state->tiles_y, {});
  for (std::uint32_t id : state->order) {
    const Projected2D& p = *state->projected[id];
    const double rx = s.support_sigma * std::sqrt(p.cov2d(0, 0));
    const double ry = s.support_sigma * std::sqrt(p.cov2d(1, 1));
    const double x0 = std::max(0.0, std::ceil(p.mu2d.x() - rx));
    const double x1 = std::min(k.width - 1.0, std::floor(p.mu2d.x() + rx));
    const double y0 = std::max(0.0, std::ceil(p.mu2d.y() - ry));
    const double y1 = std::min(k.height - 1.0, std::floor(p.mu2d.y() + ry));
    if (x0 > x1 || y0 > y1) continue;
    const int tx0 = static_cast<int>(x0) / ts, tx1 = static_cast<int>(x1) / ts;
    const int ty0 = static_cast<int>(y0) / ts, ty1 = static_cast<int>(y1) / ts;
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) state->tile_lists[static_cast<std::size_t>(ty) * state->tiles_x + tx].push_back(id);
    }
  }
  return state;
}

RenderOutput allocate_output(const CameraIntrinsics& k) {
  RenderOutput out;
  out.width = k.width;
  out.height = k.height;
  out.color = Image(k.width, k.height, 3);
  out.alpha = Image(k.width, k.height, 1);
  out.distance = Image(k.width, k.height, 1);
  out.normal = Image(k.width, k.height, 3);
  out.depth = Image(k.width, k.height, 1);
  out.depth_valid = Mask(k.width, k.height, 1, 0);
  out.contrib_count.assign(static_cast<std::size_t>(k.width) * k.height, 0);
  return out;
}

void finish_pixel(RenderOutput& out, int x, int y, const PixelSums& sums, const CameraIntrinsics& k,
                  const RenderSettings& s) {
  const double t = sums.transmittance;
  const double a = 1.0 - t;
  for (int c = 0; c < 3; ++c) out.color(x, y, c) = sums.color[c] + t * s.background[c];
  out.alpha(x, y) = a;
  const double n_len = sums.normal.norm();
  if (!(a > 0.0) || !(n_len > 0.0)) return;
  const Vec3 n = sums.normal / n_len;
  const double dist = sums.distance / a;
  for (int c = 0; c < 3; ++c) out.normal(x, y, c) = n[c];
  out.distance(x, y) = dist;
  const double den = n.dot(k.ray(x, y));
  if (std::abs(den) < s.depth_epsilon) return;
  const double depth = dist / den;
  if (!(depth > 0.0)) return;
  out.depth(x, y) = depth;
  out.depth_valid(x, y) = 1;
}

}  // namespace detail

RenderOutput render(std::span<const Splat> splats, std::span<const Vec3> toned, const CameraPose& pose,
                    const CameraIntrinsics& k, const RenderSettings& s) {
  if (toned.size() != splats.size()) fail(ErrorCode::InvalidArgument, "render: one toned color per splat required");
  RenderOutput out = detail::allocate_output(k);
  auto state = detail::prepare(splats, pose, k, s);
  const int ts = s.tile_size;
  parallel_for(state->tile_lists.size(), [&](std::size_t tile) {
    const auto& list = state->tile_lists[tile];
    const int tx = static_cast<int>(tile % state->tiles_x);
    const int ty = static_cast<int>(tile / state->tiles_x);
    const int xe = std::min(k.width, (tx + 1) * ts), ye = std::min(k.height, (ty + 1) * ts);
    for (int y = ty * ts; y < ye; ++y) {
      for (int x = tx * ts; x < xe; ++x) {
        detail::PixelSums sums;
        std::uint32_t consumed = 0;
        for (std::size_t j = 0; j < list.size(); ++j) {
          const std::uint32_t id = list[j];
          const Projected2D& p = *state->projected[id];
          const double a = detail::splat_alpha(p, state->opacity[id], x, y, s);
          consumed = static_cast<std::uint32_t>(j + 1);
          if (a == 0.0) continue;
          const double w = a * sums.transmittance;
          sums.color += w * toned[id];
          sums.distance += w * p.plane_distance;
          sums.normal += w * p.plane_normal;
          sums.transmittance *= 1.0 - a;
          if (sums.transmittance < s.min_transmittance) break;
        }
        out.contrib_count[static_cast<std::size_t>(y) * k.width + x] = consumed;
        detail::finish_pixel(out, x, y, sums, k, s);
      }
    }
  });
  out.state = std::move(state);
  return out;
}

}  // namespace msgs
