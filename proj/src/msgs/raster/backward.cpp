// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <ceres/jet.h>

#include <cmath>

#include "msgs/common/error.hpp"
#include "msgs/common/parallel.hpp"
#include "msgs/raster/rasterizer.hpp"

namespace msgs {
namespace {

/// Gradient with respect to one splat's screen-space quantities.
struct ScreenGrad {
  Vec2 mu2d = Vec2::Zero();
  Vec3 conic = Vec3::Zero();
  double opacity = 0.0;
  Vec3 normal = Vec3::Zero();
  double distance = 0.0;
  Vec3 color = Vec3::Zero();

  ScreenGrad& operator+=(const ScreenGrad& o) {
    mu2d += o.mu2d;
    conic += o.conic;
    opacity += o.opacity;
    normal += o.normal;
    distance += o.distance;
    color += o.color;
    return *this;
  }
};

struct Contribution {
  std::uint32_t slot;  // position in the tile list
  double alpha;
  double gauss;
  bool clamped;
  double transmittance;  // before this splat
};

double read_or_zero(const Image* img, int x, int y, int c) { return img ? (*img)(x, y, c) : 0.0; }

using Jet10 = ceres::Jet<double, 10>;

}  // namespace

GradientBuffer backward(const RenderOutput& output, const RenderGradInput& grads,
                        std::span<const Splat> splats, std::span<const Vec3> toned, const CameraPose& pose,
                        const CameraIntrinsics& k, const RenderSettings& s) {
  if (!output.state) fail(ErrorCode::InvalidArgument, "backward: render output carries no raster state");
  if (toned.size() != splats.size() || output.state->projected.size() != splats.size()) {
    fail(ErrorCode::InvalidArgument, "backward: inputs do not match the rendered frame");
  }
  const RasterState& state = *output.state;
  const int ts = s.tile_size;
  const std::size_t n_tiles = state.tile_lists.size();

  // Per-tile partial sums indexed by list slot; reduced below in tile order so
  // the result does not depend on scheduling.
  std::vector<std::vector<ScreenGrad>> partial(n_tiles);

  parallel_for(n_tiles, [&](std::size_t tile) {
    const auto& list = state.tile_lists[tile];
    auto& local = partial[tile];
    local.assign(list.size(), ScreenGrad{});
    if (list.empty()) return;
    const int tx = static_cast<int>(tile % state.tiles_x);
    const int ty = static_cast<int>(tile / state.tiles_x);
    const int xe = std::min(k.width, (tx + 1) * ts), ye = std::min(k.height, (ty + 1) * ts);
    std::vector<Contribution> contribs;
    for (int y = ty * ts; y < ye; ++y) {
      for (int x = tx * ts; x < xe; ++x) {
        const std::uint32_t consumed = output.contrib_count[static_cast<std::size_t>(y) * k.width + x];
        contribs.clear();
        detail::PixelSums sums;
        for (std::uint32_t j = 0; j < consumed; ++j) {
          const std::uint32_t id = list[j];
          const Projected2D& p = *state.projected[id];
          Contribution c{j, 0.0, 0.0, false, sums.transmittance};
          c.alpha = detail::splat_alpha(p, state.opacity[id], x, y, s, &c.gauss, &c.clamped);
          if (c.alpha == 0.0) continue;
          const double w = c.alpha * sums.transmittance;
          sums.color += w * toned[id];
          sums.distance += w * p.plane_distance;
          sums.normal += w * p.plane_normal;
          sums.transmittance *= 1.0 - c.alpha;
          contribs.push_back(c);
        }
        if (contribs.empty()) continue;

        // Pixel-level adjoints of the derived maps.
        const Vec3 g_color(read_or_zero(grads.color, x, y, 0), read_or_zero(grads.color, x, y, 1),
                           read_or_zero(grads.color, x, y, 2));
        Vec3 g_normal(read_or_zero(grads.normal, x, y, 0), read_or_zero(grads.normal, x, y, 1),
                      read_or_zero(grads.normal, x, y, 2));
        double g_alpha = read_or_zero(grads.alpha, x, y, 0);
        double g_dist = 0.0;
        const double t_final = sums.transmittance;
        const double a_total = 1.0 - t_final;
        const double n_len = sums.normal.norm();
        Vec3 g_sum_normal = Vec3::Zero();
        double g_sum_distance = 0.0;
        if (a_total > 0.0 && n_len > 0.0) {
          const Vec3 n = sums.normal / n_len;
          const double dist = sums.distance / a_total;
          if (grads.depth && output.depth_valid(x, y)) {
            const double g_depth = (*grads.depth)(x, y);
            const Vec3 ray = k.ray(x, y);
            const double den = n.dot(ray);
            g_dist += g_depth / den;
            g_normal -= g_depth * dist / (den * den) * ray;
          }
          g_sum_normal = (g_normal - g_normal.dot(n) * n) / n_len;
          g_sum_distance = g_dist / a_total;
          g_alpha -= g_dist * sums.distance / (a_total * a_total);
        }

        // Reverse sweep: suffix holds sum_{later} w_k G_k plus the background term.
        double suffix = t_final * g_color.dot(s.background);
        for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
          const std::uint32_t id = list[it->slot];
          const Projected2D& p = *state.projected[id];
          const double w = it->alpha * it->transmittance;
          const double gi = g_color.dot(toned[id]) + g_sum_distance * p.plane_distance +
                            g_sum_normal.dot(p.plane_normal) + g_alpha;
          const double d_alpha = it->transmittance * gi - suffix / (1.0 - it->alpha);
          suffix += w * gi;

          ScreenGrad& g = local[it->slot];
          g.color += w * g_color;
          g.distance += w * g_sum_distance;
          g.normal += w * g_sum_normal;
          if (it->clamped) continue;
          const double o = state.opacity[id];
          g.opacity += d_alpha * it->gauss;
          // alpha = o * exp(-m2 / 2)
          const double d_m2 = -0.5 * d_alpha * o * it->gauss;
          const double dx = x - p.mu2d.x(), dy = y - p.mu2d.y();
          g.mu2d.x() += d_m2 * -2.0 * (p.conic[0] * dx + p.conic[1] * dy);
          g.mu2d.y() += d_m2 * -2.0 * (p.conic[1] * dx + p.conic[2] * dy);
          g.conic += d_m2 * Vec3(dx * dx, 2.0 * dx * dy, dy * dy);
        }
      }
    }
  });

  std::vector<ScreenGrad> screen(splats.size());
  for (std::size_t tile = 0; tile < n_tiles; ++tile) {
    const auto& list = state.tile_lists[tile];
    for (std::size_t j = 0; j < list.size(); ++j) screen[list[j]] += partial[tile][j];
  }

  GradientBuffer out;
  out.splat.assign(splats.size(), SplatGradient{});
  out.color.assign(splats.size(), Vec3::Zero());
  out.mean2d.assign(splats.size(), Vec2::Zero());
  const Mat3 w = pose.rotation_matrix();
  parallel_for(splats.size(), [&](std::size_t i) {
    if (!state.projected[i]) return;
    const ScreenGrad& g = screen[i];
    out.color[i] = g.color;
    out.mean2d[i] = g.mu2d;
    const double o = state.opacity[i];
    out.splat[i].opacity_logit = g.opacity * o * (1.0 - o);

    const Splat& sp = splats[i];
    Eigen::Matrix<Jet10, 3, 1> mu, log_scale;
    Eigen::Matrix<Jet10, 4, 1> rot;
    for (int d = 0; d < 3; ++d) mu[d] = Jet10(sp.mu[d], d);
    for (int d = 0; d < 4; ++d) rot[d] = Jet10(sp.rot[d], 3 + d);
    for (int d = 0; d < 3; ++d) log_scale[d] = Jet10(sp.log_scale[d], 7 + d);
    const auto p = detail::project_core<Jet10>(mu, rot, log_scale, w, pose.translation, k, s.projection.low_pass);

    Eigen::Matrix<double, 10, 1> total = Eigen::Matrix<double, 10, 1>::Zero();
    for (int d = 0; d < 2; ++d) total += g.mu2d[d] * p.mu2d[d].v;
    for (int d = 0; d < 3; ++d) total += g.conic[d] * p.conic[d].v;
    for (int d = 0; d < 3; ++d) total += g.normal[d] * p.normal[d].v;
    total += g.distance * p.distance.v;
    out.splat[i].mu = total.segment<3>(0);
    out.splat[i].rot = total.segment<4>(3);
    out.splat[i].log_scale = total.segment<3>(7);
  });
  return out;
}

}  // namespace msgs
