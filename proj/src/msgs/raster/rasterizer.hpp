// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "msgs/common/grid.hpp"
#include "msgs/splat/splat.hpp"

namespace msgs {

struct RenderSettings {
  Vec3 background = Vec3::Zero();
  double alpha_clamp = 0.99;
  double min_alpha = 1.0 / 255.0;
  // Blending stops once transmittance falls below this. Small enough that the
  // truncated tail stays below 1e-6 per channel for colors in [0,1].
  double min_transmittance = 1e-7;
  double support_sigma = 3.0;  // Mahalanobis radius of a splat's footprint
  int tile_size = 16;
  double depth_epsilon = 1e-6;  // |N . K^-1 p| below this marks depth invalid
  ProjectionSettings projection;
};

/// Projection and tile binning of one frame, kept for gradient replay.
struct RasterState {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::optional<Projected2D>> projected;  // per input splat, nullopt = culled
  std::vector<double> opacity;
  std::vector<std::uint32_t> order;  // visible splats sorted by (view_z, index)
  std::vector<std::vector<std::uint32_t>> tile_lists;  // per tile, sorted splat ids
};

struct RenderOutput {
  int width = 0;
  int height = 0;
  Image color;     // 3 channels, background included
  Image alpha;     // accumulated opacity 1 - T
  Image distance;  // alpha-normalized blended plane distance
  Image normal;    // 3 channels, blended then renormalized, camera space
  Image depth;     // distance / (normal . K^-1 p); 0 where invalid
  Mask depth_valid;
  std::vector<std::uint32_t> contrib_count;  // per pixel: tile-list entries consumed
  std::shared_ptr<const RasterState> state;
};

/// Tiled front-to-back alpha blending of `splats` with per-splat colors `toned`.
RenderOutput render(std::span<const Splat> splats, std::span<const Vec3> toned, const CameraPose& pose,
                    const CameraIntrinsics& k, const RenderSettings& settings = {});

/// Exhaustive per-pixel renderer: global sort, no tiles, no early termination.
/// Test oracle for `render`.
RenderOutput render_reference(std::span<const Splat> splats, std::span<const Vec3> toned,
                              const CameraPose& pose, const CameraIntrinsics& k,
                              const RenderSettings& settings = {});

/// Upstream gradients of a scalar loss with respect to rendered maps. Null
/// entries are treated as zero.
struct RenderGradInput {
  const Image* color = nullptr;   // 3 channels
  const Image* depth = nullptr;   // 1 channel, ignored where depth is invalid
  const Image* normal = nullptr;  // 3 channels
  const Image* alpha = nullptr;   // 1 channel
};

struct SplatGradient {
  Vec3 mu = Vec3::Zero();
  Vec4 rot = Vec4::Zero();
  Vec3 log_scale = Vec3::Zero();
  double opacity_logit = 0.0;
};

struct GradientBuffer {
  std::vector<SplatGradient> splat;
  std::vector<Vec3> color;   // d loss / d toned color
  std::vector<Vec2> mean2d;  // screen-space mean gradient, for densification statistics
};

/// Reverse-mode gradients of the maps produced by `render` on identical inputs.
GradientBuffer backward(const RenderOutput& output, const RenderGradInput& grads,
                        std::span<const Splat> splats, std::span<const Vec3> toned, const CameraPose& pose,
                        const CameraIntrinsics& k, const RenderSettings& settings = {});

/// D(p) = distance(p) / dot(normal(p), K^-1 p~). Pixels with a denominator below
/// `epsilon` in magnitude get depth 0 and valid = 0.
Image depth_from_plane(const Image& normal, const Image& distance, const CameraIntrinsics& k, Mask& valid,
                       double epsilon = 1e-6);

namespace detail {

/// Opacity of a projected splat at pixel (px, py); 0 outside its support.
/// Also reports the unclamped Gaussian value for the backward pass.
inline double splat_alpha(const Projected2D& p, double opacity, double px, double py,
                          const RenderSettings& s, double* gauss = nullptr, bool* clamped = nullptr) {
  const double dx = px - p.mu2d.x();
  const double dy = py - p.mu2d.y();
  const double m2 = p.conic[0] * dx * dx + 2.0 * p.conic[1] * dx * dy + p.conic[2] * dy * dy;
  if (!(m2 <= s.support_sigma * s.support_sigma)) return 0.0;
  const double g = std::exp(-0.5 * m2);
  const double a = opacity * g;
  if (a < s.min_alpha) return 0.0;
  if (gauss) *gauss = g;
  if (clamped) *clamped = a > s.alpha_clamp;
  return a > s.alpha_clamp ? s.alpha_clamp : a;
}

std::shared_ptr<RasterState> prepare(std::span<const Splat> splats, const CameraPose& pose,
                                     const CameraIntrinsics& k, const RenderSettings& settings);

/// Fills distance-derived maps (normal renormalization, alpha normalization, depth).
struct PixelSums {
  double transmittance = 1.0;
  Vec3 color = Vec3::Zero();
  double distance = 0.0;
  Vec3 normal = Vec3::Zero();
};
void finish_pixel(RenderOutput& out, int x, int y, const PixelSums& sums, const CameraIntrinsics& k,
                  const RenderSettings& s);
RenderOutput allocate_output(const CameraIntrinsics& k);

}  // namespace detail
}  // namespace msgs
