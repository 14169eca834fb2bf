// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "msgs/common/grid.hpp"
#include "msgs/raster/rasterizer.hpp"
#include "msgs/splat/splat.hpp"

namespace msgs {

struct LossWeights {
  double lambda_pho = 0.2;
  double lambda_s = 100.0;
  double lambda_a = 0.01;  // multi-view geometric
  double lambda_b = 0.2;   // multi-view photometric
  double lambda_c = 0.05;  // single-view normal

  void validate() const;
};

// ---- SSIM ----------------------------------------------------------------

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

struct SsimResult {
  double value = 0.0;  // mean of `map`
  Image map;           // per pixel, averaged over channels
};

/// Gaussian-windowed SSIM. Near the border the window is truncated to the image
/// and renormalized. Throws InvalidArgument for images smaller than the window.
SsimResult ssim(const Image& a, const Image& b);

/// Gradient with respect to `a` of sum_p d_map(p) * map(p).
Image ssim_backward(const Image& a, const Image& b, const Image& d_map);

// ---- photometric ---------------------------------------------------------

struct PhotometricResult {
  double value = 0.0;
  Image grad;       // d value / d rendered, same shape as the images
  Image per_pixel;  // (1-l)*L1 + l*(1-SSIM) for every pixel, mask ignored
  std::size_t included = 0;
};

/// (1-lambda)*L1 + lambda*(1-SSIM), averaged over pixels whose transient mask is 0.
/// `transient` may be null (every pixel included).
PhotometricResult photometric_loss(const Image& rendered, const Image& target, const Mask* transient,
                                   double lambda_pho);

// ---- scale ---------------------------------------------------------------

/// sum_i lambda_s * |min_k s_ik|; gradients go to the smallest axis, lowest index on ties.
double scale_loss(std::span<const Splat> splats, double lambda_s, std::vector<Vec3>* d_log_scale = nullptr);
double scale_loss(std::span<const Vec3> scales, double lambda_s, std::vector<Vec3>* d_scale = nullptr);

// ---- single-view geometry ------------------------------------------------

struct GeometryLossResult {
  double value = 0.0;  // sum over contributing pixels
  std::size_t count = 0;
  Image d_normal;  // 3 channels
  Image d_depth;   // 1 channel
  Image d_depth_other;  // two-view losses only: gradient for the neighbor depth
};

/// Normal from depth: N_d = normalize(dY x dX) where dX, dY are central
/// differences of the unprojected 4-neighborhood. Loss = sum ||N_d - N||.
/// Pixels with a transient mask value of 1 are skipped.
GeometryLossResult svgeo_loss(const RenderOutput& render, const CameraIntrinsics& k,
                              const Mask* transient = nullptr);

/// Normal map implied by a depth map; zero where the 4-neighborhood is incomplete.
Image depth_normals(const Image& depth, const Mask& valid, const CameraIntrinsics& k);

// ---- multi-view ----------------------------------------------------------

/// Plane-induced homography from reference pixels to neighbor pixels for the
/// plane {X : n.X = d} in reference camera coordinates. nullopt when |d| < 1e-6.
std::optional<Mat3> homography_for_patch(const CameraPose& ref_pose, const CameraPose& nbr_pose,
                                         const CameraIntrinsics& k, const Vec3& plane_normal,
                                         double plane_distance);

struct NccPatch {
  int cx = 0;  // patch center in the reference image
  int cy = 0;
  Mat3 h = Mat3::Identity();
};

struct NccResult {
  double value = 0.0;  // sum over used patches of (1 - NCC)
  std::size_t count = 0;
  Image d_ref;  // 1 channel
};

/// Patch-based NCC loss. Patches whose warped footprint leaves the neighbor
/// image, or that have zero variance, are skipped.
NccResult mv_photometric_ncc(const Image& ref_gray, const Image& nbr_gray, std::span<const NccPatch> patches,
                             int patch_size = 7);

/// Patch centers on a regular grid with the given stride, fully inside the image.
std::vector<std::pair<int, int>> ncc_patch_centers(int width, int height, int patch_size = 7, int stride = 4);

/// 0.299 R + 0.587 G + 0.114 B.
Image to_gray(const Image& rgb);

/// Forward/backward reprojection error. value = sum of phi(p) over pixels with a
/// valid round trip and phi <= gate; d_depth is for ref, d_depth_other for nbr.
GeometryLossResult mv_geometric(const RenderOutput& ref, const RenderOutput& nbr, const CameraPose& ref_pose,
                                const CameraPose& nbr_pose, const CameraIntrinsics& k, double gate = 1.0);

/// Bilinear sample of channel `c`; nullopt when (x, y) is outside [0, w-1] x [0, h-1].
std::optional<double> sample_bilinear(const Image& img, double x, double y, int c = 0);

}  // namespace msgs
