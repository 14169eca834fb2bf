// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "msgs/common/error.hpp"
#include "msgs/losses/losses.hpp"
#include "synthetic.hpp"

namespace msgs {
namespace {

CameraIntrinsics square_camera(int size, double f) {
  CameraIntrinsics k;
  k.width = k.height = size;
  k.fx = k.fy = f;
  k.cx = k.cy = 0.5 * (size - 1);
  return k;
}

// Direct windowed statistics at one pixel, computed without separable blurs.
double ssim_pixel_oracle(const Image& a, const Image& b, int px, int py) {
  const int r = kSsimWindow / 2;
  double g[kSsimWindow];
  for (int i = 0; i < kSsimWindow; ++i) g[i] = std::exp(-0.5 * (i - r) * (i - r) / (kSsimSigma * kSsimSigma));
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    double wsum = 0, ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const int x = px + dx, y = py + dy;
        if (!a.contains(x, y)) continue;
        const double w = g[dx + r] * g[dy + r];
        const double va = a(x, y, c), vb = b(x, y, c);
        wsum += w;
        ma += w * va;
        mb += w * vb;
        saa += w * va * va;
        sbb += w * vb * vb;
        sab += w * va * vb;
      }
    }
    ma /= wsum;
    mb /= wsum;
    const double va = saa / wsum - ma * ma, vb = sbb / wsum - mb * mb, cab = sab / wsum - ma * mb;
    total += (2 * ma * mb + kSsimC1) * (2 * cab + kSsimC2) / ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
  }
  return total / a.channels;
}

// Central-difference check of `grad` against a scalar function of `img`.
void expect_image_gradient(Image img, const Image& grad, const std::function<double(const Image&)>& f,
                           std::mt19937_64& rng, int probes, double h, double tol) {
  std::uniform_int_distribution<std::size_t> pick(0, img.data.size() - 1);
  for (int t = 0; t < probes; ++t) {
    const std::size_t i = pick(rng);
    const double v = img.data[i];
    img.data[i] = v + h;
    const double fp = f(img);
    img.data[i] = v - h;
    const double fm = f(img);
    img.data[i] = v;
    const double numeric = (fp - fm) / (2 * h);
    EXPECT_NEAR(grad.data[i], numeric, tol * std::max(1.0, std::abs(numeric))) << "index " << i;
  }
}

// Depth of the world plane z = 0 seen through each pixel; invalid where the ray misses.
RenderOutput plane_render(const CameraPose& pose, const CameraIntrinsics& k) {
  RenderOutput r;
  r.width = k.width;
  r.height = k.height;
  r.depth = Image(k.width, k.height, 1, 0.0);
  r.depth_valid = Mask(k.width, k.height, 1, 0);
  r.normal = Image(k.width, k.height, 3, 0.0);
  const Mat3 rot = pose.rotation_matrix();
  const Vec3 c = pose.center();
  Vec3 n_cam = rot * Vec3::UnitZ();
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 ray_w = rot.transpose() * k.ray(x, y);
      if (std::abs(ray_w.z()) < 1e-12) continue;
      const double lambda = -c.z() / ray_w.z();
      if (lambda <= 0) continue;
      r.depth(x, y) = lambda;
      r.depth_valid(x, y) = 1;
      const Vec3 n = n_cam.dot(k.ray(x, y)) < 0 ? n_cam : Vec3(-n_cam);
      for (int ch = 0; ch < 3; ++ch) r.normal(x, y, ch) = n[ch];
    }
  }
  return r;
}

TEST(Ssim, IdenticalImagesGiveOne) {
  std::mt19937_64 rng(1);
  const Image a = testing::random_image(rng, 20, 16);
  const SsimResult s = ssim(a, a);
  EXPECT_NEAR(s.value, 1.0, 1e-12);
  for (double v : s.map.data) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Ssim, MatchesDirectWindowOracleIncludingBorders) {
  std::mt19937_64 rng(2);
  const Image a = testing::random_image(rng, 19, 14);
  const Image b = testing::random_image(rng, 19, 14);
  const SsimResult s = ssim(a, b);
  double mean = 0;
  for (int y = 0; y < 14; ++y) {
    for (int x = 0; x < 19; ++x) {
      const double o = ssim_pixel_oracle(a, b, x, y);
      EXPECT_NEAR(s.map(x, y), o, 1e-10) << x << "," << y;
      mean += o;
    }
  }
  EXPECT_NEAR(s.value, mean / (19 * 14), 1e-10);
}

TEST(Ssim, RejectsSmallOrMismatchedImages) {
  EXPECT_THROW(ssim(Image(10, 20, 3), Image(10, 20, 3)), Error);
  EXPECT_THROW(ssim(Image(12, 12, 3), Image(12, 13, 3)), Error);
  EXPECT_THROW(ssim(Image(12, 12, 3), Image(12, 12, 1)), Error);
}

TEST(Ssim, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const Image a = testing::random_image(rng, 14, 13);
  const Image b = testing::random_image(rng, 14, 13);
  const Image d_map = testing::random_image(rng, 14, 13, 1);
  auto f = [&](const Image& x) {
    const SsimResult s = ssim(x, b);
    double v = 0;
    for (std::size_t i = 0; i < s.map.data.size(); ++i) v += d_map.data[i] * s.map.data[i];
    return v;
  };
  expect_image_gradient(a, ssim_backward(a, b, d_map), f, rng, 80, 1e-6, 1e-6);
}

TEST(Photometric, ValueMatchesDirectFormula) {
  std::mt19937_64 rng(4);
  const Image a = testing::random_image(rng, 16, 12);
  const Image b = testing::random_image(rng, 16, 12);
  const double lambda = 0.2;
  const PhotometricResult r = photometric_loss(a, b, nullptr, lambda);
  const SsimResult s = ssim(a, b);
  double sum = 0;
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      double l1 = 0;
      for (int c = 0; c < 3; ++c) l1 += std::abs(a(x, y, c) - b(x, y, c)) / 3;
      const double pp = (1 - lambda) * l1 + lambda * (1 - s.map(x, y));
      EXPECT_NEAR(r.per_pixel(x, y), pp, 1e-12);
      sum += pp;
    }
  }
  EXPECT_EQ(r.included, 16u * 12u);
  EXPECT_NEAR(r.value, sum / (16 * 12), 1e-12);
}

TEST(Photometric, MaskedPixelsDoNotContribute) {
  std::mt19937_64 rng(5);
  Image a = testing::random_image(rng, 16, 16);
  const Image b = testing::random_image(rng, 16, 16);
  Mask m(16, 16, 1, 0);
  for (int y = 4; y < 10; ++y)
    for (int x = 3; x < 9; ++x) m(x, y) = 1;
  const PhotometricResult r = photometric_loss(a, b, &m, 0.2);
  EXPECT_EQ(r.included, 16u * 16u - 36u);
  double sum = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      if (!m(x, y)) sum += r.per_pixel(x, y);
  EXPECT_NEAR(r.value, sum / r.included, 1e-12);

  Mask all(16, 16, 1, 1);
  const PhotometricResult none = photometric_loss(a, b, &all, 0.2);
  EXPECT_EQ(none.included, 0u);
  EXPECT_EQ(none.value, 0.0);
  for (double g : none.grad.data) EXPECT_EQ(g, 0.0);
}

TEST(Photometric, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Image a = testing::random_image(rng, 13, 12);
  const Image b = testing::random_image(rng, 13, 12);
  Mask m(13, 12, 1, 0);
  for (int x = 0; x < 13; ++x) m(x, 5) = 1;
  const PhotometricResult r = photometric_loss(a, b, &m, 0.3);
  auto f = [&](const Image& x) { return photometric_loss(x, b, &m, 0.3).value; };
  // L1 has kinks at a == b; random images keep probes well away from them.
  expect_image_gradient(a, r.grad, f, rng, 80, 1e-7, 1e-5);
}

TEST(ScaleLoss, PenalizesSmallestAxis) {
  std::vector<Splat> splats(3);
  splats[0].log_scale = Vec3(std::log(0.5), std::log(0.1), std::log(0.3));
  splats[1].log_scale = Vec3(std::log(0.2), std::log(0.2), std::log(0.4));
  splats[2].log_scale = Vec3(0.0, 0.0, std::log(0.05));
  std::vector<Vec3> grad;
  const double v = scale_loss(splats, 100.0, &grad);
  EXPECT_NEAR(v, 100.0 * (0.1 + 0.2 + 0.05), 1e-12);
  EXPECT_TRUE(grad[0].isApprox(Vec3(0, 10.0, 0)));
  EXPECT_TRUE(grad[1].isApprox(Vec3(20.0, 0, 0)));  // tie: lowest index
  EXPECT_TRUE(grad[2].isApprox(Vec3(0, 0, 5.0)));

  const std::vector<Vec3> raw = {Vec3(0.3, -0.4, 0.5)};
  std::vector<Vec3> g2;
  EXPECT_NEAR(scale_loss(std::span<const Vec3>(raw), 2.0, &g2), 0.8, 1e-15);
  EXPECT_TRUE(g2[0].isApprox(Vec3(0, -2.0, 0)));
}

TEST(DepthNormals, TiltedPlaneGivesPlaneNormalFacingCamera) {
  const CameraIntrinsics k = square_camera(32, 40.0);
  const CameraPose pose = CameraPose::look_at(Vec3(0.7, -0.4, 3.0), Vec3::Zero(), Vec3::UnitY());
  const RenderOutput r = plane_render(pose, k);
  const Image n = depth_normals(r.depth, r.depth_valid, k);
  int checked = 0;
  for (int y = 1; y < 31; ++y) {
    for (int x = 1; x < 31; ++x) {
      const Vec3 got(n(x, y, 0), n(x, y, 1), n(x, y, 2));
      const Vec3 want(r.normal(x, y, 0), r.normal(x, y, 1), r.normal(x, y, 2));
      EXPECT_LT((got - want).norm(), 1e-9);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 900);
  // Border pixels lack a full neighborhood.
  EXPECT_EQ(n(0, 5, 2), 0.0);
}

TEST(SvGeo, ZeroOnConsistentPlaneAndRespectsMask) {
  const CameraIntrinsics k = square_camera(24, 30.0);
  const CameraPose pose = CameraPose::look_at(Vec3(0.5, 0.5, 3.0), Vec3::Zero(), Vec3::UnitY());
  const RenderOutput r = plane_render(pose, k);
  const GeometryLossResult g = svgeo_loss(r, k);
  EXPECT_EQ(g.count, 22u * 22u);
  EXPECT_LT(g.value, 1e-8);

  Mask m(24, 24, 1, 0);
  m(5, 5) = 1;
  m(10, 12) = 1;
  EXPECT_EQ(svgeo_loss(r, k, &m).count, 22u * 22u - 2u);
  EXPECT_THROW(svgeo_loss(r, k, &static_cast<const Mask&>(Mask(5, 5, 1, 0))), Error);
}

TEST(SvGeo, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  const CameraIntrinsics k = square_camera(12, 15.0);
  const CameraPose pose = CameraPose::look_at(Vec3(0.5, 0.5, 3.0), Vec3::Zero(), Vec3::UnitY());
  RenderOutput r = plane_render(pose, k);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (double& d : r.depth.data) d += noise(rng);
  for (double& v : r.normal.data) v += noise(rng);
  const GeometryLossResult g = svgeo_loss(r, k);
  auto f_depth = [&](const Image& d) {
    RenderOutput c = r;
    c.depth = d;
    return svgeo_loss(c, k).value;
  };
  auto f_normal = [&](const Image& n) {
    RenderOutput c = r;
    c.normal = n;
    return svgeo_loss(c, k).value;
  };
  expect_image_gradient(r.depth, g.d_depth, f_depth, rng, 60, 1e-6, 1e-5);
  expect_image_gradient(r.normal, g.d_normal, f_normal, rng, 60, 1e-6, 1e-5);
}

TEST(Homography, MapsPlanePointsBetweenViews) {
  const CameraIntrinsics k = square_camera(64, 70.0);
  const CameraPose ref = CameraPose::look_at(Vec3(0.2, -0.3, 3.0), Vec3::Zero(), Vec3::UnitY());
  const CameraPose nbr = CameraPose::look_at(Vec3(-0.5, 0.4, 3.2), Vec3(0.1, 0, 0), Vec3::UnitY());
  // World plane z = 0.1 in ref camera coordinates: n.X = d.
  const Vec3 n = ref.rotation_matrix() * Vec3::UnitZ();
  const double d = n.dot(ref.to_camera(Vec3(0, 0, 0.1)));
  const auto h = homography_for_patch(ref, nbr, k, n, d);
  ASSERT_TRUE(h.has_value());
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 20; ++t) {
    const Vec3 world(u(rng), u(rng), 0.1);
    const Vec2 p = k.project(ref.to_camera(world));
    const Vec2 q = k.project(nbr.to_camera(world));
    const Vec3 w = *h * Vec3(p.x(), p.y(), 1.0);
    EXPECT_LT((w.head<2>() / w.z() - q).norm(), 1e-9);
  }
  EXPECT_FALSE(homography_for_patch(ref, nbr, k, n, 1e-8).has_value());
  // Identical poses give the identity for any plane.
  const auto same = homography_for_patch(ref, ref, k, n, 2.0);
  EXPECT_LT((*same - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ncc, PatchCentersStayInside) {
  const auto c = ncc_patch_centers(20, 15, 7, 4);
  for (const auto& [x, y] : c) {
    EXPECT_GE(x - 3, 0);
    EXPECT_GE(y - 3, 0);
    EXPECT_LT(x + 3, 20);
    EXPECT_LT(y + 3, 15);
  }
  // x in {3,7,11,15}, y in {3,7,11}.
  EXPECT_EQ(c.size(), 12u);
  EXPECT_THROW(ncc_patch_centers(20, 15, 7, 0), Error);
}

TEST(Ncc, ZeroForIdenticalAndAffineBrightness) {
  std::mt19937_64 rng(11);
  const Image a = testing::random_image(rng, 20, 20, 1);
  Image b = a;
  for (double& v : b.data) v = 0.5 * v + 0.2;
  std::vector<NccPatch> patches;
  for (const auto& [x, y] : ncc_patch_centers(20, 20)) patches.push_back({x, y, Mat3::Identity()});
  const NccResult same = mv_photometric_ncc(a, a, patches);
  EXPECT_EQ(same.count, patches.size());
  EXPECT_NEAR(same.value, 0.0, 1e-12);
  EXPECT_NEAR(mv_photometric_ncc(a, b, patches).value, 0.0, 1e-12);
  // Contrast inversion gives NCC = -1 per patch.
  Image inv = a;
  for (double& v : inv.data) v = 1.0 - v;
  EXPECT_NEAR(mv_photometric_ncc(a, inv, patches).value, 2.0 * patches.size(), 1e-10);
}

TEST(Ncc, SkipsOutOfBoundsAndFlatPatches) {
  std::mt19937_64 rng(12);
  const Image a = testing::random_image(rng, 20, 20, 1);
  Mat3 shift = Mat3::Identity();
  shift(0, 2) = 15.0;
  std::vector<NccPatch> patches = {{3, 3, shift}, {10, 10, Mat3::Identity()}};
  EXPECT_EQ(mv_photometric_ncc(a, a, patches).count, 1u);
  const Image flat(20, 20, 1, 0.4);
  EXPECT_EQ(mv_photometric_ncc(flat, a, patches).count, 0u);
  EXPECT_THROW(mv_photometric_ncc(a, a, patches, 6), Error);
}

TEST(Ncc, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  const Image a = testing::random_image(rng, 24, 24, 1);
  const Image b = testing::random_image(rng, 24, 24, 1);
  Mat3 h = Mat3::Identity();
  h(0, 0) = 1.05;
  h(0, 2) = -0.7;
  h(1, 2) = 0.4;
  std::vector<NccPatch> patches;
  for (const auto& [x, y] : ncc_patch_centers(24, 24, 7, 3)) patches.push_back({x, y, h});
  const NccResult r = mv_photometric_ncc(a, b, patches);
  ASSERT_GT(r.count, 10u);
  auto f = [&](const Image& x) { return mv_photometric_ncc(x, b, patches).value; };
  expect_image_gradient(a, r.d_ref, f, rng, 80, 1e-6, 1e-6);
}

TEST(Gray, UsesLumaWeights) {
  Image rgb(1, 1, 3);
  rgb.data = {1.0, 0.5, 0.25};
  EXPECT_NEAR(to_gray(rgb).data[0], 0.299 + 0.2935 + 0.0285, 1e-15);
  EXPECT_THROW(to_gray(Image(2, 2, 1)), Error);
}

TEST(Bilinear, InterpolatesAndRejectsOutside) {
  Image img(3, 2, 1);
  img.data = {0, 1, 2, 10, 11, 12};
  EXPECT_DOUBLE_EQ(*sample_bilinear(img, 1, 1), 11);
  EXPECT_DOUBLE_EQ(*sample_bilinear(img, 0.5, 0.5), 5.5);
  EXPECT_DOUBLE_EQ(*sample_bilinear(img, 2, 1), 12);
  EXPECT_DOUBLE_EQ(*sample_bilinear(img, 1.25, 0.0), 1.25);
  EXPECT_FALSE(sample_bilinear(img, -0.01, 0.5).has_value());
  EXPECT_FALSE(sample_bilinear(img, 2.01, 0.5).has_value());
  EXPECT_FALSE(sample_bilinear(img, 1, 1.5).has_value());
}

TEST(MvGeometric, NearZeroForConsistentPlaneDepths) {
  const CameraIntrinsics k = square_camera(48, 50.0);
  const CameraPose ref = CameraPose::look_at(Vec3(0.2, -0.3, 3.0), Vec3::Zero(), Vec3::UnitY());
  const CameraPose nbr = CameraPose::look_at(Vec3(-0.3, 0.2, 3.1), Vec3::Zero(), Vec3::UnitY());
  const RenderOutput a = plane_render(ref, k), b = plane_render(nbr, k);
  const GeometryLossResult g = mv_geometric(a, b, ref, nbr, k);
  ASSERT_GT(g.count, 1000u);
  // Depth is interpolated bilinearly, which is exact only for inverse depth.
  EXPECT_LT(g.value / g.count, 1e-3);

  RenderOutput wrong = b;
  for (double& d : wrong.depth.data) d *= 1.05;
  const GeometryLossResult bad = mv_geometric(a, wrong, ref, nbr, k, 1e9);
  EXPECT_GT(bad.value / bad.count, 0.1);
}

TEST(MvGeometric, GateDropsLargeResiduals) {
  const CameraIntrinsics k = square_camera(32, 40.0);
  const CameraPose ref = CameraPose::look_at(Vec3(0.2, -0.3, 3.0), Vec3::Zero(), Vec3::UnitY());
  const CameraPose nbr = CameraPose::look_at(Vec3(-0.3, 0.2, 3.1), Vec3::Zero(), Vec3::UnitY());
  const RenderOutput a = plane_render(ref, k);
  RenderOutput b = plane_render(nbr, k);
  for (double& d : b.depth.data) d *= 1.3;
  const GeometryLossResult open = mv_geometric(a, b, ref, nbr, k, 1e9);
  const GeometryLossResult gated = mv_geometric(a, b, ref, nbr, k, 0.5);
  EXPECT_LT(gated.count, open.count);
  EXPECT_LE(gated.value, 0.5 * gated.count + 1e-12);
}

TEST(MvGeometric, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(14);
  const CameraIntrinsics k = square_camera(16, 20.0);
  const CameraPose ref = CameraPose::look_at(Vec3(0.2, -0.3, 3.0), Vec3::Zero(), Vec3::UnitY());
  const CameraPose nbr = CameraPose::look_at(Vec3(-0.3, 0.2, 3.1), Vec3::Zero(), Vec3::UnitY());
  RenderOutput a = plane_render(ref, k), b = plane_render(nbr, k);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (double& d : a.depth.data) d += noise(rng);
  for (double& d : b.depth.data) d += noise(rng);
  const GeometryLossResult g = mv_geometric(a, b, ref, nbr, k, 1e9);
  ASSERT_GT(g.count, 50u);
  // Small steps keep bilinear cells fixed; a probe that crosses a cell
  // boundary would show up as a large mismatch.
  auto f_ref = [&](const Image& d) {
    RenderOutput c = a;
    c.depth = d;
    return mv_geometric(c, b, ref, nbr, k, 1e9).value;
  };
  auto f_nbr = [&](const Image& d) {
    RenderOutput c = b;
    c.depth = d;
    return mv_geometric(a, c, ref, nbr, k, 1e9).value;
  };
  expect_image_gradient(a.depth, g.d_depth, f_ref, rng, 60, 1e-7, 1e-4);
  expect_image_gradient(b.depth, g.d_depth_other, f_nbr, rng, 60, 1e-7, 1e-4);
}

}  // namespace
}  // namespace msgs
