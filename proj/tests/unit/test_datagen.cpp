// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "msgs/common/error.hpp"
#include "msgs/datagen/datagen.hpp"
#include "synthetic.hpp"

namespace msgs {
namespace {

constexpr double kPi = std::numbers::pi;

CameraIntrinsics camera(int w, int h, double f) {
  CameraIntrinsics k;
  k.width = w;
  k.height = h;
  k.fx = k.fy = f;
  k.cx = 0.5 * (w - 1);
  k.cy = 0.5 * (h - 1);
  return k;
}

Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Mesh quad(double size) {
  Mesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(size, 0, 0), Vec3(size, size, 0), Vec3(0, size, 0)};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  m.compute_normals();
  return m;
}

TEST(Euler, BlenderOrderIsZYX) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 20; ++t) {
    const Vec3 e(u(rng), u(rng), u(rng));
    const Mat3 want = rot_z(e.z()) * rot_y(e.y()) * rot_x(e.x());
    EXPECT_LT((blender_euler_matrix(e) - want).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Euler, CameraConventions) {
  // Zero rotation: the camera looks straight down with world +y at the image top.
  const CameraPose p = blender_camera_pose(Vec3(1, 2, 10), Vec3::Zero());
  EXPECT_LT((p.to_camera(Vec3(1, 2, 0)) - Vec3(0, 0, 10)).norm(), 1e-12);
  EXPECT_LT(p.to_camera(Vec3(1, 3, 0)).y(), 0.0);
  EXPECT_GT(p.to_camera(Vec3(2, 2, 0)).x(), 0.0);
  EXPECT_LT((p.center() - Vec3(1, 2, 10)).norm(), 1e-12);
  // look_at_euler aims the optical axis at the target.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 20; ++t) {
    const Vec3 eye(u(rng), u(rng), 3 + std::abs(u(rng))), target(u(rng), u(rng), 0);
    const CameraPose q = blender_camera_pose(eye, look_at_euler(eye, target));
    const Vec3 c = q.to_camera(target);
    EXPECT_NEAR(c.x(), 0.0, 1e-9);
    EXPECT_NEAR(c.y(), 0.0, 1e-9);
    EXPECT_NEAR(c.z(), (target - eye).norm(), 1e-9);
  }
}

TEST(Trajectory, OrbitIsExactWithoutNoise) {
  TrajectorySpec s;
  s.kind = TrajectoryKind::Orbit;
  s.orbit_radius = 4.0;
  s.base_t = Vec3(0, 0, 7.0);
  s.center = Vec3(1.5, -2.0, 0.3);
  s.frames = 90;
  const auto frames = gen_trajectory(s, 3);
  ASSERT_EQ(frames.size(), 90u);
  EXPECT_LT((frames[0].location - Vec3(5.5, -2.0, 7.3)).norm(), 1e-12);
  const double want = std::sqrt(16.0 + 49.0);
  for (const auto& f : frames) {
    EXPECT_NEAR((f.pose.center() - s.center).norm(), want, 1e-9);
    const Vec3 c = f.pose.to_camera(s.center);
    EXPECT_NEAR(c.x(), 0.0, 1e-9);
    EXPECT_NEAR(c.y(), 0.0, 1e-9);
  }
}

TEST(Trajectory, YawCoversTheCircleUniformly) {
  TrajectorySpec s;
  s.kind = TrajectoryKind::Yaw;
  s.frames = 4;
  const auto four = gen_trajectory(s, 0);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(four[k].euler.z(), k * kPi / 2, 1e-15);
  s.frames = 360;
  const auto many = gen_trajectory(s, 0);
  for (int k = 0; k < 360; ++k) {
    EXPECT_GE(many[k].euler.z(), 0.0);
    EXPECT_LT(many[k].euler.z(), 2 * kPi);
    if (k) EXPECT_NEAR(many[k].euler.z() - many[k - 1].euler.z(), 2 * kPi / 360, 1e-12);
  }
}

TEST(Trajectory, TranslationalAndAltitudeAreLinear) {
  TrajectorySpec s;
  s.kind = TrajectoryKind::Translational;
  s.direction = Vec3(0, 2, 0);
  s.span = 6.0;
  s.frames = 4;
  const auto t = gen_trajectory(s, 0);
  for (int k = 0; k < 4; ++k) EXPECT_LT((t[k].location - (s.base_t + Vec3(0, 2.0 * k, 0))).norm(), 1e-12);
  s.kind = TrajectoryKind::Altitude;
  s.z_min = 5;
  s.z_max = 20;
  const auto a = gen_trajectory(s, 0);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(a[k].location.z(), 5.0 + 5.0 * k, 1e-12);
}

TEST(Trajectory, NoiseStatisticsMatchSigma) {
  TrajectorySpec s;
  s.kind = TrajectoryKind::Translational;
  s.frames = 10000;
  s.noise_sigma_t = Vec3(0.1, 0.2, 0.05);
  s.noise_sigma_r = Vec3(0.01, 0.02, 0.03);
  const auto noisy = gen_trajectory(s, 42);
  TrajectorySpec clean = s;
  clean.noise_sigma_t = clean.noise_sigma_r = Vec3::Zero();
  const auto base = gen_trajectory(clean, 42);
  for (int a = 0; a < 3; ++a) {
    double mt = 0, vt = 0, mr = 0, vr = 0;
    for (int k = 0; k < s.frames; ++k) {
      mt += noisy[k].location[a] - base[k].location[a];
      mr += noisy[k].euler[a] - base[k].euler[a];
    }
    mt /= s.frames;
    mr /= s.frames;
    for (int k = 0; k < s.frames; ++k) {
      vt += std::pow(noisy[k].location[a] - base[k].location[a] - mt, 2);
      vr += std::pow(noisy[k].euler[a] - base[k].euler[a] - mr, 2);
    }
    vt /= s.frames - 1;
    vr /= s.frames - 1;
    EXPECT_NEAR(vt, std::pow(s.noise_sigma_t[a], 2), 0.05 * std::pow(s.noise_sigma_t[a], 2));
    EXPECT_NEAR(vr, std::pow(s.noise_sigma_r[a], 2), 0.05 * std::pow(s.noise_sigma_r[a], 2));
    EXPECT_LT(std::abs(mt), 4 * s.noise_sigma_t[a] / 100);
  }
}

TEST(Trajectory, DeterministicAndValidated) {
  TrajectorySpec s;
  s.noise_sigma_t = Vec3::Constant(0.3);
  const auto a = gen_trajectory(s, 9), b = gen_trajectory(s, 9), c = gen_trajectory(s, 10);
  EXPECT_EQ(trajectory_to_jsonl(a), trajectory_to_jsonl(b));
  EXPECT_NE(trajectory_to_jsonl(a), trajectory_to_jsonl(c));
  s.frames = 0;
  EXPECT_THROW(gen_trajectory(s, 0), Error);
  s.frames = 3;
  s.orbit_radius = 0;
  EXPECT_THROW(gen_trajectory(s, 0), Error);
  EXPECT_THROW(parse_trajectory_kind("spiral"), Error);
  for (auto k : {TrajectoryKind::Translational, TrajectoryKind::Yaw, TrajectoryKind::Orbit, TrajectoryKind::Altitude})
    EXPECT_EQ(parse_trajectory_kind(to_string(k)), k);
}

TEST(Trajectory, JsonlRoundTrip) {
  TrajectorySpec s;
  s.frames = 7;
  s.noise_sigma_r = Vec3::Constant(0.05);
  const auto frames = gen_trajectory(s, 5);
  const std::string text = trajectory_to_jsonl(frames);
  const auto back = trajectory_from_jsonl(text);
  ASSERT_EQ(back.size(), 7u);
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(back[i].index, i);
    EXPECT_EQ(back[i].pose.translation, frames[i].pose.translation);
    EXPECT_EQ(back[i].pose.rotation.coeffs(), frames[i].pose.rotation.coeffs());
    EXPECT_EQ(back[i].euler, frames[i].euler);
  }
  EXPECT_EQ(trajectory_to_jsonl(back), text);
  // Minimal lines carry only frame, quaternion and translation.
  const auto minimal = trajectory_from_jsonl("{\"frame\":0,\"quaternion\":[1,0,0,0],\"translation\":[0,0,5]}\n\n");
  ASSERT_EQ(minimal.size(), 1u);
  EXPECT_LT((minimal[0].location - Vec3(0, 0, -5)).norm(), 1e-15);
  EXPECT_THROW(trajectory_from_jsonl("{\"frame\":0}\n"), Error);
  EXPECT_THROW(trajectory_from_jsonl("not json\n"), Error);
}

TEST(Actors, CenterIsTheMean) {
  std::vector<ActorPlacement> one = {{0, Vec3(1, 2, 3)}};
  EXPECT_EQ(actor_center(one), Vec3(1, 2, 3));
  std::vector<ActorPlacement> sym = {{0, Vec3(1, -2, 3)}, {1, Vec3(-1, 2, -3)}};
  EXPECT_EQ(actor_center(sym), Vec3::Zero());
  EXPECT_THROW(actor_center({}), Error);
}

TEST(Actors, CountIsBetweenTenAndFifteen) {
  std::mt19937_64 rng(3);
  std::set<int> seen;
  for (int i = 0; i < 500; ++i) {
    const int n = sample_actor_count(rng);
    EXPECT_GE(n, 10);
    EXPECT_LE(n, 15);
    seen.insert(n);
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Actors, PlacementOnQuadRespectsSpacing) {
  const Mesh m = quad(10.0);
  const std::vector<int> faces = {0, 1};
  const auto single = place_actors_on_faces(m, faces, 1, 0.0, 1);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_GE(single[0].position.x(), 0.0);
  EXPECT_LE(single[0].position.x(), 10.0);
  EXPECT_EQ(single[0].position.z(), 0.0);

  const auto ten = place_actors_on_faces(m, faces, 12, 1.5, 7);
  ASSERT_EQ(ten.size(), 12u);
  for (std::size_t i = 0; i < ten.size(); ++i) {
    EXPECT_EQ(ten[i].actor_id, static_cast<int>(i));
    EXPECT_GE(ten[i].heading, 0.0);
    EXPECT_LT(ten[i].heading, 2 * kPi);
    EXPECT_EQ(ten[i].scale, 0.135);
    for (std::size_t j = 0; j < i; ++j) EXPECT_GE((ten[i].position - ten[j].position).norm(), 1.5);
  }
  EXPECT_EQ(placements_to_jsonl(place_actors_on_faces(m, faces, 12, 1.5, 7)), placements_to_jsonl(ten));

  try {
    place_actors_on_faces(m, faces, 50, 5.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("placed only"), std::string::npos);
  }
  Mesh flat;
  flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  flat.faces = {{0, 1, 2}};
  EXPECT_THROW(place_actors_on_faces(flat, std::vector<int>{0}, 1, 0.0, 1), Error);
}

TEST(Actors, AreaWeightedSampling) {
  // Face 0 has three times the area of face 1.
  Mesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(3, 0, 0), Vec3(0, 1, 0), Vec3(10, 0, 0), Vec3(11, 0, 0), Vec3(10, 1, 0)};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  int on_big = 0;
  const int n = 4000;
  const auto p = place_actors_on_faces(m, std::vector<int>{0, 1}, n, 0.0, 4);
  for (const auto& a : p) on_big += a.face == 0;
  EXPECT_NEAR(on_big / double(n), 0.75, 0.03);
}

TEST(Actors, PlaceUsesFacesVisibleFromEveryPose) {
  const Mesh m = quad(4.0);
  const CameraIntrinsics k = camera(64, 48, 40.0);
  std::vector<CameraPose> poses = {blender_camera_pose(Vec3(2, 2, 8), Vec3::Zero()),
                                   blender_camera_pose(Vec3(2.5, 2, 8), Vec3::Zero())};
  const auto placed = place_actors(m, poses, k, 3, 0.5, 2);
  EXPECT_EQ(placed.size(), 3u);
  std::vector<CameraPose> below = {blender_camera_pose(Vec3(2, 2, -8), Vec3(kPi, 0, 0))};
  EXPECT_THROW(place_actors(m, below, k, 3, 0.5, 2), Error);
}

TEST(Actors, JsonlRoundTrip) {
  const auto p = place_actors_on_faces(quad(5.0), std::vector<int>{0, 1}, 5, 0.5, 3, 0.195);
  const auto back = placements_from_jsonl(placements_to_jsonl(p));
  ASSERT_EQ(back.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(back[i].position, p[i].position);
    EXPECT_EQ(back[i].heading, p[i].heading);
    EXPECT_EQ(back[i].scale, 0.195);
    EXPECT_EQ(back[i].face, p[i].face);
  }
  EXPECT_THROW(placements_from_jsonl("{\"position\":[0,0,0]}\n"), Error);
}

TEST(Composite, KernelSumsToOne) {
  for (double sigma : {0.0, 0.3, 1.0, 2.5, 7.2}) {
    const auto taps = gaussian_kernel(sigma);
    double sum = 0;
    for (double t : taps) sum += t;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(taps.size(), sigma == 0 ? 1u : 2 * static_cast<std::size_t>(std::ceil(3 * sigma)) + 1);
    for (std::size_t i = 0; i < taps.size(); ++i) EXPECT_EQ(taps[i], taps[taps.size() - 1 - i]);
  }
  EXPECT_THROW(gaussian_kernel(-1.0), Error);
}

TEST(Composite, BlurPreservesConstantsAndInteriorMean) {
  Image c(20, 15, 3, 0.3);
  for (double v : gaussian_blur(c, 2.0).data) EXPECT_NEAR(v, 0.3, 1e-12);
  std::mt19937_64 rng(5);
  Image img(40, 40, 1, 0.0);
  img(20, 20) = 1.0;  // impulse far from the border
  const Image b = gaussian_blur(img, 1.5);
  double sum = 0;
  for (double v : b.data) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Composite, AlphaIdentities) {
  std::mt19937_64 rng(6);
  Image fg = testing::random_image(rng, 17, 11, 4);
  const Image bg = testing::random_image(rng, 17, 11, 3);
  for (std::size_t i = 0; i < fg.pixel_count(); ++i) fg.data[4 * i + 3] = 1.0;
  const Image all_fg = composite(fg, bg);
  for (std::size_t i = 0; i < fg.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(all_fg.data[3 * i + c], fg.data[4 * i + c]);
  for (std::size_t i = 0; i < fg.pixel_count(); ++i) fg.data[4 * i + 3] = 0.0;
  CompositeSettings blur;
  blur.blur_sigma = 2.0;
  for (const auto& s : {CompositeSettings{}, blur}) EXPECT_EQ(composite(fg, bg, s), bg);

  Image half(9, 9, 4, 1.0);
  for (std::size_t i = 0; i < half.pixel_count(); ++i) half.data[4 * i + 3] = 0.5;
  for (double v : composite(half, Image(9, 9, 3, 0.0), blur).data) EXPECT_NEAR(v, 0.5, 1e-12);
}

TEST(Composite, MatteIsNotBlurredUnlessAsked) {
  Image fg(21, 21, 4, 0.0);
  for (int y = 8; y < 13; ++y)
    for (int x = 8; x < 13; ++x) {
      for (int c = 0; c < 3; ++c) fg(x, y, c) = 1.0;
      fg(x, y, 3) = 1.0;
    }
  const Image bg(21, 21, 3, 0.2);
  CompositeSettings s;
  s.blur_sigma = 1.0;
  const Image sharp = composite(fg, bg, s);
  EXPECT_EQ(sharp(5, 10, 0), 0.2);  // outside the matte: background only
  EXPECT_LT(sharp(8, 10, 0), 1.0);  // blurred color at the matte edge
  s.blur_alpha = true;
  EXPECT_GT(composite(fg, bg, s)(7, 10, 0), 0.2);
  s.premultiplied = true;
  s.blur_sigma = 0.0;
  s.blur_alpha = false;
  const Image pm = composite(fg, bg, s);
  EXPECT_EQ(pm(10, 10, 0), 1.0);
  EXPECT_THROW(composite(Image(4, 4, 3), bg), Error);
  EXPECT_THROW(composite(Image(4, 4, 4), bg), Error);
}

TEST(Annotations, ParseBackToGeneratingBoxes) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 600);
  std::vector<Box> boxes;
  for (int i = 0; i < 30; ++i) {
    const double x0 = u(rng), y0 = u(rng) * 0.7;
    boxes.push_back({i % 3, x0, y0, x0 + 1 + u(rng) / 10, y0 + 1 + u(rng) / 10});
  }
  const auto back = parse_annotations(format_annotations(boxes, 640, 480), 640, 480);
  ASSERT_EQ(back.size(), boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    EXPECT_EQ(back[i].cls, boxes[i].cls);
    EXPECT_NEAR(back[i].xmin, boxes[i].xmin, 1e-9);
    EXPECT_NEAR(back[i].ymin, boxes[i].ymin, 1e-9);
    EXPECT_NEAR(back[i].xmax, boxes[i].xmax, 1e-9);
    EXPECT_NEAR(back[i].ymax, boxes[i].ymax, 1e-9);
  }
  const auto pix = parse_boxes(format_boxes(boxes));
  for (std::size_t i = 0; i < boxes.size(); ++i) EXPECT_EQ(pix[i].xmax, boxes[i].xmax);
  EXPECT_EQ(format_annotations(std::vector<Box>{{2, 10, 20, 30, 60}}, 100, 200), "2 0.2 0.2 0.2 0.2\n");
  EXPECT_THROW(parse_annotations("0 0.5 0.5 0.1\n", 10, 10), Error);
  EXPECT_THROW(parse_annotations("x 0.5 0.5 0.1 0.1\n", 10, 10), Error);
  EXPECT_THROW(format_annotations(boxes, 0, 10), Error);
}

TEST(Billboards, BoxesEncloseRenderedActors) {
  const CameraIntrinsics k = camera(96, 72, 80.0);
  const CameraPose pose = blender_camera_pose(Vec3(0, -6, 4), look_at_euler(Vec3(0, -6, 4), Vec3::Zero()));
  std::vector<ActorPlacement> actors = {{0, Vec3(-1, 0, 0)}, {1, Vec3(1.2, 0.5, 0)}};
  const BillboardFrame f = render_billboards(actors, pose, k);
  ASSERT_EQ(f.boxes.size(), 2u);
  int covered = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      if (f.rgba(x, y, 3) == 0.0) continue;
      ++covered;
      bool inside = false;
      for (const Box& b : f.boxes)
        inside |= x + 0.5 >= b.xmin - 1e-9 && x + 0.5 <= b.xmax + 1e-9 && y + 0.5 >= b.ymin - 1e-9 &&
                  y + 0.5 <= b.ymax + 1e-9;
      EXPECT_TRUE(inside) << x << "," << y;
    }
  }
  EXPECT_GT(covered, 50);
  // Actors behind the camera produce neither pixels nor boxes.
  std::vector<ActorPlacement> behind = {{0, Vec3(0, -12, 4)}};
  const BillboardFrame none = render_billboards(behind, pose, k);
  EXPECT_TRUE(none.boxes.empty());
}

}  // namespace
}  // namespace msgs
