// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>

#include <unistd.h>

#include "msgs/raster/rasterizer.hpp"
#include "msgs/scene_io/colmap.hpp"
#include "msgs/scene_io/image_io.hpp"

namespace msgs::testing {

namespace fs = std::filesystem;

namespace {

std::vector<Splat> ground_splats(const SceneOptions& o, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(o.num_splats))));
  const double half = 1.8;
  const double spacing = 2.0 * half / (side - 1);
  std::vector<Splat> out;
  for (int i = 0; i < o.num_splats; ++i) {
    const int gx = i % side, gy = i / side;
    Splat s;
    s.mu = Vec3(-half + gx * spacing + (u(rng) - 0.5) * 0.3 * spacing,
                -half + gy * spacing + (u(rng) - 0.5) * 0.3 * spacing, (u(rng) - 0.5) * 0.1);
    const double yaw = u(rng) * std::numbers::pi;
    s.rot = Vec4(std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw));
    const double sx = spacing * (0.55 + 0.2 * u(rng));
    const double sy = spacing * (0.55 + 0.2 * u(rng));
    s.log_scale = Vec3(std::log(sx), std::log(sy), std::log(0.02));
    s.opacity_logit = std::log(0.95 / 0.05);
    for (int c = 0; c < 3; ++c) s.base_color[c] = 0.15 + 0.6 * u(rng);
    out.push_back(s);
  }
  return out;
}

Image tinted(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        out(x, y, c) = std::clamp(kTintAlpha[c] * img(x, y, c) + kTintBeta[c], 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace

SyntheticScene make_scene(const SceneOptions& o) {
  std::mt19937_64 rng(o.seed);
  SyntheticScene scene;
  scene.gt = ground_splats(o, rng);

  CameraIntrinsics k;
  k.width = o.width;
  k.height = o.height;
  k.fx = k.fy = o.focal;
  k.cx = 0.5 * (o.width - 1);
  k.cy = 0.5 * (o.height - 1);
  auto& ds = scene.dataset;
  ds.cameras[1] = k;
  ds.num_sequences = o.num_sequences;

  std::vector<Vec3> colors;
  for (const auto& s : scene.gt) colors.push_back(s.base_color);

  int image_id = 1;
  for (int i = 0; i < o.frames_per_sequence; ++i) {
    for (int s = 0; s < o.num_sequences; ++s) {
      const double theta = 2.0 * std::numbers::pi * (i + static_cast<double>(s) / o.num_sequences) /
                           o.frames_per_sequence;
      const Vec3 eye(0.8 * std::cos(theta), 0.8 * std::sin(theta), 4.0);
      Frame f;
      f.pose = CameraPose::look_at(eye, Vec3::Zero());
      f.pose.sequence_id = s;
      f.pose.camera_id = 1;
      f.pose.image_id = image_id++;
      char name[64];
      std::snprintf(name, sizeof(name), "s%d_f%02d.png", s, i);
      f.name = name;
      f.pose.image_path = name;
      f.held_out = o.held_out_every > 0 && i % o.held_out_every == o.held_out_every - 1;
      Image img = render(scene.gt, colors, f.pose, k).color;
      if (o.tint && s > 0) img = tinted(img);
      f.image = img;
      f.sam = Mask(o.width, o.height, 1, 0);
      f.entity = LabelMap(o.width, o.height, 1, 0);
      for (int y = 0; y < o.height; ++y) {
        for (int x = 0; x < o.width; ++x) {
          f.entity(x, y) = 1 + (y / o.entity_block) * ((o.width + o.entity_block - 1) / o.entity_block) +
                           x / o.entity_block;
        }
      }
      scene.clean.push_back(img);
      scene.sprite.emplace_back(o.width, o.height, 1, 0);
      ds.frames.push_back(std::move(f));
    }
  }

  // Transient sprite on a random subset of training frames.
  std::vector<std::size_t> train = ds.training_frames();
  std::shuffle(train.begin(), train.end(), rng);
  const auto with_sprite = static_cast<std::size_t>(std::lround(o.sprite_fraction * train.size()));
  const auto with_sam = static_cast<std::size_t>(std::floor(o.sam_fraction * with_sprite));
  std::uniform_int_distribution<int> px(0, o.width - o.sprite_size);
  std::uniform_int_distribution<int> py(0, o.height - o.sprite_size);
  for (std::size_t j = 0; j < with_sprite; ++j) {
    Frame& f = ds.frames[train[j]];
    Mask& m = scene.sprite[train[j]];
    int x0 = px(rng), y0 = py(rng);
    if (o.sprite_anchored) {
      // An actor walking slowly across the patch; its image position follows the camera.
      const double t = with_sprite > 1 ? static_cast<double>(j) / (with_sprite - 1) : 0.0;
      const Vec3 world(0.3 - 0.2 * t, -0.2 + 0.1 * t, 0.0);
      const Vec2 p = ds.intrinsics(f).project(f.pose.to_camera(world));
      x0 = std::clamp(static_cast<int>(std::lround(p.x())) - o.sprite_size / 2, 0, o.width - o.sprite_size);
      y0 = std::clamp(static_cast<int>(std::lround(p.y())) - o.sprite_size / 2, 0, o.height - o.sprite_size);
    }
    for (int y = y0; y < y0 + o.sprite_size; ++y) {
      for (int x = x0; x < x0 + o.sprite_size; ++x) {
        f.image(x, y, 0) = 1.0;
        f.image(x, y, 1) = 0.0;
        f.image(x, y, 2) = 1.0;
        f.entity(x, y) = 10000;
        m(x, y) = 1;
        if (j < with_sam) f.sam(x, y) = 1;
      }
    }
  }

  std::normal_distribution<double> noise(0.0, o.point_noise);
  for (std::size_t i = 0; i < scene.gt.size(); ++i) {
    ColmapPoint p;
    p.id = static_cast<std::int64_t>(i + 1);
    p.position = scene.gt[i].mu + Vec3(noise(rng), noise(rng), noise(rng));
    for (int c = 0; c < 3; ++c) {
      p.rgb[c] = static_cast<std::uint8_t>(std::lround(std::clamp(scene.gt[i].base_color[c], 0.0, 1.0) * 255.0));
    }
    ds.points.push_back(p);
  }
  ds.validate();
  return scene;
}

fs::path write_scene(const SyntheticScene& scene, const fs::path& dir) {
  const auto& ds = scene.dataset;
  for (const char* sub : {"images", "masks", "entities", "sparse"}) fs::create_directories(dir / sub);
  ColmapReconstruction recon;
  for (const auto& [id, k] : ds.cameras) recon.cameras.emplace_back(id, k);
  recon.points = ds.points;
  std::string sequences = "[sequences]\n", held = "[held_out]\n";
  for (const auto& f : ds.frames) {
    recon.poses.push_back(f.pose);
    write_png(dir / "images" / f.name, f.image);
    write_mask(dir / "masks" / f.name, f.sam);
    write_label_map(dir / "entities" / f.name, f.entity);
    sequences += f.name + " = " + std::to_string(f.pose.sequence_id) + "\n";
    if (f.held_out) held += f.name + " = 1\n";
  }
  write_colmap_dir(dir / "sparse", recon);
  const fs::path manifest = dir / "manifest.ini";
  std::ofstream out(manifest);
  out << "[dataset]\ncolmap = sparse\nimages = images\nsam_masks = masks\nentity_maps = entities\n"
      << sequences << held;
  return manifest;
}

Splat random_splat(std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  Splat s;
  s.mu = Vec3(0.6 * spread * u(rng), 0.6 * spread * u(rng), 0.5 * u(rng));
  s.rot = Vec4(n(rng), n(rng), n(rng), n(rng));
  if (s.rot.norm() < 1e-3) s.rot = Vec4(1, 0, 0, 0);
  s.rot.normalize();
  for (int i = 0; i < 3; ++i) s.log_scale[i] = std::log(0.06) + 0.6 * u(rng);
  s.opacity_logit = 0.5 + 1.5 * u(rng);
  for (int c = 0; c < 3; ++c) s.base_color[c] = 0.5 + 0.45 * u(rng);
  for (int i = 0; i < kEmbeddingDim; ++i) s.embedding[i] = 0.3 * n(rng);
  return s;
}

Image random_image(std::mt19937_64& rng, int width, int height, int channels) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(width, height, channels);
  for (auto& v : img.data) v = u(rng);
  return img;
}

double image_psnr(const Image& a, const Image& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) se += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  const double mse = se / static_cast<double>(a.data.size());
  return 10.0 * std::log10(1.0 / mse);
}

DepthMap sphere_depth(const CameraPose& pose, const CameraIntrinsics& k, const Vec3& center, double radius) {
  DepthMap out{Image(k.width, k.height, 1, 0.0), Mask(k.width, k.height, 1, 0)};
  const Vec3 c = pose.to_camera(center);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      // Ray t * r with r.z = 1: |t r - c|^2 = radius^2.
      const Vec3 r = k.ray(x, y);
      const double a = r.squaredNorm(), b = -2.0 * r.dot(c), cc = c.squaredNorm() - radius * radius;
      const double disc = b * b - 4 * a * cc;
      if (disc < 0.0) continue;
      const double t = (-b - std::sqrt(disc)) / (2 * a);
      if (t <= 0.0) continue;
      out.depth(x, y) = t;
      out.valid(x, y) = 1;
    }
  }
  return out;
}

std::vector<CameraPose> sphere_views(int count, double distance) {
  std::vector<CameraPose> poses;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    const Vec3 eye = distance * Vec3(r * std::cos(golden * i), r * std::sin(golden * i), z);
    const Vec3 up = std::abs(z) > 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
    poses.push_back(CameraPose::look_at(eye, Vec3::Zero(), up));
  }
  return poses;
}

fs::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() /
                     ("msgs_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace msgs::testing
