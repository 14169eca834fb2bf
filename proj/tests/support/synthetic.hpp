// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "msgs/scene_io/dataset.hpp"
#include "msgs/splat/splat.hpp"

namespace msgs::testing {

struct SceneOptions {
  int num_splats = 200;
  int width = 64;
  int height = 64;
  double focal = 80.0;
  int num_sequences = 2;
  int frames_per_sequence = 12;
  int held_out_every = 4;  // every n-th frame of a sequence is held out
  bool tint = true;        // sequence 1 gets the fixed global affine color transform
  double point_noise = 0.01;
  // Transient sprite.
  double sprite_fraction = 0.0;  // fraction of training frames that contain it
  int sprite_size = 6;
  bool sprite_anchored = true;  // follows a slow path on the ground instead of random image positions
  double sam_fraction = 0.5;  // fraction of sprite occurrences that carry a correct SAM mask
  int entity_block = 8;       // entity maps: square blocks of this size, the sprite is its own entity
  std::uint64_t seed = 7;
};

inline const Vec3 kTintAlpha(1.2, 0.9, 1.0);
inline const Vec3 kTintBeta(0.05, 0.0, -0.05);

struct SyntheticScene {
  MultiSequenceDataset dataset;
  std::vector<Splat> gt;
  std::vector<Image> clean;     // per frame, without the sprite
  std::vector<Mask> sprite;     // per frame, true sprite footprint
};

/// Ground-truth splats tiling a textured ground patch, viewed from a ring of
/// near-nadir cameras. Sequence s > 0 applies the tint when enabled.
SyntheticScene make_scene(const SceneOptions& options = {});

/// Writes images/, masks/, entities/, sparse/ and manifest.ini under `dir`.
std::filesystem::path write_scene(const SyntheticScene& scene, const std::filesystem::path& dir);

/// Random splat with moderate anisotropy around the origin, in front of a camera at z = -4.
Splat random_splat(std::mt19937_64& rng, double spread = 1.0);
Image random_image(std::mt19937_64& rng, int width, int height, int channels = 3);

double image_psnr(const Image& a, const Image& b);

/// Camera-z depth of a sphere; invalid where the ray misses it.
struct DepthMap {
  Image depth;
  Mask valid;
};
DepthMap sphere_depth(const CameraPose& pose, const CameraIntrinsics& k, const Vec3& center, double radius);

/// Poses on a Fibonacci sphere of radius `distance` looking at the origin.
std::vector<CameraPose> sphere_views(int count, double distance);

/// Fresh temporary directory under the system temp path.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace msgs::testing
