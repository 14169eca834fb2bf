// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msgs/common/grid.hpp"
#include "msgs/mesh/mesh.hpp"
#include "msgs/scene_io/camera.hpp"

namespace msgs {

// ---- trajectories ---------------------------------------------------------

enum class TrajectoryKind { Translational, Yaw, Orbit, Altitude };

TrajectoryKind parse_trajectory_kind(const std::string& name);
const char* to_string(TrajectoryKind kind);

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::Orbit;
  Vec3 base_t = Vec3(0.0, 0.0, 10.0);  // Blender location
  Vec3 base_r = Vec3::Zero();          // Blender Euler angles, radians
  Vec3 noise_sigma_t = Vec3::Zero();
  Vec3 noise_sigma_r = Vec3::Zero();
  int frames = 60;
  double orbit_radius = 5.0;
  Vec3 center = Vec3::Zero();  // p^c, the orbit target
  double z_min = 5.0;          // altitude sweep
  double z_max = 15.0;
  Vec3 direction = Vec3::UnitX();  // translational sweep
  double span = 10.0;
  double yaw_start = 0.0;
  double yaw_range = 2.0 * 3.14159265358979323846;

  void validate() const;
};

struct TrajectoryFrame {
  int index = 0;
  Vec3 location = Vec3::Zero();  // noisy Blender location
  Vec3 euler = Vec3::Zero();     // noisy Blender Euler angles
  CameraPose pose;               // world-to-camera, x right, y down, z forward
};

/// Blender object rotation for Euler angles (rx, ry, rz): Rz * Ry * Rx.
Mat3 blender_euler_matrix(const Vec3& euler);

/// Pose of a Blender camera (looking down its local -Z with +Y up).
CameraPose blender_camera_pose(const Vec3& location, const Vec3& euler);

/// Euler angles (ry = 0) that aim a Blender camera at `target` from `eye`.
Vec3 look_at_euler(const Vec3& eye, const Vec3& target);

/// Noise-free curve plus N(0, sigma) noise on location and angles, per frame.
std::vector<TrajectoryFrame> gen_trajectory(const TrajectorySpec& spec, std::uint64_t seed);

/// One JSON object per line: frame, quaternion [w,x,y,z], translation, location, euler.
std::string trajectory_to_jsonl(std::span<const TrajectoryFrame> frames);
std::vector<TrajectoryFrame> trajectory_from_jsonl(const std::string& text);

// ---- actors --------------------------------------------------------------

struct ActorPlacement {
  int actor_id = 0;
  Vec3 position = Vec3::Zero();
  double heading = 0.0;
  double scale = 0.135;
  int face = -1;
};

Vec3 actor_center(std::span<const ActorPlacement> placements);

/// Uniform actor count in [10, 15].
int sample_actor_count(std::mt19937_64& rng);

/// Area-weighted sampling over the faces visible from every trajectory pose.
std::vector<ActorPlacement> place_actors(const Mesh& mesh, std::span<const CameraPose> trajectory,
                                         const CameraIntrinsics& k, int count, double min_spacing,
                                         std::uint64_t seed, double scale = 0.135);

/// Same, over an explicit face set.
std::vector<ActorPlacement> place_actors_on_faces(const Mesh& mesh, std::span<const int> faces, int count,
                                                  double min_spacing, std::uint64_t seed, double scale = 0.135);

std::string placements_to_jsonl(std::span<const ActorPlacement> placements);
std::vector<ActorPlacement> placements_from_jsonl(const std::string& text);

// ---- composition ----------------------------------------------------------

/// Normalized 1D Gaussian taps, radius ceil(3 sigma). sigma = 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable blur with clamp-to-edge borders, every channel.
Image gaussian_blur(const Image& image, double sigma);

struct CompositeSettings {
  double blur_sigma = 0.0;
  bool premultiplied = false;  // fg color already multiplied by alpha
  bool blur_alpha = false;     // also blur the matte
};

/// alpha * G(fg) + (1 - alpha) * bg, clamped to [0, 1]. fg is RGBA, bg RGB.
Image composite(const Image& fg_rgba, const Image& bg, const CompositeSettings& settings = {});

/// Pixel-space box, corners inclusive of the covered area: [xmin, xmax) x [ymin, ymax).
struct Box {
  int cls = 0;
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
};

/// "class cx cy w h" per line, normalized by the image size.
std::string format_annotations(std::span<const Box> boxes, int width, int height);
std::vector<Box> parse_annotations(const std::string& text, int width, int height);

/// "class xmin ymin xmax ymax" per line, pixels.
std::string format_boxes(std::span<const Box> boxes);
std::vector<Box> parse_boxes(const std::string& text);

struct BillboardSettings {
  double height_per_scale = 10.0;  // world height = scale * this
  double aspect = 0.4;             // width / height
};

struct BillboardFrame {
  Image rgba;
  std::vector<Box> boxes;
};

/// Fallback foreground renderer: each actor is an upright camera-facing quad
/// with a per-actor striped texture. Boxes are the clipped projected quads.
BillboardFrame render_billboards(std::span<const ActorPlacement> actors, const CameraPose& pose,
                                 const CameraIntrinsics& k, const BillboardSettings& settings = {});

}  // namespace msgs
