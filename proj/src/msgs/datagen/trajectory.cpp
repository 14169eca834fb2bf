// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "msgs/common/error.hpp"
#include "msgs/datagen/datagen.hpp"

namespace msgs {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "translational") return TrajectoryKind::Translational;
  if (name == "yaw") return TrajectoryKind::Yaw;
  if (name == "orbit") return TrajectoryKind::Orbit;
  if (name == "altitude") return TrajectoryKind::Altitude;
  fail(ErrorCode::InvalidArgument, "unknown trajectory kind '" + name + "' (expected translational, yaw, orbit or altitude)");
}

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Translational: return "translational";
    case TrajectoryKind::Yaw: return "yaw";
    case TrajectoryKind::Orbit: return "orbit";
    case TrajectoryKind::Altitude: return "altitude";
  }
  return "unknown";
}

void TrajectorySpec::validate() const {
  if (frames < 1) fail(ErrorCode::InvalidArgument, "trajectory needs at least one frame");
  if (kind == TrajectoryKind::Orbit && !(orbit_radius > 0.0)) {
    fail(ErrorCode::InvalidArgument, "orbit radius must be positive");
  }
  if ((noise_sigma_t.array() < 0.0).any() || (noise_sigma_r.array() < 0.0).any()) {
    fail(ErrorCode::InvalidArgument, "noise sigmas must be nonnegative");
  }
  if (kind == TrajectoryKind::Translational && !(direction.norm() > 0.0)) {
    fail(ErrorCode::InvalidArgument, "translational direction must be nonzero");
  }
}

Mat3 blender_euler_matrix(const Vec3& e) {
  return (Eigen::AngleAxisd(e.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(e.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(e.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

CameraPose blender_camera_pose(const Vec3& location, const Vec3& euler) {
  const Mat3 c2w = blender_euler_matrix(euler) * Vec3(1.0, -1.0, -1.0).asDiagonal();
  const Mat3 w2c = c2w.transpose();
  CameraPose pose;
  pose.rotation = Eigen::Quaterniond(w2c);
  pose.translation = -w2c * location;
  return pose;
}

Vec3 look_at_euler(const Vec3& eye, const Vec3& target) {
  const Vec3 d = (target - eye).normalized();
  const double rx = std::acos(std::clamp(-d.z(), -1.0, 1.0));
  const double rz = std::hypot(d.x(), d.y()) > 0.0 ? std::atan2(-d.x(), d.y()) : 0.0;
  return {rx, 0.0, rz};
}

std::vector<TrajectoryFrame> gen_trajectory(const TrajectorySpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double last = spec.frames > 1 ? spec.frames - 1 : 1;
  std::vector<TrajectoryFrame> out(spec.frames);
  for (int k = 0; k < spec.frames; ++k) {
    Vec3 loc = spec.base_t;
    Vec3 rot = spec.base_r;
    switch (spec.kind) {
      case TrajectoryKind::Translational:
        loc = spec.base_t + spec.direction.normalized() * spec.span * (k / last);
        break;
      case TrajectoryKind::Yaw:
        rot.z() = spec.yaw_start + spec.yaw_range * k / spec.frames;
        break;
      case TrajectoryKind::Orbit: {
        const double phi = 2.0 * kPi * k / spec.frames;
        loc = Vec3(spec.orbit_radius * std::cos(phi) + spec.center.x(),
                   spec.orbit_radius * std::sin(phi) + spec.center.y(), spec.base_t.z() + spec.center.z());
        rot = look_at_euler(loc, spec.center);
        break;
      }
      case TrajectoryKind::Altitude:
        loc.z() = spec.z_min + (spec.z_max - spec.z_min) * (k / last);
        break;
    }
    // Noise is drawn for every frame so that the stream does not depend on sigma.
    Vec3 et, er;
    for (int a = 0; a < 3; ++a) et[a] = normal(rng);
    for (int a = 0; a < 3; ++a) er[a] = normal(rng);
    TrajectoryFrame& f = out[k];
    f.index = k;
    f.location = loc + spec.noise_sigma_t.cwiseProduct(et);
    f.euler = rot + spec.noise_sigma_r.cwiseProduct(er);
    f.pose = blender_camera_pose(f.location, f.euler);
    f.pose.image_id = k + 1;
  }
  return out;
}

std::string trajectory_to_jsonl(std::span<const TrajectoryFrame> frames) {
  std::string out;
  for (const auto& f : frames) {
    const Eigen::Quaterniond& q = f.pose.rotation;
    nlohmann::ordered_json j;
    j["frame"] = f.index;
    j["quaternion"] = {q.w(), q.x(), q.y(), q.z()};
    j["translation"] = {f.pose.translation.x(), f.pose.translation.y(), f.pose.translation.z()};
    j["location"] = {f.location.x(), f.location.y(), f.location.z()};
    j["euler"] = {f.euler.x(), f.euler.y(), f.euler.z()};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TrajectoryFrame> trajectory_from_jsonl(const std::string& text) {
  std::vector<TrajectoryFrame> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TrajectoryFrame f;
      f.index = j.at("frame").get<int>();
      const auto& q = j.at("quaternion");
      const auto& t = j.at("translation");
      f.pose.rotation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                           q.at(3).get<double>());
      f.pose.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
      if (j.contains("location")) {
        const auto& l = j["location"];
        f.location = Vec3(l.at(0).get<double>(), l.at(1).get<double>(), l.at(2).get<double>());
      } else {
        f.location = f.pose.center();
      }
      if (j.contains("euler")) {
        const auto& e = j["euler"];
        f.euler = Vec3(e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>());
      }
      f.pose.image_id = f.index + 1;
      out.push_back(f);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, "trajectory line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace msgs
