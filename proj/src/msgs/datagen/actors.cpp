// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "msgs/common/error.hpp"
#include "msgs/datagen/datagen.hpp"

namespace msgs {

Vec3 actor_center(std::span<const ActorPlacement> placements) {
  if (placements.empty()) fail(ErrorCode::InvalidArgument, "actor_center: no placements");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : placements) sum += p.position;
  return sum / static_cast<double>(placements.size());
}

int sample_actor_count(std::mt19937_64& rng) { return std::uniform_int_distribution<int>(10, 15)(rng); }

std::vector<ActorPlacement> place_actors_on_faces(const Mesh& mesh, std::span<const int> faces, int count,
                                                  double min_spacing, std::uint64_t seed, double scale) {
  if (count < 0) fail(ErrorCode::InvalidArgument, "actor count must be nonnegative");
  std::vector<double> areas;
  double total = 0.0;
  for (int f : faces) {
    const auto& t = mesh.faces.at(f);
    const double a =
        0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]).norm();
    areas.push_back(a);
    total += a;
  }
  if (!(total > 0.0)) fail(ErrorCode::InvalidArgument, "place_actors: candidate faces have zero total area");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick_face(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ActorPlacement> out;
  const long long max_attempts = 1000LL * std::max(count, 1);
  for (long long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    const std::size_t fi = pick_face(rng);
    const auto& t = mesh.faces[faces[fi]];
    const double r1 = std::sqrt(unit(rng)), r2 = unit(rng);
    const Vec3 p = (1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                   r1 * r2 * mesh.vertices[t[2]];
    const double heading = 2.0 * 3.14159265358979323846 * unit(rng);
    bool far = true;
    for (const auto& q : out) {
      if ((q.position - p).norm() < min_spacing) {
        far = false;
        break;
      }
    }
    if (!far) continue;
    out.push_back({static_cast<int>(out.size()), p, heading, scale, faces[fi]});
  }
  if (static_cast<int>(out.size()) < count) {
    fail(ErrorCode::InvalidArgument, "place_actors: placed only " + std::to_string(out.size()) + " of " +
                                         std::to_string(count) + " actors with spacing " +
                                         std::to_string(min_spacing));
  }
  return out;
}

std::vector<ActorPlacement> place_actors(const Mesh& mesh, std::span<const CameraPose> trajectory,
                                         const CameraIntrinsics& k, int count, double min_spacing,
                                         std::uint64_t seed, double scale) {
  if (mesh.faces.empty()) fail(ErrorCode::InvalidArgument, "place_actors: empty mesh");
  const std::vector<int> faces = visible_faces(mesh, trajectory, k);
  if (faces.empty()) fail(ErrorCode::InvalidArgument, "place_actors: no face is visible from every view");
  return place_actors_on_faces(mesh, faces, count, min_spacing, seed, scale);
}

std::string placements_to_jsonl(std::span<const ActorPlacement> placements) {
  std::string out;
  for (const auto& p : placements) {
    nlohmann::ordered_json j;
    j["actor_id"] = p.actor_id;
    j["position"] = {p.position.x(), p.position.y(), p.position.z()};
    j["heading"] = p.heading;
    j["scale"] = p.scale;
    j["face"] = p.face;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ActorPlacement> placements_from_jsonl(const std::string& text) {
  std::vector<ActorPlacement> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ActorPlacement p;
      p.actor_id = j.at("actor_id").get<int>();
      const auto& pos = j.at("position");
      p.position = Vec3(pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>());
      p.heading = j.value("heading", 0.0);
      p.scale = j.value("scale", 0.135);
      p.face = j.value("face", -1);
      out.push_back(p);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, "actor line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace msgs
